"""Shared builders for the test suite."""

import numpy as np

from idrank.store import EmbeddingRecord, EmbeddingSet, Role


def make_record(
    rid,
    vector,
    subject="s0",
    role=Role.GALLERY,
    encoder="enc",
    variant="",
    method=None,
):
    if method is None:
        method = "gen" if role is Role.GENERATED else ""
    return EmbeddingRecord(
        id=rid,
        subject=subject,
        role=role,
        encoder=encoder,
        variant=variant,
        method=method,
        vector=np.asarray(vector, dtype=np.float32),
    )


def make_set(records, name="test"):
    return EmbeddingSet(records, name=name)

"""Contract tests against the extractor's committed fixture outputs.

The files under tests/fixtures/extractor/ were produced by the TypeScript
extractor in frontend/ using its stub encoder. These tests pin the contract
from the consuming side: the files must load and validate here, the two
formats must carry identical records, and every vector must be re-derivable
from the shared counter-based generator, bit for bit.
"""

from __future__ import annotations

import math
from pathlib import Path

import numpy as np
import pytest

from idrank import rng
from idrank.store import Role, load_set, write_set

FIXTURES = Path(__file__).parent / "fixtures" / "extractor"

STUB_DIM = 16

# Prompt text is the stub's embedding key for role=prompt records; ids and
# subjects only label them. The repeated fox prompt pins text-keyed
# determinism: same words, same bits.
PROMPT_TEXTS = {
    "prompt-bear": "a photo of a bear fishing in a river",
    "prompt-fox": "a photo of a fox at night",
    "prompt-fox-repeat": "a photo of a fox at night",
}


def stub_vector(key_text: str, dim: int = STUB_DIM) -> np.ndarray:
    """Re-derive a stub embedding: hash, expand to [-1, 1), unit-normalize.

    The square sum runs sequentially on float64 scalars; both implementations
    commit to that order, which is what makes the float32 results identical.
    """
    uniforms = rng.uniform01(rng.fnv1a64(key_text), 0, dim)
    expanded = 2.0 * uniforms - 1.0
    total = 0.0
    for x in expanded.tolist():
        total += x * x
    return (expanded / math.sqrt(total)).astype(np.float32)


@pytest.fixture(scope="module")
def images_jsonl():
    return load_set(FIXTURES / "stub_images.jsonl")


@pytest.fixture(scope="module")
def images_binary():
    return load_set(FIXTURES / "stub_images.bin")


@pytest.fixture(scope="module")
def prompts():
    return load_set(FIXTURES / "stub_prompts.jsonl")


def test_image_fixture_loads_and_validates(images_jsonl):
    assert len(images_jsonl) == 10
    assert images_jsonl.dimension == STUB_DIM
    assert images_jsonl.encoder == "stub"
    assert images_jsonl.subjects == ("bear", "fox", "lynx-ö")
    roles = {rec.id: rec.role for rec in images_jsonl.records}
    assert roles["bear-01"] is Role.REFERENCE
    assert roles["fox-gen-01"] is Role.GENERATED
    assert roles["lynx-ö-01"] is Role.GALLERY


def test_generated_records_carry_method_tags(images_jsonl):
    generated = images_jsonl.filter(role=Role.GENERATED)
    assert {rec.method for rec in generated.records} == {"dream"}
    variants = {rec.id: rec.variant for rec in generated.records}
    assert variants["fox-gen-02"] == "crop"
    assert variants["fox-gen-01"] == ""


def test_jsonl_and_binary_fixtures_carry_identical_records(images_jsonl, images_binary):
    assert images_jsonl.records == images_binary.records


def test_image_vectors_match_independent_rederivation(images_jsonl):
    # The stub keys image embeddings off the record id.
    for rec in images_jsonl.records:
        assert rec.vector.tobytes() == stub_vector(rec.id).tobytes(), rec.id


def test_prompt_fixture_loads_with_prompt_roles(prompts):
    assert len(prompts) == 3
    assert {rec.role for rec in prompts.records} == {Role.PROMPT}
    assert {rec.id for rec in prompts.records} == set(PROMPT_TEXTS)
    subjects = {rec.id: rec.subject for rec in prompts.records}
    assert subjects["prompt-fox"] == "fox"
    assert subjects["prompt-fox-repeat"] == "fox-b"


def test_prompt_vectors_match_independent_rederivation(prompts):
    for rec in prompts.records:
        expected = stub_vector(PROMPT_TEXTS[rec.id])
        assert rec.vector.tobytes() == expected.tobytes(), rec.id


def test_identical_prompt_text_embeds_identically(prompts):
    fox = prompts.get("prompt-fox")
    repeat = prompts.get("prompt-fox-repeat")
    assert fox.vector.tobytes() == repeat.vector.tobytes()
    assert fox.subject != repeat.subject


def test_rewriting_the_binary_fixture_reproduces_its_bytes(images_binary, tmp_path):
    # Framing and float32 payloads are writer-independent; only JSONL float
    # formatting is allowed to differ between implementations.
    out = tmp_path / "roundtrip.bin"
    write_set(images_binary, out, fmt="binary")
    assert out.read_bytes() == (FIXTURES / "stub_images.bin").read_bytes()


def test_stub_vectors_are_unit_norm_in_float32(images_jsonl, prompts):
    for rec in (*images_jsonl.records, *prompts.records):
        norm = float(np.linalg.norm(rec.vector.astype(np.float64)))
        assert abs(norm - 1.0) < 1e-6

"""Embedding data model: validation, JSONL/binary formats, filtering."""

import numpy as np
import pytest

from conftest import make_record, make_set
from idrank import rng
from idrank.errors import ParseError, ValidationError
from idrank.store import (
    DatasetManifest,
    EmbeddingSet,
    Role,
    check_manifest,
    detect_format,
    load_manifest,
    load_set,
    write_manifest,
    write_set,
)


def two_record_set():
    return make_set([
        make_record("a", [1.0, 0.0], subject="s1"),
        make_record("b", [0.0, 1.0], subject="s2"),
    ])


def test_basic_set_shape():
    es = two_record_set()
    assert len(es) == 2
    assert es.dimension == 2
    assert es.subjects == ("s1", "s2")
    assert es.get("a").subject == "s1"
    assert es.get("zzz") is None
    assert "a" in es and "zzz" not in es


def test_records_sorted_and_immutable():
    es = make_set([make_record("b", [1, 0]), make_record("a", [0, 1])])
    assert [r.id for r in es] == ["a", "b"]
    with pytest.raises(ValueError):
        es.records[0].vector[0] = 5.0


def test_vector_stored_as_float32():
    rec = make_record("a", [0.1, 0.2])
    assert rec.vector.dtype == np.float32


@pytest.mark.parametrize(
    "records, message",
    [
        ([], "empty set"),
        ([make_record("a", [1, 0]), make_record("a", [0, 1])], "duplicate id"),
        ([make_record("a", [1.0, float("nan")])], "non-finite component"),
        ([make_record("a", [1, 0]), make_record("b", [1, 0, 0])], "dimension mismatch"),
        ([make_record("a", [0.0, 0.0])], "zero-norm vector"),
        ([make_record("a", [1, 0]), make_record("b", [1, 0], encoder="other")], "encoder mismatch"),
        ([make_record("a", [1, 0], role=Role.GENERATED, method="")], "empty method"),
        ([make_record("a", [1, 0], role=Role.GALLERY, method="gen")], "non-empty method"),
    ],
)
def test_validation_errors(records, message):
    with pytest.raises(ValidationError, match=message):
        EmbeddingSet(records)


def test_generated_needs_gallery_only_when_gallery_present():
    gen = make_record("g", [1, 0], subject="s1", role=Role.GENERATED)
    gallery_other = make_record("x", [0, 1], subject="s2", role=Role.GALLERY)
    with pytest.raises(ValidationError, match="generated subject without gallery"):
        EmbeddingSet([gen, gallery_other])
    # A gallery-free slice is a legitimate partial view.
    assert len(EmbeddingSet([gen])) == 1


def test_indices_agree_with_linear_scan():
    records = []
    for i in range(40):
        # subject mod 5 and role mod 4 cycle independently, so every subject
        # gets records of every role over 20 indices
        subject = f"s{i % 5}"
        role = list(Role)[i % 4]
        method = "gen" if role is Role.GENERATED else ""
        vec = rng.standard_normal(rng.derive_key(1, str(i)), 0, 3)
        records.append(make_record(f"r{i:02d}", vec, subject=subject, role=role, method=method))
    es = EmbeddingSet(records)
    for role in Role:
        assert es.by_role(role) == tuple(r for r in es if r.role == role)
        for subject in es.subjects:
            assert es.by_subject_role(subject, role) == tuple(
                r for r in es if r.subject == subject and r.role == role
            )


def test_filter_by_role_and_method():
    es = make_set([
        make_record("gal1", [1, 0], subject="s1"),
        make_record("gen1", [1, 0], subject="s1", role=Role.GENERATED, method="m1"),
        make_record("gen2", [0, 1], subject="s1", role=Role.GENERATED, method="m2"),
    ])
    assert [r.id for r in es.filter(role=Role.GALLERY)] == ["gal1"]
    only_m1 = es.filter(method="m1")
    assert [r.id for r in only_m1] == ["gen1"]
    with pytest.raises(ValidationError, match="empty set"):
        es.filter(variant="bg-removed")


def test_filter_does_not_mutate_original():
    es = two_record_set()
    es.filter(subject="s1")
    assert len(es) == 2


def test_jsonl_round_trip(tmp_path):
    es = two_record_set()
    path = tmp_path / "set.jsonl"
    write_set(es, path, fmt="jsonl")
    assert detect_format(path) == "jsonl"
    loaded = load_set(path)
    assert loaded.records == es.records
    # LF line endings, one object per line
    raw = path.read_bytes()
    assert b"\r" not in raw
    assert raw.count(b"\n") == 2


def test_binary_round_trip_with_unicode(tmp_path):
    es = make_set([
        make_record("bild-ä", [0.25, -1.5], subject="müller"),
        make_record("a", [1.0, 2.0], subject="s"),
    ])
    path = tmp_path / "set.bin"
    write_set(es, path, fmt="binary")
    assert detect_format(path) == "binary"
    assert path.read_bytes()[:4] == b"FPRK"
    loaded = load_set(path)
    assert loaded.records == es.records


def test_cross_format_equivalence(tmp_path):
    vecs = rng.standard_normal(rng.derive_key(5, "fmt"), 0, 60).reshape(20, 3)
    es = make_set([make_record(f"r{i:02d}", vecs[i], subject=f"s{i % 3}") for i in range(20)])
    p1, p2, p3 = tmp_path / "a.jsonl", tmp_path / "b.bin", tmp_path / "c.jsonl"
    write_set(es, p1, fmt="jsonl")
    write_set(load_set(p1), p2, fmt="binary")
    write_set(load_set(p2), p3, fmt="jsonl")
    assert p1.read_bytes() == p3.read_bytes()
    assert load_set(p3).records == es.records


def test_jsonl_parse_errors(tmp_path):
    path = tmp_path / "bad.jsonl"
    path.write_text('{"id": "a", "subject": "s"\n', encoding="utf-8")
    with pytest.raises(ParseError, match="line 1"):
        load_set(path, fmt="jsonl")
    path.write_text('{"id": "a"}\n', encoding="utf-8")
    with pytest.raises(ParseError, match="missing keys"):
        load_set(path, fmt="jsonl")
    good = '{"id":"a","subject":"s","role":"gallery","encoder":"e","variant":"","method":"","vector":[1.0]}'
    path.write_text(good.replace("gallery", "nonsense") + "\n", encoding="utf-8")
    with pytest.raises(ParseError, match="unknown role"):
        load_set(path, fmt="jsonl")
    path.write_text(good.replace("[1.0]", "1.0") + "\n", encoding="utf-8")
    with pytest.raises(ParseError, match="vector must be an array"):
        load_set(path, fmt="jsonl")


def test_jsonl_nonfinite_vector_rejected(tmp_path):
    path = tmp_path / "nan.jsonl"
    line = '{"id":"a","subject":"s","role":"gallery","encoder":"e","variant":"","method":"","vector":[1.0,NaN]}'
    path.write_text(line + "\n", encoding="utf-8")
    with pytest.raises(ValidationError, match="non-finite component"):
        load_set(path, fmt="jsonl")


def test_binary_parse_errors(tmp_path):
    es = two_record_set()
    path = tmp_path / "set.bin"
    write_set(es, path, fmt="binary")
    data = path.read_bytes()

    bad = tmp_path / "bad.bin"
    bad.write_bytes(b"XXXX" + data[4:])
    with pytest.raises(ParseError, match="bad magic"):
        load_set(bad, fmt="binary")

    bad.write_bytes(data[:-3])
    with pytest.raises(ParseError, match="truncated"):
        load_set(bad, fmt="binary")

    bad.write_bytes(data + b"\x00")
    with pytest.raises(ParseError, match="trailing bytes"):
        load_set(bad, fmt="binary")


def test_manifest_round_trip_and_check(tmp_path):
    es = two_record_set()
    path = tmp_path / "manifest.json"
    write_manifest(es.manifest, path)
    loaded = load_manifest(path)
    assert loaded == es.manifest
    check_manifest(es, loaded)

    wrong = DatasetManifest.from_dict({**loaded.to_dict(), "dimension": 7})
    with pytest.raises(ValidationError, match="dimension"):
        check_manifest(es, wrong)

    counts = {s: dict(r) for s, r in loaded.counts.items()}
    counts["s1"]["gallery"] = 99
    wrong = DatasetManifest.from_dict({**loaded.to_dict(), "counts": counts})
    with pytest.raises(ValidationError, match="counts"):
        check_manifest(es, wrong)


def test_manifest_malformed(tmp_path):
    path = tmp_path / "m.json"
    path.write_text("{not json", encoding="utf-8")
    with pytest.raises(ParseError, match="malformed JSON"):
        load_manifest(path)
    path.write_text('{"name": "x"}', encoding="utf-8")
    with pytest.raises(ParseError, match="missing or malformed"):
        load_manifest(path)


def test_load_set_name_defaults_to_stem(tmp_path):
    path = tmp_path / "mydata.jsonl"
    write_set(two_record_set(), path)
    assert load_set(path).name == "mydata"
    assert load_set(path, name="other").name == "other"

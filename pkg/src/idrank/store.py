"""Embedding data model and its two on-disk formats (JSONL and binary).

Vectors are stored as 32-bit floats exactly as an encoder produced them; no
normalization happens at this layer, so similarity code can re-derive scores
from identical inputs. All arithmetic downstream accumulates in 64-bit.

Both formats round-trip bit-exactly. Records are kept and written in id order,
which makes every file and every derived set canonical regardless of the order
records arrived in.
"""

from __future__ import annotations

import json
import struct
from dataclasses import dataclass
from enum import Enum
from pathlib import Path
from typing import Callable, Iterable, Mapping, Sequence

import numpy as np

from .errors import ParseError, ValidationError

MAGIC = b"FPRK"
FORMAT_VERSION = 1

JSONL_KEYS = ("id", "subject", "role", "encoder", "variant", "method", "vector")


class Role(str, Enum):
    REFERENCE = "reference"
    GALLERY = "gallery"
    GENERATED = "generated"
    PROMPT = "prompt"


_ROLE_CODES = {Role.REFERENCE: 0, Role.GALLERY: 1, Role.GENERATED: 2, Role.PROMPT: 3}
_CODE_ROLES = {v: k for k, v in _ROLE_CODES.items()}


@dataclass(frozen=True, eq=False)
class EmbeddingRecord:
    """One identity-labeled embedding vector with role and provenance tags."""

    id: str
    subject: str
    role: Role
    encoder: str
    variant: str
    method: str
    vector: np.ndarray  # float32, read-only

    def __post_init__(self):
        vec = np.asarray(self.vector, dtype=np.float32)
        vec.flags.writeable = False
        object.__setattr__(self, "vector", vec)

    def __eq__(self, other) -> bool:
        if not isinstance(other, EmbeddingRecord):
            return NotImplemented
        return (
            self.id == other.id
            and self.subject == other.subject
            and self.role == other.role
            and self.encoder == other.encoder
            and self.variant == other.variant
            and self.method == other.method
            and self.vector.tobytes() == other.vector.tobytes()
        )

    def __hash__(self):
        return hash(self.id)


@dataclass(frozen=True)
class DatasetManifest:
    """Declared shape of a dataset: subjects, roles, encoder, dimension."""

    name: str
    dimension: int
    encoder: str
    subjects: tuple[str, ...]
    counts: Mapping[str, Mapping[str, int]]  # subject -> role value -> count
    format_version: int = FORMAT_VERSION

    def to_dict(self) -> dict:
        return {
            "name": self.name,
            "dimension": self.dimension,
            "encoder": self.encoder,
            "subjects": list(self.subjects),
            "counts": {s: dict(r) for s, r in self.counts.items()},
            "format_version": self.format_version,
        }

    @classmethod
    def from_dict(cls, data: Mapping) -> "DatasetManifest":
        try:
            return cls(
                name=str(data["name"]),
                dimension=int(data["dimension"]),
                encoder=str(data["encoder"]),
                subjects=tuple(data["subjects"]),
                counts={s: {r: int(n) for r, n in roles.items()} for s, roles in data["counts"].items()},
                format_version=int(data.get("format_version", FORMAT_VERSION)),
            )
        except (KeyError, TypeError, AttributeError) as exc:
            raise ParseError(f"manifest: missing or malformed field ({exc})") from exc


class EmbeddingSet:
    """Immutable, validated collection of records with id/subject/role indices."""

    def __init__(self, records: Sequence[EmbeddingRecord], name: str = "unnamed"):
        ordered = sorted(records, key=lambda r: r.id)
        _validate(ordered)
        self._records: tuple[EmbeddingRecord, ...] = tuple(ordered)
        self._by_id = {r.id: r for r in self._records}
        by_role: dict[Role, list[EmbeddingRecord]] = {role: [] for role in Role}
        by_subject_role: dict[tuple[str, Role], list[EmbeddingRecord]] = {}
        for rec in self._records:
            by_role[rec.role].append(rec)
            by_subject_role.setdefault((rec.subject, rec.role), []).append(rec)
        self._by_role = {role: tuple(recs) for role, recs in by_role.items()}
        self._by_subject_role = {key: tuple(recs) for key, recs in by_subject_role.items()}
        self.manifest = _derive_manifest(self._records, name)

    # -- access -----------------------------------------------------------

    @property
    def records(self) -> tuple[EmbeddingRecord, ...]:
        return self._records

    @property
    def name(self) -> str:
        return self.manifest.name

    @property
    def dimension(self) -> int:
        return self.manifest.dimension

    @property
    def encoder(self) -> str:
        return self.manifest.encoder

    @property
    def subjects(self) -> tuple[str, ...]:
        return self.manifest.subjects

    def __len__(self) -> int:
        return len(self._records)

    def __iter__(self):
        return iter(self._records)

    def get(self, record_id: str) -> EmbeddingRecord | None:
        return self._by_id.get(record_id)

    def __contains__(self, record_id: str) -> bool:
        return record_id in self._by_id

    def by_role(self, role: Role) -> tuple[EmbeddingRecord, ...]:
        return self._by_role[role]

    def by_subject_role(self, subject: str, role: Role) -> tuple[EmbeddingRecord, ...]:
        return self._by_subject_role.get((subject, role), ())

    def __eq__(self, other) -> bool:
        if not isinstance(other, EmbeddingSet):
            return NotImplemented
        return self._records == other._records and self.manifest == other.manifest

    # -- derivation --------------------------------------------------------

    def filter(
        self,
        role: Role | str | None = None,
        subject: str | Iterable[str] | None = None,
        method: str | None = None,
        variant: str | None = None,
        predicate: Callable[[EmbeddingRecord], bool] | None = None,
        name: str | None = None,
    ) -> "EmbeddingSet":
        """Subset by exact-match fields and/or a predicate.

        The result is validated like any other set; an empty selection is an
        error, and a result that contains gallery records must still cover
        every surviving generated subject. Pure query-side slices (no real
        records at all) are allowed so callers can recombine them explicitly.
        """
        want_role = Role(role) if role is not None else None
        if subject is None:
            want_subjects = None
        elif isinstance(subject, str):
            want_subjects = {subject}
        else:
            want_subjects = set(subject)
        picked = []
        for rec in self._records:
            if want_role is not None and rec.role != want_role:
                continue
            if want_subjects is not None and rec.subject not in want_subjects:
                continue
            if method is not None and rec.method != method:
                continue
            if variant is not None and rec.variant != variant:
                continue
            if predicate is not None and not predicate(rec):
                continue
            picked.append(rec)
        return EmbeddingSet(picked, name=name or self.name)


# -- validation -------------------------------------------------------------


def _validate(records: Sequence[EmbeddingRecord]) -> None:
    if not records:
        raise ValidationError("empty set")
    dimension = len(records[0].vector)
    encoder = records[0].encoder
    seen: set[str] = set()
    for rec in records:
        if rec.id in seen:
            raise ValidationError(f"record '{rec.id}': duplicate id")
        seen.add(rec.id)
        if len(rec.vector) == 0:
            raise ValidationError(f"record '{rec.id}': empty vector")
        if len(rec.vector) != dimension:
            raise ValidationError(
                f"record '{rec.id}': dimension mismatch ({len(rec.vector)} != {dimension})"
            )
        if not np.all(np.isfinite(rec.vector)):
            raise ValidationError(f"record '{rec.id}': non-finite component")
        if float(np.sqrt(np.sum(rec.vector.astype(np.float64) ** 2))) == 0.0:
            raise ValidationError(f"record '{rec.id}': zero-norm vector")
        if rec.encoder != encoder:
            raise ValidationError(
                f"record '{rec.id}': encoder mismatch ('{rec.encoder}' != '{encoder}')"
            )
        if rec.role == Role.GENERATED and not rec.method:
            raise ValidationError(f"record '{rec.id}': generated record with empty method")
        if rec.role in (Role.REFERENCE, Role.GALLERY) and rec.method:
            raise ValidationError(f"record '{rec.id}': real record with non-empty method")
    # Generated queries need retrievable positives, but only sets that carry a
    # gallery at all are held to it; gallery-free slices are partial views.
    gallery_subjects = {r.subject for r in records if r.role == Role.GALLERY}
    if gallery_subjects:
        for rec in records:
            if rec.role == Role.GENERATED and rec.subject not in gallery_subjects:
                raise ValidationError(
                    f"record '{rec.id}': generated subject without gallery "
                    f"('{rec.subject}' has no gallery records)"
                )


def _derive_manifest(records: Sequence[EmbeddingRecord], name: str) -> DatasetManifest:
    counts: dict[str, dict[str, int]] = {}
    for rec in records:
        per_subject = counts.setdefault(rec.subject, {})
        per_subject[rec.role.value] = per_subject.get(rec.role.value, 0) + 1
    return DatasetManifest(
        name=name,
        dimension=len(records[0].vector),
        encoder=records[0].encoder,
        subjects=tuple(sorted(counts)),
        counts={s: counts[s] for s in sorted(counts)},
    )


def check_manifest(es: EmbeddingSet, manifest: DatasetManifest) -> None:
    """Raise if a set does not match a separately declared manifest."""
    derived = es.manifest
    if manifest.dimension != derived.dimension:
        raise ValidationError(
            f"manifest dimension {manifest.dimension} != data dimension {derived.dimension}"
        )
    if manifest.encoder != derived.encoder:
        raise ValidationError(
            f"manifest encoder '{manifest.encoder}' != data encoder '{derived.encoder}'"
        )
    if tuple(manifest.subjects) != derived.subjects:
        raise ValidationError("manifest subject list does not match data")
    if {s: dict(r) for s, r in manifest.counts.items()} != {
        s: dict(r) for s, r in derived.counts.items()
    }:
        raise ValidationError("manifest per-(subject, role) counts do not match data")


# -- JSONL format -------------------------------------------------------------


def _record_to_json_line(rec: EmbeddingRecord) -> str:
    obj = {
        "id": rec.id,
        "subject": rec.subject,
        "role": rec.role.value,
        "encoder": rec.encoder,
        "variant": rec.variant,
        "method": rec.method,
        "vector": rec.vector.tolist(),
    }
    return json.dumps(obj, ensure_ascii=False, separators=(",", ":"))


def _record_from_json_line(line: str, lineno: int) -> EmbeddingRecord:
    try:
        obj = json.loads(line)
    except json.JSONDecodeError as exc:
        raise ParseError(f"line {lineno}: malformed JSON ({exc.msg})") from exc
    if not isinstance(obj, dict):
        raise ParseError(f"line {lineno}: expected an object")
    missing = [k for k in JSONL_KEYS if k not in obj]
    extra = [k for k in obj if k not in JSONL_KEYS]
    if missing or extra:
        raise ParseError(f"line {lineno}: missing keys {missing}, unexpected keys {extra}")
    try:
        role = Role(obj["role"])
    except ValueError as exc:
        raise ParseError(f"line {lineno}: unknown role '{obj['role']}'") from exc
    vector = obj["vector"]
    if not isinstance(vector, list):
        raise ParseError(f"line {lineno}: vector must be an array")
    return EmbeddingRecord(
        id=str(obj["id"]),
        subject=str(obj["subject"]),
        role=role,
        encoder=str(obj["encoder"]),
        variant=str(obj["variant"]),
        method=str(obj["method"]),
        vector=np.asarray(vector, dtype=np.float32),
    )


# -- binary format ------------------------------------------------------------

_HEADER = struct.Struct("<4sHIQ")


def _write_binary(records: Sequence[EmbeddingRecord], dimension: int) -> bytes:
    chunks = [_HEADER.pack(MAGIC, FORMAT_VERSION, dimension, len(records))]
    for rec in records:
        for text in (rec.id, rec.subject):
            raw = text.encode("utf-8")
            chunks.append(struct.pack("<H", len(raw)))
            chunks.append(raw)
        chunks.append(struct.pack("<B", _ROLE_CODES[rec.role]))
        for text in (rec.encoder, rec.variant, rec.method):
            raw = text.encode("utf-8")
            chunks.append(struct.pack("<H", len(raw)))
            chunks.append(raw)
        chunks.append(rec.vector.astype("<f4", copy=False).tobytes())
    return b"".join(chunks)


class _Cursor:
    def __init__(self, data: bytes):
        self.data = data
        self.pos = 0

    def take(self, n: int, what: str) -> bytes:
        if self.pos + n > len(self.data):
            raise ParseError(f"truncated file while reading {what}")
        out = self.data[self.pos : self.pos + n]
        self.pos += n
        return out

    def take_str(self, what: str) -> str:
        (length,) = struct.unpack("<H", self.take(2, f"{what} length"))
        raw = self.take(length, what)
        try:
            return raw.decode("utf-8")
        except UnicodeDecodeError as exc:
            raise ParseError(f"invalid UTF-8 in {what}") from exc


def _read_binary(data: bytes) -> list[EmbeddingRecord]:
    cur = _Cursor(data)
    magic, version, dimension, count = _HEADER.unpack(cur.take(_HEADER.size, "header"))
    if magic != MAGIC:
        raise ParseError(f"bad magic bytes {magic!r}")
    if version != FORMAT_VERSION:
        raise ParseError(f"unsupported format version {version}")
    records = []
    for _ in range(count):
        rec_id = cur.take_str("id")
        subject = cur.take_str("subject")
        (role_code,) = struct.unpack("<B", cur.take(1, "role"))
        if role_code not in _CODE_ROLES:
            raise ParseError(f"record '{rec_id}': unknown role code {role_code}")
        encoder = cur.take_str("encoder")
        variant = cur.take_str("variant")
        method = cur.take_str("method")
        vec = np.frombuffer(cur.take(4 * dimension, "vector"), dtype="<f4")
        records.append(
            EmbeddingRecord(
                id=rec_id,
                subject=subject,
                role=_CODE_ROLES[role_code],
                encoder=encoder,
                variant=variant,
                method=method,
                vector=vec,
            )
        )
    if cur.pos != len(data):
        raise ParseError(f"{len(data) - cur.pos} trailing bytes after last record")
    return records


# -- public I/O ---------------------------------------------------------------


def detect_format(path: str | Path) -> str:
    with open(path, "rb") as fh:
        return "binary" if fh.read(4) == MAGIC else "jsonl"


def load_set(path: str | Path, fmt: str = "auto", name: str | None = None) -> EmbeddingSet:
    """Load and validate an embedding set from JSONL or binary."""
    path = Path(path)
    if fmt == "auto":
        fmt = detect_format(path)
    if fmt == "jsonl":
        records = []
        with open(path, "r", encoding="utf-8", newline="") as fh:
            for lineno, line in enumerate(fh, start=1):
                if line.strip():
                    records.append(_record_from_json_line(line, lineno))
    elif fmt == "binary":
        records = _read_binary(path.read_bytes())
    else:
        raise ValueError(f"unknown format '{fmt}'")
    return EmbeddingSet(records, name=name or path.stem)


def write_set(es: EmbeddingSet, path: str | Path, fmt: str = "jsonl") -> None:
    """Write a set so that load_set round-trips it bit-exactly."""
    if len(es) == 0:
        raise ValidationError("empty set")
    path = Path(path)
    if fmt == "jsonl":
        payload = "".join(_record_to_json_line(r) + "\n" for r in es.records).encode("utf-8")
    elif fmt == "binary":
        payload = _write_binary(es.records, es.dimension)
    else:
        raise ValueError(f"unknown format '{fmt}'")
    path.write_bytes(payload)


def write_manifest(manifest: DatasetManifest, path: str | Path) -> None:
    Path(path).write_text(
        json.dumps(manifest.to_dict(), indent=2, sort_keys=True) + "\n", encoding="utf-8"
    )


def load_manifest(path: str | Path) -> DatasetManifest:
    try:
        data = json.loads(Path(path).read_text(encoding="utf-8"))
    except json.JSONDecodeError as exc:
        raise ParseError(f"manifest: malformed JSON ({exc.msg})") from exc
    return DatasetManifest.from_dict(data)

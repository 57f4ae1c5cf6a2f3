"""Scoring primitives: cosine ranking, average precision, pairwise baselines.

Everything here is a pure function over immutable inputs. Similarity is
accumulated in float64 regardless of the float32 storage width, and every
ordering is total: ties in similarity break by ascending id, so results are
identical across platforms and parallel schedules.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Iterable, Mapping, Sequence

import numpy as np

from .errors import ValidationError
from .store import EmbeddingRecord, EmbeddingSet, Role

AGGREGATIONS = ("per-query", "per-subject-macro")
PAIRWISE_MODES = ("vs-reference", "vs-gallery")


def _as_records(source: EmbeddingSet | Iterable[EmbeddingRecord]) -> tuple[EmbeddingRecord, ...]:
    if isinstance(source, EmbeddingSet):
        return source.records
    return tuple(source)


def _norm64(vec: np.ndarray) -> float:
    v = vec.astype(np.float64, copy=False)
    return float(np.sqrt(np.sum(v * v)))


def cosine(u: np.ndarray, v: np.ndarray) -> float:
    """Cosine of the angle between two vectors, clamped to [-1, 1].

    Accumulates in float64 and clamps the final ratio so rounding can never
    push a result outside the documented range.
    """
    u = np.asarray(u, dtype=np.float64)
    v = np.asarray(v, dtype=np.float64)
    if u.shape != v.shape:
        raise ValidationError(f"dimension mismatch ({u.shape[0]} != {v.shape[0]})")
    nu = float(np.sqrt(np.sum(u * u)))
    nv = float(np.sqrt(np.sum(v * v)))
    if nu == 0.0 or nv == 0.0:
        raise ValidationError("zero-norm vector in cosine")
    value = float(np.sum(u * v)) / (nu * nv)
    return min(1.0, max(-1.0, value))


@dataclass(frozen=True)
class RankedList:
    """One query's gallery ranking: ids and similarities in descending order."""

    query_id: str
    query_subject: str
    item_ids: tuple[str, ...]
    similarities: tuple[float, ...]
    relevance: tuple[bool, ...]


@dataclass(frozen=True)
class ApResult:
    query_id: str
    subject: str
    ap: float
    relevant_count: int
    first_relevant_rank: int


class GalleryIndex:
    """Pre-normalized gallery matrix shared across many queries.

    Rows are sorted by ascending id once, so the stable descending-similarity
    sort yields the canonical (similarity desc, id asc) order for free.
    """

    def __init__(self, gallery: EmbeddingSet | Iterable[EmbeddingRecord]):
        records = sorted(_as_records(gallery), key=lambda r: r.id)
        if not records:
            raise ValidationError("empty gallery")
        self.ids = tuple(r.id for r in records)
        self.subjects = tuple(r.subject for r in records)
        self.dimension = len(records[0].vector)
        matrix = np.stack([r.vector for r in records]).astype(np.float64)
        norms = np.sqrt(np.sum(matrix * matrix, axis=1))
        self._unit = matrix / norms[:, None]

    def __len__(self) -> int:
        return len(self.ids)

    def rank(self, query: EmbeddingRecord) -> RankedList:
        if len(query.vector) != self.dimension:
            raise ValidationError(
                f"record '{query.id}': dimension mismatch "
                f"({len(query.vector)} != {self.dimension})"
            )
        q = query.vector.astype(np.float64)
        qnorm = float(np.sqrt(np.sum(q * q)))
        if qnorm == 0.0:
            raise ValidationError(f"record '{query.id}': zero-norm vector")
        sims = np.clip(np.sum(self._unit * (q / qnorm), axis=1), -1.0, 1.0)
        order = np.argsort(-sims, kind="stable")
        return RankedList(
            query_id=query.id,
            query_subject=query.subject,
            item_ids=tuple(self.ids[i] for i in order),
            similarities=tuple(float(sims[i]) for i in order),
            relevance=tuple(self.subjects[i] == query.subject for i in order),
        )


def rank_gallery(
    query: EmbeddingRecord, gallery: EmbeddingSet | Iterable[EmbeddingRecord]
) -> RankedList:
    """Rank every gallery item against one query by cosine similarity."""
    return GalleryIndex(gallery).rank(query)


def average_precision(ranked: RankedList) -> ApResult:
    """Non-interpolated AP: mean of precision-at-rank over the relevant ranks."""
    relevant_count = sum(ranked.relevance)
    if relevant_count == 0:
        raise ValidationError(
            f"record '{ranked.query_id}': no relevant gallery items for query subject"
        )
    hits = 0
    total = 0.0
    first_rank = 0
    for rank, relevant in enumerate(ranked.relevance, start=1):
        if relevant:
            hits += 1
            total += hits / rank
            if first_rank == 0:
                first_rank = rank
    return ApResult(
        query_id=ranked.query_id,
        subject=ranked.query_subject,
        ap=total / relevant_count,
        relevant_count=relevant_count,
        first_relevant_rank=first_rank,
    )


def mean_average_precision(results: Sequence[ApResult], aggregation: str = "per-query") -> float:
    """Aggregate APs either per query or as a macro mean over subjects."""
    if aggregation not in AGGREGATIONS:
        raise ValueError(f"unknown aggregation '{aggregation}'")
    if not results:
        raise ValidationError("empty collection")
    ordered = sorted(results, key=lambda r: r.query_id)
    if aggregation == "per-query":
        return float(np.mean([r.ap for r in ordered]))
    by_subject: dict[str, list[float]] = {}
    for res in ordered:
        by_subject.setdefault(res.subject, []).append(res.ap)
    subject_means = [float(np.mean(by_subject[s])) for s in sorted(by_subject)]
    return float(np.mean(subject_means))


@dataclass(frozen=True)
class PairwiseScore:
    subject: str
    mode: str
    mean_cosine: float
    pair_count: int


@dataclass(frozen=True)
class PairwiseReport:
    mode: str
    per_subject: Mapping[str, PairwiseScore]
    dataset_score: float


def pairwise_similarity_score(
    real_side: EmbeddingSet | Iterable[EmbeddingRecord],
    generated: EmbeddingSet | Iterable[EmbeddingRecord],
    mode: str = "vs-reference",
) -> PairwiseReport:
    """Mean cosine over the full (real, generated) cross product per subject.

    The dataset score is the unweighted mean over subjects. The result depends
    only on the two inputs passed in; no gallery or other context enters, which
    is exactly the property that makes this baseline insensitive to distractors.
    """
    if mode not in PAIRWISE_MODES:
        raise ValueError(f"unknown pairwise mode '{mode}'")
    real = sorted(_as_records(real_side), key=lambda r: r.id)
    gen = sorted(_as_records(generated), key=lambda r: r.id)
    real_by_subject: dict[str, list[EmbeddingRecord]] = {}
    gen_by_subject: dict[str, list[EmbeddingRecord]] = {}
    for rec in real:
        real_by_subject.setdefault(rec.subject, []).append(rec)
    for rec in gen:
        gen_by_subject.setdefault(rec.subject, []).append(rec)
    missing_real = sorted(set(gen_by_subject) - set(real_by_subject))
    missing_gen = sorted(set(real_by_subject) - set(gen_by_subject))
    if missing_real or missing_gen:
        raise ValidationError(
            "subject present on one side only: "
            f"missing from real side {missing_real}, missing from generated side {missing_gen}"
        )
    per_subject: dict[str, PairwiseScore] = {}
    for subject in sorted(gen_by_subject):
        a = _unit_matrix(real_by_subject[subject])
        b = _unit_matrix(gen_by_subject[subject])
        sims = np.clip(np.einsum("id,jd->ij", a, b, optimize=False), -1.0, 1.0)
        per_subject[subject] = PairwiseScore(
            subject=subject,
            mode=mode,
            mean_cosine=float(np.mean(sims)),
            pair_count=int(sims.size),
        )
    dataset = float(np.mean([per_subject[s].mean_cosine for s in sorted(per_subject)]))
    return PairwiseReport(mode=mode, per_subject=per_subject, dataset_score=dataset)


def _unit_matrix(records: Sequence[EmbeddingRecord]) -> np.ndarray:
    matrix = np.stack([r.vector for r in records]).astype(np.float64)
    norms = np.sqrt(np.sum(matrix * matrix, axis=1))
    return matrix / norms[:, None]


def text_adherence_score(
    prompts: EmbeddingSet | Iterable[EmbeddingRecord],
    generated: EmbeddingSet | Iterable[EmbeddingRecord],
    pair_by: str = "subject",
    pairing: Mapping[str, str] | None = None,
) -> float:
    """Mean cosine between each generated record and its paired prompt.

    Pairing is either an explicit generated-id -> prompt-id mapping or a
    record field (default: subject) that must select exactly one prompt per
    generated record.
    """
    prompt_records = sorted(_as_records(prompts), key=lambda r: r.id)
    gen_records = sorted(_as_records(generated), key=lambda r: r.id)
    if not gen_records:
        raise ValidationError("empty collection")
    prompt_by_id = {r.id: r for r in prompt_records}
    values = []
    for gen in gen_records:
        if pairing is not None:
            prompt_id = pairing.get(gen.id)
            if prompt_id is None or prompt_id not in prompt_by_id:
                raise ValidationError(f"record '{gen.id}': unpaired generated record")
            prompt = prompt_by_id[prompt_id]
        else:
            key = getattr(gen, pair_by)
            matches = [p for p in prompt_records if getattr(p, pair_by) == key]
            if not matches:
                raise ValidationError(f"record '{gen.id}': unpaired generated record")
            if len(matches) > 1:
                raise ValidationError(
                    f"record '{gen.id}': ambiguous prompt pairing "
                    f"({len(matches)} prompts share {pair_by}='{key}')"
                )
            prompt = matches[0]
        values.append(cosine(prompt.vector, gen.vector))
    return float(np.mean(values))


def top1_identity_accuracy(
    queries: EmbeddingSet | Iterable[EmbeddingRecord],
    gallery: EmbeddingSet | Iterable[EmbeddingRecord],
) -> float:
    """Fraction of queries whose rank-1 gallery item shares the query subject."""
    query_records = sorted(_as_records(queries), key=lambda r: r.id)
    if not query_records:
        raise ValidationError("empty collection")
    index = GalleryIndex(gallery)
    hits = sum(1 for q in query_records if index.rank(q).relevance[0])
    return hits / len(query_records)

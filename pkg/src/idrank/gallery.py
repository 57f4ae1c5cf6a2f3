"""Reference/gallery partitioning and the sampling strategies behind it.

A split is reproducible from (pool, config) alone: every random draw for a
subject comes from a key derived as ``seed XOR fnv1a64(subject)``, so neither
subject iteration order nor parallel scheduling can change the outcome.
"""

from __future__ import annotations

from dataclasses import dataclass, field, replace
from pathlib import Path
from typing import Iterable, Mapping, Sequence

import numpy as np

from . import rng
from .errors import ConfigError, ValidationError
from .store import EmbeddingRecord, EmbeddingSet, Role

STRATEGIES = ("random", "kmeans", "curated")

KMEANS_TOL = 1e-6
KMEANS_MAX_ITER = 100


def subject_seed(seed: int, subject: str) -> int:
    """Per-subject stream key: dataset seed XOR FNV-1a of the subject id."""
    return (seed & 0xFFFFFFFFFFFFFFFF) ^ rng.fnv1a64(subject)


@dataclass(frozen=True)
class SplitConfig:
    n_reference: int
    n_gallery: int
    strategy: str = "random"
    seed: int = 0
    max_subjects: int | None = None
    cap_to_available: bool = False
    curated_path: str | Path | None = None

    def __post_init__(self):
        if self.n_reference < 1 or self.n_gallery < 1:
            raise ConfigError("n_reference and n_gallery must be >= 1")
        if self.strategy not in STRATEGIES:
            raise ConfigError(f"unknown strategy '{self.strategy}'")
        if self.strategy == "curated" and self.curated_path is None:
            raise ConfigError("strategy 'curated' requires a curated id-list file")
        if self.max_subjects is not None and self.max_subjects < 1:
            raise ConfigError("max_subjects must be >= 1")


@dataclass(frozen=True)
class GallerySpec:
    """Realized split: per-subject reference and gallery id lists.

    Reference and gallery ids are disjoint per subject and globally; the
    gallery is what generation never saw.
    """

    references: Mapping[str, tuple[str, ...]]
    galleries: Mapping[str, tuple[str, ...]]
    strategy: str
    seed: int
    note: str = ""

    def __post_init__(self):
        object.__setattr__(
            self, "references", {s: tuple(ids) for s, ids in sorted(self.references.items())}
        )
        object.__setattr__(
            self, "galleries", {s: tuple(ids) for s, ids in sorted(self.galleries.items())}
        )
        seen: dict[str, str] = {}
        for label, listing in (("reference", self.references), ("gallery", self.galleries)):
            for subj, ids in listing.items():
                for item in ids:
                    if item in seen:
                        raise ValidationError(
                            f"record '{item}': appears in both {seen[item]} and {label} lists"
                        )
                    seen[item] = label

    @property
    def subjects(self) -> tuple[str, ...]:
        return tuple(sorted(set(self.references) | set(self.galleries)))

    def to_dict(self) -> dict:
        return {
            "references": {s: list(ids) for s, ids in self.references.items()},
            "galleries": {s: list(ids) for s, ids in self.galleries.items()},
            "strategy": self.strategy,
            "seed": self.seed,
            "note": self.note,
        }

    @classmethod
    def from_dict(cls, payload: dict) -> "GallerySpec":
        try:
            return cls(
                references={s: tuple(ids) for s, ids in payload["references"].items()},
                galleries={s: tuple(ids) for s, ids in payload["galleries"].items()},
                strategy=payload["strategy"],
                seed=int(payload["seed"]),
                note=payload.get("note", ""),
            )
        except (KeyError, TypeError, AttributeError) as exc:
            raise ValidationError(f"malformed gallery spec: {exc}") from exc


@dataclass(eq=False)
class KMeansResult:
    centroids: np.ndarray
    assignments: tuple[int, ...]
    inertia: float
    iterations: int
    converged: bool
    inertia_history: tuple[float, ...] = field(default=())


def _canonical_records(candidates: Iterable[EmbeddingRecord]) -> list[EmbeddingRecord]:
    records = sorted(candidates, key=lambda r: r.id)
    for prev, cur in zip(records, records[1:]):
        if prev.id == cur.id:
            raise ValidationError(f"record '{cur.id}': duplicate candidate id")
    return records


def sample_random(candidates: Iterable[EmbeddingRecord], n: int, seed: int) -> tuple[str, ...]:
    """Uniform sample of n candidate ids without replacement, sorted by id.

    The sample is the prefix of a seeded permutation, so for a fixed seed and
    candidate pool the n=5 sample is a subset of the n=10 sample. Nested
    gallery sizes share items, which is what an ablation over size wants.
    """
    records = _canonical_records(candidates)
    if n < 1:
        raise ConfigError("sample size must be >= 1")
    if n > len(records):
        raise ValidationError(f"sample size {n} exceeds {len(records)} candidates")
    order = rng.permutation(rng.derive_key(seed, "sample-random"), len(records))
    chosen = [records[i].id for i in order[:n]]
    return tuple(sorted(chosen))


def kmeans(
    points: np.ndarray,
    k: int,
    seed: int,
    tol: float = KMEANS_TOL,
    max_iter: int = KMEANS_MAX_ITER,
) -> KMeansResult:
    """Lloyd's algorithm from a seeded k-means++ initialization.

    Ties in nearest-centroid assignment break toward the lower centroid
    index. An emptied cluster is repaired by relocating its centroid onto the
    farthest point not already hosting a centroid, which keeps every cluster
    nonempty and the post-update inertia sequence non-increasing.
    """
    pts = np.asarray(points, dtype=np.float64)
    if pts.ndim != 2:
        raise ValidationError("points must be a 2-d array")
    m = pts.shape[0]
    if k < 1:
        raise ConfigError("k must be >= 1")
    if k > m:
        raise ValidationError(f"k={k} exceeds {m} points")
    if not np.all(np.isfinite(pts)):
        raise ValidationError("non-finite point")
    # Nonempty clusters under nearest-centroid assignment need k distinct
    # coordinates, so duplicates tighten the k precondition.
    distinct = len(np.unique(pts, axis=0))
    if k > distinct:
        raise ValidationError(f"k={k} exceeds {distinct} distinct points")

    stream = rng.Stream(rng.derive_key(seed, "kmeans-init"))
    centroids = np.empty((k, pts.shape[1]), dtype=np.float64)
    centroids[0] = pts[stream.choice_index(np.ones(m))]
    for j in range(1, k):
        d2 = _pairwise_sq(pts, centroids[:j]).min(axis=1)
        centroids[j] = pts[stream.choice_index(d2)]

    assignments = np.zeros(m, dtype=np.int64)
    history: list[float] = []
    iterations = 0
    converged = False
    for iterations in range(1, max_iter + 1):
        d2 = _pairwise_sq(pts, centroids)
        assignments = np.argmin(d2, axis=1)
        point_d2 = d2[np.arange(m), assignments]
        _repair_empty_clusters(pts, centroids, assignments, point_d2)
        new_centroids = np.stack(
            [np.mean(pts[assignments == j], axis=0) for j in range(k)]
        )
        shift = np.sqrt(np.sum((new_centroids - centroids) ** 2, axis=1)).max()
        centroids = new_centroids
        diffs = pts - centroids[assignments]
        history.append(float(np.sum(diffs * diffs)))
        if shift < tol:
            converged = True
            break

    # Final passes so reported assignments are exactly nearest-centroid and no
    # cluster is empty. Each repair pins its cluster for good (its host sits at
    # distance zero of a coordinate no other centroid occupies), so k rounds
    # always suffice.
    point_d2 = np.zeros(m)
    for _ in range(k + 1):
        d2 = _pairwise_sq(pts, centroids)
        assignments = np.argmin(d2, axis=1)
        point_d2 = d2[np.arange(m), assignments]
        if all(np.any(assignments == c) for c in range(k)):
            break
        _repair_empty_clusters(pts, centroids, assignments, point_d2)
    inertia = float(np.sum(point_d2))
    history.append(inertia)
    return KMeansResult(
        centroids=centroids,
        assignments=tuple(int(a) for a in assignments),
        inertia=inertia,
        iterations=iterations,
        converged=converged,
        inertia_history=tuple(history),
    )


def _pairwise_sq(points: np.ndarray, centroids: np.ndarray) -> np.ndarray:
    deltas = points[:, None, :] - centroids[None, :, :]
    return np.sum(deltas * deltas, axis=2)


def _repair_empty_clusters(
    pts: np.ndarray, centroids: np.ndarray, assignments: np.ndarray, point_d2: np.ndarray
) -> None:
    """Relocate each empty cluster's centroid (in place) onto the farthest
    point whose coordinates no other centroid occupies; one exists whenever
    the points have at least k distinct coordinates."""
    k = centroids.shape[0]
    for empty in range(k):
        if np.any(assignments == empty):
            continue
        for cand in np.argsort(-point_d2, kind="stable"):
            taken = any(
                np.array_equal(pts[cand], centroids[other])
                for other in range(k)
                if other != empty
            )
            if not taken:
                centroids[empty] = pts[cand]
                assignments[cand] = empty
                point_d2[cand] = 0.0
                break


def sample_kmeans(candidates: Iterable[EmbeddingRecord], n: int, seed: int) -> tuple[str, ...]:
    """Cluster candidates into n groups and keep the id nearest each centroid."""
    records = _canonical_records(candidates)
    if n < 1:
        raise ConfigError("sample size must be >= 1")
    if n > len(records):
        raise ValidationError(f"sample size {n} exceeds {len(records)} candidates")
    pts = np.stack([r.vector for r in records]).astype(np.float64)
    result = kmeans(pts, n, rng.derive_key(seed, "sample-kmeans"))
    assignments = np.asarray(result.assignments)
    chosen = []
    for cluster in range(n):
        members = np.flatnonzero(assignments == cluster)
        deltas = pts[members] - result.centroids[cluster]
        best = members[int(np.argmin(np.sum(deltas * deltas, axis=1)))]
        chosen.append(records[best].id)
    return tuple(sorted(chosen))


def split_reference_gallery(pool: EmbeddingSet, config: SplitConfig) -> GallerySpec:
    """Partition each subject's real images into disjoint reference and gallery lists.

    References come first from a per-subject seeded permutation; the gallery
    strategy then draws from the remainder. With the same seed, the random and
    kmeans strategies therefore agree on the reference side and differ only in
    gallery selection.
    """
    if config.strategy == "curated":
        spec = curate_from_list(pool, Path(config.curated_path))
        return _fill_references(pool, spec, config)

    subjects = _select_subjects(pool, config)
    references: dict[str, tuple[str, ...]] = {}
    galleries: dict[str, tuple[str, ...]] = {}
    for subject in subjects:
        candidates = _real_records(pool, subject)
        n_ref, n_gal = _capped_sizes(subject, len(candidates), config)
        key = subject_seed(config.seed, subject)
        order = rng.permutation(rng.derive_key(key, "split"), len(candidates))
        references[subject] = tuple(sorted(candidates[i].id for i in order[:n_ref]))
        remainder = [candidates[i] for i in sorted(order[n_ref:])]
        if config.strategy == "random":
            galleries[subject] = sample_random(remainder, n_gal, key)
        else:
            galleries[subject] = sample_kmeans(remainder, n_gal, key)
    return GallerySpec(
        references=references,
        galleries=galleries,
        strategy=config.strategy,
        seed=config.seed,
        note=f"{config.strategy} split of '{pool.name}'",
    )


def _select_subjects(pool: EmbeddingSet, config: SplitConfig) -> tuple[str, ...]:
    subjects = pool.subjects
    if config.max_subjects is None or config.max_subjects >= len(subjects):
        return subjects
    order = rng.permutation(rng.derive_key(config.seed, "subjects"), len(subjects))
    return tuple(sorted(subjects[i] for i in order[: config.max_subjects]))


def _real_records(pool: EmbeddingSet, subject: str) -> list[EmbeddingRecord]:
    records = list(pool.by_subject_role(subject, Role.REFERENCE))
    records += list(pool.by_subject_role(subject, Role.GALLERY))
    if not records:
        raise ValidationError(f"subject '{subject}' has no real (reference/gallery) records")
    return sorted(records, key=lambda r: r.id)


def _capped_sizes(subject: str, available: int, config: SplitConfig) -> tuple[int, int]:
    wanted = config.n_reference + config.n_gallery
    if available >= wanted:
        return config.n_reference, config.n_gallery
    if not config.cap_to_available or available < 2:
        raise ValidationError(
            f"subject '{subject}': insufficient candidates "
            f"({available} < {config.n_reference} + {config.n_gallery})"
        )
    n_ref = min(config.n_reference, available - 1)
    return n_ref, min(config.n_gallery, available - n_ref)


def curate_from_list(pool: EmbeddingSet, path: str | Path) -> GallerySpec:
    """Read a curated id-list file: gallery ids, then ``---``, then reference ids.

    Lines starting with ``#`` are comments. The reference section is optional;
    a spec without one can be completed from the remaining pool by
    split_reference_gallery.
    """
    path = Path(path)
    sections: list[list[str]] = [[]]
    for line in path.read_text(encoding="utf-8").splitlines():
        text = line.strip()
        if not text or text.startswith("#"):
            continue
        if text == "---":
            sections.append([])
            continue
        sections[0 if len(sections) == 1 else 1].append(text)
    if len(sections) > 2:
        raise ValidationError(f"{path.name}: more than one '---' separator")
    gallery_ids = sections[0]
    reference_ids = sections[1] if len(sections) == 2 else []
    if not gallery_ids:
        raise ValidationError(f"{path.name}: empty gallery section")

    overlap = sorted(set(gallery_ids) & set(reference_ids))
    if overlap:
        raise ValidationError(f"record '{overlap[0]}': overlap between gallery and reference lists")

    galleries: dict[str, list[str]] = {}
    references: dict[str, list[str]] = {}
    for listing, target in ((gallery_ids, galleries), (reference_ids, references)):
        seen: set[str] = set()
        for item in listing:
            if item in seen:
                raise ValidationError(f"record '{item}': duplicate id in curated list")
            seen.add(item)
            record = pool.get(item)
            if record is None:
                raise ValidationError(f"record '{item}': unknown id in curated list")
            target.setdefault(record.subject, []).append(item)
    return GallerySpec(
        references={s: tuple(sorted(ids)) for s, ids in references.items()},
        galleries={s: tuple(sorted(ids)) for s, ids in galleries.items()},
        strategy="curated",
        seed=0,
        note=f"curated list {path.name}",
    )


def _fill_references(pool: EmbeddingSet, spec: GallerySpec, config: SplitConfig) -> GallerySpec:
    """Complete a curated spec whose reference section was omitted."""
    references = dict(spec.references)
    for subject in spec.galleries:
        if references.get(subject):
            continue
        taken = set(spec.galleries[subject])
        remainder = [r for r in _real_records(pool, subject) if r.id not in taken]
        if len(remainder) < config.n_reference and not config.cap_to_available:
            raise ValidationError(
                f"subject '{subject}': insufficient candidates "
                f"({len(remainder)} remain for {config.n_reference} references)"
            )
        n_ref = min(config.n_reference, len(remainder))
        if n_ref < 1:
            raise ValidationError(f"subject '{subject}': no candidates left for references")
        key = subject_seed(config.seed, subject)
        references[subject] = sample_random(remainder, n_ref, rng.derive_key(key, "reference"))
    return GallerySpec(
        references=references,
        galleries=spec.galleries,
        strategy="curated",
        seed=config.seed,
        note=spec.note,
    )


def apply_split(pool: EmbeddingSet, spec: GallerySpec) -> EmbeddingSet:
    """Materialize a spec: pool records re-tagged with reference/gallery roles."""
    roles: dict[str, Role] = {}
    for ids in spec.references.values():
        for item in ids:
            roles[item] = Role.REFERENCE
    for ids in spec.galleries.values():
        for item in ids:
            roles[item] = Role.GALLERY
    records = []
    for item in sorted(roles):
        record = pool.get(item)
        if record is None:
            raise ValidationError(f"record '{item}': listed in spec but missing from pool")
        records.append(replace(record, role=roles[item]))
    return EmbeddingSet(records, name=f"{pool.name}:{spec.strategy}")

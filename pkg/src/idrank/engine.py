"""Evaluation runs: oracle mode, per-method scoring, ablation sweeps, variants.

A run is a pure function of (embedding sets, config). Query ranking can fan
out over a thread pool, but results are reduced in sorted query-id order, so
the thread count never changes a single output bit. The config fingerprint
covers semantic fields only (never file paths or thread count) for the same
reason: equal inputs must yield byte-identical outputs wherever they run.
"""

from __future__ import annotations

import json
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from pathlib import Path
from typing import Mapping, Sequence

from . import metrics, rng, store
from .errors import ConfigError, ValidationError
from .gallery import GallerySpec, SplitConfig, apply_split, sample_kmeans, sample_random, split_reference_gallery, subject_seed
from .metrics import AGGREGATIONS, PAIRWISE_MODES, ApResult, GalleryIndex
from .store import EmbeddingRecord, EmbeddingSet, Role

SCALES = ("fraction", "percent")
ABLATION_AXES = ("images-per-subject", "subject-count", "sampling-strategy")


@dataclass(frozen=True)
class EvalConfig:
    datasets: tuple[str, ...]
    encoder: str | None = None
    methods: tuple[str, ...] = ()
    variant: str | None = None
    gallery_spec: str | None = None
    split: SplitConfig | None = None
    aggregation: str = "per-query"
    pairwise_mode: str = "vs-reference"
    scale: str = "fraction"
    seed: int = 0
    threads: int = 1

    def __post_init__(self):
        object.__setattr__(self, "datasets", tuple(str(p) for p in self.datasets))
        object.__setattr__(self, "methods", tuple(self.methods))
        if not self.datasets:
            raise ConfigError("at least one dataset path is required")
        if self.aggregation not in AGGREGATIONS:
            raise ConfigError(f"unknown aggregation '{self.aggregation}'")
        if self.pairwise_mode not in PAIRWISE_MODES:
            raise ConfigError(f"unknown pairwise mode '{self.pairwise_mode}'")
        if self.scale not in SCALES:
            raise ConfigError(f"unknown scale '{self.scale}'")
        if self.threads < 1:
            raise ConfigError("threads must be >= 1")
        if self.gallery_spec is not None and self.split is not None:
            raise ConfigError("gallery_spec and split are mutually exclusive")

    def fingerprint(self) -> str:
        """Stable 64-bit hex over semantic fields; paths and threads excluded."""
        payload = {
            "encoder": self.encoder,
            "methods": list(self.methods),
            "variant": self.variant,
            "gallery_source": "spec-file" if self.gallery_spec else ("split" if self.split else "roles"),
            "split": None
            if self.split is None
            else {
                "n_reference": self.split.n_reference,
                "n_gallery": self.split.n_gallery,
                "strategy": self.split.strategy,
                "seed": self.split.seed,
                "max_subjects": self.split.max_subjects,
                "cap_to_available": self.split.cap_to_available,
            },
            "aggregation": self.aggregation,
            "pairwise_mode": self.pairwise_mode,
            "scale": self.scale,
            "seed": self.seed,
        }
        return stable_hash(payload)


def stable_hash(payload) -> str:
    """64-bit FNV-1a over a canonical JSON serialization, as 16 hex chars."""
    canonical = json.dumps(payload, sort_keys=True, separators=(",", ":"), ensure_ascii=False)
    return f"{rng.fnv1a64(canonical):016x}"


def spec_fingerprint(spec: GallerySpec) -> str:
    return stable_hash(spec.to_dict())


def load_eval_config(path: str | Path) -> EvalConfig:
    """Read a JSON run config; relative paths resolve against the file's directory."""
    path = Path(path)
    try:
        payload = json.loads(path.read_text(encoding="utf-8"))
    except (OSError, json.JSONDecodeError) as exc:
        raise ConfigError(f"{path.name}: {exc}") from exc
    if not isinstance(payload, dict):
        raise ConfigError(f"{path.name}: config must be a JSON object")
    known = {
        "datasets", "encoder", "methods", "variant", "gallery_spec", "split",
        "aggregation", "pairwise_mode", "scale", "seed", "threads",
    }
    extra = sorted(set(payload) - known)
    if extra:
        raise ConfigError(f"{path.name}: unknown config keys: {extra}")
    base = path.parent

    def resolve(p):
        return str((base / p) if not Path(p).is_absolute() else Path(p))

    split = None
    if payload.get("split") is not None:
        raw = dict(payload["split"])
        if raw.get("curated_path"):
            raw["curated_path"] = resolve(raw["curated_path"])
        try:
            split = SplitConfig(**raw)
        except TypeError as exc:
            raise ConfigError(f"{path.name}: malformed split config: {exc}") from exc
    return EvalConfig(
        datasets=tuple(resolve(p) for p in payload.get("datasets", ())),
        encoder=payload.get("encoder"),
        methods=tuple(payload.get("methods", ())),
        variant=payload.get("variant"),
        gallery_spec=resolve(payload["gallery_spec"]) if payload.get("gallery_spec") else None,
        split=split,
        aggregation=payload.get("aggregation", "per-query"),
        pairwise_mode=payload.get("pairwise_mode", "vs-reference"),
        scale=payload.get("scale", "fraction"),
        seed=int(payload.get("seed", 0)),
        threads=int(payload.get("threads", 1)),
    )


@dataclass(frozen=True)
class SubjectScores:
    subject: str
    mean_ap: float
    pairwise: float
    query_count: int


@dataclass(frozen=True)
class RunResult:
    dataset: str
    encoder: str
    method: str
    variant: str
    map_per_query: float
    map_per_subject: float
    aggregation: str
    pairwise_mode: str
    pairwise_score: float
    text_adherence: float | None
    top1_accuracy: float
    per_subject: Mapping[str, SubjectScores]
    query_count: int
    gallery_summary: Mapping[str, int]
    gallery_fingerprint: str
    config_fingerprint: str
    seed: int

    @property
    def map_primary(self) -> float:
        return self.map_per_query if self.aggregation == "per-query" else self.map_per_subject

    def to_dict(self) -> dict:
        return {
            "dataset": self.dataset,
            "encoder": self.encoder,
            "method": self.method,
            "variant": self.variant,
            "map_per_query": self.map_per_query,
            "map_per_subject": self.map_per_subject,
            "aggregation": self.aggregation,
            "pairwise_mode": self.pairwise_mode,
            "pairwise_score": self.pairwise_score,
            "text_adherence": self.text_adherence,
            "top1_accuracy": self.top1_accuracy,
            "per_subject": {
                s: {
                    "mean_ap": b.mean_ap,
                    "pairwise": b.pairwise,
                    "query_count": b.query_count,
                }
                for s, b in sorted(self.per_subject.items())
            },
            "query_count": self.query_count,
            "gallery_summary": dict(sorted(self.gallery_summary.items())),
            "gallery_fingerprint": self.gallery_fingerprint,
            "config_fingerprint": self.config_fingerprint,
            "seed": self.seed,
        }

    @classmethod
    def from_dict(cls, payload: dict) -> "RunResult":
        try:
            per_subject = {
                s: SubjectScores(
                    subject=s,
                    mean_ap=float(b["mean_ap"]),
                    pairwise=float(b["pairwise"]),
                    query_count=int(b["query_count"]),
                )
                for s, b in payload["per_subject"].items()
            }
            return cls(
                dataset=payload["dataset"],
                encoder=payload["encoder"],
                method=payload["method"],
                variant=payload["variant"],
                map_per_query=float(payload["map_per_query"]),
                map_per_subject=float(payload["map_per_subject"]),
                aggregation=payload["aggregation"],
                pairwise_mode=payload["pairwise_mode"],
                pairwise_score=float(payload["pairwise_score"]),
                text_adherence=(
                    None if payload["text_adherence"] is None else float(payload["text_adherence"])
                ),
                top1_accuracy=float(payload["top1_accuracy"]),
                per_subject=per_subject,
                query_count=int(payload["query_count"]),
                gallery_summary={s: int(n) for s, n in payload["gallery_summary"].items()},
                gallery_fingerprint=payload["gallery_fingerprint"],
                config_fingerprint=payload["config_fingerprint"],
                seed=int(payload["seed"]),
            )
        except (KeyError, TypeError, AttributeError) as exc:
            raise ValidationError(f"malformed run result: {exc}") from exc


@dataclass(frozen=True)
class GridSpec:
    """One ablation axis: the values to sweep and the seeds to repeat over."""

    axis: str
    values: tuple
    seeds: tuple[int, ...] = (0,)
    resample: bool = False
    gallery_size: int | None = None

    def __post_init__(self):
        object.__setattr__(self, "values", tuple(self.values))
        object.__setattr__(self, "seeds", tuple(int(s) for s in self.seeds))
        if self.axis not in ABLATION_AXES:
            raise ConfigError(f"unknown ablation axis '{self.axis}'")
        if not self.values:
            raise ConfigError("empty ablation grid")
        if not self.seeds:
            raise ConfigError("at least one repetition seed is required")
        if self.axis == "sampling-strategy":
            bad = [v for v in self.values if v not in ("random", "kmeans")]
            if bad:
                raise ConfigError(f"unknown sampling strategies {bad}")
        else:
            numeric = [int(v) for v in self.values]
            if any(v < 1 for v in numeric):
                raise ConfigError("grid values must be >= 1")
            if any(b <= a for a, b in zip(numeric, numeric[1:])):
                raise ConfigError("numeric grid values must be strictly increasing")
            object.__setattr__(self, "values", tuple(numeric))


@dataclass(frozen=True)
class AblationGrid:
    axis: str
    values: tuple
    seeds: tuple[int, ...]
    cells: Mapping[tuple, RunResult]

    def cell(self, value, seed: int) -> RunResult:
        return self.cells[(value, seed)]

    def mean_map(self, value) -> float:
        aps = [self.cells[(value, s)].map_primary for s in self.seeds]
        return sum(aps) / len(aps)

    def mean_pairwise(self, value) -> float:
        vals = [self.cells[(value, s)].pairwise_score for s in self.seeds]
        return sum(vals) / len(vals)


def load_datasets(config: EvalConfig) -> EmbeddingSet:
    """Load and merge the configured embedding files into one validated set."""
    sets = [store.load_set(p) for p in config.datasets]
    if len(sets) == 1:
        merged = sets[0]
    else:
        records: list[EmbeddingRecord] = []
        for es in sets:
            records.extend(es.records)
        name = "+".join(sorted(es.name for es in sets))
        merged = EmbeddingSet(records, name=name)
    if config.encoder is not None and merged.encoder != config.encoder:
        raise ConfigError(
            f"config expects encoder '{config.encoder}' but data uses '{merged.encoder}'"
        )
    if config.variant is not None:
        merged = merged.filter(variant=config.variant, name=merged.name)
    return merged


def _spec_from_roles(dataset: EmbeddingSet, seed: int) -> GallerySpec:
    references = {}
    galleries = {}
    for subject in dataset.subjects:
        refs = tuple(r.id for r in dataset.by_subject_role(subject, Role.REFERENCE))
        gals = tuple(r.id for r in dataset.by_subject_role(subject, Role.GALLERY))
        if refs:
            references[subject] = refs
        if gals:
            galleries[subject] = gals
    if not galleries:
        raise ValidationError("dataset has no gallery records and no split was configured")
    return GallerySpec(
        references=references, galleries=galleries, strategy="as-loaded", seed=seed,
        note="roles taken as loaded",
    )


def realize_gallery(config: EvalConfig, dataset: EmbeddingSet) -> tuple[EmbeddingSet, GallerySpec]:
    """Resolve the gallery source into a concrete spec and an eval-ready set.

    Generated and prompt records ride along unchanged for the spec's subjects.
    """
    if config.split is not None:
        spec = split_reference_gallery(dataset, config.split)
    elif config.gallery_spec is not None:
        try:
            payload = json.loads(Path(config.gallery_spec).read_text(encoding="utf-8"))
        except (OSError, json.JSONDecodeError) as exc:
            raise ConfigError(f"gallery spec {config.gallery_spec}: {exc}") from exc
        spec = GallerySpec.from_dict(payload)
    else:
        spec = _spec_from_roles(dataset, config.seed)
    real = apply_split(dataset, spec)
    subjects = set(spec.subjects)
    extras = [
        r for r in dataset
        if r.role in (Role.GENERATED, Role.PROMPT) and r.subject in subjects
    ]
    eval_set = EmbeddingSet(list(real.records) + extras, name=dataset.name)
    return eval_set, spec


def _rank_queries(
    queries: Sequence[EmbeddingRecord], index: GalleryIndex, threads: int
) -> list[ApResult]:
    ordered = sorted(queries, key=lambda r: r.id)
    gallery_subjects = set(index.subjects)
    for q in ordered:
        if q.subject not in gallery_subjects:
            raise ValidationError(f"subject '{q.subject}': no gallery records for query subject")
    if threads <= 1:
        ranked = [index.rank(q) for q in ordered]
    else:
        with ThreadPoolExecutor(max_workers=threads) as pool:
            ranked = list(pool.map(index.rank, ordered))
    return [metrics.average_precision(r) for r in ranked]


def _adherence(eval_set: EmbeddingSet, queries: Sequence[EmbeddingRecord]) -> float | None:
    """Prompt adherence when every query subject has exactly one prompt; else None."""
    prompts = eval_set.by_role(Role.PROMPT)
    if not prompts:
        return None
    by_subject: dict[str, int] = {}
    for p in prompts:
        by_subject[p.subject] = by_subject.get(p.subject, 0) + 1
    if any(by_subject.get(q.subject, 0) != 1 for q in queries):
        return None
    return metrics.text_adherence_score(prompts, queries)


def _run_single(
    config: EvalConfig,
    eval_set: EmbeddingSet,
    spec: GallerySpec,
    queries: Sequence[EmbeddingRecord],
    method: str,
    variant: str,
    gallery_records: Sequence[EmbeddingRecord] | None = None,
    pairwise_queries: Sequence[EmbeddingRecord] | None = None,
) -> RunResult:
    gallery = tuple(gallery_records) if gallery_records is not None else eval_set.by_role(Role.GALLERY)
    if not gallery:
        raise ValidationError("empty gallery")
    queries = tuple(sorted(queries, key=lambda r: r.id))
    if not queries:
        raise ValidationError("no query records")

    index = GalleryIndex(gallery)
    ap_results = _rank_queries(queries, index, config.threads)
    map_pq = metrics.mean_average_precision(ap_results, "per-query")
    map_ps = metrics.mean_average_precision(ap_results, "per-subject-macro")
    top1 = metrics.top1_identity_accuracy(queries, gallery)

    # The pairwise baseline never sees gallery items it is not told about:
    # vs-reference pairs against the reference records of the scored subjects,
    # vs-gallery against the gallery passed to this run.
    pw_queries = tuple(pairwise_queries) if pairwise_queries is not None else queries
    subjects = sorted({q.subject for q in pw_queries})
    if config.pairwise_mode == "vs-reference":
        real_side = [
            r for s in subjects for r in eval_set.by_subject_role(s, Role.REFERENCE)
        ]
    else:
        by_subject: dict[str, list[EmbeddingRecord]] = {}
        for g in gallery:
            by_subject.setdefault(g.subject, []).append(g)
        real_side = [r for s in subjects for r in by_subject.get(s, ())]
    pairwise = metrics.pairwise_similarity_score(real_side, pw_queries, config.pairwise_mode)

    per_subject = {}
    ap_by_subject: dict[str, list[float]] = {}
    for res in ap_results:
        ap_by_subject.setdefault(res.subject, []).append(res.ap)
    for subject in sorted(ap_by_subject):
        aps = ap_by_subject[subject]
        pw = pairwise.per_subject.get(subject)
        per_subject[subject] = SubjectScores(
            subject=subject,
            mean_ap=sum(aps) / len(aps),
            pairwise=pw.mean_cosine if pw is not None else float("nan"),
            query_count=len(aps),
        )

    gallery_counts: dict[str, int] = {}
    for g in gallery:
        gallery_counts[g.subject] = gallery_counts.get(g.subject, 0) + 1
    return RunResult(
        dataset=eval_set.name,
        encoder=eval_set.encoder,
        method=method,
        variant=variant,
        map_per_query=map_pq,
        map_per_subject=map_ps,
        aggregation=config.aggregation,
        pairwise_mode=config.pairwise_mode,
        pairwise_score=pairwise.dataset_score,
        text_adherence=_adherence(eval_set, queries) if queries[0].role is Role.GENERATED else None,
        top1_accuracy=top1,
        per_subject=per_subject,
        query_count=len(queries),
        gallery_summary=gallery_counts,
        gallery_fingerprint=spec_fingerprint(spec),
        config_fingerprint=config.fingerprint(),
        seed=config.seed,
    )


def run_oracle_eval(config: EvalConfig, dataset: EmbeddingSet | None = None) -> RunResult:
    """Score real reference images as queries against the gallery.

    Pairwise similarity here is always reference-vs-gallery (both sides real);
    pairing references against themselves would only count self-similarity.
    """
    dataset = dataset if dataset is not None else load_datasets(config)
    eval_set, spec = realize_gallery(config, dataset)
    queries = eval_set.by_role(Role.REFERENCE)
    if not queries:
        raise ValidationError("no reference records to use as oracle queries")
    oracle_config = config if config.pairwise_mode == "vs-gallery" else _with_mode(config, "vs-gallery")
    return _run_single(oracle_config, eval_set, spec, queries, method="oracle", variant=_variant_key(config))


def _with_mode(config: EvalConfig, mode: str) -> EvalConfig:
    from dataclasses import replace

    return replace(config, pairwise_mode=mode)


def _variant_key(config: EvalConfig) -> str:
    return config.variant if config.variant is not None else ""


def run_generated_eval(
    config: EvalConfig, dataset: EmbeddingSet | None = None
) -> dict[str, RunResult]:
    """One RunResult per generation method, all sharing a single gallery spec."""
    dataset = dataset if dataset is not None else load_datasets(config)
    eval_set, spec = realize_gallery(config, dataset)
    generated = eval_set.by_role(Role.GENERATED)
    methods = config.methods or tuple(sorted({r.method for r in generated}))
    if not methods:
        raise ValidationError("no generated records in dataset")
    results: dict[str, RunResult] = {}
    for method in methods:
        queries = [r for r in generated if r.method == method]
        if not queries:
            raise ValidationError(f"method '{method}' has zero generated records")
        results[method] = _run_single(
            config, eval_set, spec, queries, method=method, variant=_variant_key(config)
        )
    return results


def _ablation_queries(eval_set: EmbeddingSet, config: EvalConfig) -> tuple[tuple[EmbeddingRecord, ...], str]:
    generated = eval_set.by_role(Role.GENERATED)
    if generated:
        methods = config.methods or tuple(sorted({r.method for r in generated}))
        if len(methods) != 1:
            raise ConfigError(f"ablation needs a single method, found {sorted(methods)}")
        queries = tuple(r for r in generated if r.method == methods[0])
        if not queries:
            raise ValidationError(f"method '{methods[0]}' has zero generated records")
        return queries, methods[0]
    references = eval_set.by_role(Role.REFERENCE)
    if not references:
        raise ValidationError("no generated or reference records to use as queries")
    return references, "oracle"


def run_ablation_sweep(
    config: EvalConfig, grid: GridSpec, dataset: EmbeddingSet | None = None
) -> AblationGrid:
    """Sweep one gallery-composition axis, repeating each cell per seed.

    Galleries are nested by default: under a fixed seed, the cell at a smaller
    value is a per-subject prefix of the cell at a larger one, so curves show
    the composition effect rather than resampling noise. ``grid.resample``
    draws each cell independently instead.
    """
    dataset = dataset if dataset is not None else load_datasets(config)
    eval_set, spec = realize_gallery(config, dataset)
    queries, method = _ablation_queries(eval_set, config)
    variant = _variant_key(config)
    cells: dict[tuple, RunResult] = {}

    if grid.axis == "images-per-subject":
        per_subject = {
            s: eval_set.by_subject_role(s, Role.GALLERY) for s in sorted({q.subject for q in queries})
        }
        shortage = {s: len(c) for s, c in per_subject.items() if len(c) < max(grid.values)}
        if shortage:
            raise ValidationError(
                f"grid exceeds pool: need {max(grid.values)} gallery images, have {shortage}"
            )
        for value in grid.values:
            for seed in grid.seeds:
                chosen: list[EmbeddingRecord] = []
                for subject, candidates in per_subject.items():
                    key = subject_seed(seed, subject)
                    if grid.resample:
                        key = rng.derive_key(key, "cell", str(value))
                    ids = set(sample_random(candidates, value, key))
                    chosen.extend(r for r in candidates if r.id in ids)
                cells[(value, seed)] = _run_single(
                    config, eval_set, spec, queries, method, variant, gallery_records=chosen
                )

    elif grid.axis == "subject-count":
        all_subjects = tuple(s for s in eval_set.subjects if eval_set.by_subject_role(s, Role.GALLERY))
        if max(grid.values) > len(all_subjects):
            raise ValidationError(
                f"grid exceeds pool: need {max(grid.values)} gallery subjects, have {len(all_subjects)}"
            )
        base_count = min(grid.values)
        for seed in grid.seeds:
            order = rng.permutation(rng.derive_key(seed, "ablation-subjects"), len(all_subjects))
            ordered_subjects = [all_subjects[i] for i in order]
            base_subjects = set(ordered_subjects[:base_count])
            cell_queries = tuple(q for q in queries if q.subject in base_subjects)
            if not cell_queries:
                raise ValidationError("no queries fall in the base subject sample")
            for value in grid.values:
                included = set(ordered_subjects[:value])
                chosen = [g for g in eval_set.by_role(Role.GALLERY) if g.subject in included]
                cells[(value, seed)] = _run_single(
                    config, eval_set, spec, cell_queries, method, variant,
                    gallery_records=chosen,
                )

    else:  # sampling-strategy
        size = grid.gallery_size or (config.split.n_gallery if config.split else None)
        if size is None:
            raise ConfigError("sampling-strategy axis needs gallery_size (or a split config)")
        per_subject = {
            s: eval_set.by_subject_role(s, Role.GALLERY) for s in sorted({q.subject for q in queries})
        }
        shortage = {s: len(c) for s, c in per_subject.items() if len(c) < size}
        if shortage:
            raise ValidationError(
                f"grid exceeds pool: need {size} gallery candidates, have {shortage}"
            )
        for value in grid.values:
            sampler = sample_random if value == "random" else sample_kmeans
            for seed in grid.seeds:
                chosen = []
                for subject, candidates in per_subject.items():
                    ids = set(sampler(candidates, size, subject_seed(seed, subject)))
                    chosen.extend(r for r in candidates if r.id in ids)
                cells[(value, seed)] = _run_single(
                    config, eval_set, spec, queries, method, variant, gallery_records=chosen
                )

    return AblationGrid(axis=grid.axis, values=grid.values, seeds=grid.seeds, cells=cells)


@dataclass(frozen=True)
class VariantComparison:
    variant_a: str
    variant_b: str
    result_a: RunResult
    result_b: RunResult
    deltas: Mapping[str, float | None]
    only_in_a: tuple[str, ...]
    only_in_b: tuple[str, ...]


def _strip_variant(record_id: str, variant: str) -> str:
    suffix = f"@{variant}"
    return record_id[: -len(suffix)] if variant and record_id.endswith(suffix) else record_id


def _variant_slice(dataset: EmbeddingSet, variant: str) -> list[EmbeddingRecord]:
    """Records for one variant; untagged real records are shared fallbacks."""
    tagged_real = [r for r in dataset if r.variant == variant and r.role is not Role.GENERATED]
    generated = [r for r in dataset if r.variant == variant and r.role is Role.GENERATED]
    if tagged_real:
        return tagged_real + generated
    shared = [r for r in dataset if r.variant == "" and r.role is not Role.GENERATED]
    return shared + generated


def compare_variants(
    config: EvalConfig, variant_a: str, variant_b: str, dataset: EmbeddingSet | None = None
) -> VariantComparison:
    """Evaluate two variants on their shared generated ids and report deltas.

    Ids match directly or modulo a trailing ``@variant`` tag, so both
    same-file and split-file variant layouts pair up.
    """
    if config.variant is not None:
        raise ConfigError("compare_variants takes variants as arguments; leave config.variant unset")
    dataset = dataset if dataset is not None else load_datasets(config)
    slices = {}
    normalized = {}
    for variant in (variant_a, variant_b):
        records = _variant_slice(dataset, variant)
        gen = [r for r in records if r.role is Role.GENERATED]
        if not gen:
            raise ValidationError(f"variant '{variant}' has no generated records")
        slices[variant] = records
        normalized[variant] = {_strip_variant(r.id, variant): r for r in gen}
    common = sorted(set(normalized[variant_a]) & set(normalized[variant_b]))
    if not common:
        raise ValidationError("disjoint id sets between variants")
    only_a = tuple(sorted(set(normalized[variant_a]) - set(common)))
    only_b = tuple(sorted(set(normalized[variant_b]) - set(common)))

    results = {}
    for variant in (variant_a, variant_b):
        keep = {normalized[variant][k].id for k in common}
        records = [
            r for r in slices[variant] if r.role is not Role.GENERATED or r.id in keep
        ]
        sub = EmbeddingSet(records, name=f"{dataset.name}@{variant or 'base'}")
        eval_set, spec = realize_gallery(_without_variant(config), sub)
        queries = eval_set.by_role(Role.GENERATED)
        methods = {r.method for r in queries}
        method = sorted(methods)[0] if len(methods) == 1 else "+".join(sorted(methods))
        results[variant] = _run_single(config, eval_set, spec, queries, method, variant)

    a, b = results[variant_a], results[variant_b]
    deltas: dict[str, float | None] = {
        "map_per_query": b.map_per_query - a.map_per_query,
        "map_per_subject": b.map_per_subject - a.map_per_subject,
        "pairwise_score": b.pairwise_score - a.pairwise_score,
        "top1_accuracy": b.top1_accuracy - a.top1_accuracy,
        "text_adherence": (
            b.text_adherence - a.text_adherence
            if a.text_adherence is not None and b.text_adherence is not None
            else None
        ),
    }
    return VariantComparison(
        variant_a=variant_a,
        variant_b=variant_b,
        result_a=a,
        result_b=b,
        deltas=deltas,
        only_in_a=only_a,
        only_in_b=only_b,
    )


def _without_variant(config: EvalConfig) -> EvalConfig:
    from dataclasses import replace

    return replace(config, variant=None)

"""Gallery-based retrieval evaluation of identity preservation.

Generated-image embeddings are used as queries against an identity-labeled
gallery and scored with mean average precision, alongside the pairwise
cosine baselines the ranking protocol is meant to replace.
"""

__version__ = "0.1.0"

from .errors import ConfigError, IdrankError, ParseError, ValidationError
from .store import (
    DatasetManifest,
    EmbeddingRecord,
    EmbeddingSet,
    Role,
    load_manifest,
    load_set,
    write_manifest,
    write_set,
)
from .metrics import (
    ApResult,
    GalleryIndex,
    PairwiseReport,
    PairwiseScore,
    RankedList,
    average_precision,
    cosine,
    mean_average_precision,
    pairwise_similarity_score,
    rank_gallery,
    text_adherence_score,
    top1_identity_accuracy,
)
from .gallery import (
    GallerySpec,
    KMeansResult,
    SplitConfig,
    apply_split,
    curate_from_list,
    kmeans,
    sample_kmeans,
    sample_random,
    split_reference_gallery,
)
from .synth import (
    DriftSpec,
    SynthConfig,
    apply_drift,
    brute_force_ap,
    generate_synthetic_dataset,
    monte_carlo_random_map,
)
from .engine import (
    AblationGrid,
    EvalConfig,
    GridSpec,
    RunResult,
    VariantComparison,
    compare_variants,
    load_eval_config,
    run_ablation_sweep,
    run_generated_eval,
    run_oracle_eval,
)

__all__ = [
    "__version__",
    "IdrankError", "ParseError", "ValidationError", "ConfigError",
    "Role", "EmbeddingRecord", "EmbeddingSet", "DatasetManifest",
    "load_set", "write_set", "load_manifest", "write_manifest",
    "cosine", "rank_gallery", "average_precision", "mean_average_precision",
    "pairwise_similarity_score", "text_adherence_score", "top1_identity_accuracy",
    "RankedList", "ApResult", "PairwiseScore", "PairwiseReport", "GalleryIndex",
    "SplitConfig", "GallerySpec", "KMeansResult", "split_reference_gallery",
    "sample_random", "sample_kmeans", "kmeans", "curate_from_list", "apply_split",
    "SynthConfig", "DriftSpec", "generate_synthetic_dataset", "apply_drift",
    "brute_force_ap", "monte_carlo_random_map",
    "EvalConfig", "GridSpec", "RunResult", "AblationGrid", "VariantComparison",
    "load_eval_config", "run_oracle_eval", "run_generated_eval",
    "run_ablation_sweep", "compare_variants",
]

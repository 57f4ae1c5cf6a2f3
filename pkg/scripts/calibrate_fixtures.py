"""Regenerate the frozen fixtures under tests/fixtures/.

The curve fixture pins exact floating-point scores from seeded synthetic
runs; the acceptance suite recomputes them and compares at 1e-12. Rerun this
script only after an intentional behavior change, then review the diff. An
unexplained change here is a regression, not noise to accept.
"""

from __future__ import annotations

import json
from pathlib import Path

import numpy as np

from idrank.engine import EvalConfig, GridSpec, run_ablation_sweep, run_generated_eval
from idrank.report import Column, TableSchema, emit_csv
from idrank.synth import SynthConfig, generate_synthetic_dataset

FIXTURES = Path(__file__).resolve().parent.parent / "tests" / "fixtures"

DRIFT_DELTAS = (0.0, 0.25, 0.5, 0.75, 1.0)
SEEDS = 30


def drift_curve() -> dict:
    map_means, pairwise_means = [], []
    for delta in DRIFT_DELTAS:
        maps, pairwise = [], []
        for seed in range(SEEDS):
            dataset = generate_synthetic_dataset(SynthConfig(drift=delta, seed=seed))
            result = run_generated_eval(EvalConfig(datasets=("mem",)), dataset=dataset)["synthetic"]
            maps.append(result.map_primary)
            pairwise.append(result.pairwise_score)
        map_means.append(float(np.mean(maps)))
        pairwise_means.append(float(np.mean(pairwise)))
    return {
        "deltas": list(DRIFT_DELTAS),
        "seeds": SEEDS,
        "synth": SynthConfig().to_dict(),
        "map_means": map_means,
        "pairwise_means": pairwise_means,
    }


def sampling_parity() -> dict:
    config = SynthConfig(dimension=32, sigma_within=0.3, n_gallery=24)
    grid = GridSpec(
        axis="sampling-strategy", values=("random", "kmeans"),
        seeds=tuple(range(SEEDS)), gallery_size=8,
    )
    sweep = run_ablation_sweep(
        EvalConfig(datasets=("mem",)), grid, dataset=generate_synthetic_dataset(config)
    )
    return {
        "gallery_size": 8,
        "seeds": SEEDS,
        "synth": config.to_dict(),
        "map_random": sweep.mean_map("random"),
        "map_kmeans": sweep.mean_map("kmeans"),
    }


def subject_count_curve() -> dict:
    config = SynthConfig(dimension=16, sigma_within=0.4, n_gallery=10)
    grid = GridSpec(axis="subject-count", values=(2, 5, 10), seeds=tuple(range(SEEDS)))
    sweep = run_ablation_sweep(
        EvalConfig(datasets=("mem",)), grid, dataset=generate_synthetic_dataset(config)
    )
    return {
        "values": list(grid.values),
        "seeds": SEEDS,
        "synth": config.to_dict(),
        "map_means": [sweep.mean_map(v) for v in grid.values],
    }


ENCODER_COLUMNS = (
    "CLIP Sim", "DINO Sim", "MiewID Sim", "BioCLIP Sim", "SP-Cars Sim",
    "CLIP mAP", "DINO mAP", "MiewID mAP", "BioCLIP mAP", "SP-Cars mAP", "DB++",
)

# Published oracle scores per dataset/encoder pair; each specialized encoder
# is scored only on its own dataset, so cross cells stay missing.
ENCODER_TABLE_ROWS = (
    {"Dataset": "Re-ID", "CLIP Sim": 0.925, "DINO Sim": 0.843, "MiewID Sim": 0.647,
     "CLIP mAP": 0.485, "DINO mAP": 0.516, "MiewID mAP": 0.803, "DB++": 0.889},
    {"Dataset": "CUB", "CLIP Sim": 0.837, "DINO Sim": 0.726, "BioCLIP Sim": 0.930,
     "CLIP mAP": 0.520, "DINO mAP": 0.674, "BioCLIP mAP": 0.842, "DB++": 0.748},
    {"Dataset": "Cars", "CLIP Sim": 0.782, "DINO Sim": 0.434, "SP-Cars Sim": 0.792,
     "CLIP mAP": 0.396, "DINO mAP": 0.228, "SP-Cars mAP": 0.839, "DB++": 0.717},
)


def encoder_table() -> str:
    schema = TableSchema(columns=tuple(Column(header=h) for h in ENCODER_COLUMNS))
    return emit_csv(list(ENCODER_TABLE_ROWS), schema)


def main() -> None:
    FIXTURES.mkdir(parents=True, exist_ok=True)
    curves = {
        "drift": drift_curve(),
        "sampling_parity": sampling_parity(),
        "subject_count": subject_count_curve(),
    }
    curves_path = FIXTURES / "synthetic_curves.json"
    curves_path.write_text(json.dumps(curves, indent=2, sort_keys=True) + "\n", encoding="utf-8")
    print(f"wrote {curves_path}")

    table_path = FIXTURES / "encoder_table.csv"
    table_path.write_bytes(encoder_table().encode("utf-8"))
    print(f"wrote {table_path}")

    for name, value in (
        ("drift map", curves["drift"]["map_means"]),
        ("drift pairwise", curves["drift"]["pairwise_means"]),
        ("sampling random/kmeans",
         (curves["sampling_parity"]["map_random"], curves["sampling_parity"]["map_kmeans"])),
        ("subject-count map", curves["subject_count"]["map_means"]),
    ):
        print(f"{name}: {value}")


if __name__ == "__main__":
    main()

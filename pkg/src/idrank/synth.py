"""Synthetic identity-structured datasets plus the brute-force metric oracles.

The generative model is deliberately simple: one centroid per identity drawn
uniformly on the unit sphere, samples scattered around it with Gaussian noise,
and generated queries optionally blended toward a different identity's
centroid. That blend is the controllable failure mode the ranking metric is
supposed to catch and pairwise similarity is supposed to miss.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Sequence

import numpy as np

from . import rng
from .errors import ConfigError, ValidationError
from .store import EmbeddingRecord, EmbeddingSet, Role


@dataclass(frozen=True)
class SynthConfig:
    n_identities: int = 10
    n_reference: int = 5
    n_gallery: int = 10
    n_generated: int = 5
    n_prompt: int = 0
    dimension: int = 512
    sigma_within: float = 0.05
    drift: float = 0.0
    seed: int = 0
    encoder: str = "synth-enc"
    method: str = "synthetic"

    def __post_init__(self):
        if self.n_identities < 2:
            raise ConfigError("need at least 2 identities (drift targets a different one)")
        if min(self.n_reference, self.n_gallery, self.n_generated) < 1:
            raise ConfigError("per-identity role counts must be >= 1")
        if self.n_prompt < 0:
            raise ConfigError("n_prompt must be >= 0")
        if self.dimension < 2:
            raise ConfigError("dimension must be >= 2")
        if self.sigma_within < 0:
            raise ConfigError("sigma_within must be >= 0")
        if not 0.0 <= self.drift <= 1.0:
            raise ConfigError("drift must lie in [0, 1]")

    def to_dict(self) -> dict:
        return {
            "n_identities": self.n_identities,
            "n_reference": self.n_reference,
            "n_gallery": self.n_gallery,
            "n_generated": self.n_generated,
            "n_prompt": self.n_prompt,
            "dimension": self.dimension,
            "sigma_within": self.sigma_within,
            "drift": self.drift,
            "seed": self.seed,
            "encoder": self.encoder,
            "method": self.method,
        }

    @classmethod
    def from_dict(cls, payload: dict) -> "SynthConfig":
        known = {f: payload[f] for f in cls.__dataclass_fields__ if f in payload}
        extra = sorted(set(payload) - set(cls.__dataclass_fields__))
        if extra:
            raise ConfigError(f"unknown synth config keys: {extra}")
        return cls(**known)


@dataclass(frozen=True)
class DriftSpec:
    """Blend target for one identity's generated samples."""

    distractor: np.ndarray
    delta: float

    def __post_init__(self):
        if not 0.0 <= self.delta <= 1.0:
            raise ConfigError("delta must lie in [0, 1]")
        object.__setattr__(self, "distractor", np.asarray(self.distractor, dtype=np.float64))


def apply_drift(sample: np.ndarray, spec: DriftSpec) -> np.ndarray:
    """normalize((1-delta) * sample + delta * distractor)."""
    sample = np.asarray(sample, dtype=np.float64)
    blend = (1.0 - spec.delta) * sample + spec.delta * spec.distractor
    norm = float(np.sqrt(np.sum(blend * blend)))
    if norm == 0.0:
        raise ValidationError("degenerate drift blend (zero vector)")
    return blend / norm


def _unit_gaussian(key: int, dimension: int) -> np.ndarray:
    vec = rng.standard_normal(key, 0, dimension)
    return vec / np.sqrt(np.sum(vec * vec))


def identity_centroids(config: SynthConfig) -> dict[str, np.ndarray]:
    """Unit-sphere centroid per identity, a pure function of (seed, subject)."""
    out = {}
    for subject in _subject_names(config):
        out[subject] = _unit_gaussian(rng.derive_key(config.seed, subject, "centroid"), config.dimension)
    return out


def _subject_names(config: SynthConfig) -> list[str]:
    return [f"id{i:03d}" for i in range(config.n_identities)]


def _noisy_sample(centroid: np.ndarray, sigma: float, key: int) -> np.ndarray:
    noise = rng.standard_normal(key, 0, centroid.shape[0])
    vec = centroid + sigma * noise
    norm = float(np.sqrt(np.sum(vec * vec)))
    if norm == 0.0:
        raise ValidationError("degenerate synthetic sample (zero vector)")
    return vec / norm


def generate_synthetic_dataset(config: SynthConfig) -> EmbeddingSet:
    """Build a full labeled set: references, gallery, drifted generated queries.

    Every draw keys on (seed, subject, role, index), so identities could be
    generated in any order or in parallel without changing a single bit.
    """
    subjects = _subject_names(config)
    centroids = identity_centroids(config)
    records: list[EmbeddingRecord] = []
    for i, subject in enumerate(subjects):
        centroid = centroids[subject]
        distractor = centroids[subjects[(i + 1) % len(subjects)]]
        drift_spec = DriftSpec(distractor=distractor, delta=config.drift)
        for role, count in (
            (Role.REFERENCE, config.n_reference),
            (Role.GALLERY, config.n_gallery),
            (Role.PROMPT, config.n_prompt),
        ):
            for j in range(count):
                key = rng.derive_key(config.seed, subject, role.value, str(j))
                records.append(
                    EmbeddingRecord(
                        id=f"{subject}-{role.value}-{j:03d}",
                        subject=subject,
                        role=role,
                        encoder=config.encoder,
                        variant="",
                        method="",
                        vector=_noisy_sample(centroid, config.sigma_within, key),
                    )
                )
        for j in range(config.n_generated):
            key = rng.derive_key(config.seed, subject, Role.GENERATED.value, str(j))
            sample = _noisy_sample(centroid, config.sigma_within, key)
            records.append(
                EmbeddingRecord(
                    id=f"{subject}-{Role.GENERATED.value}-{j:03d}",
                    subject=subject,
                    role=Role.GENERATED,
                    encoder=config.encoder,
                    variant="",
                    method=config.method,
                    vector=apply_drift(sample, drift_spec),
                )
            )
    return EmbeddingSet(records, name=f"synth-seed{config.seed}")


def brute_force_ap(
    similarities: Sequence[float],
    relevance: Sequence[bool],
    ids: Sequence[str] | None = None,
) -> float:
    """Counting-only AP oracle; shares no code with the ranking implementation.

    rank(g) = 1 + #{strictly more similar} + #{equally similar with smaller id}.
    """
    n = len(similarities)
    if len(relevance) != n or (ids is not None and len(ids) != n):
        raise ValidationError("mismatched oracle input lengths")
    if ids is None:
        ids = [f"{i:09d}" for i in range(n)]
    if not any(relevance):
        raise ValidationError("no relevant items")
    ranks = []
    for g in range(n):
        rank = 1
        for j in range(n):
            if j == g:
                continue
            if similarities[j] > similarities[g]:
                rank += 1
            elif similarities[j] == similarities[g] and ids[j] < ids[g]:
                rank += 1
        ranks.append(rank)
    total = 0.0
    relevant = [g for g in range(n) if relevance[g]]
    for g in relevant:
        hits = sum(1 for h in relevant if ranks[h] <= ranks[g])
        total += hits / ranks[g]
    return total / len(relevant)


def monte_carlo_random_map(
    relevant_count: int, gallery_size: int, trials: int, seed: int
) -> tuple[float, float]:
    """Mean AP (and standard error) under uniformly random gallery orderings."""
    if trials < 1:
        raise ConfigError("trials must be >= 1")
    if not 1 <= relevant_count <= gallery_size:
        raise ConfigError("need 1 <= relevant_count <= gallery_size")
    base = [True] * relevant_count + [False] * (gallery_size - relevant_count)
    values = np.empty(trials, dtype=np.float64)
    for t in range(trials):
        order = rng.permutation(rng.derive_key(seed, "mc-trial", str(t)), gallery_size)
        flags = [base[i] for i in order]
        sims = [float(gallery_size - pos) for pos in range(gallery_size)]
        values[t] = brute_force_ap(sims, flags)
    mean = float(np.mean(values))
    stderr = float(np.std(values, ddof=1) / np.sqrt(trials)) if trials > 1 else 0.0
    return mean, stderr

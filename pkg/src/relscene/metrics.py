"""Multi-stage relation-aware scores and distribution-level metrics.

Stage scores per scene: presence (fraction of target classes detected),
relation correctness (binary), and parsimony (exponential penalty on the
event-count mismatch). Their product, averaged over scenes, gives the
per-threshold AMSR; averaging AMSR over the confidence-threshold set
gives mAMSR. Distribution metrics (Fréchet distance, KL divergence)
operate on ingested embeddings and probability vectors.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .detect import EventSet, threshold_filter
from .errors import RelsceneError
from .relations import RelationParams, check_relation
from .synth import SceneManifest

DEFAULT_THRESHOLDS = (0.5, 0.6, 0.7, 0.8)
DEFAULT_PARSIMONY_WEIGHT = 0.1


@dataclass(frozen=True)
class MsrConfig:
    parsimony_weight: float = DEFAULT_PARSIMONY_WEIGHT
    thresholds: tuple[float, ...] = DEFAULT_THRESHOLDS

    def __post_init__(self):
        if self.parsimony_weight <= 0:
            raise RelsceneError("parsimony weight must be > 0")
        if not self.thresholds:
            raise RelsceneError("threshold set must not be empty")
        if any(not 0 <= s <= 1 for s in self.thresholds):
            raise RelsceneError("thresholds must lie in [0, 1]")
        if any(b <= a for a, b in zip(self.thresholds, self.thresholds[1:])):
            raise RelsceneError("thresholds must be strictly increasing")


@dataclass(frozen=True)
class MsrScores:
    presence: float
    relation: float
    parsimony: float

    @property
    def product(self) -> float:
        return self.presence * self.relation * self.parsimony


def presence_score(
    detected: EventSet, target_classes: list[int], forbidden_class: int | None = None
) -> float:
    """Fraction of ground-truth classes found among the detected labels."""
    labels = detected.labels()
    if not target_classes:
        if forbidden_class is None:
            return 1.0
        return 1.0 if forbidden_class not in labels else 0.0
    return sum(1 for c in target_classes if c in labels) / len(target_classes)


def relation_score(
    sub_relation: str,
    detected: EventSet,
    required_classes: list[int],
    relation_classes: list[int],
    params: RelationParams | None = None,
    waveform: np.ndarray | None = None,
) -> float:
    """1 iff the relation holds; gated to 0 when a required class is missing."""
    labels = detected.labels()
    if any(c not in labels for c in required_classes):
        return 0.0
    holds, _ = check_relation(sub_relation, detected, relation_classes, params, waveform)
    return 1.0 if holds else 0.0


def parsimony_score(n_detected: int, n_truth: int,
                    w_s: float = DEFAULT_PARSIMONY_WEIGHT) -> float:
    """exp(-w_s * |n_detected - n_truth|), in (0, 1]."""
    return math.exp(-w_s * abs(n_detected - n_truth))


def select_reference(generated: np.ndarray, references: list[np.ndarray]) -> int:
    """Index of the reference nearest in sample-domain L2; ties -> lowest index."""
    if not references:
        raise RelsceneError("no reference waveforms supplied")
    dists = []
    for r in references:
        if len(r) != len(generated):
            raise RelsceneError("reference length does not match generated audio")
        dists.append(float(np.linalg.norm(np.asarray(generated) - np.asarray(r))))
    return int(np.argmin(dists))


def select_reference_by_labels(detected: EventSet,
                               alternatives: list[list[int]]) -> int:
    """Alternative with maximal label overlap with the detections; ties -> first."""
    labels = detected.labels()
    overlaps = [sum(1 for c in alt if c in labels) for alt in alternatives]
    return int(np.argmax(overlaps))


def scene_ground_truth(
    manifest: SceneManifest, detected: EventSet
) -> tuple[list[int], list[int], int]:
    """(target class multiset, relation classes, ground-truth event count).

    For or/ifthenelse the target is the reference alternative with maximal
    label overlap with the detections; the relation classes always cover
    the full class list the relation is defined over.
    """
    sub = manifest.sub_relation
    if sub == "not":
        return [], [manifest.forbidden_class], 0
    if manifest.references:
        alt = select_reference_by_labels(detected, manifest.references)
        target = list(manifest.references[alt])
        return target, list(manifest.classes), len(target)
    return list(manifest.classes), list(manifest.classes), len(manifest.placements)


def score_scene(
    manifest: SceneManifest,
    detected: EventSet,
    threshold: float,
    config: MsrConfig | None = None,
    params: RelationParams | None = None,
    waveform: np.ndarray | None = None,
) -> MsrScores:
    """Three stage scores for one scene at one confidence threshold."""
    config = config or MsrConfig()
    filtered = threshold_filter(detected, threshold)
    target, relation_classes, n_truth = scene_ground_truth(manifest, filtered)
    f_p = presence_score(filtered, target, manifest.forbidden_class)
    f_r = relation_score(
        manifest.sub_relation, filtered, target, relation_classes, params, waveform
    )
    f_s = parsimony_score(len(filtered.events), n_truth, config.parsimony_weight)
    return MsrScores(f_p, f_r, f_s)


def amsr(
    manifests: list[SceneManifest],
    detections: dict[str, EventSet],
    threshold: float,
    config: MsrConfig | None = None,
    params: RelationParams | None = None,
    waveforms: dict[str, np.ndarray] | None = None,
) -> float:
    """Mean over scenes of the three-stage product at one threshold."""
    if not manifests:
        raise RelsceneError("no scenes to score")
    total = 0.0
    for m in manifests:
        detected = detections.get(m.scene_id) or EventSet(m.scene_id, [])
        waveform = waveforms.get(m.scene_id) if waveforms else None
        total += score_scene(m, detected, threshold, config, params, waveform).product
    return total / len(manifests)


def mamsr(
    manifests: list[SceneManifest],
    detections: dict[str, EventSet],
    config: MsrConfig | None = None,
    params: RelationParams | None = None,
    waveforms: dict[str, np.ndarray] | None = None,
) -> float:
    """Arithmetic mean of AMSR over the configured threshold set."""
    config = config or MsrConfig()
    values = [
        amsr(manifests, detections, s, config, params, waveforms)
        for s in config.thresholds
    ]
    return float(np.mean(values))


@dataclass
class EmbeddingSet:
    vectors: np.ndarray
    source: str = ""

    def __post_init__(self):
        self.vectors = np.atleast_2d(np.asarray(self.vectors, dtype=np.float64))
        if self.vectors.shape[0] < 2:
            raise RelsceneError("need at least 2 vectors for covariance estimation")


def gaussian_stats(vectors: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    vectors = np.atleast_2d(np.asarray(vectors, dtype=np.float64))
    mu = vectors.mean(axis=0)
    cov = np.cov(vectors, rowvar=False)
    return mu, np.atleast_2d(cov)


def _psd_sqrt(mat: np.ndarray, tol: float) -> np.ndarray:
    vals, vecs = np.linalg.eigh(mat)
    if np.min(vals) < -tol:
        raise RelsceneError(
            f"matrix square root failed: eigenvalue {np.min(vals)} below -{tol}"
        )
    vals = np.clip(vals, 0.0, None)
    return (vecs * np.sqrt(vals)) @ vecs.T


def frechet_from_stats(
    mu1: np.ndarray,
    cov1: np.ndarray,
    mu2: np.ndarray,
    cov2: np.ndarray,
    tol: float = 1e-6,
) -> float:
    """||mu1-mu2||^2 + Tr(cov1 + cov2 - 2 (cov1 cov2)^(1/2))."""
    mu1, mu2 = np.atleast_1d(mu1), np.atleast_1d(mu2)
    cov1, cov2 = np.atleast_2d(cov1), np.atleast_2d(cov2)
    if mu1.shape != mu2.shape or cov1.shape != cov2.shape:
        raise RelsceneError("embedding dimension mismatch")
    s1 = _psd_sqrt(cov1, tol)
    inner = s1 @ cov2 @ s1
    inner = (inner + inner.T) / 2
    vals = np.linalg.eigh(inner)[0]
    if np.min(vals) < -tol:
        raise RelsceneError(
            f"matrix square root failed: eigenvalue {np.min(vals)} below -{tol}"
        )
    trace_sqrt = np.sum(np.sqrt(np.clip(vals, 0.0, None)))
    fd = float(
        np.sum((mu1 - mu2) ** 2) + np.trace(cov1) + np.trace(cov2) - 2 * trace_sqrt
    )
    return max(fd, 0.0)


def frechet_distance(a: EmbeddingSet, b: EmbeddingSet) -> float:
    """Fréchet distance between the Gaussian fits of two embedding sets."""
    if a.vectors.shape[1] != b.vectors.shape[1]:
        raise RelsceneError(
            f"embedding dimension mismatch: {a.vectors.shape[1]} vs {b.vectors.shape[1]}"
        )
    return frechet_from_stats(*gaussian_stats(a.vectors), *gaussian_stats(b.vectors))


Q_FLOOR = 1e-12


def kl_divergence(p: np.ndarray, q: np.ndarray) -> tuple[float, bool]:
    """Sum p*ln(p/q) with 0*ln(0/q) := 0 and q floored; returns (value, floored)."""
    p = np.asarray(p, dtype=np.float64)
    q = np.asarray(q, dtype=np.float64)
    if p.shape != q.shape:
        raise RelsceneError("probability vector shape mismatch")
    for name, v in (("p", p), ("q", q)):
        if np.any(v < 0):
            raise RelsceneError(f"{name} has negative entries")
        if abs(v.sum() - 1.0) > 1e-6:
            raise RelsceneError(f"{name} does not sum to 1 (sum={v.sum()})")
    floored = bool(np.any((q < Q_FLOOR) & (p > 0)))
    q = np.maximum(q, Q_FLOOR)
    mask = p > 0
    return float(np.sum(p[mask] * np.log(p[mask] / q[mask]))), floored


def kl_score(pairs: list[tuple[np.ndarray, np.ndarray]]) -> tuple[float, int]:
    """Mean KL over pairs; also counts pairs where the q floor engaged."""
    if not pairs:
        raise RelsceneError("no probability-vector pairs supplied")
    values, n_floored = [], 0
    for p, q in pairs:
        v, floored = kl_divergence(p, q)
        values.append(v)
        n_floored += int(floored)
    return float(np.mean(values)), n_floored

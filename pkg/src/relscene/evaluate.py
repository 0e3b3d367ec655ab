"""Dataset-level evaluation: per-scene scoring, aggregation and reports."""

from __future__ import annotations

import json
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .corpus import CorpusBundle, SUB_RELATIONS
from .detect import EventSet
from .errors import RelsceneError, SchemaError
from .metrics import (
    EmbeddingSet,
    MsrConfig,
    frechet_distance,
    kl_score,
    score_scene,
)
from .relations import RelationParams
from .synth import SceneManifest


@dataclass
class EvalReport:
    per_scene: list[dict]
    per_sub_relation: dict[str, dict]
    per_main_relation: dict[str, dict]
    overall: dict
    thresholds: list[float]
    scene_count: int
    general: dict | None = None
    notes: list[str] | None = None

    def to_dict(self) -> dict:
        return {
            "thresholds": self.thresholds,
            "scene_count": self.scene_count,
            "overall": self.overall,
            "per_main_relation": self.per_main_relation,
            "per_sub_relation": self.per_sub_relation,
            "per_scene": self.per_scene,
            "general": self.general,
            "notes": self.notes or [],
        }


STAGES = ("mAPre", "mARel", "mAPar", "mAMSR")


def _aggregate(scene_rows: list[dict], thresholds) -> dict:
    """Threshold-averaged means of the per-stage scores and their product."""
    agg = {}
    for stage, key in zip(STAGES, ("presence", "relation", "parsimony", "product")):
        per_threshold = []
        for k, _ in enumerate(thresholds):
            per_threshold.append(
                float(np.mean([row["scores"][k][key] for row in scene_rows]))
            )
        agg[stage] = float(np.mean(per_threshold))
        if key == "product":
            agg["AMSR_per_threshold"] = per_threshold
    return agg


def evaluate_dataset(
    manifests: list[SceneManifest],
    detections: dict[str, EventSet],
    corpus: CorpusBundle,
    config: MsrConfig | None = None,
    params: RelationParams | None = None,
    waveforms: dict[str, np.ndarray] | None = None,
) -> EvalReport:
    """Score every scene at every threshold and aggregate."""
    if not manifests:
        raise RelsceneError("no scenes to evaluate")
    config = config or MsrConfig()
    params = params or RelationParams()
    missing = []
    per_scene = []
    for m in manifests:
        detected = detections.get(m.scene_id)
        if detected is None:
            missing.append(m.scene_id)
            detected = EventSet(m.scene_id, [])
        waveform = waveforms.get(m.scene_id) if waveforms else None
        scores = []
        for s in config.thresholds:
            msr = score_scene(m, detected, s, config, params, waveform)
            scores.append(
                {
                    "threshold": s,
                    "presence": msr.presence,
                    "relation": msr.relation,
                    "parsimony": msr.parsimony,
                    "product": msr.product,
                }
            )
        per_scene.append(
            {
                "scene_id": m.scene_id,
                "relation": m.sub_relation,
                "main_relation": corpus.relation(m.sub_relation).main_relation,
                "scores": scores,
            }
        )

    per_sub = {}
    for sub in SUB_RELATIONS:
        rows = [r for r in per_scene if r["relation"] == sub]
        if rows:
            per_sub[sub] = _aggregate(rows, config.thresholds)
    per_main = {}
    for main in ("TemporalOrder", "SpatialDistance", "Count", "Compositionality"):
        rows = [r for r in per_scene if r["main_relation"] == main]
        if rows:
            per_main[main] = _aggregate(rows, config.thresholds)
    overall = _aggregate(per_scene, config.thresholds)

    notes = [
        "presence for the not relation is defined as forbidden-class absence",
        "scores are reported in [0, 1] (no percentage or 1e-4 scaling applied)",
    ]
    if missing:
        notes.append(
            f"{len(missing)} scene(s) had no detection record and were treated "
            f"as empty: {', '.join(missing[:10])}"
        )
    return EvalReport(
        per_scene=per_scene,
        per_sub_relation=per_sub,
        per_main_relation=per_main,
        overall=overall,
        thresholds=list(config.thresholds),
        scene_count=len(manifests),
        notes=notes,
    )


def add_general_metrics(
    report: EvalReport,
    manifests: list[SceneManifest],
    embeddings_gen: dict[str, np.ndarray] | None = None,
    embeddings_ref: dict[str, np.ndarray] | None = None,
    probs_gen: dict[str, np.ndarray] | None = None,
    probs_ref: dict[str, np.ndarray] | None = None,
) -> None:
    """Distribution metrics over ingested embeddings/logits; not-scenes skipped."""
    eligible = {m.scene_id for m in manifests if m.sub_relation != "not"}
    general: dict = {}
    if embeddings_gen is not None and embeddings_ref is not None:
        ids = sorted(eligible & set(embeddings_gen) & set(embeddings_ref))
        if len(ids) < 2:
            raise RelsceneError("need embeddings for at least 2 non-not scenes")
        a = EmbeddingSet(np.stack([embeddings_gen[i] for i in ids]), "generated")
        b = EmbeddingSet(np.stack([embeddings_ref[i] for i in ids]), "reference")
        general["fd"] = frechet_distance(a, b)
        general["fd_scenes"] = len(ids)
    if probs_gen is not None and probs_ref is not None:
        ids = sorted(eligible & set(probs_gen) & set(probs_ref))
        if not ids:
            raise RelsceneError("no paired probability vectors for non-not scenes")
        value, n_floored = kl_score([(probs_gen[i], probs_ref[i]) for i in ids])
        general["kl"] = value
        general["kl_scenes"] = len(ids)
        if n_floored:
            general["kl_floored_pairs"] = n_floored
    if general:
        report.general = general


def read_embeddings(path: str | Path) -> dict[str, np.ndarray]:
    """Read the embedding interchange file: header dim + per-scene vectors."""
    try:
        raw = json.loads(Path(path).read_text())
    except json.JSONDecodeError as exc:
        raise SchemaError(f"{path}: invalid JSON: {exc}") from exc
    if not isinstance(raw, dict) or "dim" not in raw or "vectors" not in raw:
        raise SchemaError(f"{path}: expected a mapping with 'dim' and 'vectors'")
    dim = int(raw["dim"])
    out = {}
    for i, rec in enumerate(raw["vectors"]):
        if "scene_id" not in rec or "vector" not in rec:
            raise SchemaError(f"{path}: vector record {i} missing scene_id/vector")
        vec = np.asarray(rec["vector"], dtype=np.float64)
        if vec.shape != (dim,):
            raise SchemaError(
                f"{path}: vector for {rec['scene_id']} has length {vec.shape}, "
                f"header declares {dim}"
            )
        out[rec["scene_id"]] = vec
    return out


def write_embeddings(path: str | Path, vectors: dict[str, np.ndarray],
                     source: str = "") -> None:
    dims = {len(v) for v in vectors.values()}
    if len(dims) != 1:
        raise SchemaError("all embedding vectors must share one dimension")
    payload = {
        "dim": dims.pop(),
        "source": source,
        "vectors": [
            {"scene_id": sid, "vector": [float(x) for x in vec]}
            for sid, vec in sorted(vectors.items())
        ],
    }
    Path(path).write_text(json.dumps(payload, sort_keys=True, indent=2) + "\n")


def render_table(report: EvalReport) -> str:
    """Human-readable table mirroring the machine-readable report exactly."""
    lines = []
    header = f"{'relation':<18}{'mAPre':>10}{'mARel':>10}{'mAPar':>10}{'mAMSR':>10}"
    lines.append(header)
    lines.append("-" * len(header))
    for sub, agg in report.per_sub_relation.items():
        lines.append(
            f"{sub:<18}"
            + "".join(f"{agg[s]:>10.6f}" for s in STAGES)
        )
    lines.append("-" * len(header))
    for main, agg in report.per_main_relation.items():
        lines.append(
            f"{main:<18}" + "".join(f"{agg[s]:>10.6f}" for s in STAGES)
        )
    lines.append("-" * len(header))
    lines.append(
        f"{'overall':<18}" + "".join(f"{report.overall[s]:>10.6f}" for s in STAGES)
    )
    if report.general:
        lines.append("")
        for k, v in sorted(report.general.items()):
            lines.append(f"{k}: {v}")
    if report.notes:
        lines.append("")
        lines.extend(f"note: {n}" for n in report.notes)
    return "\n".join(lines) + "\n"


def render_relation_tsv(report: EvalReport) -> str:
    """Plain tabular per-relation breakdown for external plotting."""
    rows = ["relation\tmain\tmAPre\tmARel\tmAPar\tmAMSR"]
    mains = {
        r["relation"]: r["main_relation"] for r in report.per_scene
    }
    for sub, agg in report.per_sub_relation.items():
        rows.append(
            f"{sub}\t{mains.get(sub, '')}\t"
            + "\t".join(f"{agg[s]:.6f}" for s in STAGES)
        )
    return "\n".join(rows) + "\n"

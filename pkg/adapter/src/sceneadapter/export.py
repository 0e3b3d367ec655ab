"""Write the detection and embedding interchange files the evaluator reads."""

from __future__ import annotations

import csv
import json
from dataclasses import dataclass
from pathlib import Path

from .audio import AdapterError, embed, read_wav_16k
from .model import DEFAULT_THRESHOLD, PrototypeTagger


def load_label_map(path: str | Path) -> dict[str, str]:
    """CSV of model_label,target_label rows; empty target means unmapped."""
    path = Path(path)
    if not path.is_file():
        raise AdapterError(f"label map not found: {path}")
    mapping = {}
    with path.open(newline="") as fh:
        for i, row in enumerate(csv.reader(fh)):
            if not row or row[0].startswith("#"):
                continue
            if len(row) != 2:
                raise AdapterError(f"{path}: row {i} must be model_label,target_label")
            model_label, target = row[0].strip(), row[1].strip()
            if model_label in mapping:
                raise AdapterError(f"{path}: duplicate model label {model_label!r}")
            mapping[model_label] = target
    return mapping


def default_label_map_path() -> Path:
    return Path(__file__).parent / "data" / "label_map.csv"


def _scene_wavs(audio_dir: str | Path) -> list[Path]:
    audio_dir = Path(audio_dir)
    if not audio_dir.is_dir():
        raise AdapterError(f"audio directory not found: {audio_dir}")
    wavs = sorted(audio_dir.glob("*.wav"))
    if not wavs:
        raise AdapterError(f"no WAV files in {audio_dir}")
    return wavs


@dataclass
class DetectionSummary:
    scenes: int
    events: int
    unmapped_dropped: int


def export_detections(
    audio_dir: str | Path,
    out_path: str | Path,
    tagger: PrototypeTagger,
    label_map: dict[str, str],
    threshold: float = DEFAULT_THRESHOLD,
) -> DetectionSummary:
    """Tag every scene WAV and write one mapped record per scene."""
    records = []
    n_events = 0
    n_dropped = 0
    for wav_path in _scene_wavs(audio_dir):
        events = []
        for e in tagger.tag(read_wav_16k(wav_path), threshold):
            target = label_map.get(e.label, "")
            if not target:
                n_dropped += 1
                continue
            events.append({
                "label": target,
                "confidence": round(e.confidence, 6),
                "t1": e.t1,
                "t2": e.t2,
            })
        n_events += len(events)
        records.append({"scene_id": wav_path.stem, "events": events})
    Path(out_path).write_text(json.dumps(records, indent=2) + "\n")
    return DetectionSummary(len(records), n_events, n_dropped)


def export_embeddings(
    audio_dir: str | Path,
    out_path: str | Path,
    source: str = "sceneadapter-logmel-v1",
) -> int:
    """One fixed-dimension embedding per scene; header declares the dimension."""
    vectors = []
    dim = None
    for wav_path in _scene_wavs(audio_dir):
        vec = embed(read_wav_16k(wav_path))
        dim = len(vec)
        vectors.append({
            "scene_id": wav_path.stem,
            "vector": [float(x) for x in vec],
        })
    payload = {"dim": dim, "source": source, "vectors": vectors}
    Path(out_path).write_text(json.dumps(payload, indent=2) + "\n")
    return len(vectors)

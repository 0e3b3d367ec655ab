"""Audio event detection and the detection interchange format.

Two detectors share one output contract: the oracle reads ground truth
straight from a scene manifest, while the template detector matches
log-magnitude spectrogram frames against per-class seed templates to
build a [20, 25] confidence map (0.5 s temporal resolution, 25 classes)
and extracts events from it by thresholding.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .corpus import CorpusBundle, load_corpus
from .errors import AudioFormatError, SchemaError
from .seeds import SeedLibrary
from .synth import SCENE_SAMPLES, SCENE_SECONDS, SceneManifest
from .wavio import SAMPLE_RATE

GRID_S = 0.5
NUM_CELLS = int(SCENE_SECONDS / GRID_S)  # 20
MIN_EVENT_S = 0.5

DEFAULT_FRAME = 1024
DEFAULT_HOP = 512
DEFAULT_NCC_THRESHOLD = 0.5


@dataclass(frozen=True)
class DetectedEvent:
    class_id: int
    confidence: float
    t1: float
    t2: float

    def __post_init__(self):
        if not 0.0 <= self.confidence <= 1.0:
            raise SchemaError(f"confidence {self.confidence} outside [0, 1]")
        if not (0 <= self.t1 < self.t2 <= SCENE_SECONDS):
            raise SchemaError(f"event span [{self.t1}, {self.t2}] invalid")
        if self.t2 - self.t1 < MIN_EVENT_S - 1e-9:
            raise SchemaError(f"event shorter than {MIN_EVENT_S} s")
        for t in (self.t1, self.t2):
            if abs(t / GRID_S - round(t / GRID_S)) > 1e-9:
                raise SchemaError(f"time {t} not on the {GRID_S} s grid")


@dataclass
class EventSet:
    scene_id: str
    events: list[DetectedEvent]

    def __post_init__(self):
        self.events = sorted(self.events, key=lambda e: (e.t1, -e.confidence))

    def labels(self) -> set[int]:
        return {e.class_id for e in self.events}


def quantize_span(t1: float, t2: float) -> tuple[float, float]:
    """Floor the start and ceil the end to the 0.5 s grid (never shrinks)."""
    q1 = math.floor(t1 / GRID_S + 1e-9) * GRID_S
    q2 = math.ceil(t2 / GRID_S - 1e-9) * GRID_S
    return max(0.0, q1), min(SCENE_SECONDS, q2)


def oracle_detect(manifest: SceneManifest) -> EventSet:
    """One confidence-1.0 event per ground-truth placement."""
    events = []
    for p in manifest.placements:
        q1, q2 = quantize_span(p.start, p.end)
        events.append(DetectedEvent(p.class_id, 1.0, q1, q2))
    return EventSet(manifest.scene_id, events)


def threshold_filter(event_set: EventSet, s: float) -> EventSet:
    """Keep events with confidence >= s (inclusive); order preserved."""
    if not 0.0 <= s <= 1.0:
        raise SchemaError(f"threshold {s} outside [0, 1]")
    return EventSet(
        event_set.scene_id, [e for e in event_set.events if e.confidence >= s]
    )


def _log_spectrogram(waveform: np.ndarray, frame: int, hop: int) -> tuple:
    window = np.hanning(frame)
    n_frames = 1 + (len(waveform) - frame) // hop
    idx = np.arange(frame)[None, :] + hop * np.arange(n_frames)[:, None]
    frames = waveform[idx] * window
    mag = np.abs(np.fft.rfft(frames, axis=1))
    energy = np.sum(frames**2, axis=1)
    return np.log10(mag + 1e-6), energy


def _normalize_rows(mat: np.ndarray) -> np.ndarray:
    mat = mat - mat.mean(axis=1, keepdims=True)
    norms = np.linalg.norm(mat, axis=1, keepdims=True)
    norms[norms < 1e-12] = 1.0
    return mat / norms


class TemplateBank:
    """Per-class mean log-spectrum templates built from the seed library."""

    def __init__(self, library: SeedLibrary, frame: int = DEFAULT_FRAME,
                 hop: int = DEFAULT_HOP):
        if not library.class_ids:
            raise AudioFormatError("empty seed library")
        self.frame = frame
        self.hop = hop
        templates = []
        owners = []
        for class_id in library.class_ids:
            for clip in library.clips(class_id):
                spec, _ = _log_spectrogram(clip.samples, frame, hop)
                templates.append(spec.mean(axis=0))
                owners.append(class_id)
        raw = np.asarray(templates)
        # Whitening against the bank-wide mean spectrum suppresses the shared
        # broadband structure (noise floor, window lobes) that would otherwise
        # inflate cross-class correlations.
        self.mean_spectrum = raw.mean(axis=0)
        self.templates = _normalize_rows(raw - self.mean_spectrum)
        self.owners = np.asarray(owners)
        self.class_ids = list(library.class_ids)


def confidence_map(
    waveform: np.ndarray,
    bank: TemplateBank,
) -> np.ndarray:
    """[20, n_classes] map of peak normalized cross-correlation per cell."""
    if len(waveform) != SCENE_SAMPLES:
        raise AudioFormatError(
            f"expected {SCENE_SAMPLES} samples at {SAMPLE_RATE} Hz, got {len(waveform)}"
        )
    spec, energy = _log_spectrogram(np.asarray(waveform, float), bank.frame, bank.hop)
    frames = _normalize_rows(spec - bank.mean_spectrum)
    ncc = frames @ bank.templates.T  # [n_frames, n_templates]
    ncc[energy < 1e-6, :] = 0.0
    np.clip(ncc, 0.0, 1.0, out=ncc)

    n_classes = len(bank.class_ids)
    per_class = np.zeros((ncc.shape[0], n_classes))
    for j, class_id in enumerate(bank.class_ids):
        per_class[:, j] = ncc[:, bank.owners == class_id].max(axis=1)

    centers = (np.arange(ncc.shape[0]) * bank.hop + bank.frame / 2) / SAMPLE_RATE
    cells = np.minimum((centers / GRID_S).astype(int), NUM_CELLS - 1)
    cmap = np.zeros((NUM_CELLS, n_classes))
    for k in range(NUM_CELLS):
        mask = cells == k
        if mask.any():
            cmap[k] = per_class[mask].max(axis=0)
    return cmap


def events_from_map(
    cmap: np.ndarray, class_ids: list[int], threshold: float, scene_id: str
) -> EventSet:
    """Contiguous above-threshold runs become events; confidence = peak."""
    events = []
    for j, class_id in enumerate(class_ids):
        track = cmap[:, j]
        k = 0
        while k < len(track):
            if track[k] >= threshold:
                start = k
                while k < len(track) and track[k] >= threshold:
                    k += 1
                t1, t2 = start * GRID_S, k * GRID_S
                if t2 - t1 >= MIN_EVENT_S - 1e-9:
                    events.append(
                        DetectedEvent(class_id, float(track[start:k].max()), t1, t2)
                    )
            else:
                k += 1
    return EventSet(scene_id, events)


def template_detect(
    waveform: np.ndarray,
    library_or_bank: SeedLibrary | TemplateBank,
    frame: int = DEFAULT_FRAME,
    hop: int = DEFAULT_HOP,
    ncc_threshold: float = DEFAULT_NCC_THRESHOLD,
    scene_id: str = "scene",
) -> EventSet:
    """Detect events by spectral template matching against the seed bank."""
    if isinstance(library_or_bank, TemplateBank):
        bank = library_or_bank
    else:
        bank = TemplateBank(library_or_bank, frame, hop)
    cmap = confidence_map(waveform, bank)
    return events_from_map(cmap, bank.class_ids, ncc_threshold, scene_id)


def write_events(sets: list[EventSet], path: str | Path,
                 corpus: CorpusBundle | None = None) -> None:
    """Write the detection interchange file (JSON, labels as strings)."""
    corpus = corpus or load_corpus()
    records = []
    for es in sets:
        records.append(
            {
                "scene_id": es.scene_id,
                "events": [
                    {
                        "label": corpus.class_by_id(e.class_id).sub_category,
                        "confidence": round(e.confidence, 6),
                        "t1": e.t1,
                        "t2": e.t2,
                    }
                    for e in es.events
                ],
            }
        )
    Path(path).write_text(json.dumps(records, sort_keys=True, indent=2) + "\n")


def read_events(path: str | Path, corpus: CorpusBundle | None = None) -> list[EventSet]:
    """Read and validate a detection interchange file."""
    corpus = corpus or load_corpus()
    try:
        raw = json.loads(Path(path).read_text())
    except json.JSONDecodeError as exc:
        raise SchemaError(f"{path}: invalid JSON: {exc}") from exc
    if not isinstance(raw, list):
        raise SchemaError(f"{path}: top level must be a list of scene records")
    sets = []
    for i, rec in enumerate(raw):
        if not isinstance(rec, dict) or "scene_id" not in rec or "events" not in rec:
            raise SchemaError(f"{path}: record {i} missing scene_id/events")
        events = []
        for j, ev in enumerate(rec["events"]):
            where = f"{path}: record {i} ({rec['scene_id']}), event {j}"
            for key in ("label", "confidence", "t1", "t2"):
                if key not in ev:
                    raise SchemaError(f"{where}: missing field {key!r}")
            label = ev["label"]
            if label not in corpus.labels:
                raise SchemaError(f"{where}: unknown category label {label!r}")
            try:
                events.append(
                    DetectedEvent(
                        class_id=corpus.class_by_label(label).id,
                        confidence=float(ev["confidence"]),
                        t1=float(ev["t1"]),
                        t2=float(ev["t2"]),
                    )
                )
            except SchemaError as exc:
                raise SchemaError(f"{where}: {exc}") from exc
        sets.append(EventSet(rec["scene_id"], events))
    return sets

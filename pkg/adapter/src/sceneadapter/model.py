"""Nearest-prototype audio tagger producing grid-aligned event detections."""

from __future__ import annotations

from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .audio import AdapterError, logmel_frames, read_wav_16k

GRID_S = 0.5
SCENE_S = 10.0
NUM_CELLS = int(SCENE_S / GRID_S)
DEFAULT_THRESHOLD = 0.5


@dataclass(frozen=True)
class TaggedEvent:
    label: str
    confidence: float
    t1: float
    t2: float


class PrototypeTagger:
    """Scores scene frames against per-label mean log-mel prototypes.

    The label space is the set of subdirectory names in the prototype
    directory; each subdirectory holds exemplar WAVs for one label.  Frame
    scoring is cosine similarity after removing the prototype-bank mean, so
    broadband structure shared by all labels does not produce matches.
    """

    def __init__(self, prototypes: dict[str, np.ndarray]):
        if not prototypes:
            raise AdapterError("prototype bank is empty")
        self.labels = sorted(prototypes)
        raw = np.stack([prototypes[lbl] for lbl in self.labels])
        self.bank_mean = raw.mean(axis=0)
        centered = raw - self.bank_mean
        self.templates = centered / np.maximum(
            np.linalg.norm(centered, axis=1, keepdims=True), 1e-12
        )

    @classmethod
    def from_directory(cls, proto_dir: str | Path) -> "PrototypeTagger":
        proto_dir = Path(proto_dir)
        if not proto_dir.is_dir():
            raise AdapterError(f"prototype directory not found: {proto_dir}")
        prototypes = {}
        for sub in sorted(p for p in proto_dir.iterdir() if p.is_dir()):
            frames = []
            for wav_path in sorted(sub.glob("*.wav")):
                logmel, _ = logmel_frames(read_wav_16k(wav_path))
                frames.append(logmel[~np.isnan(logmel).any(axis=1)])
            if frames:
                prototypes[sub.name] = np.concatenate(frames).mean(axis=0)
        return cls(prototypes)

    def confidence_map(self, waveform: np.ndarray) -> np.ndarray:
        """Max-pooled per-cell confidence, shape (NUM_CELLS, n_labels)."""
        if len(waveform) != int(SCENE_S * 16000):
            raise AdapterError(
                f"scene must be {SCENE_S:.0f} s at 16 kHz, got {len(waveform)} samples"
            )
        logmel, centers = logmel_frames(waveform)
        grid = np.zeros((NUM_CELLS, len(self.labels)))
        voiced = ~np.isnan(logmel).any(axis=1)
        if not voiced.any():
            return grid
        frames = logmel[voiced] - self.bank_mean
        frames = frames / np.maximum(
            np.linalg.norm(frames, axis=1, keepdims=True), 1e-12
        )
        scores = np.clip(frames @ self.templates.T, 0.0, 1.0)
        cells = np.minimum((centers[voiced] / GRID_S).astype(int), NUM_CELLS - 1)
        for cell, row in zip(cells, scores):
            np.maximum(grid[cell], row, out=grid[cell])
        return grid

    def tag(self, waveform: np.ndarray,
            threshold: float = DEFAULT_THRESHOLD) -> list[TaggedEvent]:
        """Runs of above-threshold cells become grid-aligned events."""
        grid = self.confidence_map(waveform)
        events = []
        for j, label in enumerate(self.labels):
            active = grid[:, j] >= threshold
            start = None
            for cell in range(NUM_CELLS + 1):
                if cell < NUM_CELLS and active[cell]:
                    if start is None:
                        start = cell
                elif start is not None:
                    conf = float(grid[start:cell, j].max())
                    events.append(TaggedEvent(label, conf, start * GRID_S,
                                              cell * GRID_S))
                    start = None
        events.sort(key=lambda e: (e.t1, -e.confidence, e.label))
        return events

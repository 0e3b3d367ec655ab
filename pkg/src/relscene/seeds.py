"""Seed audio bank: exemplar recordings per event class, sliced into clips.

Real exemplar recordings are not redistributable, so the toolkit can
synthesize a deterministic stand-in bank: each class gets a distinctive
spectral signature (partial comb + amplitude modulation) so that classes
are separable by spectral template matching, with five per-class source
variants (detune, modulation phase, noise realization, length).
"""

from __future__ import annotations

from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .errors import AudioFormatError
from .wavio import SAMPLE_RATE, read_wav, write_wav

SOURCES_PER_CLASS = 5
MIN_CLIP_S = 1.0
MAX_CLIP_S = 5.0


def synthesize_recording(class_id: int, source_id: int) -> np.ndarray:
    """Deterministic synthetic exemplar recording for one class/source."""
    sig_rng = np.random.default_rng(np.random.SeedSequence([9173, class_id]))
    f0 = 150.0 + 41.0 * class_id
    ratios = np.array(
        [
            1.0,
            sig_rng.uniform(1.9, 2.6),
            sig_rng.uniform(3.1, 4.2),
            sig_rng.uniform(5.0, 6.8),
        ]
    )
    amps = np.array([1.0, 0.7, 0.5, 0.35])
    am_rate = 1.5 + 0.45 * class_id

    src_rng = np.random.default_rng(np.random.SeedSequence([9174, class_id, source_id]))
    detune = 1.0 + 0.005 * (source_id - 2)
    duration = 9.0 + 0.6 * source_id
    n = int(duration * SAMPLE_RATE)
    t = np.arange(n) / SAMPLE_RATE

    wave = np.zeros(n)
    for ratio, amp in zip(ratios, amps):
        phase = src_rng.uniform(0, 2 * np.pi)
        wave += amp * np.sin(2 * np.pi * f0 * ratio * detune * t + phase)
    envelope = 0.55 + 0.45 * np.sin(
        2 * np.pi * am_rate * t + src_rng.uniform(0, 2 * np.pi)
    )
    wave = wave * envelope + 0.01 * src_rng.standard_normal(n)
    return 0.7 * wave / np.max(np.abs(wave))


@dataclass(frozen=True)
class SeedClip:
    class_id: int
    source_id: int
    slice_index: int
    samples: np.ndarray

    @property
    def duration(self) -> float:
        return len(self.samples) / SAMPLE_RATE


class SeedLibrary:
    """Immutable bank of per-class seed clips sliced from exemplar recordings."""

    def __init__(self, recordings: dict[tuple[int, int], np.ndarray], slice_seed: int = 0):
        self.recordings = recordings
        self.class_ids = sorted({c for c, _ in recordings})
        self._clips: dict[int, list[SeedClip]] = {c: [] for c in self.class_ids}
        self._by_ref: dict[tuple[int, int, int], SeedClip] = {}
        for (class_id, source_id) in sorted(recordings):
            rec = np.asarray(recordings[(class_id, source_id)], dtype=np.float64)
            if np.max(np.abs(rec)) > 1.0 + 1e-9:
                raise AudioFormatError(
                    f"recording ({class_id},{source_id}) exceeds [-1, 1]"
                )
            rng = np.random.default_rng(
                np.random.SeedSequence([slice_seed, 7551, class_id, source_id])
            )
            pos = 0
            slice_index = 0
            min_n = int(MIN_CLIP_S * SAMPLE_RATE)
            while len(rec) - pos >= min_n:
                n = int(rng.uniform(MIN_CLIP_S, MAX_CLIP_S) * SAMPLE_RATE)
                n = min(n, len(rec) - pos)
                if n < min_n:
                    break
                clip = SeedClip(class_id, source_id, slice_index, rec[pos : pos + n])
                self._clips[class_id].append(clip)
                self._by_ref[(class_id, source_id, slice_index)] = clip
                pos += n
                slice_index += 1
        for class_id in self.class_ids:
            if not self._clips[class_id]:
                raise AudioFormatError(f"no clips for class {class_id}")

    @classmethod
    def synthetic(
        cls, num_classes: int = 25, sources: int = SOURCES_PER_CLASS, slice_seed: int = 0
    ) -> "SeedLibrary":
        recordings = {
            (c, s): synthesize_recording(c, s)
            for c in range(num_classes)
            for s in range(sources)
        }
        return cls(recordings, slice_seed=slice_seed)

    @classmethod
    def load(cls, seed_dir: str | Path, slice_seed: int = 0) -> "SeedLibrary":
        seed_dir = Path(seed_dir)
        recordings = {}
        for class_dir in sorted(seed_dir.glob("class_*")):
            class_id = int(class_dir.name.split("_")[1])
            for wav in sorted(class_dir.glob("src_*.wav")):
                source_id = int(wav.stem.split("_")[1])
                recordings[(class_id, source_id)] = read_wav(wav)
        if not recordings:
            raise AudioFormatError(f"no seed recordings found under {seed_dir}")
        return cls(recordings, slice_seed=slice_seed)

    def clips(self, class_id: int, max_duration: float | None = None) -> list[SeedClip]:
        clips = self._clips[class_id]
        if max_duration is not None:
            # Clips are trimmable at render time, so any clip can serve; a
            # duration cap just prefers clips already short enough.
            short = [c for c in clips if c.duration <= max_duration]
            return short if short else clips
        return clips

    def clip(self, class_id: int, source_id: int, slice_index: int) -> SeedClip:
        try:
            return self._by_ref[(class_id, source_id, slice_index)]
        except KeyError:
            raise AudioFormatError(
                f"unresolvable clip reference ({class_id},{source_id},{slice_index})"
            ) from None


def build_seed_corpus(out_dir: str | Path, num_classes: int = 25) -> Path:
    """Write the synthetic seed bank as WAV files: class_XX/src_Y.wav."""
    out_dir = Path(out_dir)
    for c in range(num_classes):
        class_dir = out_dir / f"class_{c:02d}"
        class_dir.mkdir(parents=True, exist_ok=True)
        for s in range(SOURCES_PER_CLASS):
            write_wav(class_dir / f"src_{s}.wav", synthesize_recording(c, s))
    return out_dir

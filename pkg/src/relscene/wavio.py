"""Minimal 16-bit PCM mono WAV reading and writing."""

from __future__ import annotations

import wave
from pathlib import Path

import numpy as np

from .errors import AudioFormatError

SAMPLE_RATE = 16_000


def write_wav(path: str | Path, samples: np.ndarray, sample_rate: int = SAMPLE_RATE) -> None:
    """Write a float waveform in [-1, 1] as 16-bit PCM mono."""
    samples = np.asarray(samples, dtype=np.float64)
    if samples.ndim != 1:
        raise AudioFormatError("expected a mono (1-D) waveform")
    pcm = np.clip(np.round(samples * 32767.0), -32768, 32767).astype("<i2")
    with wave.open(str(path), "wb") as w:
        w.setnchannels(1)
        w.setsampwidth(2)
        w.setframerate(sample_rate)
        w.writeframes(pcm.tobytes())


def read_wav(path: str | Path, expect_rate: int | None = SAMPLE_RATE) -> np.ndarray:
    """Read a 16-bit PCM WAV into float64 in [-1, 1], mixing down to mono."""
    with wave.open(str(path), "rb") as w:
        rate = w.getframerate()
        channels = w.getnchannels()
        width = w.getsampwidth()
        frames = w.readframes(w.getnframes())
    if width != 2:
        raise AudioFormatError(f"{path}: only 16-bit PCM supported, got width {width}")
    if expect_rate is not None and rate != expect_rate:
        raise AudioFormatError(f"{path}: sample rate {rate}, expected {expect_rate}")
    data = np.frombuffer(frames, dtype="<i2").astype(np.float64) / 32767.0
    if channels > 1:
        data = data.reshape(-1, channels).mean(axis=1)
    return data

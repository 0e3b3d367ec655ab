"""WAV ingestion and log-mel features for tagging and embedding export."""

from __future__ import annotations

import wave
from pathlib import Path

import numpy as np

SAMPLE_RATE = 16000
N_FFT = 1024
HOP = 512
N_MELS = 64
SILENCE_EPS = 1e-6


class AdapterError(Exception):
    """Any adapter failure surfaced to the CLI."""


def read_wav_16k(path: str | Path) -> np.ndarray:
    """Read a 16-bit PCM mono 16 kHz WAV into float64 in [-1, 1]."""
    path = Path(path)
    with wave.open(str(path), "rb") as wav:
        if wav.getnchannels() != 1:
            raise AdapterError(f"{path}: expected mono audio")
        if wav.getsampwidth() != 2:
            raise AdapterError(f"{path}: expected 16-bit PCM")
        if wav.getframerate() != SAMPLE_RATE:
            raise AdapterError(f"{path}: expected {SAMPLE_RATE} Hz")
        raw = wav.readframes(wav.getnframes())
    return np.frombuffer(raw, dtype="<i2").astype(np.float64) / 32768.0


def _hz_to_mel(hz):
    return 2595.0 * np.log10(1.0 + np.asarray(hz) / 700.0)


def _mel_to_hz(mel):
    return 700.0 * (10.0 ** (np.asarray(mel) / 2595.0) - 1.0)


def mel_filterbank(n_mels: int = N_MELS, n_fft: int = N_FFT,
                   sample_rate: int = SAMPLE_RATE) -> np.ndarray:
    """Triangular mel filters over the positive-frequency FFT bins."""
    n_bins = n_fft // 2 + 1
    freqs = np.linspace(0.0, sample_rate / 2.0, n_bins)
    edges = _mel_to_hz(np.linspace(_hz_to_mel(0.0), _hz_to_mel(sample_rate / 2.0),
                                   n_mels + 2))
    bank = np.zeros((n_mels, n_bins))
    for m in range(n_mels):
        lo, mid, hi = edges[m], edges[m + 1], edges[m + 2]
        rising = (freqs - lo) / max(mid - lo, 1e-12)
        falling = (hi - freqs) / max(hi - mid, 1e-12)
        bank[m] = np.clip(np.minimum(rising, falling), 0.0, None)
    return bank


_BANK = mel_filterbank()
_WINDOW = np.hanning(N_FFT)


def logmel_frames(waveform: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """Per-frame log-mel spectra plus each frame's center time in seconds."""
    n = len(waveform)
    starts = np.arange(0, max(n - N_FFT, 0) + 1, HOP)
    frames = np.stack([waveform[s:s + N_FFT] * _WINDOW for s in starts])
    spectra = np.abs(np.fft.rfft(frames, axis=1))
    mel = spectra @ _BANK.T
    logmel = np.log(mel + 1e-8)
    energy = np.sqrt(np.mean(frames**2, axis=1))
    logmel[energy < SILENCE_EPS] = np.nan  # silent frames carry no evidence
    centers = (starts + N_FFT / 2) / SAMPLE_RATE
    return logmel, centers


def embed(waveform: np.ndarray) -> np.ndarray:
    """128-dim embedding: mean and standard deviation of the log-mel frames."""
    logmel, _ = logmel_frames(waveform)
    voiced = logmel[~np.isnan(logmel).any(axis=1)]
    if len(voiced) == 0:
        return np.zeros(2 * N_MELS)
    return np.concatenate([voiced.mean(axis=0), voiced.std(axis=0)])

"""Deterministic audio and time-frequency primitives.

Conventions:
  - waveforms are mono float arrays in [-1, 1], default rate 44100 Hz
  - spectrograms are (frames, bins) matrices, bins == window // 2 + 1
  - all functions are pure; no global state
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.io import wavfile
from scipy.signal import get_window

DEFAULT_SAMPLE_RATE = 44100
DEFAULT_WINDOW = 2048
DEFAULT_HOP = 512
DEFAULT_N_MELS = 259
LOG_FLOOR = 1e-6


@dataclass(frozen=True)
class Waveform:
    """Mono audio buffer with its sample rate."""

    samples: np.ndarray
    sample_rate: int = DEFAULT_SAMPLE_RATE

    def __post_init__(self):
        samples = np.asarray(self.samples, dtype=np.float64)
        if samples.ndim != 1:
            raise ValueError(f"waveform must be 1-D, got shape {samples.shape}")
        if not np.all(np.isfinite(samples)):
            raise ValueError("waveform contains non-finite samples")
        if self.sample_rate <= 0:
            raise ValueError(f"sample_rate must be positive, got {self.sample_rate}")
        object.__setattr__(self, "samples", samples)

    def __len__(self) -> int:
        return self.samples.shape[0]

    @property
    def duration(self) -> float:
        return len(self) / self.sample_rate


@dataclass(frozen=True)
class ComplexSpectrogram:
    """(frames, bins) complex STFT matrix plus the analysis geometry."""

    values: np.ndarray
    window: int
    hop: int

    def __post_init__(self):
        values = np.asarray(self.values, dtype=np.complex128)
        if values.ndim != 2 or values.shape[0] < 1:
            raise ValueError(f"expected (frames, bins) with frames >= 1, got {values.shape}")
        if values.shape[1] != self.window // 2 + 1:
            raise ValueError(
                f"bins ({values.shape[1]}) inconsistent with window {self.window}"
            )
        object.__setattr__(self, "values", values)

    @property
    def frames(self) -> int:
        return self.values.shape[0]

    @property
    def bins(self) -> int:
        return self.values.shape[1]

    def magnitude(self) -> np.ndarray:
        return np.abs(self.values)


def _as_samples(w) -> np.ndarray:
    if isinstance(w, Waveform):
        return w.samples
    return np.asarray(w, dtype=np.float64)


# -----------------------------
# STFT / inverse STFT
# -----------------------------

def _hann(window: int) -> np.ndarray:
    # periodic Hann; the symmetric variant breaks constant overlap-add
    return get_window("hann", window, fftbins=True)


def stft(w, window: int = DEFAULT_WINDOW, hop: int = DEFAULT_HOP) -> ComplexSpectrogram:
    """Hann-windowed STFT without padding: frame m covers samples [m*hop, m*hop+window)."""
    x = _as_samples(w)
    if window < 2 or (window & (window - 1)) != 0:
        raise ValueError(f"window must be a power of two >= 2, got {window}")
    if not 1 <= hop <= window:
        raise ValueError(f"hop must be in [1, window], got hop={hop} window={window}")
    if len(x) < window:
        raise ValueError(f"input length {len(x)} shorter than one window ({window})")
    n_frames = 1 + (len(x) - window) // hop
    idx = np.arange(window)[None, :] + hop * np.arange(n_frames)[:, None]
    frames = x[idx] * _hann(window)[None, :]
    return ComplexSpectrogram(np.fft.rfft(frames, axis=1), window=window, hop=hop)


def istft(s: ComplexSpectrogram) -> Waveform:
    """Weighted overlap-add inverse of `stft`.

    Uses the Hann window for synthesis and divides by the summed squared
    window, which is exact on the interior whenever hop <= window / 2.
    """
    window, hop = s.window, s.hop
    if hop > window // 2:
        raise ValueError(
            f"hop={hop} with window={window} violates overlap-add reconstruction "
            "(need hop <= window / 2 for the Hann window)"
        )
    win = _hann(window)
    frames = np.fft.irfft(s.values, n=window, axis=1) * win[None, :]
    n_out = window + (s.frames - 1) * hop
    out = np.zeros(n_out)
    norm = np.zeros(n_out)
    for m in range(s.frames):
        sl = slice(m * hop, m * hop + window)
        out[sl] += frames[m]
        norm[sl] += win**2
    # edges are only partially covered; keep them but avoid dividing by ~0
    np.divide(out, norm, out=out, where=norm > 1e-12)
    return Waveform(out)


# -----------------------------
# Mel projection
# -----------------------------

def _hz_to_mel(f):
    return 2595.0 * np.log10(1.0 + np.asarray(f, dtype=np.float64) / 700.0)


def _mel_to_hz(m):
    return 700.0 * (10.0 ** (np.asarray(m, dtype=np.float64) / 2595.0) - 1.0)


def mel_filterbank(
    n_mels: int, n_bins: int, sample_rate: int = DEFAULT_SAMPLE_RATE
) -> np.ndarray:
    """(n_mels, n_bins) triangular filterbank with HTK mel-spaced centers."""
    if n_mels < 1:
        raise ValueError(f"n_mels must be >= 1, got {n_mels}")
    if n_mels > n_bins:
        raise ValueError(f"n_mels ({n_mels}) exceeds spectrogram bins ({n_bins})")
    nyquist = sample_rate / 2.0
    edges_hz = _mel_to_hz(np.linspace(0.0, _hz_to_mel(nyquist), n_mels + 2))
    bin_hz = np.linspace(0.0, nyquist, n_bins)
    fb = np.zeros((n_mels, n_bins))
    for i in range(n_mels):
        lo, center, hi = edges_hz[i], edges_hz[i + 1], edges_hz[i + 2]
        rising = (bin_hz - lo) / max(center - lo, 1e-12)
        falling = (hi - bin_hz) / max(hi - center, 1e-12)
        fb[i] = np.clip(np.minimum(rising, falling), 0.0, None)
    return fb


def log_mel(
    m: np.ndarray,
    n_mels: int = DEFAULT_N_MELS,
    sample_rate: int = DEFAULT_SAMPLE_RATE,
) -> np.ndarray:
    """Project a (frames, bins) magnitude spectrogram onto log mel bands."""
    mag = np.asarray(m, dtype=np.float64)
    if mag.ndim != 2:
        raise ValueError(f"expected (frames, bins), got shape {mag.shape}")
    if np.any(mag < 0):
        raise ValueError("magnitude spectrogram must be non-negative")
    fb = mel_filterbank(n_mels, mag.shape[1], sample_rate)
    return np.log(mag @ fb.T + LOG_FLOOR)


# -----------------------------
# Masking and separation quality
# -----------------------------

def hadamard_separate(mix: np.ndarray, mask: np.ndarray) -> np.ndarray:
    """Apply a soft separation mask to a magnitude spectrogram."""
    mix = np.asarray(mix)
    mask = np.asarray(mask)
    if mix.shape != mask.shape:
        raise ValueError(f"shape mismatch: mix {mix.shape} vs mask {mask.shape}")
    if np.any(mask < 0) or np.any(mask > 1):
        raise ValueError("mask entries must lie in [0, 1]")
    return mix * mask


def global_sdr(est, ref) -> float:
    """Whole-segment signal-to-distortion ratio in dB.

    Returns +inf when the residual is exactly zero.
    """
    e = _as_samples(est)
    r = _as_samples(ref)
    if e.shape != r.shape:
        raise ValueError(f"length mismatch: est {e.shape} vs ref {r.shape}")
    ref_energy = float(np.sum(r**2))
    if ref_energy == 0.0:
        raise ValueError("reference signal is all-zero")
    err_energy = float(np.sum((r - e) ** 2))
    if err_energy == 0.0:
        return float("inf")
    return 10.0 * np.log10(ref_energy / err_energy)


# -----------------------------
# WAV files
# -----------------------------

def load_wav(path, expect_rate: int | None = None) -> Waveform:
    """Read a PCM16 or float32 RIFF file; stereo is averaged down to mono."""
    rate, data = wavfile.read(path, mmap=False)
    if data.ndim == 2:
        data = data.mean(axis=1)
    if data.dtype == np.int16:
        samples = data.astype(np.float64) / 32768.0
    elif data.dtype in (np.float32, np.float64):
        samples = data.astype(np.float64)
    else:
        raise ValueError(f"unsupported WAV sample format {data.dtype} in {path}")
    if expect_rate is not None and rate != expect_rate:
        raise ValueError(f"{path}: sample rate {rate} != expected {expect_rate}")
    return Waveform(samples, sample_rate=rate)


def load_wav_segment(path, start: int, length: int) -> np.ndarray:
    """Read `length` samples starting at `start` without loading the whole file."""
    rate, data = wavfile.read(path, mmap=True)
    del rate
    if start < 0 or start + length > data.shape[0]:
        raise ValueError(
            f"segment [{start}, {start + length}) out of range for {path} "
            f"({data.shape[0]} samples)"
        )
    chunk = np.array(data[start : start + length])
    if chunk.ndim == 2:
        chunk = chunk.mean(axis=1)
    if chunk.dtype == np.int16:
        return chunk.astype(np.float64) / 32768.0
    return chunk.astype(np.float64)


def wav_num_samples(path) -> int:
    _, data = wavfile.read(path, mmap=True)
    return int(data.shape[0])


def save_wav(path, w: Waveform) -> None:
    """Write PCM16; samples are clipped to [-1, 1] before quantization."""
    clipped = np.clip(w.samples, -1.0, 1.0)
    pcm = np.round(clipped * 32767.0).astype(np.int16)
    wavfile.write(path, w.sample_rate, pcm)

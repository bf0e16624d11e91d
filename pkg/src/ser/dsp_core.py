"""Framing, windowing, radix-2 FFT and autocorrelation."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .audio_io import AudioSignal
from .errors import BadNfft, FrameTooShort, LagOutOfRange, SignalTooShort


@dataclass(frozen=True)
class FrameSequence:
    """Equal-length frames; row i starts at sample ``i * hop_len``."""

    frames: np.ndarray  # (n_frames, frame_len)
    frame_len: int
    hop_len: int
    sample_rate_hz: int
    n_source_samples: int

    def __len__(self):
        return self.frames.shape[0]

    @property
    def starts(self) -> np.ndarray:
        return np.arange(len(self)) * self.hop_len


@dataclass(frozen=True)
class MagnitudeSpectrum:
    bins: np.ndarray  # (..., nfft // 2 + 1)
    nfft: int
    sample_rate_hz: int


def ms_to_samples(ms: float, rate: int) -> int:
    # round half up so 0.5-sample ties do not depend on banker's rounding
    return int(np.floor(ms * rate / 1000.0 + 0.5))


def frame_signal(signal: AudioSignal, frame_ms: float, hop_ms: float) -> FrameSequence:
    if frame_ms <= 0 or hop_ms <= 0:
        raise ValueError("frame and hop durations must be positive")
    if hop_ms > frame_ms:
        raise ValueError("hop must not exceed the frame length")
    rate = signal.sample_rate_hz
    frame_len = ms_to_samples(frame_ms, rate)
    hop_len = ms_to_samples(hop_ms, rate)
    if frame_len < 1 or hop_len < 1:
        raise ValueError("frame or hop rounds to zero samples at this rate")
    x = signal.samples
    n = x.size
    if n < frame_len:
        raise SignalTooShort(f"{n} samples is shorter than one {frame_len}-sample frame")
    count = (n - frame_len) // hop_len + 1
    idx = np.arange(frame_len)[None, :] + hop_len * np.arange(count)[:, None]
    frames = x[idx]
    frames.setflags(write=False)
    return FrameSequence(frames, frame_len, hop_len, rate, n)


def hamming(n: int) -> np.ndarray:
    if n < 2:
        raise FrameTooShort(f"Hamming window needs at least 2 samples, got {n}")
    k = np.arange(n)
    return 0.54 - 0.46 * np.cos(2.0 * np.pi * k / (n - 1))


def hamming_window(frame) -> np.ndarray:
    """Multiply by the symmetric Hamming window; works row-wise on 2-D input."""
    x = np.asarray(frame, dtype=np.float64)
    return x * hamming(x.shape[-1])


def is_power_of_two(n: int) -> bool:
    return n >= 1 and (n & (n - 1)) == 0


def next_power_of_two(n: int) -> int:
    return 1 << max(0, int(n - 1).bit_length())


def _bit_reverse_indices(n: int) -> np.ndarray:
    bits = n.bit_length() - 1
    idx = np.arange(n)
    rev = np.zeros(n, dtype=np.int64)
    for b in range(bits):
        rev |= ((idx >> b) & 1) << (bits - 1 - b)
    return rev


def fft_radix2(x) -> np.ndarray:
    """Iterative decimation-in-time FFT along the last axis (length a power of two)."""
    a = np.array(x, dtype=np.complex128)
    n = a.shape[-1]
    if not is_power_of_two(n):
        raise BadNfft(f"FFT length {n} is not a power of two")
    a = a[..., _bit_reverse_indices(n)]
    size = 2
    while size <= n:
        half = size // 2
        tw = np.exp(-2j * np.pi * np.arange(half) / size)
        blocks = a.reshape(a.shape[:-1] + (n // size, size))
        even = blocks[..., :half].copy()
        odd = blocks[..., half:] * tw
        blocks[..., :half] = even + odd
        blocks[..., half:] = even - odd
        size *= 2
    return a


def fft_magnitude(frame, nfft: int, sample_rate_hz: int = 0) -> MagnitudeSpectrum:
    """|X[k]| for k = 0..nfft/2 of the zero-padded frame (row-wise on 2-D input)."""
    x = np.asarray(frame, dtype=np.float64)
    if not is_power_of_two(nfft):
        raise BadNfft(f"nfft={nfft} is not a power of two")
    if nfft < x.shape[-1]:
        raise BadNfft(f"nfft={nfft} is shorter than the {x.shape[-1]}-sample frame")
    padded = np.zeros(x.shape[:-1] + (nfft,))
    padded[..., : x.shape[-1]] = x
    spec = fft_radix2(padded)[..., : nfft // 2 + 1]
    return MagnitudeSpectrum(np.abs(spec), nfft, sample_rate_hz)


def autocorrelation(frame, max_lag: int) -> np.ndarray:
    """Biased, unnormalized r[tau] = sum_n x[n] x[n + tau] for tau = 0..max_lag."""
    x = np.asarray(frame, dtype=np.float64)
    n = x.size
    if max_lag < 0 or max_lag >= n:
        raise LagOutOfRange(f"max_lag={max_lag} outside [0, {n - 1}]")
    full = np.correlate(x, x, mode="full")
    return full[n - 1 : n + max_lag].copy()

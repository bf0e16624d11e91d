"""Utterance-level prosodic and cepstral features.

The prosodic block is 11 numbers: five statistics of the per-frame energy
track, five statistics of the voiced pitch track and the speech rate. The
cepstral block holds the per-coefficient mean and standard deviation of
either MFCCs or LPCCs across frames.
"""

from __future__ import annotations

import hashlib
import math
from dataclasses import asdict, dataclass, field
from enum import Enum
from functools import lru_cache
from typing import List, Sequence, Tuple

import numpy as np

from .audio_io import AudioSignal, pre_emphasize
from .dsp_core import (
    FrameSequence,
    MagnitudeSpectrum,
    autocorrelation,
    fft_magnitude,
    frame_signal,
    hamming_window,
    ms_to_samples,
    next_power_of_two,
)
from .errors import (
    BadBand,
    BadPitchBand,
    DegenerateFrame,
    DimensionMismatch,
    EmptyFrame,
    EmptyTrack,
    NoAnalyzableFrames,
    NumericalBreakdown,
)


class FeatureMode(str, Enum):
    MFCC = "MFCC"
    LPCC = "LPCC"

    @classmethod
    def parse(cls, text: str) -> "FeatureMode":
        try:
            return cls(text.upper())
        except ValueError:
            raise ValueError(f"unknown feature mode {text!r}") from None


@dataclass(frozen=True)
class FeatureConfig:
    frame_ms: float = 60.0
    hop_ms: float = 30.0
    pre_emphasis: float = 0.97
    n_mel_filters: int = 26
    n_mfcc: int = 13
    lpc_order: int = 12
    n_lpcc: int = 12
    f_min: float = 50.0
    f_max: float = 400.0
    voicing_threshold: float = 0.3
    energy_floor: float = 1e-10
    mode: FeatureMode = FeatureMode.MFCC
    # speech-rate burst detection
    rate_smooth_frames: int = 5
    rate_threshold: float = 0.3

    def __post_init__(self):
        object.__setattr__(self, "mode", FeatureMode(self.mode))
        counts = (self.n_mel_filters, self.n_mfcc, self.lpc_order, self.n_lpcc,
                  self.rate_smooth_frames)
        if any(int(c) < 1 for c in counts):
            raise ValueError("all coefficient and filter counts must be positive")
        if self.n_mfcc > self.n_mel_filters:
            raise ValueError("n_mfcc cannot exceed n_mel_filters")
        if not 0 < self.f_min < self.f_max:
            raise ValueError("pitch band needs 0 < f_min < f_max")
        if self.hop_ms > self.frame_ms or self.hop_ms <= 0:
            raise ValueError("need 0 < hop_ms <= frame_ms")

    def frame_len(self, rate: int) -> int:
        return ms_to_samples(self.frame_ms, rate)

    def nfft(self, rate: int) -> int:
        return next_power_of_two(self.frame_len(rate))

    def check_rate(self, rate: int) -> None:
        if self.f_max > rate / 2:
            raise BadPitchBand(f"f_max={self.f_max} Hz exceeds Nyquist at {rate} Hz")

    def canonical(self) -> str:
        d = asdict(self)
        d["mode"] = self.mode.value
        return ";".join(f"{k}={d[k]!r}" for k in sorted(d))

    def fingerprint(self) -> str:
        return hashlib.sha256(self.canonical().encode()).hexdigest()[:16]


@dataclass(frozen=True)
class TrackStats:
    mean: float
    max: float
    min: float
    range: float
    std: float

    def as_tuple(self) -> Tuple[float, ...]:
        return (self.mean, self.max, self.min, self.range, self.std)


STAT_NAMES = ("mean", "max", "min", "range", "std")


@dataclass(frozen=True)
class PitchTrack:
    pitch_hz: np.ndarray
    voiced_fraction: float


@dataclass(frozen=True)
class FeatureVector:
    values: np.ndarray
    mode: FeatureMode
    layout: Tuple[str, ...] = field(default=())

    def __post_init__(self):
        v = np.array(self.values, dtype=np.float64)
        v.setflags(write=False)
        object.__setattr__(self, "values", v)
        object.__setattr__(self, "mode", FeatureMode(self.mode))
        if self.layout and len(self.layout) != v.size:
            raise DimensionMismatch("layout length differs from value count")

    def __len__(self):
        return self.values.size


def frame_energy(frame) -> float:
    x = np.asarray(frame, dtype=np.float64)
    if x.size == 0:
        raise EmptyFrame("energy of an empty frame")
    return float(np.dot(x, x))


def track_stats(track) -> TrackStats:
    t = np.asarray(track, dtype=np.float64)
    if t.size == 0:
        raise EmptyTrack("statistics of an empty track")
    lo, hi = float(t.min()), float(t.max())
    if lo == hi:
        return TrackStats(lo, hi, lo, 0.0, 0.0)
    mean = float(t.mean())
    # clamp guards against mean drifting a ulp outside [min, max]
    mean = min(max(mean, lo), hi)
    return TrackStats(mean, hi, lo, hi - lo, float(t.std()))


def pitch_lag_band(rate: int, cfg: FeatureConfig) -> Tuple[int, int]:
    lo = int(math.ceil(rate / cfg.f_max))
    hi = int(math.floor(rate / cfg.f_min))
    if lo < 2 or lo > hi:
        raise BadPitchBand(f"empty lag band [{lo}, {hi}] at {rate} Hz")
    return lo, hi


def _nccf(x: np.ndarray, lag: int) -> float:
    head, tail = x[: x.size - lag], x[lag:]
    denom = math.sqrt(float(np.dot(head, head)) * float(np.dot(tail, tail)))
    return float(np.dot(head, tail)) / denom if denom > 0 else 0.0


def _refine_peak(x: np.ndarray, lag: int, lo: int, hi: int) -> float:
    # Parabola through the normalized cross-correlation at the peak and its
    # neighbours. Normalizing each lag by the energy of the overlapping parts
    # removes the taper of the biased estimate that would drag the vertex.
    if lag + 1 >= x.size:
        return float(lag)
    a, b, c = _nccf(x, lag - 1), _nccf(x, lag), _nccf(x, lag + 1)
    denom = a - 2.0 * b + c
    if denom >= 0.0:
        return float(lag)
    shift = 0.5 * (a - c) / denom
    shift = max(-0.5, min(0.5, shift))
    return min(max(lag + shift, float(lo)), float(hi))


def frame_pitch(frame, rate: int, cfg: FeatureConfig) -> Tuple[float, float]:
    """Return (pitch Hz or 0.0, normalized peak r[tau*]/r[0]) for one frame."""
    lo, hi = pitch_lag_band(rate, cfg)
    x = np.asarray(frame, dtype=np.float64)
    if hi >= x.size:
        raise BadPitchBand(f"frame of {x.size} samples cannot hold lag {hi}")
    r = autocorrelation(x, hi)
    if r[0] <= cfg.energy_floor:
        return 0.0, 0.0
    lag = lo + int(np.argmax(r[lo : hi + 1]))
    peak = float(r[lag] / r[0])
    if peak < cfg.voicing_threshold:
        return 0.0, peak
    return rate / _refine_peak(x, lag, lo, hi), peak


def pitch_track(frames: FrameSequence, cfg: FeatureConfig) -> PitchTrack:
    if len(frames) == 0:
        raise EmptyTrack("no frames to track")
    rate = frames.sample_rate_hz
    pitch = np.array([frame_pitch(f, rate, cfg)[0] for f in frames.frames])
    voiced = np.count_nonzero(pitch) / pitch.size
    return PitchTrack(pitch, float(voiced))


def pitch_stats(track: PitchTrack) -> TrackStats:
    voiced = track.pitch_hz[track.pitch_hz > 0]
    if voiced.size == 0:
        return TrackStats(0.0, 0.0, 0.0, 0.0, 0.0)
    return track_stats(voiced)


def smooth_centered(values, width: int) -> np.ndarray:
    """Centered moving average; edge frames average over available neighbours."""
    v = np.asarray(values, dtype=np.float64)
    half = width // 2
    c = np.concatenate(([0.0], np.cumsum(v)))
    idx = np.arange(v.size)
    lo = np.maximum(idx - half, 0)
    hi = np.minimum(idx + half + 1, v.size)
    return (c[hi] - c[lo]) / (hi - lo)


def count_bursts(energies, cfg: FeatureConfig) -> int:
    smoothed = smooth_centered(energies, cfg.rate_smooth_frames)
    peak = smoothed.max() if smoothed.size else 0.0
    if peak <= cfg.energy_floor:
        return 0
    active = smoothed >= cfg.rate_threshold * peak
    rises = np.count_nonzero(active[1:] & ~active[:-1])
    return int(rises + (1 if active[0] else 0))


def speech_rate(frames: FrameSequence, cfg: FeatureConfig) -> float:
    """Energy bursts per second of utterance."""
    if len(frames) == 0:
        raise EmptyTrack("no frames")
    energies = np.einsum("ij,ij->i", frames.frames, frames.frames)
    duration = frames.n_source_samples / frames.sample_rate_hz
    return count_bursts(energies, cfg) / duration


def hz_to_mel(f):
    return 2595.0 * np.log10(1.0 + np.asarray(f, dtype=np.float64) / 700.0)


def mel_to_hz(m):
    return 700.0 * (10.0 ** (np.asarray(m, dtype=np.float64) / 2595.0) - 1.0)


def mel_filterbank(nfft: int, rate: int, n_filters: int,
                   f_low: float = 0.0, f_high: float = None) -> np.ndarray:
    """Unit-peak triangular filters on an equally spaced mel grid.

    Triangles are evaluated at the exact bin frequencies ``k * rate / nfft``,
    so neighbouring filters sum to one wherever exactly two of them overlap.
    """
    if f_high is None:
        f_high = rate / 2.0
    if f_low < 0 or f_low >= f_high or f_high > rate / 2.0:
        raise BadBand(f"band [{f_low}, {f_high}] invalid for rate {rate}")
    edges = mel_to_hz(np.linspace(hz_to_mel(f_low), hz_to_mel(f_high), n_filters + 2))
    freqs = np.arange(nfft // 2 + 1) * rate / nfft
    bank = np.zeros((n_filters, freqs.size))
    for i in range(n_filters):
        left, center, right = edges[i], edges[i + 1], edges[i + 2]
        up = (freqs - left) / (center - left)
        down = (right - freqs) / (right - center)
        bank[i] = np.clip(np.minimum(up, down), 0.0, None)
    return bank


@lru_cache(maxsize=64)
def dct_matrix(n_out: int, n_in: int) -> np.ndarray:
    """Rows of the orthonormal DCT-II basis."""
    k = np.arange(n_out)[:, None]
    m = np.arange(n_in)[None, :]
    basis = np.cos(np.pi * k * (2 * m + 1) / (2 * n_in)) * math.sqrt(2.0 / n_in)
    basis[0] /= math.sqrt(2.0)
    basis.setflags(write=False)
    return basis


def mfcc_frame(spectrum: MagnitudeSpectrum, filterbank: np.ndarray, n_ceps: int,
               energy_floor: float = 1e-10) -> np.ndarray:
    """Log mel energies through a DCT-II; accepts a single spectrum or a stack."""
    bins = np.asarray(spectrum.bins, dtype=np.float64)
    if filterbank.shape[1] != bins.shape[-1]:
        raise DimensionMismatch(
            f"filterbank has {filterbank.shape[1]} columns, spectrum {bins.shape[-1]} bins")
    if n_ceps > filterbank.shape[0]:
        raise DimensionMismatch("more cepstra requested than filters")
    energies = np.maximum(energy_floor, (bins ** 2) @ filterbank.T)
    return np.log(energies) @ dct_matrix(n_ceps, filterbank.shape[0]).T


def levinson_durbin(r, order: int, energy_floor: float = 1e-10) -> Tuple[np.ndarray, float]:
    """Solve the Toeplitz normal equations from autocorrelation ``r[0..order]``.

    Predictor convention: x_hat[n] = sum_k a[k] x[n-k]. Returns the
    coefficients a[1..order] and the final prediction-error energy.
    """
    r = np.asarray(r, dtype=np.float64)
    if r.size < order + 1:
        raise ValueError(f"need {order + 1} autocorrelation lags, got {r.size}")
    if r[0] <= energy_floor:
        raise DegenerateFrame(f"r[0]={r[0]:.3g} is at or below the energy floor")
    a = np.zeros(order)
    err = float(r[0])
    for i in range(order):
        acc = r[i + 1] - np.dot(a[:i], r[i:0:-1])
        k = acc / err
        if not abs(k) < 1.0:
            raise NumericalBreakdown(f"reflection coefficient {k:.6g} at stage {i + 1}")
        prev = a[:i].copy()
        a[:i] = prev - k * prev[::-1]
        a[i] = k
        err *= 1.0 - k * k
    return a, err


def lpc_levinson(frame, order: int, energy_floor: float = 1e-10) -> Tuple[np.ndarray, float]:
    x = np.asarray(frame, dtype=np.float64)
    if order >= x.size:
        raise ValueError(f"order {order} must be below frame length {x.size}")
    return levinson_durbin(autocorrelation(x, order), order, energy_floor)


def lpcc_from_lpc(a, n_ceps: int) -> np.ndarray:
    a = np.asarray(a, dtype=np.float64)
    if a.size == 0:
        raise ValueError("empty LPC coefficient vector")
    p = a.size
    coef = lambda n: a[n - 1] if n <= p else 0.0  # noqa: E731
    c = np.zeros(n_ceps)
    for n in range(1, n_ceps + 1):
        acc = coef(n)
        for k in range(1, n):
            acc += (k / n) * c[k - 1] * coef(n - k)
        c[n - 1] = acc
    return c


def feature_layout(cfg: FeatureConfig) -> Tuple[str, ...]:
    names: List[str] = [f"energy_{s}" for s in STAT_NAMES]
    names += [f"pitch_{s}" for s in STAT_NAMES]
    names.append("speech_rate")
    if cfg.mode is FeatureMode.MFCC:
        prefix, count = "mfcc", cfg.n_mfcc
        start = 0
    else:
        prefix, count = "lpcc", cfg.n_lpcc
        start = 1
    idx = range(start, start + count)
    names += [f"{prefix}{i}_mean" for i in idx]
    names += [f"{prefix}{i}_std" for i in idx]
    return tuple(names)


def _filterbank_for(cfg: FeatureConfig, rate: int) -> np.ndarray:
    return _cached_filterbank(cfg.nfft(rate), rate, cfg.n_mel_filters)


@lru_cache(maxsize=16)
def _cached_filterbank(nfft: int, rate: int, n_filters: int) -> np.ndarray:
    bank = mel_filterbank(nfft, rate, n_filters)
    bank.setflags(write=False)
    return bank


def mfcc_track(windowed: np.ndarray, rate: int, cfg: FeatureConfig) -> np.ndarray:
    spec = fft_magnitude(windowed, cfg.nfft(rate), rate)
    return mfcc_frame(spec, _filterbank_for(cfg, rate), cfg.n_mfcc, cfg.energy_floor)


def lpcc_track(windowed: np.ndarray, cfg: FeatureConfig) -> np.ndarray:
    rows = []
    for frame in windowed:
        try:
            a, _ = lpc_levinson(frame, cfg.lpc_order, cfg.energy_floor)
        except (DegenerateFrame, NumericalBreakdown):
            continue
        rows.append(lpcc_from_lpc(a, cfg.n_lpcc))
    if not rows:
        raise NoAnalyzableFrames("every frame failed LPC analysis")
    return np.array(rows)


def extract_features(signal: AudioSignal, cfg: FeatureConfig = FeatureConfig()) -> FeatureVector:
    rate = signal.sample_rate_hz
    cfg.check_rate(rate)
    emphasized = pre_emphasize(signal, cfg.pre_emphasis)
    frames = frame_signal(emphasized, cfg.frame_ms, cfg.hop_ms)

    energies = np.einsum("ij,ij->i", frames.frames, frames.frames)
    prosody = list(track_stats(energies).as_tuple())
    prosody += pitch_stats(pitch_track(frames, cfg)).as_tuple()
    prosody.append(speech_rate(frames, cfg))

    windowed = hamming_window(frames.frames)
    if cfg.mode is FeatureMode.MFCC:
        ceps = mfcc_track(windowed, rate, cfg)
    else:
        ceps = lpcc_track(windowed, cfg)
    values = np.concatenate([prosody, ceps.mean(axis=0), ceps.std(axis=0)])
    if not np.all(np.isfinite(values)):
        raise NumericalBreakdown("non-finite feature value")
    return FeatureVector(values, cfg.mode, feature_layout(cfg))


def stack(vectors: Sequence[FeatureVector]) -> np.ndarray:
    return np.vstack([v.values for v in vectors])

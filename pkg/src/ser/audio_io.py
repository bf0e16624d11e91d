"""PCM-16 WAV decoding/encoding and pre-emphasis."""

from __future__ import annotations

import os
import struct
from dataclasses import dataclass
from typing import Optional

import numpy as np

from .errors import CorruptHeader, EmptySignal, UnsupportedFormat

MIN_SAMPLE_RATE = 8000
PCM_FORMAT = 1
INT16_SCALE = 32768.0


@dataclass(frozen=True)
class AudioSignal:
    """Mono samples in [-1, 1] plus their sample rate. Samples are read-only."""

    samples: np.ndarray
    sample_rate_hz: int
    source_path: Optional[str] = None

    def __post_init__(self):
        x = np.array(self.samples, dtype=np.float64)
        if x.ndim != 1:
            raise ValueError("samples must be one-dimensional")
        if x.size and np.max(np.abs(x)) > 1.0:
            raise ValueError("samples must lie in [-1, 1]")
        if int(self.sample_rate_hz) <= 0:
            raise ValueError("sample rate must be positive")
        x.setflags(write=False)
        object.__setattr__(self, "samples", x)
        object.__setattr__(self, "sample_rate_hz", int(self.sample_rate_hz))

    def __len__(self):
        return self.samples.size

    @property
    def duration_s(self) -> float:
        return self.samples.size / self.sample_rate_hz


def _iter_chunks(data: bytes):
    pos = 12
    while pos + 8 <= len(data):
        cid, size = struct.unpack_from("<4sI", data, pos)
        body = pos + 8
        if body + size > len(data):
            raise CorruptHeader(
                f"chunk {cid!r} claims {size} bytes, only {len(data) - body} remain"
            )
        yield cid, data[body:body + size]
        # chunks are word aligned
        pos = body + size + (size & 1)
    if pos < len(data) and data[pos:].strip(b"\x00"):
        raise CorruptHeader("trailing bytes do not form a chunk header")


def decode_wav(data: bytes, source_path: Optional[str] = None) -> AudioSignal:
    if len(data) < 12 or data[:4] != b"RIFF" or data[8:12] != b"WAVE":
        raise UnsupportedFormat("not a RIFF/WAVE file")
    riff_size = struct.unpack_from("<I", data, 4)[0]
    if riff_size + 8 > len(data):
        raise CorruptHeader(f"RIFF size {riff_size} exceeds file length {len(data)}")
    data = data[: riff_size + 8]

    fmt = None
    pcm = None
    for cid, body in _iter_chunks(data):
        if cid == b"fmt ":
            if len(body) < 16:
                raise CorruptHeader("fmt chunk shorter than 16 bytes")
            fmt = struct.unpack_from("<HHIIHH", body, 0)
        elif cid == b"data":
            pcm = body
            break
    if fmt is None:
        raise CorruptHeader("missing fmt chunk before data")
    if pcm is None:
        raise CorruptHeader("missing data chunk")

    audio_format, channels, rate, _byte_rate, block_align, bits = fmt
    if audio_format != PCM_FORMAT:
        raise UnsupportedFormat(f"audio format code {audio_format} is not PCM")
    if bits != 16:
        raise UnsupportedFormat(f"{bits}-bit PCM is not supported, only 16-bit")
    if channels < 1:
        raise CorruptHeader("zero channels")
    if rate < MIN_SAMPLE_RATE:
        raise UnsupportedFormat(f"sample rate {rate} Hz is below {MIN_SAMPLE_RATE} Hz")
    if block_align != 2 * channels:
        raise CorruptHeader(f"block align {block_align} inconsistent with {channels} channels")
    if len(pcm) % block_align:
        raise CorruptHeader("data chunk is not a whole number of frames")
    if not pcm:
        raise EmptySignal("data chunk holds no samples")

    ints = np.frombuffer(pcm, dtype="<i2").reshape(-1, channels)
    samples = ints.astype(np.float64) / INT16_SCALE
    if channels > 1:
        samples = samples.mean(axis=1)
    else:
        samples = samples[:, 0]
    return AudioSignal(samples, rate, source_path)


def read_wav(path) -> AudioSignal:
    """Decode a PCM-16 WAV file, averaging channels down to mono."""
    path = os.fspath(path)
    with open(path, "rb") as fh:
        data = fh.read()
    return decode_wav(data, source_path=path)


def encode_wav(samples, sample_rate_hz: int) -> bytes:
    """Encode mono float samples in [-1, 1] as PCM-16 WAV bytes."""
    x = np.asarray(samples, dtype=np.float64)
    ints = np.clip(np.round(x * INT16_SCALE), -32768, 32767).astype("<i2")
    pcm = ints.tobytes()
    header = struct.pack(
        "<4sI4s4sIHHIIHH4sI",
        b"RIFF", 36 + len(pcm), b"WAVE",
        b"fmt ", 16, PCM_FORMAT, 1, sample_rate_hz, 2 * sample_rate_hz, 2, 16,
        b"data", len(pcm),
    )
    return header + pcm


def write_wav(path, samples, sample_rate_hz: int) -> None:
    with open(path, "wb") as fh:
        fh.write(encode_wav(samples, sample_rate_hz))


def pre_emphasize(signal: AudioSignal, alpha: float = 0.97) -> AudioSignal:
    """First-order high-pass: y[0] = x[0], y[n] = x[n] - alpha * x[n-1]."""
    if not 0.0 <= alpha < 1.0:
        raise ValueError("alpha must lie in [0, 1)")
    x = signal.samples
    if x.size == 0:
        raise EmptySignal("cannot pre-emphasize an empty signal")
    y = np.empty_like(x)
    y[0] = x[0]
    y[1:] = x[1:] - alpha * x[:-1]
    # the difference can leave [-1, 1] by up to a factor (1 + alpha)
    return _unchecked_signal(y, signal.sample_rate_hz, signal.source_path)


def _unchecked_signal(samples, rate, source_path=None) -> AudioSignal:
    sig = object.__new__(AudioSignal)
    arr = np.array(samples, dtype=np.float64)
    arr.setflags(write=False)
    object.__setattr__(sig, "samples", arr)
    object.__setattr__(sig, "sample_rate_hz", int(rate))
    object.__setattr__(sig, "source_path", source_path)
    return sig

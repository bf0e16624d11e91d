"""Corpus metadata: filename parsing, manifests, stratified splits, synthetic corpora."""

from __future__ import annotations

import csv
import io
import math
import os
import re
from collections import Counter
from dataclasses import dataclass, field, replace
from pathlib import Path
from typing import Dict, List, Mapping, Optional, Sequence, Tuple

import numpy as np

from .audio_io import encode_wav
from .errors import (
    BadHeader,
    DuplicatePath,
    EmptyStratum,
    RowError,
    UnknownEmotionToken,
    UnparseableName,
)
from .labels import EMOTIONS, GENDERS, Emotion, Gender

MANIFEST_HEADER = ("path", "emotion", "gender", "speaker", "tag")

DEFAULT_EMOTION_TOKENS: Mapping[str, Emotion] = {
    "hotanger": Emotion.ANGRY,
    "anger": Emotion.ANGRY,
    "angry": Emotion.ANGRY,
    "happy": Emotion.HAPPY,
    "sadness": Emotion.SAD,
    "sad": Emotion.SAD,
    "fear": Emotion.FEAR,
    "panic": Emotion.FEAR,
}

_NAME_RE = re.compile(r"^(?P<speaker>[^()]+)\((?P<gender>[mfMF])\)_(?P<rest>.+)$")


@dataclass(frozen=True)
class SampleMeta:
    path: str
    speaker_id: str
    gender: Gender
    emotion: Emotion
    dataset_tag: Optional[str] = None


@dataclass
class Dataset:
    samples: List[SampleMeta]
    root: Optional[str] = None  # relative sample paths resolve against this

    def __post_init__(self):
        seen = set()
        for s in self.samples:
            if s.path in seen:
                raise DuplicatePath(f"path listed twice: {s.path}")
            seen.add(s.path)

    def __len__(self):
        return len(self.samples)

    def __iter__(self):
        return iter(self.samples)

    @property
    def counts(self) -> Dict[Tuple[Emotion, Gender], int]:
        return dict(Counter((s.emotion, s.gender) for s in self.samples))

    def resolve(self, sample: SampleMeta) -> str:
        if self.root is None or os.path.isabs(sample.path):
            return sample.path
        return os.path.join(self.root, sample.path)

    def subset(self, samples: Sequence[SampleMeta]) -> "Dataset":
        return Dataset(list(samples), self.root)

    def with_tag(self, tag: str) -> "Dataset":
        return self.subset([s for s in self.samples if s.dataset_tag == tag])

    @property
    def tags(self) -> List[str]:
        return sorted({s.dataset_tag for s in self.samples if s.dataset_tag})


def parse_sample_name(filename: str,
                      tokens: Mapping[str, Emotion] = DEFAULT_EMOTION_TOKENS) -> SampleMeta:
    """Parse ``<speaker>(<m|f>)_<emotion token>...`` style basenames."""
    base = os.path.basename(filename)
    stem = os.path.splitext(base)[0]
    m = _NAME_RE.match(stem)
    if not m:
        raise UnparseableName(f"{base!r} does not look like speaker(g)_emotion_...")
    words = [w for w in m.group("rest").split("_") if w]
    lookup = {k.lower(): v for k, v in tokens.items()}
    for w in words:
        if w.lower() in lookup:
            return SampleMeta(filename, m.group("speaker"), Gender.parse(m.group("gender")),
                              lookup[w.lower()])
    raise UnknownEmotionToken(words)


def _parse_emotion(text: str, tokens: Mapping[str, Emotion]) -> Emotion:
    t = text.strip().lower()
    for e in EMOTIONS:
        if e.value.lower() == t:
            return e
    lookup = {k.lower(): v for k, v in tokens.items()}
    if t in lookup:
        return lookup[t]
    raise UnknownEmotionToken([text.strip()])


def load_manifest(path, tokens: Mapping[str, Emotion] = DEFAULT_EMOTION_TOKENS) -> Dataset:
    """Read a ``path,emotion,gender,speaker,tag`` CSV; blanks fall back to the filename."""
    path = os.fspath(path)
    with open(path, newline="", encoding="utf-8") as fh:
        text = fh.read()
    reader = csv.reader(io.StringIO(text))
    header = next(reader, None)
    if header is None or tuple(h.strip() for h in header) != MANIFEST_HEADER:
        raise BadHeader(f"manifest header must be {','.join(MANIFEST_HEADER)}, got {header}")

    samples: List[SampleMeta] = []
    problems = []
    seen: Dict[str, int] = {}
    for row in reader:
        line = reader.line_num
        if not row or all(not c.strip() for c in row):
            continue
        if len(row) != len(MANIFEST_HEADER):
            problems.append((line, f"expected {len(MANIFEST_HEADER)} columns, got {len(row)}"))
            continue
        p, emo, gen, spk, tag = (c.strip() for c in row)
        if not p:
            problems.append((line, "empty path"))
            continue
        if p in seen:
            raise DuplicatePath(f"{p} appears on lines {seen[p]} and {line}")
        seen[p] = line
        try:
            # explicit columns are checked first so their errors take precedence
            emotion = _parse_emotion(emo, tokens) if emo else None
            gender = Gender.parse(gen) if gen else None
            if not (emo and gen and spk):
                parsed = parse_sample_name(p, tokens)
                emotion = emotion or parsed.emotion
                gender = gender or parsed.gender
                spk = spk or parsed.speaker_id
            speaker = spk
        except (UnknownEmotionToken, UnparseableName) as exc:
            problems.append((line, f"{type(exc).__name__}: {exc}"))
            continue
        except ValueError as exc:
            problems.append((line, str(exc)))
            continue
        samples.append(SampleMeta(p, speaker, gender, emotion, tag or None))
    if problems:
        raise RowError(problems)
    return Dataset(samples, os.path.dirname(os.path.abspath(path)))


def write_manifest(ds: Dataset, path) -> None:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(MANIFEST_HEADER)
    for s in ds.samples:
        w.writerow([s.path, s.emotion.value, s.gender.value, s.speaker_id, s.dataset_tag or ""])
    with open(path, "w", encoding="utf-8", newline="") as fh:
        fh.write(buf.getvalue())


def _stratum_seed(seed: int, emotion: Emotion, gender: Gender):
    return [int(seed) & 0xFFFFFFFF, emotion.index, GENDERS.index(gender)]


def split_train_test(ds: Dataset, train_fraction: float = 0.7,
                     seed: int = 0) -> Tuple[Dataset, Dataset]:
    """Stratified by (emotion, gender); shuffles each stratum with a derived seed.

    Per-stratum train counts are floor(f * n) plus one extra for the strata
    with the largest remainders, so the total equals round(f * N) and every
    stratum is within one sample of its exact share.
    """
    if not 0.0 < train_fraction < 1.0:
        raise ValueError("train_fraction must lie strictly between 0 and 1")
    strata: Dict[Tuple[Emotion, Gender], List[SampleMeta]] = {}
    for s in ds.samples:
        strata.setdefault((s.emotion, s.gender), []).append(s)
    if not strata:
        raise EmptyStratum("dataset is empty")
    keys = sorted(strata, key=lambda k: (k[0].index, GENDERS.index(k[1])))

    exact = {k: train_fraction * len(strata[k]) for k in keys}
    n_train = {k: int(math.floor(exact[k])) for k in keys}
    target = int(math.floor(train_fraction * len(ds) + 0.5))
    spare = target - sum(n_train.values())
    by_remainder = sorted(keys, key=lambda k: -(exact[k] - n_train[k]))
    for k in by_remainder[:max(spare, 0)]:
        n_train[k] += 1

    train, test = [], []
    for k in keys:
        members = strata[k]
        order = np.random.default_rng(_stratum_seed(seed, *k)).permutation(len(members))
        shuffled = [members[i] for i in order]
        train += shuffled[: n_train[k]]
        test += shuffled[n_train[k]:]
    return ds.subset(train), ds.subset(test)


# ---------------------------------------------------------------------------
# synthetic corpora

@dataclass(frozen=True)
class EmotionProfile:
    base_pitch_hz: float
    burst_rate_hz: float  # syllable-like bursts per second
    envelope: str  # "hann", "decay" or "square"
    spectral_tilt: float  # amplitude ratio between successive harmonics
    amplitude: float  # peak level before noise


@dataclass(frozen=True)
class SynthSpec:
    profiles: Mapping[Emotion, EmotionProfile] = field(default_factory=lambda: {
        Emotion.HAPPY: EmotionProfile(220.0, 4.0, "hann", 0.6, 0.6),
        Emotion.SAD: EmotionProfile(140.0, 2.0, "hann", 0.3, 0.3),
        Emotion.ANGRY: EmotionProfile(250.0, 5.0, "decay", 0.85, 0.9),
        Emotion.FEAR: EmotionProfile(300.0, 3.0, "square", 0.5, 0.45),
    })
    gender_offsets_hz: Mapping[Gender, float] = field(
        default_factory=lambda: {Gender.M: -60.0, Gender.F: 40.0})
    per_class: int = 25  # files per (emotion, gender)
    duration_s: float = 2.0
    sample_rate_hz: int = 16000
    noise_amplitude: float = 0.01
    pitch_jitter_hz: float = 1.0
    rate_jitter: float = 0.1  # relative
    amplitude_jitter: float = 0.1  # relative
    n_harmonics: int = 8
    duty: float = 0.6  # voiced fraction of each burst period
    seed: int = 0
    tag: str = "SYNTH"
    f_min: float = 50.0
    f_max: float = 400.0

    def __post_init__(self):
        if self.per_class < 1:
            raise ValueError("per_class must be at least 1")
        if self.sample_rate_hz < 8000:
            raise ValueError("sample rate must be at least 8000 Hz")
        for e, prof in self.profiles.items():
            for g, off in self.gender_offsets_hz.items():
                lo = prof.base_pitch_hz + off - self.pitch_jitter_hz
                hi = prof.base_pitch_hz + off + self.pitch_jitter_hz
                if lo < self.f_min or hi > self.f_max:
                    raise ValueError(f"{e.value}/{g.value} pitch leaves [{self.f_min}, {self.f_max}] Hz")

    @property
    def genders(self) -> Tuple[Gender, ...]:
        return tuple(g for g in GENDERS if g in self.gender_offsets_hz)


def confounded_spec(**overrides) -> SynthSpec:
    """Emotions differ only in pitch, and the female offset maps one emotion
    onto another's male pitch, so a pooled model sees identical inputs with
    different labels while each gender on its own stays separable."""
    shared = dict(burst_rate_hz=3.0, envelope="hann", spectral_tilt=0.5, amplitude=0.6)
    spec = SynthSpec(
        profiles={
            Emotion.SAD: EmotionProfile(120.0, **shared),
            Emotion.HAPPY: EmotionProfile(160.0, **shared),
            Emotion.ANGRY: EmotionProfile(200.0, **shared),
            Emotion.FEAR: EmotionProfile(240.0, **shared),
        },
        gender_offsets_hz={Gender.M: 0.0, Gender.F: 80.0},
    )
    return replace(spec, **overrides)


FILENAME_TOKENS = {
    Emotion.HAPPY: "happy",
    Emotion.SAD: "sadness",
    Emotion.ANGRY: "hotAnger",
    Emotion.FEAR: "fear",
}
SPEAKERS = {Gender.M: "cc_001", Gender.F: "gg_001"}


def sample_filename(emotion: Emotion, gender: Gender, index: int) -> str:
    return f"{SPEAKERS[gender]}({gender.value.lower()})_{FILENAME_TOKENS[emotion]}_{index}.wav"


def _envelope(phase: np.ndarray, shape: str, duty: float) -> np.ndarray:
    """Burst envelope over phase in [0, 1): active during the first ``duty``."""
    u = phase / duty
    on = u < 1.0
    if shape == "hann":
        env = 0.5 - 0.5 * np.cos(2.0 * np.pi * u)
    elif shape == "decay":
        env = np.exp(-4.0 * u) * np.minimum(1.0, u * 20.0)
    elif shape == "square":
        env = np.minimum(1.0, np.minimum(u, 1.0 - u) * 10.0)
    else:
        raise ValueError(f"unknown envelope shape {shape!r}")
    return np.where(on, env, 0.0)


def synth_utterance(profile: EmotionProfile, pitch_offset_hz: float, spec: SynthSpec,
                    rng: np.random.Generator) -> np.ndarray:
    rate = spec.sample_rate_hz
    n = int(round(spec.duration_s * rate))
    t = np.arange(n) / rate
    f0 = profile.base_pitch_hz + pitch_offset_hz + rng.uniform(-1, 1) * spec.pitch_jitter_hz
    burst_rate = profile.burst_rate_hz * (1 + rng.uniform(-1, 1) * spec.rate_jitter)
    amp = profile.amplitude * (1 + rng.uniform(-1, 1) * spec.amplitude_jitter)
    start_phase = rng.uniform(0.0, 1.0)

    tone = np.zeros(n)
    weights = 0.0
    for h in range(1, spec.n_harmonics + 1):
        if h * f0 >= rate / 2:
            break
        w = profile.spectral_tilt ** (h - 1)
        tone += w * np.sin(2.0 * np.pi * h * f0 * t + rng.uniform(0, 2 * np.pi))
        weights += w
    tone /= weights
    phase = np.mod(t * burst_rate + start_phase, 1.0)
    x = amp * _envelope(phase, profile.envelope, spec.duty) * tone
    x += spec.noise_amplitude * rng.standard_normal(n)
    peak = np.max(np.abs(x))
    if peak > 0.99:
        x *= 0.99 / peak
    return x


def synth_corpus(spec: SynthSpec, out_dir) -> Dataset:
    """Write one PCM-16 WAV per sample plus ``manifest.csv``; deterministic in ``spec.seed``."""
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    samples = []
    file_index = 0
    for emotion in EMOTIONS:
        if emotion not in spec.profiles:
            continue
        for gender in spec.genders:
            for k in range(1, spec.per_class + 1):
                rng = np.random.default_rng([int(spec.seed) & 0xFFFFFFFF, file_index])
                file_index += 1
                x = synth_utterance(spec.profiles[emotion], spec.gender_offsets_hz[gender],
                                    spec, rng)
                name = sample_filename(emotion, gender, k)
                (out / name).write_bytes(encode_wav(x, spec.sample_rate_hz))
                samples.append(SampleMeta(name, SPEAKERS[gender], gender, emotion, spec.tag))
    ds = Dataset(samples, str(out.resolve()))
    write_manifest(ds, out / "manifest.csv")
    return ds

"""Feature scaling, one-against-all and gender-dependent SVM banks, model files."""

from __future__ import annotations

import hashlib
import os
import re
from dataclasses import dataclass
from enum import Enum
from typing import Dict, Iterable, List, Mapping, Optional, Sequence, Tuple

import numpy as np

from . import svm_core
from .errors import (
    BadMagic,
    BinaryTrainingError,
    ChecksumMismatch,
    DimensionMismatch,
    EmptyTrainingSet,
    MissingClass,
    MissingClassInGender,
    MissingGender,
    MixedDimensions,
    ModelFormatError,
    SerError,
    TruncatedModel,
    UnknownGenderBank,
    VersionUnsupported,
    WrongStrategy,
)
from .features import FeatureConfig, FeatureMode, FeatureVector
from .labels import EMOTIONS, GENDERS, Emotion, Gender
from .svm_core import BinarySvmModel, SvmParams

MAGIC = "SERSVM"
VERSION = 1
ALL_BANK = "ALL"
MIN_PER_CLASS = 2
STD_FLOOR = 1e-12


class Strategy(str, Enum):
    OAA = "OAA"
    GD = "GD"

    @classmethod
    def parse(cls, text: str) -> "Strategy":
        t = text.strip().upper()
        if t in ("GENDER", "GENDER_DEPENDENT"):
            t = "GD"
        try:
            return cls(t)
        except ValueError:
            raise ValueError(f"unknown strategy {text!r}") from None

    @property
    def title(self) -> str:
        return "OAA" if self is Strategy.OAA else "Gender dependent"


@dataclass(frozen=True)
class Scaler:
    means: np.ndarray
    stds: np.ndarray

    def __post_init__(self):
        m = np.array(self.means, dtype=np.float64).ravel()
        s = np.array(self.stds, dtype=np.float64).ravel()
        if m.shape != s.shape:
            raise DimensionMismatch("scaler means and stds differ in length")
        m.setflags(write=False)
        s.setflags(write=False)
        object.__setattr__(self, "means", m)
        object.__setattr__(self, "stds", s)

    @property
    def dim(self) -> int:
        return self.means.size

    def apply(self, X) -> np.ndarray:
        X = np.asarray(X, dtype=np.float64)
        if X.shape[-1] != self.dim:
            raise DimensionMismatch(f"vector dimension {X.shape[-1]} != scaler dimension {self.dim}")
        return (X - self.means) / self.stds


def _as_matrix(vectors) -> np.ndarray:
    rows = [v.values if isinstance(v, FeatureVector) else np.asarray(v, dtype=np.float64)
            for v in vectors]
    if not rows:
        raise EmptyTrainingSet("no vectors")
    if len({r.shape for r in rows}) != 1:
        raise MixedDimensions("vectors differ in dimension")
    return np.vstack(rows)


def fit_scaler(vectors) -> Scaler:
    X = _as_matrix(vectors)
    means = X.mean(axis=0)
    stds = X.std(axis=0)
    stds = np.where(stds < STD_FLOOR, 1.0, stds)
    return Scaler(means, stds)


def transform(scaler: Scaler, v: FeatureVector) -> FeatureVector:
    return FeatureVector(scaler.apply(v.values), v.mode, v.layout)


@dataclass(frozen=True)
class Bank:
    scaler: Scaler
    models: Mapping[Emotion, BinarySvmModel]

    def scores(self, x) -> Dict[Emotion, float]:
        z = self.scaler.apply(x)
        return {e: svm_core.decision_value(self.models[e], z) for e in EMOTIONS}

    def score_matrix(self, X) -> np.ndarray:
        Z = self.scaler.apply(np.array(X, dtype=np.float64, ndmin=2))
        return np.column_stack([svm_core.decision_values(self.models[e], Z) for e in EMOTIONS])


@dataclass(frozen=True)
class EmotionModel:
    strategy: Strategy
    mode: FeatureMode
    dim: int
    banks: Mapping[str, Bank]  # "ALL" for OAA, "M"/"F" for GD
    fingerprint: str

    def bank_for(self, gender: Optional[Gender] = None) -> Bank:
        if self.strategy is Strategy.OAA:
            return self.banks[ALL_BANK]
        if gender is None:
            raise WrongStrategy("gender-dependent model needs a gender at prediction time")
        key = Gender(gender).value
        if key not in self.banks:
            raise UnknownGenderBank(f"model has no bank for gender {key}")
        return self.banks[key]


def fingerprint(feature_config: FeatureConfig, params: SvmParams) -> str:
    """Feature-config digest followed by the SVM-parameter digest (16 hex each)."""
    svm = hashlib.sha256(params.canonical().encode()).hexdigest()[:16]
    return feature_config.fingerprint() + svm


def _mode_and_dim(vectors: Sequence[FeatureVector]) -> Tuple[FeatureMode, int]:
    modes = {v.mode for v in vectors}
    if len(modes) != 1:
        raise MixedDimensions("training vectors mix feature modes")
    dims = {len(v) for v in vectors}
    if len(dims) != 1:
        raise MixedDimensions("training vectors differ in dimension")
    return modes.pop(), dims.pop()


def _train_bank(vectors, labels, params: SvmParams) -> Bank:
    scaler = fit_scaler(vectors)
    Z = scaler.apply(_as_matrix(vectors))
    labels = np.array([Emotion(l).index for l in labels])
    models = {}
    for e in EMOTIONS:
        y = np.where(labels == e.index, 1.0, -1.0)
        try:
            models[e] = svm_core.smo_train(Z, y, params)
        except SerError as exc:
            raise BinaryTrainingError(e, exc) from exc
    return Bank(scaler, models)


def _check_classes(labels, error):
    for e in EMOTIONS:
        if sum(1 for l in labels if l == e) < MIN_PER_CLASS:
            raise error(e)


def train_oaa(train: Iterable[Tuple[FeatureVector, Emotion]], params: SvmParams = SvmParams(),
              feature_config: Optional[FeatureConfig] = None) -> EmotionModel:
    train = list(train)
    if not train:
        raise EmptyTrainingSet("no training samples")
    vectors = [v for v, _ in train]
    labels = [Emotion(l) for _, l in train]
    mode, dim = _mode_and_dim(vectors)
    _check_classes(labels, MissingClass)
    cfg = feature_config or FeatureConfig(mode=mode)
    bank = _train_bank(vectors, labels, params)
    return EmotionModel(Strategy.OAA, mode, dim, {ALL_BANK: bank}, fingerprint(cfg, params))


def train_gender_dependent(train: Iterable[Tuple[FeatureVector, Emotion, Gender]],
                           params: SvmParams = SvmParams(),
                           feature_config: Optional[FeatureConfig] = None) -> EmotionModel:
    train = list(train)
    if not train:
        raise EmptyTrainingSet("no training samples")
    mode, dim = _mode_and_dim([v for v, _, _ in train])
    cfg = feature_config or FeatureConfig(mode=mode)
    parts = {g: [(v, Emotion(l)) for v, l, gg in train if Gender(gg) is g] for g in GENDERS}
    for g in GENDERS:
        if not parts[g]:
            raise MissingGender(f"no training samples for gender {g.value}")
        _check_classes([l for _, l in parts[g]], lambda e, g=g: MissingClassInGender(g, e))
    banks = {
        g.value: _train_bank([v for v, _ in parts[g]], [l for _, l in parts[g]], params)
        for g in GENDERS
    }
    return EmotionModel(Strategy.GD, mode, dim, banks, fingerprint(cfg, params))


def _argmax_label(scores: np.ndarray) -> Emotion:
    # np.argmax returns the first maximum, i.e. canonical order breaks ties
    return EMOTIONS[int(np.argmax(scores))]


def _predict(bank: Bank, model: EmotionModel, v: FeatureVector):
    if len(v) != model.dim:
        raise DimensionMismatch(f"vector dimension {len(v)} != model dimension {model.dim}")
    scores = bank.score_matrix(v.values)[0]
    return _argmax_label(scores), dict(zip(EMOTIONS, (float(s) for s in scores)))


def predict_oaa(model: EmotionModel, v: FeatureVector):
    if model.strategy is not Strategy.OAA:
        raise WrongStrategy("predict_oaa called on a gender-dependent model")
    return _predict(model.bank_for(), model, v)


def predict_gender_dependent(model: EmotionModel, v: FeatureVector, g: Gender):
    if model.strategy is not Strategy.GD:
        raise WrongStrategy("predict_gender_dependent called on an OAA model")
    return _predict(model.bank_for(g), model, v)


def predict(model: EmotionModel, v: FeatureVector, gender: Optional[Gender] = None):
    if model.strategy is Strategy.OAA:
        return predict_oaa(model, v)
    return predict_gender_dependent(model, v, gender)


def predict_many(model: EmotionModel, X, genders: Optional[Sequence[Gender]] = None) -> List[Emotion]:
    """Batch prediction; scores per row are identical to :func:`predict`."""
    X = np.array(X, dtype=np.float64, ndmin=2)
    if X.shape[1] != model.dim:
        raise DimensionMismatch(f"vector dimension {X.shape[1]} != model dimension {model.dim}")
    if model.strategy is Strategy.OAA:
        S = model.bank_for().score_matrix(X)
        return [_argmax_label(row) for row in S]
    if genders is None or len(genders) != X.shape[0]:
        raise WrongStrategy("gender-dependent prediction needs one gender per row")
    out: List[Optional[Emotion]] = [None] * X.shape[0]
    genders = [Gender(g) for g in genders]
    for g in GENDERS:
        rows = [i for i, gg in enumerate(genders) if gg is g]
        if rows:
            S = model.bank_for(g).score_matrix(X[rows])
            for i, row in zip(rows, S):
                out[i] = _argmax_label(row)
    return out


# ---------------------------------------------------------------------------
# model files

FNV_OFFSET = 0xCBF29CE484222325
FNV_PRIME = 0x100000001B3
MASK64 = (1 << 64) - 1


def fnv1a64(data: bytes) -> int:
    h = FNV_OFFSET
    for b in data:
        h = ((h ^ b) * FNV_PRIME) & MASK64
    return h


def _num(x: float) -> str:
    return "%.17g" % x


def _nums(xs) -> str:
    return " ".join(_num(float(x)) for x in xs)


def dumps_model(model: EmotionModel) -> bytes:
    lines = [
        f"{MAGIC} v{VERSION}",
        f"strategy {model.strategy.value}  mode {model.mode.value}  dim {model.dim}  "
        f"fingerprint {model.fingerprint}",
    ]
    for key in sorted(model.banks, key=_bank_order):
        bank = model.banks[key]
        lines.append(f"bank {key}")
        lines.append("scaler " + _nums(np.concatenate([bank.scaler.means, bank.scaler.stds])))
        for e in EMOTIONS:
            m = bank.models[e]
            lines.append(f"model {e.value} gamma {_num(m.gamma)} C {_num(m.C)} "
                         f"bias {_num(m.bias)} nsv {m.coefficients.size}")
            for c, sv in zip(m.coefficients, m.support_vectors):
                lines.append(_num(float(c)) + " " + _nums(sv))
    body = ("\n".join(lines) + "\n").encode("ascii")
    return body + f"checksum {fnv1a64(body):016x}\n".encode("ascii")


def _bank_order(key: str) -> int:
    order = [ALL_BANK] + [g.value for g in GENDERS]
    return order.index(key) if key in order else len(order)


def save_model(model: EmotionModel, path) -> None:
    """Write atomically: the target only appears once fully written."""
    data = dumps_model(model)
    path = os.fspath(path)
    tmp = path + ".partial"
    try:
        with open(tmp, "wb") as fh:
            fh.write(data)
        os.replace(tmp, path)
    finally:
        if os.path.exists(tmp):
            os.remove(tmp)


_VERSION_RE = re.compile(r"^SERSVM v(\d+)$")
_CHECKSUM_RE = re.compile(rb"^checksum ([0-9a-f]{16})$")


class _Lines:
    def __init__(self, lines):
        self.lines = lines
        self.pos = 0

    def next(self) -> List[str]:
        if self.pos >= len(self.lines):
            raise TruncatedModel("model file ends early")
        line = self.lines[self.pos]
        self.pos += 1
        return line.split()


def _kv(tokens: List[str], keys: Sequence[str]) -> Dict[str, str]:
    if len(tokens) != 2 * len(keys) or tokens[0::2] != list(keys):
        raise ModelFormatError(f"expected fields {list(keys)}, got {tokens}")
    return dict(zip(keys, tokens[1::2]))


def loads_model(data: bytes) -> EmotionModel:
    first = data.split(b"\n", 1)[0]
    if not first.startswith(MAGIC.encode()):
        raise BadMagic("not a SERSVM model file")
    m = _VERSION_RE.match(first.decode("ascii", "replace"))
    if not m:
        raise BadMagic(f"malformed magic line {first[:40]!r}")
    if int(m.group(1)) != VERSION:
        raise VersionUnsupported(f"model file version {m.group(1)} (supported: {VERSION})")

    if not data.endswith(b"\n"):
        raise TruncatedModel("model file does not end with a complete line")
    body_end = data.rfind(b"\n", 0, len(data) - 1) + 1
    tail = data[body_end:-1]
    cm = _CHECKSUM_RE.match(tail)
    if body_end == 0 or not cm:
        raise TruncatedModel("model file has no checksum line")
    body = data[:body_end]
    if int(cm.group(1), 16) != fnv1a64(body):
        raise ChecksumMismatch("model checksum does not match its contents")

    try:
        return _parse_body(body.decode("ascii").split("\n")[1:-1])
    except (ValueError, KeyError, IndexError) as exc:
        if isinstance(exc, SerError):
            raise
        raise ModelFormatError(f"malformed model file: {exc}") from exc


def _parse_body(lines: List[str]) -> EmotionModel:
    it = _Lines(lines)
    head = _kv(it.next(), ("strategy", "mode", "dim", "fingerprint"))
    strategy = Strategy(head["strategy"])
    mode = FeatureMode(head["mode"])
    dim = int(head["dim"])
    n_banks = 1 if strategy is Strategy.OAA else len(GENDERS)
    banks = {}
    for _ in range(n_banks):
        tok = it.next()
        if len(tok) != 2 or tok[0] != "bank":
            raise ModelFormatError(f"expected bank line, got {tok}")
        key = tok[1]
        tok = it.next()
        if tok[0] != "scaler" or len(tok) != 1 + 2 * dim:
            raise TruncatedModel("scaler line is incomplete")
        vals = np.array([float(t) for t in tok[1:]])
        scaler = Scaler(vals[:dim], vals[dim:])
        models = {}
        for e in EMOTIONS:
            tok = it.next()
            if tok[:2] != ["model", e.value]:
                raise ModelFormatError(f"expected model {e.value}, got {tok[:2]}")
            hdr = _kv(tok[2:], ("gamma", "C", "bias", "nsv"))
            nsv = int(hdr["nsv"])
            rows = []
            for _ in range(nsv):
                vals = it.next()
                if len(vals) != dim + 1:
                    raise TruncatedModel("support-vector line is incomplete")
                rows.append([float(t) for t in vals])
            rows = np.array(rows)
            models[e] = BinarySvmModel(rows[:, 1:], rows[:, 0], float(hdr["bias"]),
                                       float(hdr["gamma"]), float(hdr["C"]))
        banks[key] = Bank(scaler, models)
    if it.pos != len(lines):
        raise ModelFormatError("unexpected trailing lines in model file")
    expected = {ALL_BANK} if strategy is Strategy.OAA else {g.value for g in GENDERS}
    if set(banks) != expected:
        if strategy is Strategy.GD:
            raise UnknownGenderBank(f"gender-dependent model has banks {sorted(banks)}")
        raise ModelFormatError(f"OAA model has banks {sorted(banks)}")
    return EmotionModel(strategy, mode, dim, banks, head["fingerprint"])


def load_model(path) -> EmotionModel:
    with open(path, "rb") as fh:
        return loads_model(fh.read())

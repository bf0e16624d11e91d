"""Test-set evaluation and the three comparison table layouts."""

from __future__ import annotations

import csv
import io
import math
import warnings
from dataclasses import dataclass, field
from enum import Enum
from typing import Dict, List, Optional, Sequence, Tuple

import numpy as np

from .classifier import EmotionModel, Strategy, predict_many
from .errors import DimensionMismatch, MissingGenderForGd, MissingGroup
from .features import FeatureMode, FeatureVector
from .labels import EMOTIONS, Emotion, Gender

CSV_HEADER = ("layout", "group", "emotion", "accuracy_pct")
OVERALL_ROW = "Overall"


class Layout(str, Enum):
    TABLE_I = "TableI"
    TABLE_II = "TableII"
    TABLE_III = "TableIII"

    @property
    def title(self) -> str:
        return {
            Layout.TABLE_I: "Accuracy of both classifiers",
            Layout.TABLE_II: "Accuracy for both datasets",
            Layout.TABLE_III: "Overall accuracy comparison of feature modes",
        }[self]


@dataclass(frozen=True)
class EvaluationReport:
    confusion: np.ndarray  # rows: true label, cols: predicted, canonical order
    strategy: Strategy
    mode: FeatureMode
    dataset_tag: Optional[str] = None

    def __post_init__(self):
        c = np.array(self.confusion, dtype=np.int64)
        if c.shape != (len(EMOTIONS), len(EMOTIONS)) or np.any(c < 0):
            raise ValueError("confusion must be a non-negative 4x4 count matrix")
        c.setflags(write=False)
        object.__setattr__(self, "confusion", c)

    @property
    def n_test(self) -> int:
        return int(self.confusion.sum())

    @property
    def per_emotion_accuracy(self) -> Dict[Emotion, Optional[float]]:
        """Row recall; ``None`` where the test set has no samples of that emotion."""
        out = {}
        for e in EMOTIONS:
            total = int(self.confusion[e.index].sum())
            out[e] = self.confusion[e.index, e.index] / total if total else None
        return out

    @property
    def undefined_emotions(self) -> List[Emotion]:
        return [e for e, v in self.per_emotion_accuracy.items() if v is None]

    @property
    def overall_macro(self) -> float:
        defined = [v for v in self.per_emotion_accuracy.values() if v is not None]
        return sum(defined) / len(defined) if defined else math.nan

    @property
    def overall_micro(self) -> float:
        n = self.n_test
        return int(np.trace(self.confusion)) / n if n else math.nan


def confusion_matrix(truth: Sequence[Emotion], predicted: Sequence[Emotion]) -> np.ndarray:
    c = np.zeros((len(EMOTIONS), len(EMOTIONS)), dtype=np.int64)
    for t, p in zip(truth, predicted):
        c[Emotion(t).index, Emotion(p).index] += 1
    return c


def evaluate_model(model: EmotionModel, test: Sequence[Tuple], dataset_tag: Optional[str] = None
                   ) -> EvaluationReport:
    """Score ``(vector, label[, gender])`` tuples; gender is required for GD models."""
    test = list(test)
    if not test:
        raise ValueError("empty test set")
    X = np.vstack([item[0].values if isinstance(item[0], FeatureVector) else item[0]
                   for item in test])
    if X.shape[1] != model.dim:
        raise DimensionMismatch(f"test vectors have dimension {X.shape[1]}, model {model.dim}")
    truth = [Emotion(item[1]) for item in test]
    genders = None
    if model.strategy is Strategy.GD:
        if any(len(item) < 3 or item[2] is None for item in test):
            raise MissingGenderForGd("gender-dependent evaluation needs a gender per sample")
        genders = [Gender(item[2]) for item in test]
    predicted = predict_many(model, X, genders)
    report = EvaluationReport(confusion_matrix(truth, predicted), model.strategy, model.mode,
                              dataset_tag)
    missing = report.undefined_emotions
    if missing:
        warnings.warn("no test samples for " + ", ".join(e.value for e in missing)
                      + "; macro accuracy covers the remaining emotions", stacklevel=2)
    return report


def pct(value: Optional[float]) -> str:
    if value is None or (isinstance(value, float) and math.isnan(value)):
        return "n/a"
    # truncated rather than rounded, so 0.9166 and 11/12 both print as 91.66
    return "%.2f" % (math.floor(value * 10000 + 1e-6) / 100)


def _group_key(layout: Layout, r: EvaluationReport) -> str:
    if layout is Layout.TABLE_I:
        return r.strategy.title
    if layout is Layout.TABLE_II:
        return f"{r.dataset_tag or 'untagged'} {r.strategy.title}"
    return r.mode.value


def _required_groups(layout: Layout, reports: Sequence[EvaluationReport]) -> List[str]:
    if layout is Layout.TABLE_I:
        return [s.title for s in Strategy]
    if layout is Layout.TABLE_III:
        return [m.value for m in FeatureMode]
    tags = sorted({r.dataset_tag or "untagged" for r in reports})
    if not tags:
        raise MissingGroup("Table II needs reports for at least one dataset")
    return [f"{t} {s.title}" for t in tags for s in Strategy]


def table_cells(reports: Sequence[EvaluationReport], layout: Layout
                ) -> Tuple[List[str], Dict[str, EvaluationReport]]:
    layout = Layout(layout)
    groups: Dict[str, EvaluationReport] = {}
    for r in reports:
        key = _group_key(layout, r)
        if key in groups:
            raise ValueError(f"two reports map to the same {layout.value} column {key!r}")
        groups[key] = r
    required = _required_groups(layout, reports)
    missing = [g for g in required if g not in groups]
    if missing:
        raise MissingGroup(f"{layout.value} is missing columns: {', '.join(missing)}")
    return required, groups


def render_tables(reports: Sequence[EvaluationReport], layout) -> Tuple[str, str]:
    """Return ``(text, csv)`` renderings of one table layout with identical values."""
    layout = Layout(layout)
    columns, groups = table_cells(reports, layout)
    rows: List[Tuple[str, List[str]]] = []
    for e in EMOTIONS:
        rows.append((e.value, [pct(groups[c].per_emotion_accuracy[e]) for c in columns]))
    rows.append((OVERALL_ROW, [pct(groups[c].overall_macro) for c in columns]))

    headers = ["Emotions"] + [f"{c} (%)" for c in columns]
    widths = [max(len(headers[0]), *(len(r[0]) for r in rows))]
    for j, h in enumerate(headers[1:]):
        widths.append(max(len(h), *(len(r[1][j]) for r in rows)))
    fmt_row = lambda cells: "  ".join(  # noqa: E731
        c.ljust(w) if i == 0 else c.rjust(w) for i, (c, w) in enumerate(zip(cells, widths)))
    lines = [f"{layout.value}: {layout.title}", fmt_row(headers),
             "  ".join("-" * w for w in widths)]
    lines += [fmt_row([name] + cells) for name, cells in rows]
    text = "\n".join(lines) + "\n"

    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(CSV_HEADER)
    for name, cells in rows:
        for c, cell in zip(columns, cells):
            w.writerow([layout.value, c, name, "" if cell == "n/a" else cell])
    return text, buf.getvalue()


def render_report(report: EvaluationReport) -> str:
    """Confusion matrix plus per-emotion, macro and micro accuracy."""
    names = [e.value for e in EMOTIONS]
    width = max(len(n) for n in names) + 2
    title = f"strategy {report.strategy.value}  mode {report.mode.value}"
    if report.dataset_tag:
        title += f"  dataset {report.dataset_tag}"
    lines = [title, f"n_test {report.n_test}", "",
             "true\\pred".ljust(width) + "".join(n.rjust(width) for n in names)]
    for e in EMOTIONS:
        lines.append(e.value.ljust(width)
                     + "".join(str(v).rjust(width) for v in report.confusion[e.index]))
    lines.append("")
    for e, acc in report.per_emotion_accuracy.items():
        lines.append(f"{e.value.ljust(width)}{pct(acc).rjust(8)} %")
    lines.append(f"{'macro'.ljust(width)}{pct(report.overall_macro).rjust(8)} %")
    lines.append(f"{'micro'.ljust(width)}{pct(report.overall_micro).rjust(8)} %")
    return "\n".join(lines) + "\n"

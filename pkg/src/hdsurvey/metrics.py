"""Confusion matrices and the five performance measures (positive class = heart disease)."""
from __future__ import annotations

import csv
import io
from dataclasses import asdict, dataclass, field

import numpy as np

from .errors import InputError

METRIC_NAMES = ("accuracy", "precision", "recall", "specificity", "f1")


@dataclass(frozen=True)
class ConfusionMatrix:
    tp: int
    fp: int
    tn: int
    fn: int

    def __post_init__(self):
        if min(self.tp, self.fp, self.tn, self.fn) < 0:
            raise InputError("confusion counts must be non-negative")

    @property
    def total(self) -> int:
        return self.tp + self.fp + self.tn + self.fn


@dataclass(frozen=True)
class MetricsReport:
    accuracy: float
    precision: float
    recall: float
    specificity: float
    f1: float
    # names of metrics whose denominator was zero (reported as 0)
    undefined: tuple[str, ...] = field(default=())

    def as_dict(self) -> dict:
        out = asdict(self)
        out["undefined"] = list(self.undefined)
        return out


def confusion_from_labels(y_true, y_pred) -> ConfusionMatrix:
    y_true = np.asarray(y_true).astype(bool)
    y_pred = np.asarray(y_pred).astype(bool)
    if y_true.shape != y_pred.shape:
        raise InputError("label arrays differ in length")
    return ConfusionMatrix(
        tp=int(np.count_nonzero(y_true & y_pred)),
        fp=int(np.count_nonzero(~y_true & y_pred)),
        tn=int(np.count_nonzero(~y_true & ~y_pred)),
        fn=int(np.count_nonzero(y_true & ~y_pred)),
    )


def confusion(model, test) -> ConfusionMatrix:
    """Tally predictions of ``model`` over every row of ``test``."""
    from .classifiers import predict_labels

    if test.n_rows == 0:
        raise InputError("cannot evaluate on an empty dataset")
    return confusion_from_labels(test.labels, predict_labels(model, test.matrix))


def _ratio(num: int, den: int, name: str, undefined: list) -> float:
    if den == 0:
        undefined.append(name)
        return 0.0
    return num / den


def compute(c: ConfusionMatrix) -> MetricsReport:
    if c.total == 0:
        raise InputError("empty confusion matrix")
    undefined: list[str] = []
    accuracy = (c.tp + c.tn) / c.total
    precision = _ratio(c.tp, c.tp + c.fp, "precision", undefined)
    recall = _ratio(c.tp, c.tp + c.fn, "recall", undefined)
    specificity = _ratio(c.tn, c.tn + c.fp, "specificity", undefined)
    # 2PR/(P+R) written over counts: exact rational, single rounding
    if "precision" in undefined or "recall" in undefined:
        undefined.append("f1")
        f1 = 0.0
    elif c.tp == 0:
        f1 = 0.0
    else:
        f1 = 2 * c.tp / (2 * c.tp + c.fp + c.fn)
    return MetricsReport(accuracy, precision, recall, specificity, f1, tuple(undefined))


@dataclass(frozen=True)
class TableRow:
    """One model's metrics before and after restricting to selected features."""

    model: str
    before: MetricsReport
    after: MetricsReport | None = None


def table_records(rows: list[TableRow]) -> list[dict]:
    records = []
    for row in rows:
        for panel, rep in (("before", row.before), ("after", row.after)):
            if rep is None:
                continue
            rec = {"model": row.model, "panel": panel}
            rec.update({k: getattr(rep, k) for k in METRIC_NAMES})
            rec["undefined"] = ";".join(rep.undefined)
            records.append(rec)
    return records


def table_csv(rows: list[TableRow]) -> str:
    buf = io.StringIO()
    writer = csv.DictWriter(buf, fieldnames=["model", "panel", *METRIC_NAMES, "undefined"], lineterminator="\n")
    writer.writeheader()
    for rec in table_records(rows):
        writer.writerow({k: (repr(v) if isinstance(v, float) else v) for k, v in rec.items()})
    return buf.getvalue()


def table_text(rows: list[TableRow], title: str = "") -> str:
    """Aligned two-panel text table (before | after feature selection)."""
    short = ("Acc", "Prec", "Recall", "Spec", "F1")
    head = f"{'Model':<12}" + "".join(f"{h:>8}" for h in short)
    has_after = any(r.after is not None for r in rows)
    if has_after:
        head += "  |" + "".join(f"{h:>8}" for h in short)
    lines = [title] if title else []
    if has_after:
        lines.append(f"{'':<12}{'before feature selection':^40}  |{'after feature selection':^40}")
    lines.append(head)
    lines.append("-" * len(head))
    for r in rows:
        line = f"{r.model:<12}" + "".join(f"{getattr(r.before, k):>8.2f}" for k in METRIC_NAMES)
        if has_after:
            line += "  |"
            if r.after is not None:
                line += "".join(f"{getattr(r.after, k):>8.2f}" for k in METRIC_NAMES)
        lines.append(line)
    return "\n".join(lines) + "\n"

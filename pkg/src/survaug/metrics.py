"""Confusion counting and the seven change-detection metrics.

Reports carry FM, PWC, Recall, Precision, FPR, FNR and Specificity, in that
column order. PWC is a percentage. Degenerate denominators follow the
empty-frame convention documented on :func:`compute_metrics`.
"""

from __future__ import annotations

import csv
import json
from dataclasses import dataclass
from pathlib import Path
from typing import Iterable, Sequence

import numpy as np

from .errors import DataError, EmptyEvaluationError
from .sequence_io import IGNORE, UNKNOWN, atomic_write_bytes

COLUMNS = ("FM", "PWC", "Recall", "Precision", "FPR", "FNR", "Sp")


@dataclass(frozen=True)
class ConfusionCounts:
    tp: int = 0
    fp: int = 0
    fn: int = 0
    tn: int = 0

    @property
    def total(self) -> int:
        return self.tp + self.fp + self.fn + self.tn

    def __add__(self, other: "ConfusionCounts") -> "ConfusionCounts":
        return ConfusionCounts(
            self.tp + other.tp, self.fp + other.fp,
            self.fn + other.fn, self.tn + other.tn,
        )


@dataclass(frozen=True)
class MetricReport:
    fm: float
    pwc: float
    recall: float
    precision: float
    fpr: float
    fnr: float
    sp: float

    def as_row(self) -> list[float]:
        return [self.fm, self.pwc, self.recall, self.precision, self.fpr, self.fnr, self.sp]

    def as_dict(self) -> dict[str, float]:
        return dict(zip(COLUMNS, self.as_row()))

    @classmethod
    def from_dict(cls, d: dict) -> "MetricReport":
        return cls(*(float(d[c]) for c in COLUMNS))


def binarize(prob_map: np.ndarray, threshold: float = 0.5) -> np.ndarray:
    """Threshold a probability map: strictly above goes to 1, a tie at the
    threshold goes to background."""
    prob = np.asarray(prob_map)
    if prob.size and (prob.min() < 0.0 or prob.max() > 1.0):
        bad = prob.min() if prob.min() < 0.0 else prob.max()
        raise DataError(f"probability value {bad} outside [0, 1]")
    return (prob > threshold).astype(np.uint8)


def confusion(
    pred: np.ndarray, gt: np.ndarray, weight: np.ndarray | None = None
) -> ConfusionCounts:
    """Count TP/FP/FN/TN over all counted pixels.

    Ground truth may be binary {0,1} or the 4-value mask encoding; IGNORE and
    UNKNOWN pixels are excluded, as is anything zeroed in ``weight``.
    Prediction foreground is any nonzero value.
    """
    pred = np.asarray(pred)
    gt = np.asarray(gt)
    if pred.shape != gt.shape:
        raise DataError(f"shape mismatch: pred {pred.shape} vs gt {gt.shape}")
    counted = (gt != IGNORE) & (gt != UNKNOWN)
    if weight is not None:
        if weight.shape != gt.shape:
            raise DataError(f"shape mismatch: weight {weight.shape} vs gt {gt.shape}")
        counted &= weight > 0
    gt_fg = (gt == 255) | (gt == 1)
    pred_fg = pred > 0
    tp = int(np.count_nonzero(counted & gt_fg & pred_fg))
    fp = int(np.count_nonzero(counted & ~gt_fg & pred_fg))
    fn = int(np.count_nonzero(counted & gt_fg & ~pred_fg))
    tn = int(np.count_nonzero(counted & ~gt_fg & ~pred_fg))
    return ConfusionCounts(tp=tp, fp=fp, fn=fn, tn=tn)


def compute_metrics(c: ConfusionCounts) -> MetricReport:
    """FM, PWC (percent), Recall, Precision, FPR, FNR, Sp from raw counts.

    Degenerate cases: with no positives anywhere (gt or pred) precision,
    recall and FM are all 1; with gt positives but an empty prediction,
    precision is 0. FNR and Sp are computed as exact complements of Recall
    and FPR, which matches their count formulas to within one rounding step.
    """
    if min(c.tp, c.fp, c.fn, c.tn) < 0:
        raise DataError(f"negative confusion count: {c}")
    if c.total == 0:
        raise EmptyEvaluationError("confusion counts are all zero")
    pos = c.tp + c.fn
    neg = c.tn + c.fp
    recall = c.tp / pos if pos else 1.0
    if c.tp + c.fp:
        precision = c.tp / (c.tp + c.fp)
    else:
        precision = 1.0 if pos == 0 else 0.0
    fm = 2.0 * precision * recall / (precision + recall) if precision + recall else 0.0
    fpr = c.fp / neg if neg else 0.0
    pwc = 100.0 * (c.fp + c.fn) / c.total
    return MetricReport(fm=fm, pwc=pwc, recall=recall, precision=precision,
                        fpr=fpr, fnr=1.0 - recall, sp=1.0 - fpr)


def aggregate(reports: Sequence[MetricReport]) -> MetricReport:
    """Unweighted arithmetic mean of each metric over scenes."""
    if not reports:
        raise DataError("cannot aggregate an empty report list")
    rows = np.array([r.as_row() for r in reports], dtype=np.float64)
    return MetricReport(*rows.mean(axis=0))


def aggregate_by_category(
    rows: Iterable[tuple[str, MetricReport]]
) -> dict[str, MetricReport]:
    """Mean per category; key \"\" groups rows without a category."""
    groups: dict[str, list[MetricReport]] = {}
    for category, report in rows:
        groups.setdefault(category or "", []).append(report)
    if not groups:
        raise DataError("cannot aggregate an empty report list")
    return {cat: aggregate(reps) for cat, reps in sorted(groups.items())}


def write_report_csv(path: str | Path, rows: list[tuple[str, MetricReport]],
                     extra_rows: list[tuple[str, MetricReport]] | None = None) -> None:
    """One CSV row per scene plus aggregate rows, fixed column order."""
    import io

    buf = io.StringIO()
    writer = csv.writer(buf)
    writer.writerow(("Scene",) + COLUMNS)
    for label, report in rows:
        writer.writerow([label] + [f"{v:.6f}" for v in report.as_row()])
    for label, report in extra_rows or []:
        writer.writerow([label] + [f"{v:.6f}" for v in report.as_row()])
    atomic_write_bytes(Path(path), buf.getvalue().encode())


def write_report_json(path: str | Path, rows: list[tuple[str, MetricReport]],
                      extra_rows: list[tuple[str, MetricReport]] | None = None,
                      categories: dict[str, str] | None = None) -> None:
    doc = {
        "columns": list(COLUMNS),
        "scenes": {label: report.as_dict() for label, report in rows},
        "aggregates": {label: report.as_dict() for label, report in extra_rows or []},
    }
    if categories:
        doc["categories"] = categories
    atomic_write_bytes(Path(path), json.dumps(doc, indent=2).encode())

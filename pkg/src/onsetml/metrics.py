"""Confusion matrices, accuracy, the two AUC variants, timing and rendering.

Two AUC-named metrics are kept strictly apart:

* ``precision_auc`` -- TP / (TP + FP), i.e. precision; carried for
  comparability with legacy reports that published this quantity as "AUC".
* ``roc_auc`` -- the rank-based probability that a random positive outscores
  a random negative, ties counting one half.

Undefined metrics are ``None`` (serialized as JSON null), never 0.
"""

from __future__ import annotations

import json
import time
from contextlib import contextmanager
from dataclasses import dataclass, field
from typing import Optional

import numpy as np

from .errors import DataError

__all__ = [
    "ConfusionMatrix",
    "TimingReport",
    "EvaluationReport",
    "confusion",
    "accuracy",
    "precision_auc",
    "roc_auc",
    "capture_timing",
    "render_report",
    "REPORT_SCHEMA_VERSION",
]

REPORT_SCHEMA_VERSION = 1


@dataclass(frozen=True)
class ConfusionMatrix:
    tp: int
    tn: int
    fp: int
    fn: int

    def __post_init__(self):
        for name in ("tp", "tn", "fp", "fn"):
            if getattr(self, name) < 0:
                raise ValueError(f"{name} must be non-negative")

    @property
    def total(self) -> int:
        return self.tp + self.tn + self.fp + self.fn

    def to_dict(self) -> dict:
        return {"tp": self.tp, "tn": self.tn, "fp": self.fp, "fn": self.fn}


@dataclass
class TimingReport:
    """Wall-clock milliseconds per phase plus the trainer's epoch count.

    Durations are observational: they are reported, never asserted, and are
    excluded from canonical JSON so reports stay byte-reproducible.
    """

    phases_ms: dict[str, float] = field(default_factory=dict)
    epochs_elapsed: Optional[int] = None

    def total_ms(self) -> float:
        return sum(self.phases_ms.values())


@contextmanager
def capture_timing(report: TimingReport, phase: str):
    """Record the monotonic wall time of the enclosed block under ``phase``."""
    start = time.perf_counter()
    try:
        yield report
    finally:
        elapsed_ms = (time.perf_counter() - start) * 1e3
        report.phases_ms[phase] = report.phases_ms.get(phase, 0.0) + elapsed_ms


@dataclass
class EvaluationReport:
    """Metrics for one evaluation; aggregates carry their folds breakdown."""

    confusion: Optional[ConfusionMatrix] = None
    accuracy: Optional[float] = None
    precision_auc: Optional[float] = None
    roc_auc: Optional[float] = None
    fused_objective: Optional[float] = None
    timing: TimingReport = field(default_factory=TimingReport)
    fold_index: Optional[int] = None
    n_samples: Optional[int] = None
    preprocessing: Optional[dict] = None
    folds: Optional[list["EvaluationReport"]] = None
    seed: Optional[int] = None
    config: Optional[dict] = None
    tool_version: Optional[str] = None

    def to_dict(self, include_wall_ms: bool = False) -> dict:
        out: dict = {"schema_version": REPORT_SCHEMA_VERSION}
        out["confusion"] = self.confusion.to_dict() if self.confusion else None
        out["accuracy"] = self.accuracy
        out["precision_auc"] = self.precision_auc
        out["roc_auc"] = self.roc_auc
        out["fused_objective"] = self.fused_objective
        out["n_samples"] = self.n_samples
        out["fold_index"] = self.fold_index
        out["epochs_elapsed"] = self.timing.epochs_elapsed
        if include_wall_ms:
            out["wall_ms"] = dict(sorted(self.timing.phases_ms.items()))
        if self.preprocessing is not None:
            out["preprocessing"] = self.preprocessing
        if self.folds is not None:
            out["folds"] = [f.to_dict(include_wall_ms) for f in self.folds]
        if self.seed is not None:
            out["seed"] = self.seed
        if self.config is not None:
            out["config"] = self.config
        if self.tool_version is not None:
            out["tool_version"] = self.tool_version
        return out


def confusion(predictions, labels) -> ConfusionMatrix:
    """Standard 2x2 cross-tabulation with 1 as the positive class."""
    p = np.asarray(predictions, dtype=np.int64)
    y = np.asarray(labels, dtype=np.int64)
    if p.shape != y.shape:
        raise DataError(f"length mismatch: {p.shape} vs {y.shape}")
    if p.size == 0:
        raise DataError("cannot tabulate an empty prediction set")
    return ConfusionMatrix(
        tp=int(((p == 1) & (y == 1)).sum()),
        tn=int(((p == 0) & (y == 0)).sum()),
        fp=int(((p == 1) & (y == 0)).sum()),
        fn=int(((p == 0) & (y == 1)).sum()),
    )


def accuracy(c: ConfusionMatrix) -> float:
    """(TP + TN) / total."""
    if c.total == 0:
        raise DataError("accuracy undefined for an empty confusion matrix")
    return (c.tp + c.tn) / c.total


def precision_auc(c: ConfusionMatrix) -> Optional[float]:
    """TP / (TP + FP); None when no positive predictions exist."""
    denominator = c.tp + c.fp
    if denominator == 0:
        return None
    return c.tp / denominator


def roc_auc(scores, labels) -> Optional[float]:
    """Mann-Whitney AUC via midranks; None when either class is empty.

    Equals the probability that a uniformly random positive's score exceeds
    a random negative's, ties counting one half.
    """
    s = np.asarray(scores, dtype=np.float64)
    y = np.asarray(labels, dtype=np.int64)
    if s.shape != y.shape:
        raise DataError(f"length mismatch: {s.shape} vs {y.shape}")
    n_pos = int((y == 1).sum())
    n_neg = int((y == 0).sum())
    if n_pos == 0 or n_neg == 0:
        return None
    order = np.argsort(s, kind="mergesort")
    ranks = np.empty(s.size, dtype=np.float64)
    sorted_scores = s[order]
    i = 0
    while i < s.size:
        j = i
        while j + 1 < s.size and sorted_scores[j + 1] == sorted_scores[i]:
            j += 1
        ranks[order[i : j + 1]] = 0.5 * (i + j) + 1.0  # average 1-based rank
        i = j + 1
    rank_sum_pos = float(ranks[y == 1].sum())
    u = rank_sum_pos - n_pos * (n_pos + 1) / 2.0
    return u / (n_pos * n_neg)


def _fmt_pct(x: Optional[float]) -> str:
    return f"{100.0 * x:.2f}%" if x is not None else "undefined"


def _fmt_val(x: Optional[float]) -> str:
    return f"{x:.4f}" if x is not None else "undefined"


def render_report(
    report: EvaluationReport, format: str = "json", include_wall_ms: bool = False
) -> str:
    """Serialize a report.

    ``json`` is canonical: sorted keys, fixed separators, trailing newline;
    parse -> re-render is byte-identical. Wall-clock milliseconds are
    excluded unless ``include_wall_ms`` is set, keeping the canonical form
    reproducible across runs. ``table`` is the human view and always shows
    timing.
    """
    if format == "json":
        return (
            json.dumps(
                report.to_dict(include_wall_ms=include_wall_ms),
                sort_keys=True,
                indent=2,
                allow_nan=False,
            )
            + "\n"
        )
    if format != "table":
        raise ValueError(f"unknown report format {format!r}")

    header = (
        f"{'Stage':<12} {'Accuracy':>10} {'Precision-AUC':>14} "
        f"{'ROC-AUC':>10} {'Epochs':>7} {'Time (ms)':>10}"
    )
    lines = [header, "-" * len(header)]

    def row(label: str, r: EvaluationReport):
        epochs = r.timing.epochs_elapsed
        lines.append(
            f"{label:<12} {_fmt_pct(r.accuracy):>10} "
            f"{_fmt_val(r.precision_auc):>14} {_fmt_val(r.roc_auc):>10} "
            f"{epochs if epochs is not None else '-':>7} "
            f"{r.timing.total_ms():>10.1f}"
        )

    if report.folds:
        for fold in report.folds:
            row(f"fold {fold.fold_index}", fold)
    row("aggregate" if report.folds else "overall", report)
    return "\n".join(lines) + "\n"

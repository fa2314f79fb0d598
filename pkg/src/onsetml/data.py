"""Dataset ingestion, preprocessing and deterministic splitting.

All randomness goes through ``numpy.random.RandomState`` (Mersenne Twister),
whose output stream is frozen by numpy's backward-compatibility policy, so
splits, folds and synthetic datasets reproduce bit-exactly for a given seed.
"""

from __future__ import annotations

import csv
from dataclasses import dataclass
from pathlib import Path
from typing import Sequence

import numpy as np

from .errors import DataError

__all__ = [
    "FeatureMatrix",
    "ColumnStats",
    "DatasetSummary",
    "SplitSpec",
    "FoldAssignment",
    "Standardization",
    "load_csv",
    "summarize",
    "compute_imputation_medians",
    "apply_imputation",
    "impute_missing",
    "fit_standardization",
    "apply_standardization",
    "standardize",
    "stratified_split",
    "make_folds",
    "synth_dataset",
]


@dataclass(frozen=True)
class FeatureMatrix:
    """Numeric sample table: ``values`` (n_samples x n_features) plus binary labels.

    Arrays are made read-only on construction; instances are safe to share
    across threads.
    """

    values: np.ndarray
    labels: np.ndarray
    column_names: tuple[str, ...]

    def __post_init__(self):
        values = np.ascontiguousarray(self.values, dtype=np.float64)
        labels = np.ascontiguousarray(self.labels, dtype=np.int64)
        if values.ndim != 2:
            raise DataError("feature values must be a 2-D array")
        if values.shape[0] != labels.shape[0]:
            raise DataError(
                f"row count {values.shape[0]} does not match "
                f"label count {labels.shape[0]}"
            )
        if labels.size and not np.isin(labels, (0, 1)).all():
            bad = labels[~np.isin(labels, (0, 1))][0]
            raise DataError(f"labels must be 0 or 1, found {bad}")
        if len(self.column_names) != values.shape[1]:
            raise DataError("column_names length does not match feature count")
        values.setflags(write=False)
        labels.setflags(write=False)
        object.__setattr__(self, "values", values)
        object.__setattr__(self, "labels", labels)
        object.__setattr__(self, "column_names", tuple(self.column_names))

    @property
    def n_samples(self) -> int:
        return self.values.shape[0]

    @property
    def n_features(self) -> int:
        return self.values.shape[1]

    def take(self, indices) -> "FeatureMatrix":
        """Row subset, preserving column names."""
        idx = np.asarray(indices, dtype=np.int64)
        return FeatureMatrix(self.values[idx], self.labels[idx], self.column_names)

    def select_columns(self, columns: Sequence[int | str]) -> "FeatureMatrix":
        """Column subset by name or index, in the given order."""
        idx = [self.resolve_column(c) for c in columns]
        names = tuple(self.column_names[i] for i in idx)
        return FeatureMatrix(self.values[:, idx], self.labels, names)

    def resolve_column(self, column: int | str) -> int:
        if isinstance(column, str):
            try:
                return self.column_names.index(column)
            except ValueError:
                raise DataError(f"unknown column {column!r}") from None
        i = int(column)
        if not 0 <= i < self.n_features:
            raise DataError(f"column index {i} out of range [0, {self.n_features})")
        return i


@dataclass(frozen=True)
class ColumnStats:
    name: str
    minimum: float
    maximum: float
    mean: float
    missing_count: int


@dataclass(frozen=True)
class DatasetSummary:
    n_samples: int
    n_features: int
    n_positive: int
    n_negative: int
    columns: tuple[ColumnStats, ...]


@dataclass(frozen=True)
class SplitSpec:
    """Train/test split parameters. ``train_fraction`` is the training share."""

    train_fraction: float = 0.7
    seed: int = 42
    stratified: bool = True

    def __post_init__(self):
        if not 0.0 < self.train_fraction < 1.0:
            raise DataError(
                f"train_fraction must lie strictly in (0, 1), got {self.train_fraction}"
            )
        if self.seed < 0:
            raise DataError("seed must be a non-negative integer")


@dataclass(frozen=True)
class FoldAssignment:
    """Per-sample fold index in [0, k); folds are stratified and near-equal."""

    fold_index: np.ndarray
    k: int

    def __post_init__(self):
        idx = np.ascontiguousarray(self.fold_index, dtype=np.int64)
        if self.k < 2:
            raise DataError("fold count must be at least 2")
        if idx.min(initial=0) < 0 or (idx.size and idx.max() >= self.k):
            raise DataError("fold indices must lie in [0, k)")
        counts = np.bincount(idx, minlength=self.k)
        if (counts == 0).any():
            raise DataError("every fold must be non-empty")
        idx.setflags(write=False)
        object.__setattr__(self, "fold_index", idx)

    def test_indices(self, fold: int) -> np.ndarray:
        return np.flatnonzero(self.fold_index == fold)

    def train_indices(self, fold: int) -> np.ndarray:
        return np.flatnonzero(self.fold_index != fold)


@dataclass(frozen=True)
class Standardization:
    """Per-column affine statistics, reusable on unseen data."""

    mean: np.ndarray
    scale: np.ndarray

    def __post_init__(self):
        mean = np.ascontiguousarray(self.mean, dtype=np.float64)
        scale = np.ascontiguousarray(self.scale, dtype=np.float64)
        mean.setflags(write=False)
        scale.setflags(write=False)
        object.__setattr__(self, "mean", mean)
        object.__setattr__(self, "scale", scale)


def load_csv(path, has_header: bool = True) -> FeatureMatrix:
    """Read a comma-delimited dataset: feature columns followed by a 0/1 label.

    Column names come from the header row when present, otherwise they are
    synthesized as ``col_0 .. col_{n-1}``.
    """
    path = Path(path)
    if not path.exists():
        raise DataError(f"no such file: {path}")
    with path.open(newline="") as fh:
        reader = csv.reader(fh)
        rows = [row for row in reader if row and any(cell.strip() for cell in row)]
    if has_header and rows:
        header = [cell.strip() for cell in rows[0]]
        rows = rows[1:]
    else:
        header = None
    if not rows:
        raise DataError(f"empty dataset: {path}")

    width = len(rows[0])
    if width < 2:
        raise DataError(f"{path}: rows need at least one feature and a label column")
    values = np.empty((len(rows), width - 1), dtype=np.float64)
    labels = np.empty(len(rows), dtype=np.int64)
    for r, row in enumerate(rows):
        if len(row) != width:
            raise DataError(
                f"{path}: ragged row {r}: expected {width} columns, found {len(row)}"
            )
        for c, cell in enumerate(row):
            try:
                x = float(cell)
            except ValueError:
                raise DataError(
                    f"{path}: non-numeric cell at row {r}, column {c}: {cell!r}"
                ) from None
            if not np.isfinite(x):
                raise DataError(
                    f"{path}: non-finite value at row {r}, column {c}: {cell!r}"
                )
            if c == width - 1:
                if x not in (0.0, 1.0):
                    raise DataError(
                        f"{path}: label outside {{0,1}} at row {r}: {cell!r}"
                    )
                labels[r] = int(x)
            else:
                values[r, c] = x
    if header is not None:
        names = tuple(header[:-1])
    else:
        names = tuple(f"col_{i}" for i in range(width - 1))
    return FeatureMatrix(values, labels, names)


def summarize(
    m: FeatureMatrix, zero_as_missing_columns: Sequence[int | str] = ()
) -> DatasetSummary:
    """Counts plus per-column min/max/mean and missing-cell counts.

    A cell counts as missing when it is zero and its column is listed in
    ``zero_as_missing_columns``.
    """
    if m.n_samples == 0:
        raise DataError("cannot summarize an empty dataset")
    flagged = {m.resolve_column(c) for c in zero_as_missing_columns}
    n_pos = int(m.labels.sum())
    cols = []
    for j, name in enumerate(m.column_names):
        col = m.values[:, j]
        missing = int((col == 0.0).sum()) if j in flagged else 0
        cols.append(
            ColumnStats(
                name=name,
                minimum=float(col.min()),
                maximum=float(col.max()),
                mean=float(col.mean()),
                missing_count=missing,
            )
        )
    return DatasetSummary(
        n_samples=m.n_samples,
        n_features=m.n_features,
        n_positive=n_pos,
        n_negative=m.n_samples - n_pos,
        columns=tuple(cols),
    )


def compute_imputation_medians(
    m: FeatureMatrix, zero_as_missing_columns: Sequence[int | str]
) -> dict[int, float]:
    """Median of the non-zero entries for each flagged column."""
    medians: dict[int, float] = {}
    for c in zero_as_missing_columns:
        j = m.resolve_column(c)
        nonzero = m.values[:, j][m.values[:, j] != 0.0]
        if nonzero.size == 0:
            raise DataError(
                f"column {m.column_names[j]!r} is entirely zero; no median exists"
            )
        medians[j] = float(np.median(nonzero))
    return medians


def apply_imputation(m: FeatureMatrix, medians: dict[int, float]) -> FeatureMatrix:
    """Replace zeros in the flagged columns by the provided medians."""
    if not medians:
        return m
    values = m.values.copy()
    for j, med in medians.items():
        col = values[:, j]
        col[col == 0.0] = med
    return FeatureMatrix(values, m.labels, m.column_names)


def impute_missing(
    m: FeatureMatrix, zero_as_missing_columns: Sequence[int | str]
) -> FeatureMatrix:
    """Fit medians on ``m`` itself and apply them (training-time convenience)."""
    return apply_imputation(m, compute_imputation_medians(m, zero_as_missing_columns))


def fit_standardization(m: FeatureMatrix) -> Standardization:
    """Per-column mean and population standard deviation (constant columns -> scale 1)."""
    if m.n_samples == 0:
        raise DataError("cannot standardize an empty dataset")
    mean = m.values.mean(axis=0)
    scale = m.values.std(axis=0)  # population (divide by N)
    scale = np.where(scale == 0.0, 1.0, scale)
    return Standardization(mean=mean, scale=scale)


def apply_standardization(m: FeatureMatrix, stats: Standardization) -> FeatureMatrix:
    values = (m.values - stats.mean) / stats.scale
    return FeatureMatrix(values, m.labels, m.column_names)


def standardize(m: FeatureMatrix) -> tuple[FeatureMatrix, Standardization]:
    """Standardize ``m`` in place of its own statistics; returns both."""
    stats = fit_standardization(m)
    return apply_standardization(m, stats), stats


def _per_class_indices(labels: np.ndarray) -> dict[int, np.ndarray]:
    return {cls: np.flatnonzero(labels == cls) for cls in (0, 1)}


def stratified_split(
    m: FeatureMatrix, spec: SplitSpec
) -> tuple[FeatureMatrix, FeatureMatrix]:
    """Deterministic class-preserving split into (train, test).

    Each class contributes round(train_fraction * n_class) rows to the
    training side (half-up rounding), clamped so both sides keep at least
    one member of every class.
    """
    rng = np.random.RandomState(spec.seed)
    for cls, idx in sorted(_per_class_indices(m.labels).items()):
        if idx.size < 2:
            raise DataError(
                f"class {cls} has {idx.size} member(s); need at least 2 to split"
            )
    if spec.stratified:
        train_parts: list[np.ndarray] = []
        test_parts: list[np.ndarray] = []
        for cls, idx in sorted(_per_class_indices(m.labels).items()):
            perm = idx[rng.permutation(idx.size)]
            n_train = int(np.floor(spec.train_fraction * idx.size + 0.5))
            n_train = min(max(n_train, 1), idx.size - 1)
            train_parts.append(perm[:n_train])
            test_parts.append(perm[n_train:])
        train = np.sort(np.concatenate(train_parts))
        test = np.sort(np.concatenate(test_parts))
    else:
        perm = rng.permutation(m.n_samples)
        n_train = int(np.floor(spec.train_fraction * m.n_samples + 0.5))
        n_train = min(max(n_train, 1), m.n_samples - 1)
        train = np.sort(perm[:n_train])
        test = np.sort(perm[n_train:])
    return m.take(train), m.take(test)


def make_folds(m: FeatureMatrix, k: int = 5, seed: int = 42) -> FoldAssignment:
    """Stratified k-fold assignment; per-class fold sizes differ by at most 1."""
    if k < 2:
        raise DataError(f"fold count must be at least 2, got {k}")
    rng = np.random.RandomState(seed)
    fold_index = np.full(m.n_samples, -1, dtype=np.int64)
    for cls, idx in sorted(_per_class_indices(m.labels).items()):
        if idx.size < k:
            raise DataError(
                f"class {cls} has {idx.size} member(s); cannot build {k} folds"
            )
        perm = idx[rng.permutation(idx.size)]
        fold_index[perm] = np.arange(perm.size) % k
    return FoldAssignment(fold_index=fold_index, k=k)


def synth_dataset(
    n: int,
    n_features: int,
    positive_fraction: float = 0.5,
    separation: float = 2.0,
    seed: int = 42,
) -> FeatureMatrix:
    """Two unit-variance Gaussian clouds whose means are ``separation`` apart.

    Deterministic for a fixed seed; rows are shuffled so classes interleave.
    """
    if n < 4:
        raise DataError(f"need at least 4 samples, got {n}")
    if not 0.0 < positive_fraction < 1.0:
        raise DataError("positive_fraction must lie strictly in (0, 1)")
    if n_features < 1:
        raise DataError("need at least one feature")
    rng = np.random.RandomState(seed)
    n_pos = int(np.floor(positive_fraction * n + 0.5))
    n_pos = min(max(n_pos, 1), n - 1)
    direction = np.ones(n_features) / np.sqrt(n_features)
    offset = 0.5 * separation * direction
    values = rng.standard_normal((n, n_features))
    labels = np.zeros(n, dtype=np.int64)
    labels[:n_pos] = 1
    values[:n_pos] += offset
    values[n_pos:] -= offset
    perm = rng.permutation(n)
    names = tuple(f"f{i}" for i in range(n_features))
    return FeatureMatrix(values[perm], labels[perm], names)

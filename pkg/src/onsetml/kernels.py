"""Kernel functions and Gram-matrix construction."""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

__all__ = [
    "KernelSpec",
    "default_sigma",
    "rbf_kernel",
    "linear_kernel",
    "gram_matrix",
    "cross_gram",
]


@dataclass(frozen=True)
class KernelSpec:
    """Kernel choice: ``kind`` in {"linear", "rbf"}; ``sigma`` is the RBF width."""

    kind: str = "rbf"
    sigma: float = 1.0

    def __post_init__(self):
        if self.kind not in ("linear", "rbf"):
            raise ValueError(f"unknown kernel kind {self.kind!r}")
        if self.kind == "rbf" and not self.sigma > 0.0:
            raise ValueError(f"rbf kernel needs sigma > 0, got {self.sigma}")


def default_sigma(n_features: int) -> float:
    """Width heuristic sqrt(d/2): unit exponent coefficient 1/d on squared
    distances of standardized features."""
    return math.sqrt(n_features / 2.0)


def _check_pair(s, s1) -> tuple[np.ndarray, np.ndarray]:
    s = np.asarray(s, dtype=np.float64)
    s1 = np.asarray(s1, dtype=np.float64)
    if s.shape != s1.shape:
        raise ValueError(f"vector length mismatch: {s.shape} vs {s1.shape}")
    return s, s1


def rbf_kernel(s, s1, sigma: float) -> float:
    """exp(-||s - s1||^2 / (2 sigma^2)); equals 1 exactly iff s == s1."""
    if not sigma > 0.0:
        raise ValueError(f"sigma must be positive, got {sigma}")
    s, s1 = _check_pair(s, s1)
    d = s - s1
    return float(np.exp(-np.dot(d, d) / (2.0 * sigma * sigma)))


def linear_kernel(s, s1) -> float:
    """Plain dot product."""
    s, s1 = _check_pair(s, s1)
    return float(np.dot(s, s1))


def _as_rows(rows) -> np.ndarray:
    values = getattr(rows, "values", rows)
    X = np.asarray(values, dtype=np.float64)
    if X.ndim != 2 or X.shape[0] == 0:
        raise ValueError("need a non-empty 2-D row matrix")
    return X


def gram_matrix(rows, spec: KernelSpec) -> np.ndarray:
    """Pairwise kernel matrix, exactly symmetric by construction.

    The lower triangle is mirrored from the upper one bit-for-bit, and the
    RBF diagonal is pinned to 1.
    """
    X = _as_rows(rows)
    if spec.kind == "linear":
        G = X @ X.T
    else:
        sq = np.einsum("ij,ij->i", X, X)
        d2 = sq[:, None] + sq[None, :] - 2.0 * (X @ X.T)
        np.maximum(d2, 0.0, out=d2)
        G = np.exp(-d2 / (2.0 * spec.sigma * spec.sigma))
        np.fill_diagonal(G, 1.0)
    upper = np.triu(G)
    G = upper + np.triu(G, 1).T
    return G


def cross_gram(rows, other, spec: KernelSpec) -> np.ndarray:
    """Kernel values between two row sets: result[i, j] = k(rows_i, other_j)."""
    X = _as_rows(rows)
    Z = _as_rows(other)
    if X.shape[1] != Z.shape[1]:
        raise ValueError(
            f"feature width mismatch: {X.shape[1]} vs {Z.shape[1]}"
        )
    if spec.kind == "linear":
        return X @ Z.T
    sx = np.einsum("ij,ij->i", X, X)
    sz = np.einsum("ij,ij->i", Z, Z)
    d2 = sx[:, None] + sz[None, :] - 2.0 * (X @ Z.T)
    np.maximum(d2, 0.0, out=d2)
    return np.exp(-d2 / (2.0 * spec.sigma * spec.sigma))

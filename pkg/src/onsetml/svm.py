"""SVM trainers: a sparse-balanced linear baseline and the RBF-kernel dual solver.

Labels are {0, 1} at the API boundary and mapped to {-1, +1} internally.
Both trainers are deterministic: fixed iteration order, no randomness.
"""

from __future__ import annotations

import warnings
from dataclasses import dataclass
from typing import Optional

import numpy as np

from . import _core
from .data import FeatureMatrix
from .errors import TrainingError
from .kernels import KernelSpec, cross_gram, gram_matrix

__all__ = [
    "SvmTrainConfig",
    "SvmModel",
    "TrainingDiagnostics",
    "train_sb_svm",
    "train_rbf_svm",
    "decision_value",
    "decision_values",
    "predict_label",
    "predict_labels",
]


@dataclass(frozen=True)
class SvmTrainConfig:
    """Shared trainer knobs.

    ``max_passes`` bounds solver iterations and defaults to 100 * n_samples.
    ``class_balance`` None picks the trainer default: on for the linear
    baseline, off for the kernel model.
    """

    C: float = 1.0
    tolerance: float = 1e-3
    max_passes: Optional[int] = None
    l1_lambda: float = 0.0
    class_balance: Optional[bool] = None

    def __post_init__(self):
        if not self.C > 0.0:
            raise ValueError(f"C must be positive, got {self.C}")
        if not self.tolerance > 0.0:
            raise ValueError(f"tolerance must be positive, got {self.tolerance}")
        if self.max_passes is not None and self.max_passes < 1:
            raise ValueError("max_passes must be at least 1")
        if self.l1_lambda < 0.0:
            raise ValueError("l1_lambda must be non-negative")

    def iteration_cap(self, n_samples: int) -> int:
        return self.max_passes if self.max_passes is not None else 100 * n_samples


@dataclass(frozen=True)
class SvmModel:
    """Trained state: kernel expansion plus optional primal weights.

    ``support_coefficients[i]`` is alpha_i * y_i for the retained row
    ``support_rows[i]``; linear baseline models keep these empty and carry
    ``primal_weights`` instead.
    """

    support_coefficients: np.ndarray
    bias: float
    kernel: KernelSpec
    box_constraint: float
    support_rows: np.ndarray
    primal_weights: Optional[np.ndarray] = None

    def __post_init__(self):
        coef = np.ascontiguousarray(self.support_coefficients, dtype=np.float64)
        rows = np.ascontiguousarray(self.support_rows, dtype=np.float64)
        if rows.ndim != 2:
            raise ValueError("support_rows must be 2-D")
        if coef.shape[0] != rows.shape[0]:
            raise ValueError("support_coefficients and support_rows disagree in length")
        coef.setflags(write=False)
        rows.setflags(write=False)
        object.__setattr__(self, "support_coefficients", coef)
        object.__setattr__(self, "support_rows", rows)
        if self.primal_weights is not None:
            w = np.ascontiguousarray(self.primal_weights, dtype=np.float64)
            w.setflags(write=False)
            object.__setattr__(self, "primal_weights", w)

    @property
    def n_features(self) -> int:
        if self.primal_weights is not None:
            return self.primal_weights.shape[0]
        return self.support_rows.shape[1]


@dataclass(frozen=True)
class TrainingDiagnostics:
    """Per-run evidence: final slacks, objective, iteration count.

    ``objective_trace`` (when present) is the best objective seen up to each
    checkpoint, so it is non-increasing by construction.
    """

    slacks: np.ndarray
    objective_value: float
    iterations: int
    converged: bool = True
    objective_trace: Optional[tuple[float, ...]] = None


def _signed_labels(m: FeatureMatrix) -> np.ndarray:
    y = m.labels.astype(np.float64)
    n_pos = int(m.labels.sum())
    if n_pos == 0 or n_pos == m.n_samples:
        raise TrainingError("training data contains a single class")
    return 2.0 * y - 1.0


def _class_weights(labels: np.ndarray) -> np.ndarray:
    n = labels.shape[0]
    n_pos = int(labels.sum())
    n_neg = n - n_pos
    w = np.where(labels == 1, n / (2.0 * n_pos), n / (2.0 * n_neg))
    return w


def _check_finite(m: FeatureMatrix):
    if not np.isfinite(m.values).all():
        raise TrainingError("features contain NaN or infinite values")


def train_sb_svm(
    train: FeatureMatrix, cfg: SvmTrainConfig
) -> tuple[SvmModel, TrainingDiagnostics]:
    """Linear baseline: squared-norm + class-weighted hinge + optional L1.

    Proximal subgradient descent with step 1/(t+1); the soft-threshold step
    handles the L1 term so weights hit exact zeros. The best iterate by full
    objective is returned, making the recorded objective trace monotone.
    """
    _check_finite(train)
    y = _signed_labels(train)
    X = train.values
    n, d = X.shape
    balance = cfg.class_balance if cfg.class_balance is not None else True
    cw = _class_weights(train.labels) if balance else np.ones(n)
    cwy = cw * y

    steps = cfg.iteration_cap(n)
    w = np.zeros(d)
    b = 0.0

    def objective(w, b):
        margins = y * (X @ w + b)
        hinge = np.maximum(0.0, 1.0 - margins)
        return (
            0.5 * float(w @ w)
            + cfg.C * float(cw @ hinge)
            + cfg.l1_lambda * float(np.abs(w).sum())
        )

    best_w, best_b = w.copy(), b
    best_obj = objective(w, b)
    trace = [best_obj]
    checkpoint = max(1, steps // 256)

    for t in range(steps):
        margins = y * (X @ w + b)
        active = margins < 1.0
        coef = np.where(active, cwy, 0.0)
        grad_w = w - cfg.C * (coef @ X)
        grad_b = -cfg.C * float(coef.sum())
        eta = 1.0 / (t + 1.0)
        w = w - eta * grad_w
        if cfg.l1_lambda > 0.0:
            w = np.sign(w) * np.maximum(np.abs(w) - eta * cfg.l1_lambda, 0.0)
        b = b - eta * grad_b
        obj = objective(w, b)
        if obj < best_obj:
            best_obj = obj
            best_w, best_b = w.copy(), b
        if (t + 1) % checkpoint == 0:
            trace.append(best_obj)

    margins = y * (X @ best_w + best_b)
    slacks = np.maximum(0.0, 1.0 - margins)
    model = SvmModel(
        support_coefficients=np.empty(0),
        bias=float(best_b),
        kernel=KernelSpec(kind="linear"),
        box_constraint=cfg.C,
        support_rows=np.empty((0, d)),
        primal_weights=best_w,
    )
    diag = TrainingDiagnostics(
        slacks=slacks,
        objective_value=best_obj,
        iterations=steps,
        converged=True,
        objective_trace=tuple(trace),
    )
    return model, diag


def train_rbf_svm(
    train: FeatureMatrix, cfg: SvmTrainConfig, kernel: KernelSpec
) -> tuple[SvmModel, TrainingDiagnostics]:
    """Kernelized soft-margin SVM solved in the dual by SMO.

    Stops when no KKT violation exceeds ``cfg.tolerance`` or the iteration
    cap is reached (then the model is still returned, flagged unconverged).
    """
    if kernel.kind != "rbf":
        raise ValueError("train_rbf_svm requires an rbf kernel spec")
    _check_finite(train)
    y = _signed_labels(train)
    X = train.values
    n = X.shape[0]
    balance = cfg.class_balance if cfg.class_balance is not None else False
    box = cfg.C * (_class_weights(train.labels) if balance else np.ones(n))

    K = gram_matrix(X, kernel)
    alpha, bias, errors, iterations, converged = _core.smo_solve(
        K, y, box, cfg.tolerance, cfg.iteration_cap(n)
    )
    if not converged:
        warnings.warn(
            f"SMO stopped after {iterations} updates without reaching "
            f"tolerance {cfg.tolerance}",
            RuntimeWarning,
            stacklevel=2,
        )

    f = errors + y
    slacks = np.maximum(0.0, 1.0 - y * f)
    ay = alpha * y
    dual_objective = float(alpha.sum() - 0.5 * (ay @ K @ ay))

    support = np.flatnonzero(alpha > 0.0)
    model = SvmModel(
        support_coefficients=ay[support],
        bias=float(bias),
        kernel=kernel,
        box_constraint=cfg.C,
        support_rows=X[support],
    )
    diag = TrainingDiagnostics(
        slacks=slacks,
        objective_value=dual_objective,
        iterations=int(iterations),
        converged=bool(converged),
    )
    return model, diag


def decision_values(model: SvmModel, X) -> np.ndarray:
    """f(x) for each row of X: kernel expansion or primal dot product."""
    X = np.atleast_2d(np.asarray(X, dtype=np.float64))
    if X.shape[1] != model.n_features:
        raise ValueError(
            f"feature width mismatch: model expects {model.n_features}, got {X.shape[1]}"
        )
    if model.primal_weights is not None:
        return X @ model.primal_weights + model.bias
    if model.support_rows.shape[0] == 0:
        return np.full(X.shape[0], model.bias)
    K = cross_gram(model.support_rows, X, model.kernel)
    return model.support_coefficients @ K + model.bias


def decision_value(model: SvmModel, x) -> float:
    x = np.asarray(x, dtype=np.float64)
    if x.ndim != 1:
        raise ValueError("decision_value expects a single feature vector")
    return float(decision_values(model, x[None, :])[0])


def predict_labels(model: SvmModel, X) -> np.ndarray:
    """1 where the decision value is strictly positive, else 0 (ties -> 0)."""
    return (decision_values(model, X) > 0.0).astype(np.int64)


def predict_label(model: SvmModel, x) -> int:
    return int(decision_value(model, x) > 0.0)

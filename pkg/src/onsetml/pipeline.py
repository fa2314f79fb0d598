"""End-to-end training pipeline: preprocessing, dual branches, fusion, CV.

Branch A is the RBF-kernel SVM on standardized features; branch B max-pools
each standardized row, encodes it with the LSTM and scores it with the MLP
ensemble. The per-sample score fuses both branches:

    score(x) = fusion_weight * sigmoid(svm_decision(x))
             + (1 - fusion_weight) * ensemble(x)

so both terms live in (0, 1). Preprocessing statistics are always fit on
training rows only and reapplied to held-out data.
"""

from __future__ import annotations

import json
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field, replace
from pathlib import Path
from typing import Optional

import numpy as np

from .data import (
    FeatureMatrix,
    SplitSpec,
    Standardization,
    apply_imputation,
    apply_standardization,
    compute_imputation_medians,
    fit_standardization,
    make_folds,
)
from .errors import DataError
from .kernels import KernelSpec, default_sigma, gram_matrix
from .metrics import (
    ConfusionMatrix,
    EvaluationReport,
    TimingReport,
    accuracy,
    capture_timing,
    confusion,
    precision_auc,
    roc_auc,
)
from .neural import NeuralConfig, NeuralEncoder, LstmLayer, MlpNetwork, train_encoder
from .svm import SvmModel, SvmTrainConfig, decision_values, train_rbf_svm

__all__ = [
    "PipelineConfig",
    "PipelineModel",
    "PIMA_ZERO_AS_MISSING",
    "train_pipeline",
    "combined_score",
    "combined_scores",
    "predict",
    "predict_many",
    "evaluate_model",
    "cross_validate",
    "save_model",
    "load_model",
    "MODEL_FORMAT_VERSION",
]

MODEL_FORMAT_VERSION = 1

# Columns whose zeros are biologically impossible in the Pima schema; used
# as the imputation default whenever the dataset carries these names.
PIMA_ZERO_AS_MISSING = ("Glucose", "BloodPressure", "SkinThickness", "Insulin", "BMI")


@dataclass(frozen=True)
class PipelineConfig:
    """Everything needed to train and evaluate the fused classifier."""

    split: SplitSpec = field(default_factory=SplitSpec)
    folds: int = 5
    svm: SvmTrainConfig = field(default_factory=SvmTrainConfig)
    kernel: Optional[KernelSpec] = None  # None -> rbf with sigma = sqrt(d/2)
    neural: NeuralConfig = field(default_factory=NeuralConfig)
    fusion_weight: float = 0.5
    threshold: float = 0.5
    seed: int = 42
    zero_as_missing: Optional[tuple] = None  # None -> Pima defaults if present
    selected_columns: Optional[tuple] = None

    def __post_init__(self):
        if not 0.0 < self.threshold < 1.0:
            raise ValueError(f"threshold must lie strictly in (0, 1), got {self.threshold}")
        if not 0.0 <= self.fusion_weight <= 1.0:
            raise ValueError("fusion_weight must lie in [0, 1]")
        if self.folds < 2:
            raise ValueError("folds must be at least 2")

    def to_dict(self) -> dict:
        return {
            "split": {
                "train_fraction": self.split.train_fraction,
                "seed": self.split.seed,
                "stratified": self.split.stratified,
            },
            "folds": self.folds,
            "svm": {
                "C": self.svm.C,
                "tolerance": self.svm.tolerance,
                "max_passes": self.svm.max_passes,
                "l1_lambda": self.svm.l1_lambda,
                "class_balance": self.svm.class_balance,
            },
            "kernel": None
            if self.kernel is None
            else {"kind": self.kernel.kind, "sigma": self.kernel.sigma},
            "neural": {
                "hidden_size": self.neural.hidden_size,
                "mlp_hidden": list(self.neural.mlp_hidden),
                "ensemble_size": self.neural.ensemble_size,
                "epochs": self.neural.epochs,
                "learning_rate": self.neural.learning_rate,
                "dropout_rate": self.neural.dropout_rate,
                "pool_window": self.neural.pool_window,
                "pool_stride": self.neural.pool_stride,
            },
            "fusion_weight": self.fusion_weight,
            "threshold": self.threshold,
            "seed": self.seed,
            "zero_as_missing": None
            if self.zero_as_missing is None
            else list(self.zero_as_missing),
            "selected_columns": None
            if self.selected_columns is None
            else list(self.selected_columns),
        }


@dataclass(frozen=True)
class PipelineModel:
    """Fused artifact; every sub-model shares one feature-column contract."""

    column_names: tuple[str, ...]
    imputation_medians: dict[int, float]
    standardization: Standardization
    svm: SvmModel
    encoder: NeuralEncoder
    fusion_weight: float
    threshold: float
    seed: int
    fused_objective: float
    config: dict


def _resolve_zero_as_missing(m: FeatureMatrix, cfg: PipelineConfig) -> list:
    if cfg.zero_as_missing is None:
        return [name for name in PIMA_ZERO_AS_MISSING if name in m.column_names]
    return list(cfg.zero_as_missing)


def _select(m: FeatureMatrix, cfg: PipelineConfig) -> FeatureMatrix:
    if cfg.selected_columns is None:
        return m
    return m.select_columns(list(cfg.selected_columns))


def _sigmoid_scalar(z):
    z = np.asarray(z, dtype=np.float64)
    out = np.empty_like(z)
    pos = z >= 0
    out[pos] = 1.0 / (1.0 + np.exp(-z[pos]))
    ez = np.exp(z[~pos])
    out[~pos] = ez / (1.0 + ez)
    return out


def _similarity_objective(svm_model: SvmModel, X_std: np.ndarray, C: float) -> float:
    """Reporting-only scalar: kernel-space norm plus mean pairwise similarity.

    0.5 * ||w||^2 in the kernel expansion plus C times the sum over rows of
    their mean kernel similarity to the other rows. Never optimized.
    """
    coef = svm_model.support_coefficients
    if coef.size:
        K_ss = gram_matrix(svm_model.support_rows, svm_model.kernel)
        norm_term = 0.5 * float(coef @ K_ss @ coef)
    else:
        norm_term = 0.0
    n = X_std.shape[0]
    if n > 1:
        K = gram_matrix(X_std, svm_model.kernel)
        mean_sim = float((K.sum(axis=1) - 1.0).sum() / (n - 1))
    else:
        mean_sim = 0.0
    return norm_term + C * mean_sim


def train_pipeline(train: FeatureMatrix, cfg: PipelineConfig) -> PipelineModel:
    """Fit preprocessing and both branches on ``train``; deterministic per seed."""
    selected = _select(train, cfg)
    zero_cols = _resolve_zero_as_missing(selected, cfg)
    medians = compute_imputation_medians(selected, zero_cols)
    imputed = apply_imputation(selected, medians)
    stats = fit_standardization(imputed)
    standardized = apply_standardization(imputed, stats)

    kernel = cfg.kernel
    if kernel is None:
        kernel = KernelSpec(kind="rbf", sigma=default_sigma(selected.n_features))
    svm_model, _ = train_rbf_svm(standardized, cfg.svm, kernel)
    encoder, _ = train_encoder(
        standardized.values, standardized.labels, cfg.neural, seed=cfg.seed
    )

    ens_mean = float(encoder.scores(standardized.values).mean())
    fused_objective = (
        _similarity_objective(svm_model, standardized.values, cfg.svm.C) + ens_mean
    )

    return PipelineModel(
        column_names=selected.column_names,
        imputation_medians=medians,
        standardization=stats,
        svm=svm_model,
        encoder=encoder,
        fusion_weight=cfg.fusion_weight,
        threshold=cfg.threshold,
        seed=cfg.seed,
        fused_objective=fused_objective,
        config=cfg.to_dict(),
    )


def _preprocess_rows(model: PipelineModel, X: np.ndarray) -> np.ndarray:
    X = np.atleast_2d(np.asarray(X, dtype=np.float64))
    if X.shape[1] != len(model.column_names):
        raise DataError(
            f"expected {len(model.column_names)} feature columns, got {X.shape[1]}"
        )
    X = X.copy()
    for j, med in model.imputation_medians.items():
        col = X[:, j]
        col[col == 0.0] = med
    return (X - model.standardization.mean) / model.standardization.scale


def combined_scores(model: PipelineModel, X) -> np.ndarray:
    """Fused scores in (0, 1) for raw (pre-preprocessing) feature rows."""
    X_std = _preprocess_rows(model, X)
    svm_part = _sigmoid_scalar(decision_values(model.svm, X_std))
    ens_part = model.encoder.scores(X_std)
    return model.fusion_weight * svm_part + (1.0 - model.fusion_weight) * ens_part


def combined_score(model: PipelineModel, x) -> float:
    x = np.asarray(x, dtype=np.float64)
    if x.ndim != 1:
        raise DataError("combined_score expects a single feature vector")
    return float(combined_scores(model, x[None, :])[0])


def predict_many(model: PipelineModel, X) -> np.ndarray:
    """1 where the fused score reaches the threshold (inclusive), else 0."""
    return (combined_scores(model, X) >= model.threshold).astype(np.int64)


def predict(model: PipelineModel, x) -> int:
    return int(combined_score(model, x) >= model.threshold)


def _match_columns(model: PipelineModel, data: FeatureMatrix) -> FeatureMatrix:
    missing = [c for c in model.column_names if c not in data.column_names]
    if missing:
        raise DataError(f"data is missing model columns: {', '.join(missing)}")
    return data.select_columns(list(model.column_names))


def evaluate_model(
    model: PipelineModel, data: FeatureMatrix, timing: Optional[TimingReport] = None
) -> EvaluationReport:
    """Score labeled rows and assemble the metric report."""
    matched = _match_columns(model, data)
    report = EvaluationReport(timing=timing or TimingReport())
    with capture_timing(report.timing, "evaluate"):
        scores = combined_scores(model, matched.values)
        preds = (scores >= model.threshold).astype(np.int64)
        c = confusion(preds, matched.labels)
        report.confusion = c
        report.accuracy = accuracy(c)
        report.precision_auc = precision_auc(c)
        report.roc_auc = roc_auc(scores, matched.labels)
        report.fused_objective = model.fused_objective
        report.n_samples = matched.n_samples
    return report


def _preprocessing_echo(model: PipelineModel) -> dict:
    return {
        "columns": list(model.column_names),
        "imputation_medians": {
            str(j): med for j, med in sorted(model.imputation_medians.items())
        },
        "mean": model.standardization.mean.tolist(),
        "scale": model.standardization.scale.tolist(),
    }


def _run_fold(data: FeatureMatrix, cfg: PipelineConfig, assignment, fold: int):
    timing = TimingReport(epochs_elapsed=cfg.neural.epochs)
    train = data.take(assignment.train_indices(fold))
    test = data.take(assignment.test_indices(fold))
    fold_cfg = replace(cfg, seed=cfg.seed + fold)
    with capture_timing(timing, "train"):
        model = train_pipeline(train, fold_cfg)
    report = evaluate_model(model, test, timing=timing)
    report.fold_index = fold
    report.preprocessing = _preprocessing_echo(model)
    return report


def cross_validate(
    data: FeatureMatrix, cfg: PipelineConfig, parallel: bool = False
) -> EvaluationReport:
    """Stratified k-fold CV; the aggregate is the unweighted mean of fold metrics.

    Fold seeds derive as seed + fold_index, so results do not depend on
    whether folds run serially or in parallel.
    """
    assignment = make_folds(data, k=cfg.folds, seed=cfg.seed)
    folds = list(range(cfg.folds))
    if parallel:
        with ThreadPoolExecutor(max_workers=min(cfg.folds, 8)) as pool:
            reports = list(
                pool.map(lambda f: _run_fold(data, cfg, assignment, f), folds)
            )
    else:
        reports = [_run_fold(data, cfg, assignment, f) for f in folds]

    def mean_of(metric):
        vals = [getattr(r, metric) for r in reports if getattr(r, metric) is not None]
        return float(np.mean(vals)) if vals else None

    tp = sum(r.confusion.tp for r in reports)
    tn = sum(r.confusion.tn for r in reports)
    fp = sum(r.confusion.fp for r in reports)
    fn = sum(r.confusion.fn for r in reports)

    aggregate = EvaluationReport(
        confusion=ConfusionMatrix(tp=tp, tn=tn, fp=fp, fn=fn),
        accuracy=mean_of("accuracy"),
        precision_auc=mean_of("precision_auc"),
        roc_auc=mean_of("roc_auc"),
        fused_objective=mean_of("fused_objective"),
        timing=TimingReport(
            phases_ms={
                "train": sum(r.timing.phases_ms.get("train", 0.0) for r in reports),
                "evaluate": sum(
                    r.timing.phases_ms.get("evaluate", 0.0) for r in reports
                ),
            },
            epochs_elapsed=cfg.neural.epochs,
        ),
        n_samples=data.n_samples,
        folds=reports,
        seed=cfg.seed,
        config=cfg.to_dict(),
    )
    return aggregate


def _lstm_to_dict(layer: LstmLayer) -> dict:
    return {
        "input_size": layer.input_size,
        "hidden_size": layer.hidden_size,
        "W": layer.W.tolist(),
        "U": layer.U.tolist(),
        "b": layer.b.tolist(),
    }


def _lstm_from_dict(d: dict) -> LstmLayer:
    layer = LstmLayer(d["input_size"], d["hidden_size"], seed=0)
    layer.W = np.asarray(d["W"], dtype=np.float64)
    layer.U = np.asarray(d["U"], dtype=np.float64)
    layer.b = np.asarray(d["b"], dtype=np.float64)
    return layer


def _mlp_to_dict(net: MlpNetwork) -> dict:
    return {
        "sizes": list(net.sizes),
        "weights": [W.tolist() for W in net.weights],
        "biases": [b.tolist() for b in net.biases],
    }


def _mlp_from_dict(d: dict) -> MlpNetwork:
    sizes = d["sizes"]
    net = MlpNetwork(sizes[0], tuple(sizes[1:-1]), seed=0)
    net.weights = [np.asarray(W, dtype=np.float64) for W in d["weights"]]
    net.biases = [np.asarray(b, dtype=np.float64) for b in d["biases"]]
    return net


def save_model(model: PipelineModel, path) -> None:
    """Write the versioned JSON artifact; reals round-trip bit-exactly."""
    from . import __version__

    doc = {
        "format_version": MODEL_FORMAT_VERSION,
        "tool_version": __version__,
        "seed": model.seed,
        "config": model.config,
        "columns": list(model.column_names),
        "preprocessing": _preprocessing_echo(model),
        "svm": {
            "kernel": {"kind": model.svm.kernel.kind, "sigma": model.svm.kernel.sigma},
            "box_constraint": model.svm.box_constraint,
            "bias": model.svm.bias,
            "support_coefficients": model.svm.support_coefficients.tolist(),
            "support_rows": model.svm.support_rows.tolist(),
            "primal_weights": None
            if model.svm.primal_weights is None
            else model.svm.primal_weights.tolist(),
        },
        "encoder": {
            "pool_window": model.encoder.pool_window,
            "pool_stride": model.encoder.pool_stride,
            "lstm": _lstm_to_dict(model.encoder.lstm),
            "heads": [_mlp_to_dict(net) for net in model.encoder.heads],
            "head_weights": model.encoder.head_weights.tolist(),
        },
        "fusion_weight": model.fusion_weight,
        "threshold": model.threshold,
        "fused_objective": model.fused_objective,
    }
    text = json.dumps(doc, sort_keys=True, indent=2, allow_nan=False) + "\n"
    Path(path).write_text(text)


def load_model(path) -> PipelineModel:
    path = Path(path)
    if not path.exists():
        raise DataError(f"no such model file: {path}")
    try:
        doc = json.loads(path.read_text())
    except json.JSONDecodeError as exc:
        raise DataError(f"model file {path} is not valid JSON: {exc}") from None
    version = doc.get("format_version")
    if version != MODEL_FORMAT_VERSION:
        raise DataError(
            f"unsupported model format version {version!r} "
            f"(expected {MODEL_FORMAT_VERSION})"
        )
    svm_doc = doc["svm"]
    kernel = KernelSpec(
        kind=svm_doc["kernel"]["kind"], sigma=svm_doc["kernel"]["sigma"]
    )
    n_cols = len(doc["columns"])
    raw_rows = svm_doc["support_rows"]
    support_rows = (
        np.asarray(raw_rows, dtype=np.float64) if raw_rows else np.empty((0, n_cols))
    )
    svm_model = SvmModel(
        support_coefficients=np.asarray(svm_doc["support_coefficients"]),
        bias=svm_doc["bias"],
        kernel=kernel,
        box_constraint=svm_doc["box_constraint"],
        support_rows=support_rows,
        primal_weights=None
        if svm_doc["primal_weights"] is None
        else np.asarray(svm_doc["primal_weights"]),
    )
    enc_doc = doc["encoder"]
    encoder = NeuralEncoder(
        lstm=_lstm_from_dict(enc_doc["lstm"]),
        heads=tuple(_mlp_from_dict(d) for d in enc_doc["heads"]),
        head_weights=np.asarray(enc_doc["head_weights"], dtype=np.float64),
        pool_window=enc_doc["pool_window"],
        pool_stride=enc_doc["pool_stride"],
    )
    pre = doc["preprocessing"]
    return PipelineModel(
        column_names=tuple(doc["columns"]),
        imputation_medians={int(k): v for k, v in pre["imputation_medians"].items()},
        standardization=Standardization(
            mean=np.asarray(pre["mean"], dtype=np.float64),
            scale=np.asarray(pre["scale"], dtype=np.float64),
        ),
        svm=svm_model,
        encoder=encoder,
        fusion_weight=doc["fusion_weight"],
        threshold=doc["threshold"],
        seed=doc["seed"],
        fused_objective=doc["fused_objective"],
        config=doc["config"],
    )

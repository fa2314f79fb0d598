"""onsetml: fused RBF-kernel SVM + LSTM/MLP ensemble for tabular binary
classification, built for reproducible diabetes-onset experiments.

The solver core has a compiled fast path; see ``onsetml._core.BACKEND`` for
which one is active.
"""

__version__ = "0.1.0"

from ._core import BACKEND
from .data import (
    FeatureMatrix,
    FoldAssignment,
    SplitSpec,
    load_csv,
    make_folds,
    standardize,
    stratified_split,
    summarize,
    synth_dataset,
)
from .kernels import KernelSpec, gram_matrix, linear_kernel, rbf_kernel
from .metrics import accuracy, confusion, precision_auc, render_report, roc_auc
from .neural import NeuralConfig, ensemble_combine, lstm_forward, max_pool_1d
from .pipeline import (
    PipelineConfig,
    PipelineModel,
    combined_score,
    cross_validate,
    load_model,
    predict,
    save_model,
    train_pipeline,
)
from .svm import SvmTrainConfig, decision_value, predict_label, train_rbf_svm, train_sb_svm

__all__ = [
    "BACKEND",
    "__version__",
    "FeatureMatrix",
    "FoldAssignment",
    "SplitSpec",
    "load_csv",
    "make_folds",
    "standardize",
    "stratified_split",
    "summarize",
    "synth_dataset",
    "KernelSpec",
    "gram_matrix",
    "linear_kernel",
    "rbf_kernel",
    "accuracy",
    "confusion",
    "precision_auc",
    "render_report",
    "roc_auc",
    "NeuralConfig",
    "ensemble_combine",
    "lstm_forward",
    "max_pool_1d",
    "PipelineConfig",
    "PipelineModel",
    "combined_score",
    "cross_validate",
    "load_model",
    "predict",
    "save_model",
    "train_pipeline",
    "SvmTrainConfig",
    "decision_value",
    "predict_label",
    "train_rbf_svm",
    "train_sb_svm",
]

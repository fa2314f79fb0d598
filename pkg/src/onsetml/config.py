"""Plain-text key=value configuration files.

Format: one ``key = value`` pair per line, ``#`` starts a comment, blank
lines ignored. List values are comma-separated. Unknown keys are rejected
so typos fail loudly.

Recognized keys:
    train_fraction, folds, seed, zero_as_missing, selected_columns,
    svm_c, l1_lambda, class_balance, tolerance, max_passes, sigma,
    hidden_size, mlp_hidden, ensemble_size, epochs, learning_rate,
    dropout, fusion_weight, threshold, pool_window, pool_stride
"""

from __future__ import annotations

from pathlib import Path
from typing import Optional

from .data import SplitSpec
from .errors import DataError
from .kernels import KernelSpec
from .neural import NeuralConfig
from .pipeline import PipelineConfig
from .svm import SvmTrainConfig

__all__ = ["parse_config_file", "build_pipeline_config", "DEFAULT_SEED"]

DEFAULT_SEED = 42

_FLOAT_KEYS = {
    "train_fraction",
    "svm_c",
    "l1_lambda",
    "tolerance",
    "sigma",
    "learning_rate",
    "dropout",
    "fusion_weight",
    "threshold",
}
_INT_KEYS = {
    "folds",
    "seed",
    "max_passes",
    "hidden_size",
    "ensemble_size",
    "epochs",
    "pool_window",
    "pool_stride",
}
_BOOL_KEYS = {"class_balance"}
_LIST_KEYS = {"zero_as_missing", "selected_columns", "mlp_hidden"}
_ALL_KEYS = _FLOAT_KEYS | _INT_KEYS | _BOOL_KEYS | _LIST_KEYS


def _parse_value(key: str, raw: str):
    raw = raw.strip()
    try:
        if key in _FLOAT_KEYS:
            return float(raw)
        if key in _INT_KEYS:
            return int(raw)
    except ValueError:
        raise DataError(f"config key {key!r}: cannot parse {raw!r}") from None
    if key in _BOOL_KEYS:
        lowered = raw.lower()
        if lowered in ("true", "yes", "1", "on"):
            return True
        if lowered in ("false", "no", "0", "off"):
            return False
        raise DataError(f"config key {key!r}: expected a boolean, got {raw!r}")
    items = [item.strip() for item in raw.split(",") if item.strip()]
    if key == "mlp_hidden":
        try:
            return tuple(int(item) for item in items)
        except ValueError:
            raise DataError(f"config key {key!r}: expected integers") from None
    # Column lists: names stay strings, bare integers become indices.
    out = []
    for item in items:
        out.append(int(item) if item.lstrip("-").isdigit() else item)
    return tuple(out)


def parse_config_file(path) -> dict:
    path = Path(path)
    if not path.exists():
        raise DataError(f"no such config file: {path}")
    values: dict = {}
    for lineno, line in enumerate(path.read_text().splitlines(), start=1):
        stripped = line.split("#", 1)[0].strip()
        if not stripped:
            continue
        if "=" not in stripped:
            raise DataError(f"{path}:{lineno}: expected 'key = value', got {line!r}")
        key, raw = stripped.split("=", 1)
        key = key.strip().lower()
        if key not in _ALL_KEYS:
            raise DataError(f"{path}:{lineno}: unknown config key {key!r}")
        values[key] = _parse_value(key, raw)
    return values


def build_pipeline_config(
    values: Optional[dict] = None,
    seed_override: Optional[int] = None,
    folds_override: Optional[int] = None,
) -> PipelineConfig:
    """Assemble a PipelineConfig from parsed config values and CLI overrides.

    Seed precedence: CLI flag > config file > default 42.
    """
    values = dict(values or {})
    seed = seed_override if seed_override is not None else values.get("seed", DEFAULT_SEED)
    folds = folds_override if folds_override is not None else values.get("folds", 5)

    split = SplitSpec(
        train_fraction=values.get("train_fraction", 0.7),
        seed=seed,
        stratified=True,
    )
    svm = SvmTrainConfig(
        C=values.get("svm_c", 1.0),
        tolerance=values.get("tolerance", 1e-3),
        max_passes=values.get("max_passes"),
        l1_lambda=values.get("l1_lambda", 0.0),
        class_balance=values.get("class_balance"),
    )
    kernel = None
    if "sigma" in values:
        kernel = KernelSpec(kind="rbf", sigma=values["sigma"])
    neural = NeuralConfig(
        hidden_size=values.get("hidden_size", 70),
        mlp_hidden=values.get("mlp_hidden", (32, 16)),
        ensemble_size=values.get("ensemble_size", 3),
        epochs=values.get("epochs", 50),
        learning_rate=values.get("learning_rate", 0.2),
        dropout_rate=values.get("dropout", 0.35),
        pool_window=values.get("pool_window", 2),
        pool_stride=values.get("pool_stride", 2),
    )
    return PipelineConfig(
        split=split,
        folds=folds,
        svm=svm,
        kernel=kernel,
        neural=neural,
        fusion_weight=values.get("fusion_weight", 0.5),
        threshold=values.get("threshold", 0.5),
        seed=seed,
        zero_as_missing=values.get("zero_as_missing"),
        selected_columns=values.get("selected_columns"),
    )

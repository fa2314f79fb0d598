"""From-scratch LSTM encoder, MLP heads, dropout, AdaGrad and backprop.

The encoder consumes each sample's max-pooled feature vector as a sequence
of scalars and emits its final hidden state; small MLP heads (ReLU, ReLU,
sigmoid) map that encoding to a probability. Gradients are exact analytic
derivatives of the mean binary cross-entropy, checked against finite
differences in the test suite.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from .errors import TrainingError

__all__ = [
    "LstmLayer",
    "MlpNetwork",
    "AdaGradState",
    "DropoutSpec",
    "NeuralConfig",
    "NeuralEncoder",
    "max_pool_1d",
    "pool_rows",
    "lstm_forward",
    "mlp_forward",
    "ensemble_combine",
    "backprop",
    "adagrad_step",
    "train_encoder",
]

# Gate block order inside the stacked LSTM parameters.
_GATES = ("input", "forget", "candidate", "output")


def _sigmoid(z):
    out = np.empty_like(z)
    pos = z >= 0
    out[pos] = 1.0 / (1.0 + np.exp(-z[pos]))
    ez = np.exp(z[~pos])
    out[~pos] = ez / (1.0 + ez)
    return out


def _glorot(rng: np.random.RandomState, shape, fan_in, fan_out):
    limit = np.sqrt(6.0 / (fan_in + fan_out))
    return rng.uniform(-limit, limit, size=shape)


@dataclass(frozen=True)
class DropoutSpec:
    """Inverted dropout: zero with probability ``rate``, scale by 1/(1-rate).

    Masks are a pure function of ``seed``, so a forward/backward pair under
    one spec sees identical masks; identity when ``training_mode`` is off.
    """

    rate: float = 0.35
    seed: int = 0
    training_mode: bool = False

    def __post_init__(self):
        if not 0.0 <= self.rate < 1.0:
            raise ValueError(f"dropout rate must lie in [0, 1), got {self.rate}")

    def active(self) -> bool:
        return self.training_mode and self.rate > 0.0

    def mask_rng(self) -> np.random.RandomState:
        return np.random.RandomState(self.seed % (2**32 - 1))


def _draw_mask(rng, shape, rate):
    return (rng.uniform(size=shape) >= rate) / (1.0 - rate)


class LstmLayer:
    """Single LSTM layer with stacked gate parameters.

    ``W`` (4H x D) input weights, ``U`` (4H x H) recurrent weights, ``b``
    (4H,) biases, gate blocks ordered input/forget/candidate/output. The
    initial hidden and cell states are zeros.
    """

    def __init__(self, input_size: int, hidden_size: int = 70, seed: int = 0):
        if input_size < 1 or hidden_size < 1:
            raise ValueError("input_size and hidden_size must be positive")
        self.input_size = input_size
        self.hidden_size = hidden_size
        rng = np.random.RandomState(seed)
        h, d = hidden_size, input_size
        self.W = _glorot(rng, (4 * h, d), d, h)
        self.U = _glorot(rng, (4 * h, h), h, h)
        self.b = np.zeros(4 * h)

    def params(self) -> dict[str, np.ndarray]:
        return {"lstm.W": self.W, "lstm.U": self.U, "lstm.b": self.b}

    def _gates(self, Z):
        h = self.hidden_size
        i = _sigmoid(Z[:, :h])
        f = _sigmoid(Z[:, h : 2 * h])
        g = np.tanh(Z[:, 2 * h : 3 * h])
        o = _sigmoid(Z[:, 3 * h :])
        return i, f, g, o

    def forward_batch(self, X):
        """Run the recurrence over X (batch, time, input_size).

        Returns (final hidden (batch, H), per-step cache list for backprop).
        """
        X = np.asarray(X, dtype=np.float64)
        if X.ndim != 3 or X.shape[2] != self.input_size:
            raise ValueError(
                f"expected (batch, time, {self.input_size}) input, got {X.shape}"
            )
        if X.shape[1] == 0:
            raise ValueError("sequence must be non-empty")
        batch = X.shape[0]
        h_prev = np.zeros((batch, self.hidden_size))
        c_prev = np.zeros((batch, self.hidden_size))
        caches = []
        for t in range(X.shape[1]):
            x_t = X[:, t, :]
            Z = x_t @ self.W.T + h_prev @ self.U.T + self.b
            i, f, g, o = self._gates(Z)
            c = f * c_prev + i * g
            tanh_c = np.tanh(c)
            h = o * tanh_c
            caches.append((x_t, h_prev, c_prev, i, f, g, o, tanh_c))
            h_prev, c_prev = h, c
        return h_prev, caches

    def backward_batch(self, caches, d_hidden):
        """Backpropagate through time from a gradient on the final hidden state."""
        h = self.hidden_size
        dW = np.zeros_like(self.W)
        dU = np.zeros_like(self.U)
        db = np.zeros_like(self.b)
        dh = d_hidden
        dc = np.zeros_like(d_hidden)
        for x_t, h_prev, c_prev, i, f, g, o, tanh_c in reversed(caches):
            do = dh * tanh_c
            dc = dc + dh * o * (1.0 - tanh_c * tanh_c)
            di = dc * g
            dg = dc * i
            df = dc * c_prev
            dZ = np.concatenate(
                [
                    di * i * (1.0 - i),
                    df * f * (1.0 - f),
                    dg * (1.0 - g * g),
                    do * o * (1.0 - o),
                ],
                axis=1,
            )
            dW += dZ.T @ x_t
            dU += dZ.T @ h_prev
            db += dZ.sum(axis=0)
            dh = dZ @ self.U
            dc = dc * f
        return {"lstm.W": dW, "lstm.U": dU, "lstm.b": db}


class MlpNetwork:
    """Dense head: ReLU hidden layers, single sigmoid output unit."""

    def __init__(
        self,
        input_size: int,
        hidden_sizes: Sequence[int] = (32, 16),
        seed: int = 0,
    ):
        sizes = [input_size, *hidden_sizes, 1]
        rng = np.random.RandomState(seed)
        self.sizes = tuple(sizes)
        self.weights = []
        self.biases = []
        for fan_in, fan_out in zip(sizes[:-1], sizes[1:]):
            self.weights.append(_glorot(rng, (fan_out, fan_in), fan_in, fan_out))
            self.biases.append(np.zeros(fan_out))

    @property
    def n_hidden_layers(self) -> int:
        return len(self.weights) - 1

    def params(self, prefix: str = "mlp") -> dict[str, np.ndarray]:
        out = {}
        for l, (W, b) in enumerate(zip(self.weights, self.biases)):
            out[f"{prefix}.W{l}"] = W
            out[f"{prefix}.b{l}"] = b
        return out

    def forward_batch(self, X, dropout: DropoutSpec):
        """Probabilities plus the cache needed for the backward pass."""
        X = np.asarray(X, dtype=np.float64)
        if X.ndim != 2 or X.shape[1] != self.sizes[0]:
            raise ValueError(f"expected (batch, {self.sizes[0]}) input, got {X.shape}")
        rng = dropout.mask_rng() if dropout.active() else None
        a = X
        layers = []
        for l in range(self.n_hidden_layers):
            z = a @ self.weights[l].T + self.biases[l]
            relu = np.maximum(z, 0.0)
            mask = None
            if rng is not None:
                mask = _draw_mask(rng, relu.shape, dropout.rate)
                out = relu * mask
            else:
                out = relu
            layers.append((a, z, mask))
            a = out
        z_out = a @ self.weights[-1].T + self.biases[-1]
        logits = z_out[:, 0]
        probs = _sigmoid(logits)
        cache = (layers, a, logits)
        return probs, cache

    def backward_batch(self, cache, d_logits, prefix: str = "mlp"):
        """Gradients from d(loss)/d(logit); returns (param grads, input grad)."""
        layers, a_last, _ = cache
        grads = {}
        dz = d_logits[:, None]
        grads[f"{prefix}.W{len(self.weights) - 1}"] = dz.T @ a_last
        grads[f"{prefix}.b{len(self.weights) - 1}"] = dz.sum(axis=0)
        da = dz @ self.weights[-1]
        for l in range(self.n_hidden_layers - 1, -1, -1):
            a_in, z, mask = layers[l]
            if mask is not None:
                da = da * mask
            dzl = da * (z > 0.0)
            grads[f"{prefix}.W{l}"] = dzl.T @ a_in
            grads[f"{prefix}.b{l}"] = dzl.sum(axis=0)
            da = dzl @ self.weights[l]
        return grads, da


def max_pool_1d(v, window: int, stride: int) -> np.ndarray:
    """Windowed maximum; a trailing partial window pools the leftover tail."""
    v = np.asarray(v, dtype=np.float64)
    if v.ndim != 1:
        raise ValueError("max_pool_1d expects a 1-D vector")
    if v.size == 0:
        raise ValueError("cannot pool an empty vector")
    if window < 1 or stride < 1:
        raise ValueError("window and stride must be at least 1")
    if window > v.size:
        raise ValueError(f"window {window} exceeds input length {v.size}")
    out = []
    start = 0
    while start < v.size:
        out.append(v[start : start + window].max())
        start += stride
    return np.asarray(out)


def pool_rows(X, window: int = 2, stride: int = 2) -> np.ndarray:
    """Apply max_pool_1d to every row; rows become scalar sequences."""
    X = np.asarray(X, dtype=np.float64)
    return np.stack([max_pool_1d(row, window, stride) for row in X])


def lstm_forward(layer: LstmLayer, sequence) -> tuple[np.ndarray, np.ndarray]:
    """Run one sequence (time, input_size) and return (final h, all h)."""
    seq = np.asarray(sequence, dtype=np.float64)
    if seq.ndim == 1:
        seq = seq[:, None]
    if seq.ndim != 2:
        raise ValueError("sequence must be (time, input_size)")
    _, caches = layer.forward_batch(seq[None, :, :])
    all_h = np.asarray([(o * tanh_c)[0] for (*_, o, tanh_c) in caches])
    return all_h[-1], all_h


def mlp_forward(net: MlpNetwork, x, dropout: DropoutSpec) -> float:
    """Single-sample probability in (0, 1)."""
    x = np.asarray(x, dtype=np.float64)
    if x.ndim != 1:
        raise ValueError("mlp_forward expects a single feature vector")
    probs, _ = net.forward_batch(x[None, :], dropout)
    return float(probs[0])


def ensemble_combine(outputs, weights) -> float:
    """Weighted sum of member outputs; weights must be convex coefficients."""
    outputs = np.asarray(outputs, dtype=np.float64)
    weights = np.asarray(weights, dtype=np.float64)
    if outputs.shape != weights.shape:
        raise ValueError(
            f"outputs and weights disagree in length: {outputs.shape} vs {weights.shape}"
        )
    if (weights < 0.0).any():
        raise ValueError("ensemble weights must be non-negative")
    if abs(float(weights.sum()) - 1.0) > 1e-9:
        raise ValueError(f"ensemble weights must sum to 1, got {weights.sum()!r}")
    return float(outputs @ weights)


def _bce_from_logits(logits, y):
    # max(z,0) - z*y + log(1+exp(-|z|)): stable for saturated sigmoids.
    # Non-finite logits flow through to the caller's per-sample check.
    with np.errstate(invalid="ignore", over="ignore"):
        return np.maximum(logits, 0.0) - logits * y + np.log1p(np.exp(-np.abs(logits)))


def backprop(
    layer: LstmLayer,
    net: MlpNetwork,
    sequences,
    labels,
    dropout: DropoutSpec,
) -> tuple[float, dict[str, np.ndarray]]:
    """Mean binary cross-entropy and its exact gradients for one LSTM+head stack.

    ``sequences`` is (batch, time, input_size); gradients cover every LSTM
    and MLP parameter, backpropagated through time. Gradients use the mean
    convention: duplicating the batch leaves them unchanged.
    """
    X = np.asarray(sequences, dtype=np.float64)
    y = np.asarray(labels, dtype=np.float64)
    if X.shape[0] == 0:
        raise ValueError("batch must be non-empty")
    if X.shape[0] != y.shape[0]:
        raise ValueError("batch and labels disagree in length")

    encoding, lstm_cache = layer.forward_batch(X)
    probs, mlp_cache = net.forward_batch(encoding, dropout)
    logits = mlp_cache[2]
    losses = _bce_from_logits(logits, y)
    if not np.isfinite(losses).all():
        bad = int(np.flatnonzero(~np.isfinite(losses))[0])
        raise TrainingError(f"non-finite loss at sample {bad}")
    loss = float(losses.mean())

    d_logits = (probs - y) / X.shape[0]
    mlp_grads, d_encoding = net.backward_batch(mlp_cache, d_logits)
    lstm_grads = layer.backward_batch(lstm_cache, d_encoding)
    return loss, {**lstm_grads, **mlp_grads}


@dataclass
class AdaGradState:
    """Per-parameter accumulated squared gradients plus the step rule."""

    learning_rate: float = 0.2
    epsilon: float = 1e-8
    accumulators: dict[str, np.ndarray] = field(default_factory=dict)

    def __post_init__(self):
        if not self.learning_rate > 0.0:
            raise ValueError("learning_rate must be positive")
        if not self.epsilon > 0.0:
            raise ValueError("epsilon must be positive")


def adagrad_step(state: AdaGradState, params, grads):
    """acc += g^2; param -= lr * g / (sqrt(acc) + eps). Mutates in place.

    ``params``/``grads`` may be matching dicts of arrays or a single pair of
    equal-length arrays.
    """
    if isinstance(params, dict) != isinstance(grads, dict):
        raise ValueError("params and grads must both be dicts or both arrays")
    if not isinstance(params, dict):
        params = {"param": np.asarray(params, dtype=np.float64)}
        grads = {"param": np.asarray(grads, dtype=np.float64)}
        single = True
    else:
        single = False
    for key, p in params.items():
        g = grads[key]
        if p.shape != g.shape:
            raise ValueError(f"shape mismatch for {key}: {p.shape} vs {g.shape}")
        acc = state.accumulators.get(key)
        if acc is None:
            acc = np.zeros_like(p)
            state.accumulators[key] = acc
        acc += g * g
        p -= state.learning_rate * g / (np.sqrt(acc) + state.epsilon)
    if single:
        return params["param"], state
    return params, state


@dataclass(frozen=True)
class NeuralConfig:
    """Encoder branch hyperparameters."""

    hidden_size: int = 70
    mlp_hidden: tuple[int, ...] = (32, 16)
    ensemble_size: int = 3
    epochs: int = 50
    learning_rate: float = 0.2
    dropout_rate: float = 0.35
    pool_window: int = 2
    pool_stride: int = 2

    def __post_init__(self):
        if self.ensemble_size < 1:
            raise ValueError("ensemble_size must be at least 1")
        if self.epochs < 1:
            raise ValueError("epochs must be at least 1")


@dataclass(frozen=True)
class NeuralEncoder:
    """Trained encoder branch: shared LSTM, MLP heads, convex head weights."""

    lstm: LstmLayer
    heads: tuple[MlpNetwork, ...]
    head_weights: np.ndarray
    pool_window: int
    pool_stride: int

    def encode(self, X_std) -> np.ndarray:
        pooled = pool_rows(X_std, self.pool_window, self.pool_stride)
        encoding, _ = self.lstm.forward_batch(pooled[:, :, None])
        return encoding

    def scores(self, X_std) -> np.ndarray:
        """Ensemble probability per row (inference mode, no dropout)."""
        encoding = self.encode(X_std)
        off = DropoutSpec(rate=0.0, training_mode=False)
        member = np.stack(
            [net.forward_batch(encoding, off)[0] for net in self.heads]
        )
        return self.head_weights @ member


def _epoch_mask_seed(seed: int, epoch: int, head: int) -> int:
    return (seed * 100003 + epoch * 101 + head) % (2**32 - 1)


def train_encoder(
    X_std, labels, cfg: NeuralConfig, seed: int = 42
) -> tuple[NeuralEncoder, list[float]]:
    """Fit the LSTM + MLP heads with full-batch AdaGrad.

    Heads differ only in their initialization stream; each epoch every head
    receives its own dropout masks and the shared LSTM takes the mean of the
    heads' gradients (total loss = mean of head losses). Returns the trained
    encoder and the per-epoch mean loss trace.
    """
    X_std = np.asarray(X_std, dtype=np.float64)
    y = np.asarray(labels, dtype=np.float64)
    pooled = pool_rows(X_std, cfg.pool_window, cfg.pool_stride)
    sequences = pooled[:, :, None]

    lstm = LstmLayer(1, cfg.hidden_size, seed=seed)
    heads = [
        MlpNetwork(cfg.hidden_size, cfg.mlp_hidden, seed=seed + 1 + h)
        for h in range(cfg.ensemble_size)
    ]
    state = AdaGradState(learning_rate=cfg.learning_rate)

    losses = []
    for epoch in range(cfg.epochs):
        total_grads: dict[str, np.ndarray] = {}
        epoch_loss = 0.0
        for h, net in enumerate(heads):
            spec = DropoutSpec(
                rate=cfg.dropout_rate,
                seed=_epoch_mask_seed(seed, epoch, h),
                training_mode=True,
            )
            loss, grads = backprop(lstm, net, sequences, y, spec)
            epoch_loss += loss / cfg.ensemble_size
            for key, g in grads.items():
                if key.startswith("lstm."):
                    g = g / cfg.ensemble_size
                    if key in total_grads:
                        total_grads[key] += g
                        continue
                else:
                    key = f"head{h}.{key.split('.', 1)[1]}"
                total_grads[key] = g
        params = dict(lstm.params())
        for h, net in enumerate(heads):
            params.update(net.params(prefix=f"head{h}"))
        adagrad_step(state, params, total_grads)
        losses.append(epoch_loss)

    weights = np.full(cfg.ensemble_size, 1.0 / cfg.ensemble_size)
    encoder = NeuralEncoder(
        lstm=lstm,
        heads=tuple(heads),
        head_weights=weights,
        pool_window=cfg.pool_window,
        pool_stride=cfg.pool_stride,
    )
    return encoder, losses

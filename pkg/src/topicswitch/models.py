"""From-scratch regularized classifiers trained with minibatch SGD.

Three objectives are provided: a hinge-loss linear classifier with both
penalty kinds, a logistic regression with a squared-norm penalty, and a
small feed-forward network with softmax cross-entropy plus both
penalties.  ``mu1`` is always the l1 strength and ``mu2`` the l2
strength (applied as ``mu2/2 * ||.||^2``).  The linear models' intercept
is an artifact addition and stays unpenalized; the network penalizes
all of its parameters, biases included.

Each objective returns its value together with the exact (sub)gradient,
so correctness is checkable against finite differences.  ``sgd_train``
steps on the batch-mean data gradient plus the full regularizer
gradient, which keeps the step size invariant to batch size; for the
network, whose reported objective sums over examples, training therefore
optimizes the per-example-normalized surrogate with the same minimizer
family.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from pathlib import Path
from typing import Callable

import numpy as np

from .errors import DimensionMismatch, DivergenceDetected, EmptyDataset

ACTIVATIONS = ("relu", "tanh")


@dataclass(frozen=True)
class TrainConfig:
    """SGD hyper-parameters; ``use_bias`` appends an unpenalized intercept."""

    mu1: float = 0.0
    mu2: float = 0.0
    learning_rate: float = 0.05
    epochs: int = 200
    batch_size: int = 16
    seed: int = 0
    use_bias: bool = True

    def __post_init__(self) -> None:
        if self.mu1 < 0 or self.mu2 < 0:
            raise ValueError("regularization strengths must be non-negative")
        if self.learning_rate <= 0:
            raise ValueError("learning_rate must be positive")
        if self.epochs < 1 or self.batch_size < 1:
            raise ValueError("epochs and batch_size must be at least 1")


class Dataset:
    """Feature matrix with ±1 labels; validated once at construction."""

    def __init__(self, features, labels):
        X = np.asarray(features, dtype=np.float64)
        y = np.asarray(labels, dtype=np.int64)
        if X.ndim != 2:
            raise ValueError(f"features must be 2-D, got shape {X.shape}")
        if X.shape[0] == 0:
            raise EmptyDataset("dataset has no rows")
        if X.shape[1] == 0:
            raise ValueError("dataset has no feature columns")
        if y.shape != (X.shape[0],):
            raise DimensionMismatch(f"{X.shape[0]} rows but {y.shape} labels")
        if not np.all(np.isfinite(X)):
            raise ValueError("features contain non-finite entries")
        if not np.all(np.isin(y, (-1, 1))):
            raise ValueError("labels must be -1 or +1")
        self.features = X
        self.labels = y

    @property
    def n(self) -> int:
        return self.features.shape[0]

    @property
    def p(self) -> int:
        return self.features.shape[1]


@dataclass
class LinearModel:
    """Weight vector plus an intercept; score(x) = x @ weights + bias."""

    weights: np.ndarray
    bias: float = 0.0

    @classmethod
    def zeros(cls, p: int) -> "LinearModel":
        return cls(weights=np.zeros(p), bias=0.0)


@dataclass
class MlpModel:
    """Fully connected network ending in two softmax logits."""

    layer_sizes: tuple[int, ...]
    weights: list[np.ndarray] = field(default_factory=list)
    biases: list[np.ndarray] = field(default_factory=list)
    activation: str = "relu"


def init_mlp(
    layer_sizes: tuple[int, ...],
    activation: str,
    rng: np.random.Generator,
) -> MlpModel:
    """Seeded random initialization; biases start at zero."""
    if len(layer_sizes) < 2 or layer_sizes[-1] != 2:
        raise ValueError("layer_sizes must run from the input width to 2 logits")
    if activation not in ACTIVATIONS:
        raise ValueError(f"activation must be one of {ACTIVATIONS}")
    weights, biases = [], []
    for fan_in, fan_out in zip(layer_sizes[:-1], layer_sizes[1:]):
        scale = np.sqrt(2.0 / fan_in) if activation == "relu" else np.sqrt(1.0 / fan_in)
        weights.append(rng.standard_normal((fan_in, fan_out)) * scale)
        biases.append(np.zeros(fan_out))
    return MlpModel(
        layer_sizes=tuple(layer_sizes), weights=weights, biases=biases, activation=activation
    )


# --------------------------------------------------------------------------
# objectives
# --------------------------------------------------------------------------


def _sigmoid(z: np.ndarray) -> np.ndarray:
    out = np.empty_like(z)
    pos = z >= 0
    out[pos] = 1.0 / (1.0 + np.exp(-z[pos]))
    ez = np.exp(z[~pos])
    out[~pos] = ez / (1.0 + ez)
    return out


def svm_objective(
    model: LinearModel, data: Dataset, cfg: TrainConfig
) -> tuple[float, tuple[np.ndarray, float]]:
    """Mean hinge loss plus (mu2/2)||w||^2 + mu1 ||w||_1, with subgradient.

    At hinge kinks the data subgradient is 0, and sign(0) = 0 for the l1
    term, so the returned subgradient is the minimum-norm choice.
    """
    X, y = data.features, data.labels
    scores = X @ model.weights + model.bias
    margins = y * scores
    hinge = np.maximum(0.0, 1.0 - margins)
    value = (
        float(hinge.mean())
        + 0.5 * cfg.mu2 * float(model.weights @ model.weights)
        + cfg.mu1 * float(np.abs(model.weights).sum())
    )
    active = (1.0 - margins) > 0.0
    ya = np.where(active, y, 0).astype(np.float64)
    gw = -(ya @ X) / data.n + cfg.mu2 * model.weights + cfg.mu1 * np.sign(model.weights)
    gb = float(-ya.sum() / data.n) if cfg.use_bias else 0.0
    return value, (gw, gb)


def logistic_objective(
    model: LinearModel, data: Dataset, cfg: TrainConfig
) -> tuple[float, tuple[np.ndarray, float]]:
    """Mean log(1 + exp(-y score)) plus (mu2/2)||w||^2, with gradient.

    Uses the log1p/exp split so large |margins| neither overflow nor
    lose the linear tail.
    """
    X, y = data.features, data.labels
    margins = y * (X @ model.weights + model.bias)
    value = float(np.logaddexp(0.0, -margins).mean()) + 0.5 * cfg.mu2 * float(
        model.weights @ model.weights
    )
    coef = y * _sigmoid(-margins)
    gw = -(coef @ X) / data.n + cfg.mu2 * model.weights
    gb = float(-coef.sum() / data.n) if cfg.use_bias else 0.0
    return value, (gw, gb)


def _mlp_forward(model: MlpModel, X: np.ndarray) -> tuple[np.ndarray, list[np.ndarray]]:
    """Logits plus the post-activation output of every hidden layer."""
    hidden: list[np.ndarray] = []
    a = X
    for W, b in zip(model.weights[:-1], model.biases[:-1]):
        z = a @ W + b
        a = np.maximum(0.0, z) if model.activation == "relu" else np.tanh(z)
        hidden.append(a)
    logits = a @ model.weights[-1] + model.biases[-1]
    return logits, hidden


def _mlp_value_grad(
    model: MlpModel,
    X: np.ndarray,
    y: np.ndarray,
    cfg: TrainConfig,
    mean_data_term: bool,
) -> tuple[float, tuple[list[np.ndarray], list[np.ndarray]]]:
    n = X.shape[0]
    logits, hidden = _mlp_forward(model, X)
    cls = ((y + 1) // 2).astype(np.intp)  # -1 -> 0, +1 -> 1
    shifted = logits - logits.max(axis=1, keepdims=True)
    log_probs = shifted - np.log(np.exp(shifted).sum(axis=1, keepdims=True))
    data_value = float(-log_probs[np.arange(n), cls].sum())
    if mean_data_term:
        data_value /= n

    reg_value = 0.0
    for W in model.weights:
        reg_value += cfg.mu1 * float(np.abs(W).sum()) + 0.5 * cfg.mu2 * float((W * W).sum())
    for b in model.biases:
        reg_value += cfg.mu1 * float(np.abs(b).sum()) + 0.5 * cfg.mu2 * float((b * b).sum())

    delta = np.exp(log_probs)
    delta[np.arange(n), cls] -= 1.0
    if mean_data_term:
        delta /= n
    grads_w: list[np.ndarray] = [np.empty(0)] * len(model.weights)
    grads_b: list[np.ndarray] = [np.empty(0)] * len(model.biases)
    for layer in range(len(model.weights) - 1, -1, -1):
        upstream = hidden[layer - 1] if layer > 0 else X
        grads_w[layer] = upstream.T @ delta
        grads_b[layer] = delta.sum(axis=0)
        if layer > 0:
            back = delta @ model.weights[layer].T
            if model.activation == "relu":
                back = back * (hidden[layer - 1] > 0.0)
            else:
                back = back * (1.0 - hidden[layer - 1] ** 2)
            delta = back
    for layer, W in enumerate(model.weights):
        grads_w[layer] = grads_w[layer] + cfg.mu1 * np.sign(W) + cfg.mu2 * W
        grads_b[layer] = grads_b[layer] + cfg.mu1 * np.sign(model.biases[layer]) + cfg.mu2 * model.biases[layer]
    return data_value + reg_value, (grads_w, grads_b)


def mlp_objective(
    model: MlpModel, data: Dataset, cfg: TrainConfig
) -> tuple[float, tuple[list[np.ndarray], list[np.ndarray]]]:
    """Summed softmax cross-entropy plus mu1 ||theta||_1 + (mu2/2)||theta||^2.

    Gradients come from reverse-mode accumulation through the layers.
    """
    return _mlp_value_grad(model, data.features, data.labels, cfg, mean_data_term=False)


# --------------------------------------------------------------------------
# training
# --------------------------------------------------------------------------


@dataclass(frozen=True)
class TrainResult:
    model: object
    objective_trace: tuple[float, ...]


def sgd_train(
    objective: Callable,
    data: Dataset,
    cfg: TrainConfig,
    *,
    layer_sizes: tuple[int, ...] | None = None,
    activation: str = "relu",
) -> TrainResult:
    """Minibatch SGD with seeded shuffling; deterministic given cfg.seed.

    Runs ``epochs`` passes of ceil(n / batch_size) steps.  The trace
    holds the full-dataset objective after each epoch; a non-finite
    value raises DivergenceDetected.
    """
    rng = np.random.default_rng(cfg.seed)
    if objective is mlp_objective:
        model: LinearModel | MlpModel = init_mlp(
            tuple(layer_sizes) if layer_sizes else (data.p, 8, 2), activation, rng
        )
    elif objective in (svm_objective, logistic_objective):
        model = LinearModel.zeros(data.p)
    else:
        raise ValueError("objective must be svm_objective, logistic_objective, or mlp_objective")

    lr = cfg.learning_rate
    trace: list[float] = []
    for _ in range(cfg.epochs):
        order = rng.permutation(data.n)
        for start in range(0, data.n, cfg.batch_size):
            batch = order[start : start + cfg.batch_size]
            Xb, yb = data.features[batch], data.labels[batch]
            if isinstance(model, LinearModel):
                batch_data = Dataset(Xb, yb)
                _, (gw, gb) = objective(model, batch_data, cfg)
                model.weights = model.weights - lr * gw
                if cfg.use_bias:
                    model.bias = model.bias - lr * gb
            else:
                _, (gws, gbs) = _mlp_value_grad(model, Xb, yb, cfg, mean_data_term=True)
                for layer in range(len(model.weights)):
                    model.weights[layer] = model.weights[layer] - lr * gws[layer]
                    model.biases[layer] = model.biases[layer] - lr * gbs[layer]
        value, _ = objective(model, data, cfg)
        trace.append(value)
        if not np.isfinite(value):
            raise DivergenceDetected(
                f"objective became {value} after epoch {len(trace)}; lower the learning rate"
            )
    return TrainResult(model=model, objective_trace=tuple(trace))


# --------------------------------------------------------------------------
# prediction and evaluation
# --------------------------------------------------------------------------


def scores_of(model, X: np.ndarray) -> np.ndarray:
    """Decision scores; positive means the +1 class (ties go to +1)."""
    X = np.asarray(X, dtype=np.float64)
    if isinstance(model, LinearModel):
        if X.shape[1] != model.weights.shape[0]:
            raise DimensionMismatch(
                f"model expects {model.weights.shape[0]} features, got {X.shape[1]}"
            )
        return X @ model.weights + model.bias
    if isinstance(model, MlpModel):
        if X.shape[1] != model.layer_sizes[0]:
            raise DimensionMismatch(
                f"model expects {model.layer_sizes[0]} features, got {X.shape[1]}"
            )
        logits, _ = _mlp_forward(model, X)
        return logits[:, 1] - logits[:, 0]
    raise TypeError(f"unsupported model type {type(model).__name__}")


def predict(model, x) -> int:
    """Classify one feature vector; a zero score maps to +1."""
    score = scores_of(model, np.asarray(x, dtype=np.float64)[None, :])[0]
    return 1 if score >= 0.0 else -1


def evaluate_accuracy(model, test: Dataset) -> float:
    """Fraction of test rows whose predicted sign matches the label."""
    preds = np.where(scores_of(model, test.features) >= 0.0, 1, -1)
    return float((preds == test.labels).mean())


# --------------------------------------------------------------------------
# standardization and persistence
# --------------------------------------------------------------------------


@dataclass(frozen=True)
class Standardizer:
    """Per-column z-scoring fitted on training data only.

    Columns with zero spread divide by 1 so constant features pass
    through centered instead of exploding.
    """

    mean: np.ndarray
    std: np.ndarray

    @classmethod
    def fit(cls, X: np.ndarray) -> "Standardizer":
        X = np.asarray(X, dtype=np.float64)
        mean = X.mean(axis=0)
        std = X.std(axis=0)
        std = np.where(std == 0.0, 1.0, std)
        return cls(mean=mean, std=std)

    def transform(self, X: np.ndarray) -> np.ndarray:
        return (np.asarray(X, dtype=np.float64) - self.mean) / self.std


def save_model(
    path: str | Path,
    kind: str,
    model,
    cfg: TrainConfig,
    standardizer: Standardizer | None = None,
) -> None:
    """Persist a trained model plus its preprocessing stats as JSON."""
    if isinstance(model, LinearModel):
        payload: dict = {
            "kind": kind,
            "dims": [int(model.weights.shape[0])],
            "weights": model.weights.tolist(),
            "bias": model.bias,
        }
    elif isinstance(model, MlpModel):
        payload = {
            "kind": kind,
            "dims": list(model.layer_sizes),
            "weights": [w.tolist() for w in model.weights],
            "bias": [b.tolist() for b in model.biases],
            "activation": model.activation,
        }
    else:
        raise TypeError(f"unsupported model type {type(model).__name__}")
    payload["standardization"] = (
        {"mean": standardizer.mean.tolist(), "std": standardizer.std.tolist()}
        if standardizer
        else None
    )
    payload["config"] = {
        "mu1": cfg.mu1,
        "mu2": cfg.mu2,
        "learning_rate": cfg.learning_rate,
        "epochs": cfg.epochs,
        "batch_size": cfg.batch_size,
        "use_bias": cfg.use_bias,
    }
    payload["seed"] = cfg.seed
    Path(path).write_text(json.dumps(payload, sort_keys=True, indent=2) + "\n")


def load_model(path: str | Path):
    """Inverse of :func:`save_model`; returns (kind, model, cfg, standardizer)."""
    payload = json.loads(Path(path).read_text())
    cfg = TrainConfig(seed=payload["seed"], **payload["config"])
    std = None
    if payload["standardization"]:
        std = Standardizer(
            mean=np.asarray(payload["standardization"]["mean"]),
            std=np.asarray(payload["standardization"]["std"]),
        )
    if payload["kind"] == "mlp":
        model: LinearModel | MlpModel = MlpModel(
            layer_sizes=tuple(payload["dims"]),
            weights=[np.asarray(w) for w in payload["weights"]],
            biases=[np.asarray(b) for b in payload["bias"]],
            activation=payload["activation"],
        )
    else:
        model = LinearModel(weights=np.asarray(payload["weights"]), bias=payload["bias"])
    return payload["kind"], model, cfg, std

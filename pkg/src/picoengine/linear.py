"""Multinomial linear models trained from scratch with mini-batch SGD.

One trainer backs both the binary relevance scorer (2 classes) and the
four-class token classifier. The objective is mean cross-entropy plus an
L2 penalty ``0.5 * l2 * ||W||^2`` (bias unpenalized). Training is
deterministic given the seed: the per-epoch shuffle order is drawn from a
single generator, so identical data and configuration reproduce identical
parameters byte for byte.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np
import scipy.sparse as sp

from .errors import ModelError


@dataclass
class TrainConfig:
    epochs: int = 20
    learning_rate: float = 0.1
    l2: float = 0.0
    seed: int = 0
    batch_size: int = 32


@dataclass
class LinearModel:
    """Weights (classes x features), bias (classes), and training metadata."""

    weights: np.ndarray
    bias: np.ndarray
    metadata: dict = field(default_factory=dict)

    def __post_init__(self):
        self.weights = np.asarray(self.weights, dtype=np.float64)
        self.bias = np.asarray(self.bias, dtype=np.float64)
        if self.weights.ndim != 2:
            raise ModelError("weights must be a 2-d matrix (classes x features)")
        if self.bias.shape != (self.weights.shape[0],):
            raise ModelError("bias length must equal the class count")
        if self.weights.shape[0] < 2:
            raise ModelError("a linear model needs at least 2 classes")
        if not (np.all(np.isfinite(self.weights)) and np.all(np.isfinite(self.bias))):
            raise ModelError("model parameters must be finite")

    @property
    def class_count(self) -> int:
        return int(self.weights.shape[0])

    @property
    def feature_dimension(self) -> int:
        return int(self.weights.shape[1])

    def decision(self, X) -> np.ndarray:
        """Raw logits for a (n x features) matrix, dense or CSR."""
        if X.shape[1] != self.feature_dimension:
            raise ModelError(
                f"feature dimension mismatch: got {X.shape[1]}, "
                f"model expects {self.feature_dimension}"
            )
        logits = X @ self.weights.T
        return np.asarray(logits) + self.bias

    def predict_proba(self, X) -> np.ndarray:
        return softmax(self.decision(X))

    def predict(self, X) -> np.ndarray:
        """Argmax class per row; ties resolve to the lowest class index."""
        return np.argmax(self.decision(X), axis=1)

    # -- serialization: {class_count, dimension, weights row-major, bias, metadata}

    def to_dict(self) -> dict:
        return {
            "class_count": self.class_count,
            "dimension": self.feature_dimension,
            "weights": [float(w) for w in self.weights.ravel(order="C")],
            "bias": [float(b) for b in self.bias],
            "metadata": self.metadata,
        }

    def save(self, path: str | Path) -> None:
        Path(path).write_text(
            json.dumps(self.to_dict(), sort_keys=True, indent=2) + "\n",
            encoding="utf-8",
        )

    @classmethod
    def from_dict(cls, data: dict) -> "LinearModel":
        try:
            classes = int(data["class_count"])
            dim = int(data["dimension"])
            weights = np.array(data["weights"], dtype=np.float64).reshape(classes, dim)
            bias = np.array(data["bias"], dtype=np.float64)
        except (KeyError, TypeError, ValueError) as exc:
            raise ModelError(f"malformed model payload: {exc}") from exc
        return cls(weights=weights, bias=bias, metadata=dict(data.get("metadata", {})))

    @classmethod
    def load(cls, path: str | Path) -> "LinearModel":
        return cls.from_dict(json.loads(Path(path).read_text(encoding="utf-8")))


def softmax(logits: np.ndarray) -> np.ndarray:
    """Row-wise softmax, shifted for stability."""
    z = logits - logits.max(axis=1, keepdims=True)
    e = np.exp(z)
    return e / e.sum(axis=1, keepdims=True)


def cross_entropy_and_grads(
    weights: np.ndarray,
    bias: np.ndarray,
    X,
    y: np.ndarray,
    l2: float = 0.0,
) -> tuple[float, np.ndarray, np.ndarray]:
    """Mean cross-entropy (+ L2) and its gradients on one batch.

    ``X`` is dense or CSR (n x features); ``y`` holds integer class labels.
    """
    n = X.shape[0]
    logits = np.asarray(X @ weights.T) + bias
    probs = softmax(logits)
    picked = np.clip(probs[np.arange(n), y], 1e-300, None)
    loss = float(-np.mean(np.log(picked)) + 0.5 * l2 * np.sum(weights * weights))

    delta = probs
    delta[np.arange(n), y] -= 1.0
    delta /= n
    grad_w = np.asarray((X.T @ delta)).T + l2 * weights
    grad_b = delta.sum(axis=0)
    return loss, grad_w, grad_b


def dataset_loss(model: LinearModel, X, y: np.ndarray, l2: float = 0.0) -> float:
    loss, _, _ = cross_entropy_and_grads(model.weights, model.bias, X, y, l2)
    return loss


def train_softmax(
    X,
    y: np.ndarray,
    class_count: int,
    config: TrainConfig,
    metadata: dict | None = None,
) -> tuple[LinearModel, list[float]]:
    """Train a softmax-regression model; returns (model, per-epoch loss trace).

    The trace records the full-dataset objective after each epoch. Zero
    epochs return the zero-initialized model and an empty trace.
    """
    n, dim = X.shape
    y = np.asarray(y, dtype=np.int64)
    if y.shape[0] != n:
        raise ModelError(f"got {n} feature rows but {y.shape[0]} labels")
    if n == 0:
        raise ModelError("cannot train on an empty dataset")
    if y.min() < 0 or y.max() >= class_count:
        raise ModelError(f"labels must lie in 0..{class_count - 1}")

    weights = np.zeros((class_count, dim), dtype=np.float64)
    bias = np.zeros(class_count, dtype=np.float64)
    sparse = sp.issparse(X)
    if sparse:
        X = X.tocsr()

    rng = np.random.default_rng(config.seed)
    batch = max(1, int(config.batch_size))
    losses: list[float] = []
    for epoch in range(config.epochs):
        order = rng.permutation(n)
        for start in range(0, n, batch):
            idx = order[start : start + batch]
            Xb = X[idx]
            _, gw, gb = cross_entropy_and_grads(weights, bias, Xb, y[idx], config.l2)
            weights -= config.learning_rate * gw
            bias -= config.learning_rate * gb
        loss, _, _ = cross_entropy_and_grads(weights, bias, X, y, config.l2)
        if not np.isfinite(loss):
            raise ModelError(f"non-finite training loss at epoch {epoch}")
        losses.append(loss)

    meta = dict(metadata or {})
    meta.update(
        {
            "seed": config.seed,
            "epochs": config.epochs,
            "learning_rate": config.learning_rate,
            "l2": config.l2,
            "batch_size": config.batch_size,
        }
    )
    return LinearModel(weights=weights, bias=bias, metadata=meta), losses

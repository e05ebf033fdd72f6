"""Synthetic union-of-subspaces data and linear probes trained on random features."""

from __future__ import annotations

from dataclasses import dataclass
from typing import Callable

import numpy as np
from scipy.special import logsumexp, softmax

from randsep.errors import DimensionError, DivergenceError
from randsep.rng import as_rng
from randsep.subspace import UnionOfSubspaces

DEFAULT_EPOCHS = 500
DEFAULT_LEARNING_RATE = 0.1


@dataclass(frozen=True)
class LabeledDataset:
    features: np.ndarray
    labels: np.ndarray
    n_classes: int | None = None

    def __post_init__(self):
        X = np.asarray(self.features, dtype=np.float64)
        y = np.asarray(self.labels)
        if X.ndim != 2 or y.ndim != 1 or X.shape[0] != y.shape[0]:
            raise DimensionError(f"features {X.shape} and labels {y.shape} do not line up")
        if y.size and not np.issubdtype(y.dtype, np.integer):
            raise ValueError("labels must be integers")
        y = y.astype(np.int64)
        K = int(y.max()) + 1 if self.n_classes is None else int(self.n_classes)
        if K < 2:
            raise ValueError(f"need at least 2 classes, got {K}")
        if y.min() < 0 or y.max() >= K:
            raise ValueError(f"labels must lie in [0, {K})")
        if np.any(np.bincount(y, minlength=K) == 0):
            raise ValueError("every class needs at least one sample")
        object.__setattr__(self, "features", X)
        object.__setattr__(self, "labels", y)
        object.__setattr__(self, "n_classes", K)

    @property
    def N(self) -> int:
        return self.features.shape[0]

    def map_features(self, fn: Callable[[np.ndarray], np.ndarray]) -> "LabeledDataset":
        return LabeledDataset(fn(self.features), self.labels, self.n_classes)


@dataclass(frozen=True)
class LinearProbe:
    weights: np.ndarray

    def __post_init__(self):
        V = np.asarray(self.weights, dtype=np.float64)
        if V.ndim != 2:
            raise DimensionError(f"probe weights must be K x D, got shape {V.shape}")
        if not np.all(np.isfinite(V)):
            raise ValueError("probe weights must be finite")
        object.__setattr__(self, "weights", V)

    def logits(self, features) -> np.ndarray:
        F = np.asarray(features, dtype=np.float64)
        if F.ndim != 2 or F.shape[1] != self.weights.shape[1]:
            raise DimensionError(
                f"expected N x {self.weights.shape[1]} features, got shape {F.shape}")
        return F @ self.weights.T

    def predict(self, features) -> np.ndarray:
        # argmax returns the first maximum: ties go to the lowest class index
        return np.argmax(self.logits(features), axis=1)


def generate_uos_dataset(union: UnionOfSubspaces, n_per_class: int, rng=None) -> LabeledDataset:
    """Rows U_k z with z ~ N(0, I_r), ``n_per_class`` per subspace, class-major order."""
    if n_per_class < 1:
        raise ValueError(f"n_per_class must be positive, got {n_per_class}")
    rng = as_rng(rng)
    blocks, labels = [], []
    for k, s in enumerate(union):
        z = rng.standard_normal((n_per_class, s.r))
        blocks.append(z @ s.basis.T)
        labels.append(np.full(n_per_class, k, dtype=np.int64))
    return LabeledDataset(np.vstack(blocks), np.concatenate(labels), union.K)


def cross_entropy(V: np.ndarray, F: np.ndarray, labels: np.ndarray) -> tuple[float, np.ndarray]:
    """Mean softmax cross-entropy of logits F V^T and its gradient in V."""
    logits = F @ V.T
    N = F.shape[0]
    rows = np.arange(N)
    loss = float(np.mean(logsumexp(logits, axis=1) - logits[rows, labels]))
    P = softmax(logits, axis=1)
    P[rows, labels] -= 1.0
    return loss, P.T @ F / N


def _canonical_order(data: LabeledDataset) -> np.ndarray:
    keys = tuple(data.features[:, j] for j in range(data.features.shape[1] - 1, -1, -1))
    return np.lexsort(keys + (data.labels,))


def train_probe(data: LabeledDataset, epochs: int = DEFAULT_EPOCHS,
                learning_rate: float = DEFAULT_LEARNING_RATE,
                on_epoch: Callable[[int, LinearProbe, float], None] | None = None) -> LinearProbe:
    """Full-batch gradient descent on cross-entropy from V = 0, no bias.

    ``on_epoch(epoch, probe, loss)`` sees the probe and loss before each update
    (epoch 0 is the initialization) and once more after the last update.

    Rows are put in a canonical order first so the result does not depend on
    how the dataset happens to be shuffled.
    """
    if not learning_rate > 0:
        raise ValueError(f"learning_rate must be positive, got {learning_rate}")
    if epochs < 0:
        raise ValueError(f"epochs must be non-negative, got {epochs}")
    order = _canonical_order(data)
    F = data.features[order]
    y = data.labels[order]
    V = np.zeros((data.n_classes, F.shape[1]))
    for epoch in range(epochs + 1):
        # overflow is reported as DivergenceError below
        with np.errstate(over="ignore", invalid="ignore"):
            loss, grad = cross_entropy(V, F, y)
        if not np.isfinite(loss) or not np.all(np.isfinite(grad)):
            raise DivergenceError(epoch, loss)
        if on_epoch is not None:
            on_epoch(epoch, LinearProbe(V.copy()), loss)
        if epoch == epochs:
            break
        with np.errstate(over="ignore", invalid="ignore"):
            V = V - learning_rate * grad
    return LinearProbe(V)


def accuracy(probe: LinearProbe, data: LabeledDataset) -> float:
    return float(np.mean(probe.predict(data.features) == data.labels))

"""Random feature maps x -> sigma(W x) with Gaussian weights and no bias."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.special import ndtr

from randsep.errors import DimensionError
from randsep.rng import as_rng

ACTIVATIONS = ("quadratic", "relu", "leaky_relu", "elu", "gelu", "identity")
_DEFAULT_PARAM = {"leaky_relu": 0.01, "elu": 1.0}


@dataclass(frozen=True)
class Activation:
    """Entry-wise nonlinearity. ``param`` is the negative slope for leaky_relu
    and alpha for elu; it is ignored by the other activations."""

    name: str
    param: float | None = None

    def __post_init__(self):
        if self.name not in ACTIVATIONS:
            raise ValueError(f"unknown activation {self.name!r}; expected one of {ACTIVATIONS}")
        if self.name in _DEFAULT_PARAM:
            param = _DEFAULT_PARAM[self.name] if self.param is None else float(self.param)
            if not param > 0:
                raise ValueError(f"{self.name} parameter must be positive, got {param}")
            object.__setattr__(self, "param", param)
        elif self.param is not None:
            raise ValueError(f"{self.name} takes no parameter")

    @classmethod
    def parse(cls, text: str) -> "Activation":
        """Parse ``"relu"``, ``"leaky_relu:0.01"``, ``"elu:1"`` and the like."""
        if isinstance(text, Activation):
            return text
        name, _, param = text.strip().partition(":")
        return cls(name.strip(), float(param) if param else None)

    def __str__(self):
        if self.param is None:
            return self.name
        return f"{self.name}:{self.param:g}"

    def __call__(self, z: np.ndarray) -> np.ndarray:
        z = np.asarray(z, dtype=np.float64)
        if self.name == "quadratic":
            return z * z
        if self.name == "relu":
            return np.maximum(z, 0.0)
        if self.name == "leaky_relu":
            return np.where(z > 0, z, self.param * z)
        if self.name == "elu":
            return np.where(z > 0, z, self.param * np.expm1(np.minimum(z, 0.0)))
        if self.name == "gelu":
            # exact form z * Phi(z), not the tanh approximation
            return z * ndtr(z)
        return z.copy()


QUADRATIC = Activation("quadratic")


@dataclass(frozen=True)
class RandomFeatureMap:
    weights: np.ndarray
    activation: Activation = QUADRATIC
    weight_std: float = 1.0

    def __post_init__(self):
        w = np.array(self.weights, dtype=np.float64)
        if w.ndim != 2 or w.shape[0] < 1 or w.shape[1] < 1:
            raise DimensionError(f"weights must be a non-empty D x d matrix, got shape {w.shape}")
        if not np.all(np.isfinite(w)):
            raise ValueError("weights must be finite")
        w.setflags(write=False)
        object.__setattr__(self, "weights", w)
        if not isinstance(self.activation, Activation):
            object.__setattr__(self, "activation", Activation.parse(self.activation))

    @property
    def D(self) -> int:
        return self.weights.shape[0]

    @property
    def d(self) -> int:
        return self.weights.shape[1]

    def scaled(self, c: float) -> "RandomFeatureMap":
        return RandomFeatureMap(c * self.weights, self.activation, c * self.weight_std)

    def __call__(self, x):
        x = np.asarray(x)
        return apply_batch(self, x) if x.ndim == 2 else apply(self, x)


def sample_feature_map(D: int, d: int, activation="quadratic", weight_std: float = 1.0,
                       rng=None) -> RandomFeatureMap:
    if D < 1 or d < 1:
        raise DimensionError(f"need D, d >= 1, got D={D}, d={d}")
    if not weight_std > 0:
        raise ValueError(f"weight_std must be positive, got {weight_std}")
    w = weight_std * as_rng(rng).standard_normal((D, d))
    return RandomFeatureMap(w, Activation.parse(activation), float(weight_std))


def _preactivations(x: np.ndarray, w: np.ndarray) -> np.ndarray:
    # Accumulate over input coordinates in a fixed order so every row gets
    # exactly the same arithmetic whether it is applied alone or in a batch;
    # BLAS matmul does not guarantee that.
    out = np.zeros((x.shape[0], w.shape[0]))
    for j in range(x.shape[1]):
        out += np.multiply.outer(x[:, j], w[:, j])
    return out


def apply_batch(fmap: RandomFeatureMap, X) -> np.ndarray:
    """Map each row of the N x d matrix ``X`` to its D features."""
    X = np.asarray(X, dtype=np.float64)
    if X.ndim != 2 or X.shape[1] != fmap.d:
        raise DimensionError(f"expected an N x {fmap.d} matrix, got shape {X.shape}")
    return fmap.activation(_preactivations(X, fmap.weights))


def apply(fmap: RandomFeatureMap, x) -> np.ndarray:
    x = np.asarray(x, dtype=np.float64)
    if x.ndim != 1 or x.shape[0] != fmap.d:
        raise DimensionError(f"expected a vector of length {fmap.d}, got shape {x.shape}")
    return apply_batch(fmap, x[None, :])[0]

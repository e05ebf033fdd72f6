"""Separability certificates and width bounds for quadratic random features.

With quadratic activation, v^T f(U alpha) = alpha^T (sum_n v_n x_n x_n^T) alpha where
x_n = U^T w_n, so a sign vector v separates f(S1) from f(S2) exactly when

    Q1 = sum_n v_n x_n x_n^T  is positive definite, and
    Q2 = sum_n v_n y_n y_n^T  is negative definite.

``certify_binary`` checks this for the projection-based choice
v_n = sign(||x_n||^2 - ||y_n||^2); ``brute_force_separable`` searches all 2^D signs.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Sequence

import numpy as np

from randsep.errors import AssumptionViolation, CostError, DimensionError, UnsupportedActivation
from randsep.features import RandomFeatureMap
from randsep.subspace import (
    Subspace,
    UnionOfSubspaces,
    concat_span,
    extend_basis,
    principal_angles,
)
from randsep.rng import as_rng

PD_RTOL = 1e-9
BRUTE_FORCE_MAX_D = 24
_BRUTE_FORCE_CHUNK = 1 << 14


@dataclass(frozen=True)
class SeparabilityCertificate:
    v: np.ndarray
    q1: np.ndarray
    q2: np.ndarray
    lambda_min_q1: float
    lambda_max_q2: float
    tol_pd: float
    separable: bool
    theta: np.ndarray

    @property
    def theta_min(self) -> float:
        return float(self.theta[0])


@dataclass(frozen=True)
class WidthBoundReport:
    r: int
    K: int
    theta: np.ndarray
    delta: float
    gamma1: float
    gamma2: float
    min_width: int
    success_probability: float
    critical_class: int | None = None

    @property
    def theta_min(self) -> float:
        return float(np.min(self.theta))


def _check_pair(fmap: RandomFeatureMap, s1: Subspace, s2: Subspace):
    if s1.d != s2.d:
        raise DimensionError(f"ambient dimensions differ: {s1.d} vs {s2.d}")
    if fmap.d != s1.d:
        raise DimensionError(f"feature map expects d={fmap.d}, subspaces live in R^{s1.d}")
    if s1.r != s2.r:
        raise AssumptionViolation(f"subspace dimensions differ: {s1.r} vs {s2.r}")


def _projections(fmap, s1, s2):
    return fmap.weights @ s1.basis, fmap.weights @ s2.basis


def _signs(X: np.ndarray, Y: np.ndarray) -> np.ndarray:
    nx = np.einsum("ij,ij->i", X, X)
    ny = np.einsum("ij,ij->i", Y, Y)
    # ties have probability zero; they go to +1
    return np.where(nx >= ny, 1.0, -1.0)


def _tolerance(X: np.ndarray, Y: np.ndarray) -> float:
    # |Q| is dominated by the unsigned Gram matrices, whatever v is
    scale = max(np.linalg.eigvalsh(X.T @ X)[-1], np.linalg.eigvalsh(Y.T @ Y)[-1])
    return PD_RTOL * float(scale)


def _signed_gram(v: np.ndarray, X: np.ndarray) -> np.ndarray:
    q = (X * v[:, None]).T @ X
    return 0.5 * (q + q.T)


def projection_classifier(fmap: RandomFeatureMap, s1: Subspace, s2: Subspace) -> np.ndarray:
    """v_n = +1 if row w_n projects more strongly onto s1 than onto s2, else -1."""
    _check_pair(fmap, s1, s2)
    return _signs(*_projections(fmap, s1, s2))


def certify_binary(fmap: RandomFeatureMap, s1: Subspace, s2: Subspace) -> SeparabilityCertificate:
    """Check whether the projection-based classifier separates f(s1) from f(s2).

    A positive verdict proves separability. A negative one only says this
    particular v fails.
    """
    if fmap.activation.name != "quadratic":
        raise UnsupportedActivation(
            f"certificates need quadratic activation, got {fmap.activation}")
    _check_pair(fmap, s1, s2)
    X, Y = _projections(fmap, s1, s2)
    v = _signs(X, Y)
    q1 = _signed_gram(v, X)
    q2 = _signed_gram(v, Y)
    lam1 = float(np.linalg.eigvalsh(q1)[0])
    lam2 = float(np.linalg.eigvalsh(q2)[-1])
    tol = _tolerance(X, Y)
    return SeparabilityCertificate(
        v=v, q1=q1, q2=q2,
        lambda_min_q1=lam1, lambda_max_q2=lam2, tol_pd=tol,
        separable=bool(lam1 > tol and lam2 < -tol),
        theta=principal_angles(s1, s2).angles,
    )


def brute_force_separable(fmap: RandomFeatureMap, s1: Subspace, s2: Subspace,
                          max_D: int = BRUTE_FORCE_MAX_D) -> bool:
    """Exhaustive search over all sign vectors v in {-1, +1}^D."""
    if fmap.activation.name != "quadratic":
        raise UnsupportedActivation(
            f"exhaustive search needs quadratic activation, got {fmap.activation}")
    _check_pair(fmap, s1, s2)
    D = fmap.D
    if D > max_D:
        raise CostError(f"D={D} would need 2^{D} eigenvalue checks (limit D <= {max_D})")
    X, Y = _projections(fmap, s1, s2)
    r = X.shape[1]
    tol = _tolerance(X, Y)
    outer_x = np.einsum("ni,nj->nij", X, X).reshape(D, r * r)
    outer_y = np.einsum("ni,nj->nij", Y, Y).reshape(D, r * r)
    bits = np.arange(D)
    total = 1 << D
    for start in range(0, total, _BRUTE_FORCE_CHUNK):
        codes = np.arange(start, min(start + _BRUTE_FORCE_CHUNK, total))
        V = np.where((codes[:, None] >> bits) & 1, 1.0, -1.0)
        q1 = (V @ outer_x).reshape(-1, r, r)
        q2 = (V @ outer_y).reshape(-1, r, r)
        q1 = 0.5 * (q1 + q1.transpose(0, 2, 1))
        q2 = 0.5 * (q2 + q2.transpose(0, 2, 1))
        ok = np.linalg.eigvalsh(q1)[:, 0] > tol
        if not ok.any():
            continue
        ok[ok] = np.linalg.eigvalsh(q2[ok])[:, -1] < -tol
        if ok.any():
            return True
    return False


def _validate_angles(theta, expected_len: int) -> np.ndarray:
    theta = np.asarray(theta, dtype=np.float64).reshape(-1)
    if theta.size != expected_len:
        raise DimensionError(f"expected {expected_len} principal angles, got {theta.size}")
    if not np.all(np.isfinite(theta)):
        raise ValueError("angles must be finite")
    if np.any(theta <= 0):
        raise AssumptionViolation(
            f"principal angles must be strictly positive (min {theta.min():.3g}); the bound diverges")
    if np.any(theta > math.pi / 2 + 1e-12):
        raise ValueError(f"principal angles must lie in (0, pi/2], got max {theta.max():.6g}")
    return np.sort(theta)


def _validate_delta(delta: float) -> float:
    delta = float(delta)
    if not 0 < delta < 1:
        raise ValueError(f"delta must lie in (0, 1), got {delta}")
    return delta


def _gammas(r: int, theta: np.ndarray) -> tuple[float, float]:
    gamma1 = math.sqrt(2 / math.pi) * math.sin(theta[0]) / math.sqrt(r + 1)
    gamma2 = math.sqrt(math.fsum(np.sin(theta) ** 2)) / r
    return gamma1, gamma2


def _width_prefactor(r: int, theta: np.ndarray) -> float:
    root = math.sqrt(math.fsum(np.sin(theta) ** 2))
    return 2 * math.pi * (4 * r * r + root) * (r + 1) / math.sin(theta[0]) ** 2


def width_bound_binary(r: int, theta, delta: float) -> WidthBoundReport:
    """Smallest integer width D for which two r-dimensional subspaces with
    principal angles ``theta`` are separated with probability >= 1 - delta."""
    if r < 1:
        raise DimensionError(f"r must be positive, got {r}")
    theta = _validate_angles(theta, r)
    delta = _validate_delta(delta)
    gamma1, gamma2 = _gammas(r, theta)
    width = _width_prefactor(r, theta) * math.log(2 * r / delta)
    return WidthBoundReport(r=r, K=2, theta=theta, delta=delta, gamma1=gamma1, gamma2=gamma2,
                            min_width=max(1, math.ceil(width)),
                            success_probability=1 - delta)


def width_bound_multiclass(r: int, K: int, per_class_theta: Sequence, delta: float) -> WidthBoundReport:
    """One-vs-all width bound for K subspaces of dimension r.

    ``per_class_theta[k]`` holds the (K-1)*r principal angles between the
    enlarged class-k subspace and the span of the other classes.
    """
    if K < 2:
        raise ValueError(f"K must be at least 2, got {K}")
    if r < 1:
        raise DimensionError(f"r must be positive, got {r}")
    if len(per_class_theta) != K:
        raise DimensionError(f"expected {K} angle vectors, got {len(per_class_theta)}")
    delta = _validate_delta(delta)
    r_tilde = (K - 1) * r
    thetas = [_validate_angles(t, r_tilde) for t in per_class_theta]
    prefactors = [_width_prefactor(r_tilde, t) for t in thetas]
    k_star = int(np.argmax(prefactors))
    gamma1, gamma2 = _gammas(r_tilde, thetas[k_star])
    width = prefactors[k_star] * math.log(2 * K * r_tilde / delta)
    return WidthBoundReport(r=r, K=K, theta=np.stack(thetas), delta=delta,
                            gamma1=gamma1, gamma2=gamma2,
                            min_width=max(1, math.ceil(width)),
                            success_probability=1 - K * delta, critical_class=k_star)


def one_vs_all_pairs(union: UnionOfSubspaces, rng=None) -> list[tuple[Subspace, Subspace]]:
    """For each class k, the pair (enlarged S_k, span of all other classes)."""
    r = union.common_rank()
    K = union.K
    r_tilde = (K - 1) * r
    if not 2 * r_tilde < union.d:
        raise AssumptionViolation(
            f"one-vs-all reduction needs (K-1)r < d/2, got (K-1)r={r_tilde}, d={union.d}")
    rng = as_rng(rng)
    pairs = []
    for k in range(K):
        rest = concat_span([s for j, s in enumerate(union) if j != k])
        pairs.append((extend_basis(union[k], rest.r, rng), rest))
    return pairs


def certify_multiclass(fmap: RandomFeatureMap, union: UnionOfSubspaces,
                       rng=None) -> list[SeparabilityCertificate]:
    """One certificate per class: S_k against the union of all other classes."""
    if fmap.activation.name != "quadratic":
        raise UnsupportedActivation(
            f"certificates need quadratic activation, got {fmap.activation}")
    return [certify_binary(fmap, own, rest) for own, rest in one_vs_all_pairs(union, rng)]


def empirical_separable(features_pos, features_neg, max_iters: int = 1000) -> bool:
    """Perceptron through the origin on unit-normalized rows.

    True means a hyperplane strictly separating the given points was found.
    False is inconclusive.
    """
    pos = np.atleast_2d(np.asarray(features_pos, dtype=np.float64))
    neg = np.atleast_2d(np.asarray(features_neg, dtype=np.float64))
    if pos.shape[1] != neg.shape[1]:
        raise DimensionError(f"feature widths differ: {pos.shape[1]} vs {neg.shape[1]}")
    pts = np.vstack([pos, -neg])
    norms = np.linalg.norm(pts, axis=1, keepdims=True)
    pts = np.divide(pts, norms, out=np.zeros_like(pts), where=norms > 0)
    w = np.zeros(pts.shape[1])
    for _ in range(max_iters):
        if np.all(pts @ w > 0):
            return True
        for p in pts:
            if p @ w <= 0:
                w += p
    return False

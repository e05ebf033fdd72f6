"""Linear subspaces through the origin: sampling, principal angles and spans."""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from randsep.errors import AssumptionViolation, DimensionError
from randsep.rng import as_rng

ORTHONORMAL_TOL = 1e-10
RANK_RTOL = 1e-10


@dataclass(frozen=True)
class Subspace:
    """An r-dimensional subspace of R^d stored as a d x r orthonormal basis."""

    basis: np.ndarray

    def __post_init__(self):
        basis = np.array(self.basis, dtype=np.float64)
        if basis.ndim == 1:
            basis = basis[:, None]
        if basis.ndim != 2:
            raise DimensionError(f"basis must be a matrix, got shape {basis.shape}")
        d, r = basis.shape
        if not 1 <= r <= d:
            raise DimensionError(f"need 1 <= r <= d, got d={d}, r={r}")
        err = np.linalg.norm(basis.T @ basis - np.eye(r))
        if not err <= ORTHONORMAL_TOL:
            raise ValueError(f"basis columns are not orthonormal (||B^T B - I||_F = {err:.3e})")
        basis.setflags(write=False)
        object.__setattr__(self, "basis", basis)

    @property
    def d(self) -> int:
        return self.basis.shape[0]

    @property
    def r(self) -> int:
        return self.basis.shape[1]

    @classmethod
    def from_vectors(cls, vectors) -> "Subspace":
        """Orthonormalize the columns of ``vectors`` (d x m, full column rank)."""
        a = np.asarray(vectors, dtype=np.float64)
        if a.ndim == 1:
            a = a[:, None]
        q, rr = np.linalg.qr(a)
        diag = np.abs(np.diag(rr))
        if diag.min() <= RANK_RTOL * max(diag.max(), 1.0):
            raise DimensionError("vectors are linearly dependent")
        return cls(q)

    def projector(self) -> np.ndarray:
        return self.basis @ self.basis.T

    def residual(self, x) -> np.ndarray:
        """Component of ``x`` (vector or rows of a matrix) orthogonal to the subspace."""
        x = np.asarray(x, dtype=np.float64)
        return x - (x @ self.basis) @ self.basis.T


@dataclass(frozen=True)
class UnionOfSubspaces:
    members: tuple[Subspace, ...]

    def __post_init__(self):
        members = tuple(self.members)
        if len(members) < 2:
            raise ValueError(f"a union needs at least 2 subspaces, got {len(members)}")
        dims = {s.d for s in members}
        if len(dims) != 1:
            raise DimensionError(f"members have different ambient dimensions {sorted(dims)}")
        object.__setattr__(self, "members", members)

    @property
    def K(self) -> int:
        return len(self.members)

    @property
    def d(self) -> int:
        return self.members[0].d

    def common_rank(self) -> int:
        """The shared intrinsic dimension; raises if members differ."""
        ranks = {s.r for s in self.members}
        if len(ranks) != 1:
            raise AssumptionViolation(f"subspaces must share one dimension, got {sorted(ranks)}")
        return ranks.pop()

    def __len__(self):
        return len(self.members)

    def __iter__(self):
        return iter(self.members)

    def __getitem__(self, k):
        return self.members[k]


@dataclass(frozen=True)
class PrincipalAngles:
    angles: np.ndarray = field()

    def __post_init__(self):
        a = np.array(self.angles, dtype=np.float64).reshape(-1)
        a.setflags(write=False)
        object.__setattr__(self, "angles", a)

    @property
    def theta_min(self) -> float:
        return float(self.angles[0])

    @property
    def sines(self) -> np.ndarray:
        return np.sin(self.angles)

    def __len__(self):
        return len(self.angles)

    def __array__(self, dtype=None, copy=None):
        return np.asarray(self.angles, dtype=dtype)


def sample_stiefel(d: int, r: int, rng=None) -> Subspace:
    """Draw a d x r basis uniformly from the Stiefel manifold.

    QR of a Gaussian matrix, with each column's sign chosen so the triangular
    factor has a positive diagonal. Skipping that correction biases the law.
    """
    if r < 1 or d < 1:
        raise DimensionError(f"dimensions must be positive, got d={d}, r={r}")
    if r > d:
        raise DimensionError(f"cannot fit r={r} orthonormal columns in R^{d}")
    g = as_rng(rng).standard_normal((d, r))
    q, rr = np.linalg.qr(g)
    signs = np.sign(np.diag(rr))
    signs[signs == 0] = 1.0
    return Subspace(q * signs)


def _check_same_ambient(s1: Subspace, s2: Subspace):
    if s1.d != s2.d:
        raise DimensionError(f"ambient dimensions differ: {s1.d} vs {s2.d}")


def principal_angles(s1: Subspace, s2: Subspace) -> PrincipalAngles:
    _check_same_ambient(s1, s2)
    sv = np.linalg.svd(s1.basis.T @ s2.basis, compute_uv=False)
    # descending singular values give ascending angles
    return PrincipalAngles(np.arccos(np.clip(sv, 0.0, 1.0)))


def projection_difference_spectrum(s1: Subspace, s2: Subspace) -> np.ndarray:
    """Eigenvalues of U1 U1^T - U2 U2^T in descending order.

    For equal dimensions these are +sin(theta_l), -sin(theta_l) and d - 2r zeros.
    """
    _check_same_ambient(s1, s2)
    if s1.r != s2.r:
        raise AssumptionViolation(f"subspace dimensions differ: {s1.r} vs {s2.r}")
    phi = s1.projector() - s2.projector()
    return np.linalg.eigvalsh(phi)[::-1]


def extend_basis(s: Subspace, target_r: int, rng=None) -> Subspace:
    """Enlarge ``s`` to ``target_r`` dimensions with random complement directions.

    The first ``s.r`` columns of the result are ``s.basis`` itself.
    """
    if target_r > s.d:
        raise DimensionError(f"target_r={target_r} exceeds ambient dimension {s.d}")
    if target_r < s.r:
        raise DimensionError(f"target_r={target_r} is smaller than r={s.r}")
    extra = target_r - s.r
    if extra == 0:
        return s
    g = as_rng(rng).standard_normal((s.d, extra))
    g = s.residual(g.T).T
    q, _ = np.linalg.qr(g)
    # a second projection pass removes what roundoff left behind
    q = s.residual(q.T).T
    q, _ = np.linalg.qr(q)
    return Subspace(np.hstack([s.basis, q]))


def concat_span(subs: Sequence[Subspace]) -> Subspace:
    """Orthonormal basis of the column space of [U_1 U_2 ... U_m]."""
    subs = list(subs)
    if not subs:
        raise ValueError("need at least one subspace")
    for s in subs[1:]:
        _check_same_ambient(subs[0], s)
    stacked = np.hstack([s.basis for s in subs])
    u, sv, _ = np.linalg.svd(stacked, full_matrices=False)
    rank = int(np.sum(sv > RANK_RTOL * sv[0]))
    return Subspace(u[:, :rank])

"""Monte-Carlo checks of the moment lemmas behind the width bound.

Throughout, w ~ N(0, I_d), x = U1^T w, y = U2^T w, and (a, b) is (x, y)
conditioned on ||x||^2 > ||y||^2. Every statistical check passes when the
estimate lies within its bounds up to three standard errors.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from fractions import Fraction

import numpy as np
from scipy.special import gammaln

from randsep.certify import certify_binary, width_bound_binary
from randsep.errors import AssumptionViolation, PathologicalGeometryError
from randsep.features import sample_feature_map
from randsep.rng import as_rng
from randsep.subspace import Subspace, principal_angles, projection_difference_spectrum, sample_stiefel

SE_SLACK = 3.0
MAX_CONSECUTIVE_REJECTIONS = 10_000
SPECTRUM_TOL = 1e-9


@dataclass(frozen=True)
class Check:
    statistic: str
    estimate: float
    std_error: float
    lower: float
    upper: float

    @property
    def passed(self) -> bool:
        slack = SE_SLACK * self.std_error
        return bool(self.lower - slack <= self.estimate <= self.upper + slack)


@dataclass
class LemmaReport:
    name: str
    samples: int
    checks: list[Check] = field(default_factory=list)

    @property
    def passed(self) -> bool:
        return all(c.passed for c in self.checks)

    def add(self, statistic, estimate, std_error, lower=-math.inf, upper=math.inf):
        self.checks.append(Check(statistic, float(estimate), float(std_error),
                                 float(lower), float(upper)))

    def add_mean(self, statistic, values, lower=-math.inf, upper=math.inf):
        values = np.asarray(values, dtype=np.float64)
        self.add(statistic, values.mean(), _std_error(values), lower, upper)

    def check(self, statistic: str) -> Check:
        for c in self.checks:
            if c.statistic == statistic:
                return c
        raise KeyError(statistic)


def _std_error(values: np.ndarray) -> float:
    if values.size < 2:
        return math.inf
    return float(values.std(ddof=1) / math.sqrt(values.size))


class ConditionedPairSampler:
    """Rejection sampler for (a, b) = (U1^T w, U2^T w) given ||U1^T w|| > ||U2^T w||.

    Acceptance probability is 1/2 by symmetry. Rejected draws are discarded
    rather than swapped; swapping would exchange the roles of the subspaces.
    """

    def __init__(self, s1: Subspace, s2: Subspace, rng=None):
        if s1.d != s2.d or s1.r != s2.r:
            raise AssumptionViolation("subspaces must share ambient and intrinsic dimension")
        self.angles = principal_angles(s1, s2)
        if not self.angles.theta_min > 0:
            raise AssumptionViolation("the subspaces intersect (smallest principal angle is 0)")
        self.s1, self.s2 = s1, s2
        self.rng = as_rng(rng)
        self.attempts = 0
        self.accepted = 0

    @property
    def acceptance_rate(self) -> float:
        return self.accepted / self.attempts if self.attempts else math.nan

    def _draw(self, n: int):
        w = self.rng.standard_normal((n, self.s1.d))
        x, y = w @ self.s1.basis, w @ self.s2.basis
        keep = np.einsum("ij,ij->i", x, x) > np.einsum("ij,ij->i", y, y)
        self.attempts += n
        self.accepted += int(keep.sum())
        return x[keep], y[keep], keep

    def sample(self) -> tuple[np.ndarray, np.ndarray]:
        for _ in range(MAX_CONSECUTIVE_REJECTIONS):
            x, y, _ = self._draw(1)
            if len(x):
                return x[0], y[0]
        raise PathologicalGeometryError(
            f"{MAX_CONSECUTIVE_REJECTIONS} consecutive rejections")

    def sample_many(self, n: int) -> tuple[np.ndarray, np.ndarray]:
        """``n`` conditioned pairs as two n x r arrays."""
        xs, ys = [], []
        have, run = 0, 0
        while have < n:
            batch = max(64, 2 * (n - have) + 64)
            x, y, keep = self._draw(batch)
            hits = np.flatnonzero(keep)
            if hits.size and run + hits[0] < MAX_CONSECUTIVE_REJECTIONS:
                # rejections after the last acceptance carry into the next batch
                run = batch - 1 - int(hits[-1])
            else:
                run += batch if not hits.size else int(hits[0])
            if run >= MAX_CONSECUTIVE_REJECTIONS:
                raise PathologicalGeometryError(f"{run} consecutive rejections")
            xs.append(x)
            ys.append(y)
            have += len(x)
        return np.vstack(xs)[:n], np.vstack(ys)[:n]


def sample_conditioned_pair(sampler: ConditionedPairSampler):
    return sampler.sample()


def chi2_order_gap(m) -> float:
    """(2/sqrt(pi)) Gamma((m+1)/2) / Gamma(m/2), the offset of E[max] and E[min]
    of two iid chi^2_m variables from m.

    For integer m the Gamma ratio is a rational number (times 1/pi for odd m),
    evaluated exactly here.
    """
    if float(m) == int(m) and m >= 1:
        m = int(m)
        k = m // 2
        if m % 2 == 0:
            return float(Fraction(2 * math.factorial(2 * k),
                                  4 ** k * math.factorial(k) * math.factorial(k - 1)))
        return float(Fraction(2 * 4 ** k * math.factorial(k) ** 2, math.factorial(2 * k))) / math.pi
    return 2 / math.sqrt(math.pi) * math.exp(gammaln((m + 1) / 2) - gammaln(m / 2))


def sandwich_gammas(angles) -> tuple[float, float]:
    """gamma1 = sqrt(2/pi) sin(theta_min)/sqrt(r+1), gamma2 = sqrt(sum sin^2)/r."""
    angles = np.sort(np.asarray(angles, dtype=np.float64))
    r = angles.size
    gamma1 = math.sqrt(2 / math.pi) * math.sin(angles[0]) / math.sqrt(r + 1)
    gamma2 = math.sqrt(math.fsum(np.sin(angles) ** 2)) / r
    return gamma1, gamma2


def verify_spectrum(d: int, r: int, pairs: int, rng=None) -> LemmaReport:
    """Eigenvalues of U1U1^T - U2U2^T against {+-sin theta} and d - 2r zeros."""
    rng = as_rng(rng)
    report = LemmaReport("projection_difference_spectrum", pairs)
    worst = 0.0
    for _ in range(pairs):
        s1, s2 = sample_stiefel(d, r, rng), sample_stiefel(d, r, rng)
        sines = principal_angles(s1, s2).sines
        expected = np.sort(np.concatenate([sines, -sines, np.zeros(d - 2 * r)]))[::-1]
        got = projection_difference_spectrum(s1, s2)
        worst = max(worst, float(np.max(np.abs(got - expected))))
    report.add("max_abs_deviation", worst, 0.0, 0.0, SPECTRUM_TOL)
    return report


def verify_order_statistics(m: int, n_samples: int, rng=None) -> LemmaReport:
    if m < 1:
        raise ValueError(f"degrees of freedom must be positive, got {m}")
    rng = as_rng(rng)
    X = rng.chisquare(m, n_samples)
    Y = rng.chisquare(m, n_samples)
    gap = chi2_order_gap(m)
    report = LemmaReport(f"chi2_order_statistics[m={m}]", n_samples)
    report.add_mean("mean_max", np.maximum(X, Y), m + gap, m + gap)
    report.add_mean("mean_min", np.minimum(X, Y), m - gap, m - gap)
    return report


def verify_isotropy(s1: Subspace, s2: Subspace, n_samples: int, rng=None) -> LemmaReport:
    """First and second moments of a and b in the coordinates of U1 and U2.

    Checks zero means, zero off-diagonal second moments and equal diagonal
    second moments (each diagonal entry against the first, on paired samples).
    """
    sampler = ConditionedPairSampler(s1, s2, rng)
    A, B = sampler.sample_many(n_samples)
    report = LemmaReport("isotropy", n_samples)
    r = A.shape[1]
    for tag, Z in (("a", A), ("b", B)):
        for i in range(r):
            report.add_mean(f"E[{tag}_{i}]", Z[:, i], 0.0, 0.0)
        for i in range(r):
            for j in range(i + 1, r):
                report.add_mean(f"E[{tag}_{i}{tag}_{j}]", Z[:, i] * Z[:, j], 0.0, 0.0)
        for i in range(1, r):
            report.add_mean(f"E[{tag}_{i}^2]-E[{tag}_0^2]", Z[:, i] ** 2 - Z[:, 0] ** 2, 0.0, 0.0)
    return report


def verify_sandwich(s1: Subspace, s2: Subspace, n_samples: int, rng=None) -> LemmaReport:
    """trace(E[aa^T])/r in [1+g1, 1+g2] and trace(E[bb^T])/r in [1-g2, 1-g1]."""
    sampler = ConditionedPairSampler(s1, s2, rng)
    A, B = sampler.sample_many(n_samples)
    r = A.shape[1]
    g1, g2 = sandwich_gammas(sampler.angles.angles)
    na = np.einsum("ij,ij->i", A, A)
    nb = np.einsum("ij,ij->i", B, B)
    report = LemmaReport("second_moment_sandwich", n_samples)
    report.add_mean("trace_E[aa^T]/r", na / r, 1 + g1, 1 + g2)
    report.add_mean("trace_E[bb^T]/r", nb / r, 1 - g2, 1 - g1)
    report.add_mean("(trace_a+trace_b)/r", (na + nb) / r, 2.0, 2.0)
    return report


def verify_bernstein_moments(s1: Subspace, s2: Subspace, p_max: int, n_samples: int,
                             rng=None) -> LemmaReport:
    """E[||a||^(2p)] <= p! (2r)^p for p = 2..p_max, and likewise for b.

    This is the top-eigenvalue form of E[(aa^T)^p] <= p!/2 (2r)^(p-2) 8r^2 I.
    """
    if not 2 <= p_max <= 4:
        raise ValueError(f"p_max must lie in [2, 4], got {p_max}")
    sampler = ConditionedPairSampler(s1, s2, rng)
    A, B = sampler.sample_many(n_samples)
    r = A.shape[1]
    na = np.einsum("ij,ij->i", A, A)
    nb = np.einsum("ij,ij->i", B, B)
    report = LemmaReport("bernstein_moments", n_samples)
    for p in range(2, p_max + 1):
        bound = math.factorial(p) * (2 * r) ** p
        report.add_mean(f"E[||a||^{2 * p}]", na ** p, upper=bound)
        report.add_mean(f"E[||b||^{2 * p}]", nb ** p, upper=bound)
    return report


def verify_acceptance_rate(s1: Subspace, s2: Subspace, n_attempts: int, rng=None) -> LemmaReport:
    rng = as_rng(rng)
    w = rng.standard_normal((n_attempts, s1.d))
    x, y = w @ s1.basis, w @ s2.basis
    hits = (np.einsum("ij,ij->i", x, x) > np.einsum("ij,ij->i", y, y)).astype(np.float64)
    report = LemmaReport("conditioning_acceptance", n_attempts)
    report.add_mean("acceptance_rate", hits, 0.5, 0.5)
    return report


def verify_failure_bound(d: int, r: int, delta: float, trials: int, rng=None,
                         width_scale: float = 1.0) -> LemmaReport:
    """Fraction of random (subspace pair, weight matrix) draws, at the width
    bound times ``width_scale``, where the certificate fails."""
    rng = as_rng(rng)
    failures = np.zeros(trials)
    for t in range(trials):
        s1, s2 = sample_stiefel(d, r, rng), sample_stiefel(d, r, rng)
        bound = width_bound_binary(r, principal_angles(s1, s2).angles, delta)
        D = max(1, math.ceil(width_scale * bound.min_width))
        fmap = sample_feature_map(D, d, "quadratic", 1.0, rng)
        failures[t] = not certify_binary(fmap, s1, s2).separable
    report = LemmaReport("failure_probability", trials)
    report.add("failure_fraction", failures.mean(), math.sqrt(delta * (1 - delta) / trials),
               upper=delta)
    return report

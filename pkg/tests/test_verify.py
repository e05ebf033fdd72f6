import math

import mpmath
import numpy as np
import pytest
from scipy.stats import ortho_group

from randsep.errors import AssumptionViolation, PathologicalGeometryError
from randsep.rng import make_rng
from randsep.subspace import Subspace, sample_stiefel
from randsep.verify import (
    Check,
    ConditionedPairSampler,
    LemmaReport,
    chi2_order_gap,
    sample_conditioned_pair,
    sandwich_gammas,
    verify_acceptance_rate,
    verify_bernstein_moments,
    verify_failure_bound,
    verify_isotropy,
    verify_order_statistics,
    verify_sandwich,
    verify_spectrum,
)

from conftest import line, plane_pair_with_angles


def generic_pair(seed=0, d=12, r=3):
    rng = make_rng(seed)
    return sample_stiefel(d, r, rng), sample_stiefel(d, r, rng)


class TestCheck:
    @pytest.mark.parametrize("est,se,lo,hi,ok", [
        (1.0, 0.0, 1.0, 1.0, True),
        (1.3, 0.1, 1.0, 1.0, True),
        (1.31, 0.1, 1.0, 1.0, False),
        (-5.0, 0.0, -math.inf, 0.0, True),
        (0.5, 0.1, 0.0, 0.1, False),
    ])
    def test_three_se_slack(self, est, se, lo, hi, ok):
        assert Check("s", est, se, lo, hi).passed is ok

    def test_report_lookup(self):
        rep = LemmaReport("x", 3)
        rep.add_mean("m", [1.0, 2.0, 3.0], 2.0, 2.0)
        assert rep.check("m").std_error == pytest.approx(1 / math.sqrt(3))
        assert rep.passed
        with pytest.raises(KeyError):
            rep.check("nope")


class TestSampler:
    def test_accepted_pairs_satisfy_condition(self):
        s1, s2 = generic_pair(1)
        A, B = ConditionedPairSampler(s1, s2, make_rng(2)).sample_many(5000)
        assert A.shape == B.shape == (5000, 3)
        assert np.all((A * A).sum(1) > (B * B).sum(1))

    def test_single_draw(self):
        s1, s2 = generic_pair(1)
        sampler = ConditionedPairSampler(s1, s2, make_rng(3))
        a, b = sample_conditioned_pair(sampler)
        assert a @ a > b @ b
        assert sampler.accepted == 1

    def test_acceptance_rate_tracked(self):
        s1, s2 = generic_pair(4)
        sampler = ConditionedPairSampler(s1, s2, make_rng(5))
        sampler.sample_many(20_000)
        p = sampler.acceptance_rate
        assert abs(p - 0.5) <= 3 * math.sqrt(0.25 / sampler.attempts)

    def test_acceptance_lemma(self):
        s1, s2 = generic_pair(6)
        rep = verify_acceptance_rate(s1, s2, 100_000, make_rng(7))
        assert rep.passed

    def test_intersecting_subspaces_rejected(self):
        with pytest.raises(AssumptionViolation):
            ConditionedPairSampler(line(1, 0, 0), line(1, 0, 0))

    def test_pathological_geometry(self, monkeypatch):
        import randsep.verify as verify
        monkeypatch.setattr(verify, "MAX_CONSECUTIVE_REJECTIONS", 5)
        sampler = ConditionedPairSampler(line(1, 0), line(0, 1), make_rng(0))
        sampler._draw = lambda n: (np.empty((0, 1)), np.empty((0, 1)), np.zeros(n, bool))
        with pytest.raises(PathologicalGeometryError):
            sampler.sample()
        with pytest.raises(PathologicalGeometryError):
            sampler.sample_many(3)

    def test_orthogonal_lines_are_chi2_order_statistics(self):
        A, B = ConditionedPairSampler(line(1, 0), line(0, 1), make_rng(8)).sample_many(200_000)
        a2, b2 = A[:, 0] ** 2, B[:, 0] ** 2
        se = a2.std(ddof=1) / math.sqrt(a2.size)
        assert abs(a2.mean() - (1 + 2 / math.pi)) <= 3 * se
        se = b2.std(ddof=1) / math.sqrt(b2.size)
        assert abs(b2.mean() - (1 - 2 / math.pi)) <= 3 * se


class TestOrderStatistics:
    @pytest.mark.parametrize("m", [1, 2, 3, 4, 7, 8, 2.5])
    def test_gap_matches_high_precision(self, m):
        m_ = mpmath.mpf(m)
        ref = 2 / mpmath.sqrt(mpmath.pi) * mpmath.gamma((m_ + 1) / 2) / mpmath.gamma(m_ / 2)
        assert chi2_order_gap(m) == pytest.approx(float(ref), rel=1e-14)

    def test_closed_forms(self):
        assert 4 + chi2_order_gap(4) == 5.5
        assert 2 + chi2_order_gap(2) == 3.0
        assert 8 + chi2_order_gap(8) == 10.1875

    @pytest.mark.parametrize("m", [2, 4, 8])
    def test_monte_carlo(self, m):
        rep = verify_order_statistics(m, 200_000, make_rng(9, m))
        assert rep.passed

    def test_sum_identity_per_draw(self):
        rng = make_rng(10)
        X, Y = rng.chisquare(3, 1000), rng.chisquare(3, 1000)
        assert np.array_equal(np.maximum(X, Y) + np.minimum(X, Y), X + Y)

    def test_invalid_m(self):
        with pytest.raises(ValueError):
            verify_order_statistics(0, 10)


class TestSpectrum:
    def test_lemma(self):
        assert verify_spectrum(10, 3, 20, make_rng(11)).passed


class TestIsotropy:
    def test_orthogonal_planes(self):
        s1, s2 = plane_pair_with_angles(8, [math.pi / 2] * 2)
        assert verify_isotropy(s1, s2, 100_000, make_rng(12)).passed

    def test_single_line_has_no_off_diagonals(self):
        rep = verify_isotropy(line(1, 0, 0), line(0, 1, 0), 1000, make_rng(13))
        assert not any("_0" in c.statistic and "_1" in c.statistic for c in rep.checks)
        assert rep.passed

    def test_unequal_angles_break_equal_diagonal(self):
        # conditioning favours the direction with the larger angle, so the
        # diagonal of E[aa^T] is not constant when the angles differ
        s1, s2 = plane_pair_with_angles(6, [0.2, math.pi / 2])
        rep = verify_isotropy(s1, s2, 100_000, make_rng(14))
        gap = rep.check("E[a_1^2]-E[a_0^2]")
        assert not gap.passed
        assert gap.estimate > 0.4

    def test_common_rotation_preserves_statistics(self):
        s1, s2 = plane_pair_with_angles(6, [0.7, 1.2])
        R = ortho_group.rvs(6, random_state=15)
        r1, r2 = Subspace(R @ s1.basis), Subspace(R @ s2.basis)
        a = verify_sandwich(s1, s2, 50_000, make_rng(16))
        b = verify_sandwich(r1, r2, 50_000, make_rng(17))
        for ca, cb in zip(a.checks, b.checks):
            assert abs(ca.estimate - cb.estimate) <= 4 * math.hypot(ca.std_error, cb.std_error)


class TestSandwich:
    def test_gammas(self):
        g1, g2 = sandwich_gammas([math.pi / 2])
        assert g1 == pytest.approx(1 / math.sqrt(math.pi))
        assert g2 == 1.0

    def test_generic_pair(self):
        s1, s2 = generic_pair(18)
        rep = verify_sandwich(s1, s2, 100_000, make_rng(19))
        assert rep.passed
        assert rep.check("(trace_a+trace_b)/r").passed

    def test_orthogonal_lines_match_order_statistics(self):
        rep = verify_sandwich(line(1, 0, 0), line(0, 0, 1), 200_000, make_rng(20))
        c = rep.check("trace_E[aa^T]/r")
        assert abs(c.estimate - (1 + chi2_order_gap(1))) <= 3 * c.std_error
        assert rep.passed


class TestBernstein:
    def test_generic_pair(self):
        s1, s2 = generic_pair(21)
        rep = verify_bernstein_moments(s1, s2, 3, 100_000, make_rng(22))
        assert rep.passed
        assert len(rep.checks) == 4

    def test_orthogonal_lines_p2(self):
        rep = verify_bernstein_moments(line(1, 0), line(0, 1), 2, 100_000, make_rng(23))
        c = rep.check("E[||a||^4]")
        assert c.upper == 8
        # E[max(X,Y)^2] for X,Y ~ chi^2_1 is 3 + 8/pi (mpmath quadrature in polar form)
        assert abs(c.estimate - (3 + 8 / math.pi)) <= 3 * c.std_error

    @pytest.mark.parametrize("p", [1, 5])
    def test_p_range(self, p):
        with pytest.raises(ValueError):
            verify_bernstein_moments(line(1, 0), line(0, 1), p, 10)


class TestFailureBound:
    def test_loose_delta(self):
        assert verify_failure_bound(6, 1, 0.5, 30, make_rng(24)).passed

    def test_guarantee(self):
        rep = verify_failure_bound(8, 2, 0.1, 200, make_rng(25))
        assert rep.passed
        assert rep.check("failure_fraction").estimate <= 0.1

    def test_far_below_bound_fails(self):
        rep = verify_failure_bound(8, 2, 0.1, 100, make_rng(26), width_scale=1 / 32)
        assert rep.check("failure_fraction").estimate > 0


def test_reports_are_reproducible():
    s1, s2 = generic_pair(27)
    a = verify_bernstein_moments(s1, s2, 3, 20_000, make_rng(28))
    b = verify_bernstein_moments(s1, s2, 3, 20_000, make_rng(28))
    assert a.checks == b.checks

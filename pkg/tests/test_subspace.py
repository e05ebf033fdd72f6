import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st
from scipy.stats import ortho_group

from randsep.errors import AssumptionViolation, DimensionError
from randsep.subspace import (
    Subspace,
    UnionOfSubspaces,
    concat_span,
    extend_basis,
    principal_angles,
    projection_difference_spectrum,
    sample_stiefel,
)

from conftest import line, plane_pair_with_angles


class TestSubspaceType:
    def test_rejects_non_orthonormal(self):
        with pytest.raises(ValueError):
            Subspace(np.array([[1.0, 1.0], [0.0, 1.0]]))

    def test_rejects_too_many_columns(self):
        with pytest.raises(DimensionError):
            Subspace(np.eye(2, 3))

    def test_basis_is_read_only(self):
        s = Subspace(np.eye(3)[:, :2])
        with pytest.raises(ValueError):
            s.basis[0, 0] = 5.0

    def test_union_needs_two_members_with_common_ambient(self):
        a = Subspace(np.eye(3)[:, :1])
        with pytest.raises(ValueError):
            UnionOfSubspaces([a])
        with pytest.raises(DimensionError):
            UnionOfSubspaces([a, Subspace(np.eye(4)[:, :1])])

    def test_union_allows_mixed_ranks_until_asked(self):
        u = UnionOfSubspaces([Subspace(np.eye(5)[:, :1]), Subspace(np.eye(5)[:, 1:3])])
        assert u.K == 2
        with pytest.raises(AssumptionViolation):
            u.common_rank()


class TestSampleStiefel:
    def test_full_dimension_is_orthogonal(self):
        q = sample_stiefel(3, 3, np.random.default_rng(1)).basis
        assert abs(abs(np.linalg.det(q)) - 1) < 1e-10

    def test_orthonormal_columns(self):
        q = sample_stiefel(8, 2, np.random.default_rng(7)).basis
        assert np.linalg.norm(q.T @ q - np.eye(2)) < 1e-10

    def test_r_larger_than_d(self):
        with pytest.raises(DimensionError):
            sample_stiefel(3, 4, np.random.default_rng(0))

    def test_same_seed_same_basis(self):
        a = sample_stiefel(10, 3, np.random.default_rng(5)).basis
        b = sample_stiefel(10, 3, np.random.default_rng(5)).basis
        assert np.array_equal(a, b)

    def test_projector_mean_is_scaled_identity(self):
        # Under the uniform law E[U U^T] = (r/d) I. Compare entrywise within 3 SE.
        d, r, n = 16, 4, 10_000
        rng = np.random.default_rng(2024)
        P = np.stack([sample_stiefel(d, r, rng).projector() for _ in range(n)])
        mean = P.mean(axis=0)
        se = P.std(axis=0, ddof=1) / math.sqrt(n)
        target = (r / d) * np.eye(d)
        assert np.all(np.abs(mean - target) <= 3 * se)

    def test_first_column_direction_is_uniform(self):
        # Without the sign correction the first column is biased toward e_1's
        # positive half-space; with it the sign of each coordinate is a fair coin.
        rng = np.random.default_rng(99)
        signs = np.array([np.sign(sample_stiefel(4, 2, rng).basis[0, 0]) for _ in range(4000)])
        assert abs(signs.mean()) < 3 / math.sqrt(4000)


class TestPrincipalAngles:
    def test_identical(self):
        s = sample_stiefel(6, 3, np.random.default_rng(0))
        assert np.allclose(principal_angles(s, s).angles, 0, atol=1e-7)

    def test_orthogonal_lines(self):
        assert principal_angles(line(1, 0), line(0, 1)).angles[0] == pytest.approx(math.pi / 2)

    def test_lines_at_thirty_degrees(self):
        a = principal_angles(line(1, 0), line(math.cos(math.pi / 6), math.sin(math.pi / 6)))
        assert a.angles[0] == pytest.approx(math.pi / 6, abs=1e-12)

    def test_known_angles_ascending(self):
        s1, s2 = plane_pair_with_angles(9, [1.2, 0.3, 0.7])
        assert np.allclose(principal_angles(s1, s2).angles, [0.3, 0.7, 1.2], atol=1e-12)

    def test_mismatched_ambient(self):
        with pytest.raises(DimensionError):
            principal_angles(line(1, 0), line(1, 0, 0))

    @settings(max_examples=30, deadline=None)
    @given(seed=st.integers(0, 2**32 - 1), d=st.integers(4, 12), r=st.integers(1, 3))
    def test_symmetric_and_basis_invariant(self, seed, d, r):
        rng = np.random.default_rng(seed)
        s1, s2 = sample_stiefel(d, r, rng), sample_stiefel(d, r, rng)
        a12 = principal_angles(s1, s2).angles
        assert np.allclose(a12, principal_angles(s2, s1).angles, atol=1e-7)
        q = ortho_group.rvs(r, random_state=seed) if r > 1 else np.array([[-1.0]])
        rotated = Subspace(s1.basis @ q)
        assert np.allclose(a12, principal_angles(rotated, s2).angles, atol=1e-7)
        assert np.all((a12 >= 0) & (a12 <= math.pi / 2))
        assert np.all(np.diff(a12) >= 0)


class TestProjectionDifferenceSpectrum:
    def test_identical_is_zero(self):
        s = sample_stiefel(5, 2, np.random.default_rng(3))
        assert np.allclose(projection_difference_spectrum(s, s), 0, atol=1e-12)

    def test_two_lines_at_quarter_pi(self):
        s1, s2 = plane_pair_with_angles(3, [math.pi / 4])
        got = projection_difference_spectrum(s1, s2)
        h = math.sin(math.pi / 4)
        assert np.allclose(got, [h, 0.0, -h], atol=1e-12)

    def test_matches_sines_of_angles(self):
        rng = np.random.default_rng(11)
        s1, s2 = sample_stiefel(10, 3, rng), sample_stiefel(10, 3, rng)
        sines = principal_angles(s1, s2).sines
        expected = np.sort(np.concatenate([sines, -sines, np.zeros(4)]))[::-1]
        assert np.max(np.abs(projection_difference_spectrum(s1, s2) - expected)) < 1e-9

    def test_unequal_dimensions(self):
        with pytest.raises(AssumptionViolation):
            projection_difference_spectrum(Subspace(np.eye(4)[:, :1]), Subspace(np.eye(4)[:, 1:3]))

    @settings(max_examples=40, deadline=None)
    @given(seed=st.integers(0, 2**32 - 1), d=st.integers(3, 14), r=st.integers(1, 4))
    def test_lemma_holds_for_random_pairs(self, seed, d, r):
        if not 2 * r < d:
            return
        rng = np.random.default_rng(seed)
        s1, s2 = sample_stiefel(d, r, rng), sample_stiefel(d, r, rng)
        sines = principal_angles(s1, s2).sines
        expected = np.sort(np.concatenate([sines, -sines, np.zeros(d - 2 * r)]))[::-1]
        assert np.max(np.abs(projection_difference_spectrum(s1, s2) - expected)) < 1e-9


class TestExtendBasis:
    def test_no_op(self):
        s = sample_stiefel(6, 2, np.random.default_rng(0))
        assert extend_basis(s, 2, np.random.default_rng(1)) is s

    def test_line_in_r4_extended_to_plane(self):
        s = line(1, 2, 0, -1)
        ext = extend_basis(s, 2, np.random.default_rng(0))
        assert ext.basis.shape == (4, 2)
        assert np.linalg.norm(ext.residual(s.basis[:, 0])) < 1e-10

    def test_contains_original_via_angles(self):
        s = sample_stiefel(12, 2, np.random.default_rng(3))
        ext = extend_basis(s, 4, np.random.default_rng(3))
        angles = principal_angles(ext, s).angles
        assert np.allclose(angles[:2], 0, atol=1e-7)
        assert np.array_equal(ext.basis[:, :2], s.basis)

    def test_target_too_large(self):
        with pytest.raises(DimensionError):
            extend_basis(line(1, 0, 0), 4, np.random.default_rng(0))


class TestConcatSpan:
    def test_orthogonal_lines(self):
        span = concat_span([line(1, 0, 0), line(0, 1, 0)])
        assert span.r == 2
        assert np.linalg.norm(span.residual(np.array([[1, 0, 0], [0, 1, 0.0]]))) < 1e-12

    def test_duplicate_is_idempotent(self):
        s = sample_stiefel(7, 3, np.random.default_rng(2))
        assert concat_span([s, s]).r == 3

    def test_generic_pair_rank(self):
        rng = np.random.default_rng(5)
        subs = [sample_stiefel(10, 2, rng) for _ in range(2)]
        oracle = np.linalg.matrix_rank(np.hstack([s.basis for s in subs]))
        assert concat_span(subs).r == oracle == 4

"""Linear-algebra layer: frozen fixtures, invariants, error contracts."""
import numpy as np
import pytest

from ploading import linalg
from ploading.exceptions import (
    DegenerateDataError,
    NotCenteredError,
    NumericalError,
    SingularMatrixError,
)


def covariance_oracle(centred: np.ndarray) -> np.ndarray:
    """Double-loop covariance with explicit summation order."""
    n, m = centred.shape
    out = np.empty((m, m))
    for i in range(m):
        for j in range(m):
            acc = 0.0
            for k in range(n):
                acc += centred[k, i] * centred[k, j]
            out[i, j] = acc / (n - 1)
    return out


class TestConversionHelpers:
    def test_as_matrix_rejects_non_finite(self):
        with pytest.raises(ValueError, match="finite"):
            linalg.as_matrix([[1.0, np.nan]], "data")

    def test_as_matrix_rejects_wrong_rank(self):
        with pytest.raises(ValueError):
            linalg.as_matrix([1.0, 2.0], "data")

    def test_as_vector_rejects_matrix(self):
        with pytest.raises(ValueError):
            linalg.as_vector([[1.0], [2.0]], "v")

    def test_symmetrize_makes_exact_symmetry(self):
        rng = np.random.default_rng(0)
        a = rng.standard_normal((6, 6))
        s = linalg.symmetrize(a)
        assert np.array_equal(s, s.T)

    def test_require_symmetric_rejects_asymmetry(self):
        a = np.array([[1.0, 2.0], [2.0 + 1e-16, 1.0]])
        if np.array_equal(a, a.T):
            a[0, 1] += 1e-12
        with pytest.raises(ValueError, match="symmetrize"):
            linalg.require_symmetric(a, "a")


class TestCentering:
    def test_mean_center_removes_means(self):
        rng = np.random.default_rng(1)
        x = rng.standard_normal((40, 3)) + 5.0
        c = linalg.mean_center(x)
        tol = linalg.center_tolerance(c)
        assert np.all(np.abs(c.mean(axis=0)) <= tol)

    def test_mean_center_needs_two_rows(self):
        with pytest.raises(DegenerateDataError):
            linalg.mean_center(np.array([[1.0, 2.0]]))

    def test_sample_covariance_rejects_uncentred(self):
        x = np.array([[10.0, 1.0], [11.0, 2.0], [12.0, 3.0]])
        with pytest.raises(NotCenteredError, match="column 0"):
            linalg.sample_covariance(x)


class TestCovariance:
    def test_hand_computed_covariance(self):
        # rows (-1,-2),(0,1),(1,1): columns centred, S = [[1,1.5],[1.5,3]]
        x = np.array([[-1.0, -2.0], [0.0, 1.0], [1.0, 1.0]])
        c = linalg.mean_center(x)
        cov = linalg.sample_covariance(c)
        assert np.allclose(cov, [[1.0, 1.5], [1.5, 3.0]], rtol=0, atol=1e-15)

    def test_matches_double_loop_oracle_closely(self):
        # BLAS accumulation order differs from the double loop, so exact
        # equality is not achievable; agreement is to ~1 ulp per entry.
        rng = np.random.default_rng(2)
        for _ in range(25):
            n = int(rng.integers(3, 11))
            m = int(rng.integers(1, 7))
            x = linalg.mean_center(rng.standard_normal((n, m)) * 3.0)
            got = linalg.sample_covariance(x)
            want = covariance_oracle(x)
            scale = max(1e-30, float(np.max(np.abs(want))))
            assert np.max(np.abs(got - want)) <= 1e-13 * scale

    def test_covariance_is_exactly_symmetric(self):
        rng = np.random.default_rng(3)
        x = linalg.mean_center(rng.standard_normal((30, 5)))
        cov = linalg.sample_covariance(x)
        assert np.array_equal(cov, cov.T)

    def test_correlation_from_covariance(self):
        cov = np.array([[4.0, 2.0], [2.0, 9.0]])
        corr = linalg.correlation_from_covariance(cov)
        assert np.allclose(corr, [[1.0, 2.0 / 6.0], [2.0 / 6.0, 1.0]])
        assert np.all(np.diag(corr) == 1.0)

    def test_correlation_idempotent_on_unit_diagonal(self):
        rng = np.random.default_rng(4)
        g = rng.standard_normal((5, 5))
        a = linalg.symmetrize(g @ g.T + 5 * np.eye(5))
        d = np.sqrt(np.diag(a))
        p = linalg.symmetrize(a / np.outer(d, d))
        np.fill_diagonal(p, 1.0)
        again = linalg.correlation_from_covariance(p)
        assert np.array_equal(again, p)

    def test_correlation_rejects_nonpositive_variance(self):
        cov = np.array([[1.0, 0.0], [0.0, 0.0]])
        with pytest.raises(DegenerateDataError, match="variable 1"):
            linalg.correlation_from_covariance(cov)


class TestEigh:
    def test_two_by_two_fixture(self):
        # [[2,1],[1,2]]: eigenvalues 3 and 1, eigenvectors (1,1)/sqrt(2)
        # and (1,-1)/sqrt(2) after sign normalization
        eig = linalg.eigh(np.array([[2.0, 1.0], [1.0, 2.0]]))
        assert np.allclose(eig.values, [3.0, 1.0], atol=1e-14)
        r = 1.0 / np.sqrt(2.0)
        assert np.allclose(eig.vectors[:, 0], [r, r], atol=1e-14)
        assert np.allclose(eig.vectors[:, 1], [r, -r], atol=1e-14)

    def test_identity_eigenvalues(self):
        eig = linalg.eigh(np.eye(2))
        assert np.array_equal(eig.values, [1.0, 1.0])
        assert np.allclose(eig.vectors.T @ eig.vectors, np.eye(2), atol=1e-14)

    def test_descending_order(self):
        rng = np.random.default_rng(5)
        a = linalg.symmetrize(rng.standard_normal((7, 7)))
        eig = linalg.eigh(a)
        assert np.all(np.diff(eig.values) <= 0)

    def test_sign_convention(self):
        rng = np.random.default_rng(6)
        for _ in range(30):
            a = linalg.symmetrize(rng.standard_normal((5, 5)))
            eig = linalg.eigh(a)
            for j in range(5):
                v = eig.vectors[:, j]
                anchor = int(np.argmax(np.abs(v)))
                assert v[anchor] >= 0.0

    def test_deterministic(self):
        rng = np.random.default_rng(7)
        a = linalg.symmetrize(rng.standard_normal((6, 6)))
        e1 = linalg.eigh(a)
        e2 = linalg.eigh(a.copy())
        assert np.array_equal(e1.values, e2.values)
        assert np.array_equal(e1.vectors, e2.vectors)

    def test_rejects_asymmetric(self):
        with pytest.raises(ValueError):
            linalg.eigh(np.array([[1.0, 2.0], [0.0, 1.0]]))

    def test_invariants_random_batch(self):
        # orthonormality 1e-10 max-norm, residual 1e-9 scaled, trace 1e-9
        rng = np.random.default_rng(8)
        for _ in range(60):
            m = int(rng.integers(2, 13))
            a = linalg.symmetrize(rng.standard_normal((m, m)) * rng.uniform(0.5, 10))
            eig = linalg.eigh(a)
            assert np.max(np.abs(eig.vectors.T @ eig.vectors - np.eye(m))) <= 1e-10
            for i in range(m):
                res = np.linalg.norm(a @ eig.vectors[:, i] - eig.values[i] * eig.vectors[:, i])
                assert res <= 1e-9 * max(1.0, abs(eig.values[i]))
            trace = float(np.trace(a))
            assert abs(eig.values.sum() - trace) <= max(1e-12, 1e-9 * abs(trace))

    def test_arrays_read_only(self):
        eig = linalg.eigh(np.eye(3))
        with pytest.raises(ValueError):
            eig.values[0] = 5.0


class TestSolveSpd:
    def test_multiply_back(self):
        rng = np.random.default_rng(9)
        for _ in range(20):
            m = int(rng.integers(2, 8))
            g = rng.standard_normal((m, m))
            a = linalg.symmetrize(g @ g.T + m * np.eye(m))
            b = rng.standard_normal(m)
            x = linalg.solve_spd(a, b)
            assert np.linalg.norm(a @ x - b) <= 1e-9 * max(1.0, np.linalg.norm(b))

    def test_rejects_indefinite(self):
        a = np.array([[1.0, 0.0], [0.0, -1.0]])
        with pytest.raises(SingularMatrixError):
            linalg.solve_spd(a, np.ones(2))

    def test_rejects_ill_conditioned(self):
        a = np.diag([1.0, 1e-13])
        with pytest.raises(SingularMatrixError, match="condition"):
            linalg.solve_spd(a, np.ones(2))

    def test_matrix_rhs(self):
        a = np.array([[2.0, 0.0], [0.0, 4.0]])
        inv = linalg.solve_spd(a, np.eye(2))
        assert np.allclose(inv, np.diag([0.5, 0.25]))


class TestSmallHelpers:
    def test_cosine_parallel(self):
        assert linalg.cosine_angle([1.0, 2.0], [1.0, 2.0]) == pytest.approx(1.0)

    def test_cosine_orthogonal(self):
        assert linalg.cosine_angle([1.0, 0.0], [0.0, 1.0]) == pytest.approx(0.0)

    def test_cosine_hand_value(self):
        got = linalg.cosine_angle([1.0, 1.0], [1.0, 0.0])
        assert got == pytest.approx(1.0 / np.sqrt(2.0))

    def test_cosine_zero_vector_degenerate(self):
        with pytest.raises(DegenerateDataError):
            linalg.cosine_angle([0.0, 0.0], [1.0, 0.0])

    def test_frobenius(self):
        assert linalg.frobenius_norm(np.zeros((3, 3))) == 0.0
        assert linalg.frobenius_norm(np.eye(2)) == pytest.approx(np.sqrt(2.0))

    def test_row_norm(self):
        assert linalg.row_norm(np.array([[3.0, 4.0]]), 0) == pytest.approx(5.0)
        with pytest.raises(IndexError):
            linalg.row_norm(np.eye(2), 5)

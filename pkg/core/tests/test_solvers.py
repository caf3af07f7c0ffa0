"""
Tests for the ridge, lasso, graphical lasso and matrix helpers.
Run: python manage.py test core.tests.test_solvers
"""
import numpy as np
from django.test import SimpleTestCase, tag

from core.exceptions import DataError, NumericalError
from core.solvers import (
    LassoWeights,
    graphical_lasso,
    lasso_lambda_max,
    lasso_multivariate,
    matrix_inv_sqrt_spd,
    matrix_sqrt_spd,
    numerical_rank,
    pseudo_inverse,
    ridge_multivariate,
)


def _random_spd(rng, q):
    A = rng.standard_normal((q, q))
    return A @ A.T + q * np.eye(q)


def _lasso_kkt_violation(X, y, b, lam):
    """Largest violation of the lasso optimality conditions for (1/n)||y - Xb||^2 + lam |b|_1."""
    n = X.shape[0]
    grad = -2.0 * X.T @ (y - X @ b) / n
    active = b != 0
    worst = 0.0
    if active.any():
        worst = np.abs(grad[active] + lam * np.sign(b[active])).max()
    if (~active).any():
        worst = max(worst, max(np.abs(grad[~active]).max() - lam, 0.0))
    return worst


class RidgeTest(SimpleTestCase):
    def setUp(self):
        self.rng = np.random.default_rng(3)
        self.X = self.rng.standard_normal((20, 3))
        self.Y = self.rng.standard_normal((20, 2))

    def test_zero_penalty_is_least_squares(self):
        expected, *_ = np.linalg.lstsq(self.X, self.Y, rcond=None)
        np.testing.assert_allclose(ridge_multivariate(self.X, self.Y, 0.0), expected, atol=1e-10)

    def test_matches_normal_equations(self):
        expected = np.linalg.solve(self.X.T @ self.X + 0.5 * np.eye(3), self.X.T @ self.Y)
        np.testing.assert_allclose(ridge_multivariate(self.X, self.Y, 0.5), expected,
                                   atol=1e-10)

    def test_huge_penalty_shrinks_to_zero(self):
        self.assertLess(np.linalg.norm(ridge_multivariate(self.X, self.Y, 1e9)), 1e-6)

    def test_penalty_mask_leaves_row_free(self):
        B = ridge_multivariate(self.X, self.Y, 1e9, penalty_mask=[1.0, 1.0, 0.0])
        self.assertLess(np.abs(B[:2]).max(), 1e-6)
        self.assertGreater(np.abs(B[2]).max(), 1e-3)

    def test_rank_deficient_without_penalty(self):
        X = np.hstack([self.X[:, :2], self.X[:, :1]])
        with self.assertRaises(NumericalError):
            ridge_multivariate(X, self.Y, 0.0)
        ridge_multivariate(X, self.Y, 0.1)

    def test_no_regressors(self):
        self.assertEqual(ridge_multivariate(np.zeros((20, 0)), self.Y, 1.0).shape, (0, 2))

    def test_negative_penalty(self):
        with self.assertRaises(DataError):
            ridge_multivariate(self.X, self.Y, -1.0)


class LassoTest(SimpleTestCase):
    def setUp(self):
        self.rng = np.random.default_rng(5)

    def test_zero_penalty_is_least_squares(self):
        X = self.rng.standard_normal((30, 4))
        Y = self.rng.standard_normal((30, 2))
        fit = lasso_multivariate(X, Y, 0.0)
        expected, *_ = np.linalg.lstsq(X, Y, rcond=None)
        np.testing.assert_allclose(fit.coef, expected, atol=1e-10)

    def test_zero_penalty_rank_deficient_uses_pseudo_inverse(self):
        X = self.rng.standard_normal((30, 2))
        X = np.hstack([X, X[:, :1]])
        y = self.rng.standard_normal((30, 1))
        fit = lasso_multivariate(X, y, 0.0)
        np.testing.assert_allclose(fit.coef, np.linalg.pinv(X) @ y, atol=1e-10)

    def test_kill_threshold(self):
        X = self.rng.standard_normal((40, 5))
        Y = self.rng.standard_normal((40, 2))
        lam_max = lasso_lambda_max(X, Y)
        fit = lasso_multivariate(X, Y, [1.000001 * lam_max[0], 0.5 * lam_max[1]])
        self.assertFalse(np.any(fit.coef[:, 0]))
        self.assertTrue(np.any(fit.coef[:, 1]))

    def test_kkt_conditions(self):
        """Optimality conditions hold to 1e-6 on random instances."""
        for seed in range(40):
            rng = np.random.default_rng(seed)
            X = rng.standard_normal((50, 6))
            y = X[:, :2] @ np.array([[1.5], [-2.0]]) + rng.standard_normal((50, 1))
            lam = float(lasso_lambda_max(X, y)[0]) * rng.uniform(0.05, 0.9)
            fit = lasso_multivariate(X, y, lam, tol=1e-12)
            with self.subTest(seed=seed):
                self.assertTrue(fit.converged)
                self.assertLess(_lasso_kkt_violation(X, y[:, 0], fit.coef[:, 0], lam), 1e-6)

    def test_infinite_weights_pin_zero(self):
        X = self.rng.standard_normal((40, 3))
        y = X @ np.array([[1.0], [1.0], [1.0]])
        weights = LassoWeights(np.array([[1.0], [np.inf], [1.0]]))
        fit = lasso_multivariate(X, y, 0.01, weights=weights)
        self.assertEqual(fit.coef[1, 0], 0.0)
        self.assertTrue(np.all(fit.coef[[0, 2], 0] != 0))

    def test_weights_from_pilot(self):
        weights = LassoWeights.from_pilot([[2.0], [0.0], [-0.5]])
        np.testing.assert_array_equal(weights.w.ravel(), [0.5, np.inf, 2.0])

    def test_warm_start_reaches_same_solution(self):
        X = self.rng.standard_normal((40, 4))
        y = self.rng.standard_normal((40, 1))
        cold = lasso_multivariate(X, y, 0.05, tol=1e-12)
        warm = lasso_multivariate(X, y, 0.05, tol=1e-12, init=np.ones((4, 1)))
        np.testing.assert_allclose(warm.coef, cold.coef, atol=1e-8)

    def test_non_convergence_is_flagged(self):
        X = self.rng.standard_normal((40, 4))
        X[:, 1] = X[:, 0] + 1e-3 * X[:, 1]
        y = self.rng.standard_normal((40, 1))
        with self.assertLogs('core.solvers', 'WARNING'):
            fit = lasso_multivariate(X, y, 1e-4, tol=1e-14, max_iter=2)
        self.assertFalse(fit.converged)


class GraphicalLassoTest(SimpleTestCase):
    def setUp(self):
        self.rng = np.random.default_rng(8)

    def _sample_cov(self, n=60, q=4):
        R = self.rng.standard_normal((n, q)) @ np.linalg.cholesky(_random_spd(self.rng, q)).T
        return R.T @ R / n

    def test_zero_penalty_is_inverse(self):
        S = self._sample_cov()
        np.testing.assert_allclose(graphical_lasso(S, 0.0), np.linalg.inv(S), atol=1e-6)

    def test_huge_penalty_is_diagonal(self):
        S = self._sample_cov()
        lam = 10.0 * np.abs(S - np.diag(np.diag(S))).max()
        omega = graphical_lasso(S, lam)
        off = omega - np.diag(np.diag(omega))
        self.assertLess(np.abs(off).max(), 1e-8)
        np.testing.assert_allclose(np.diag(omega), 1.0 / np.diag(S), rtol=1e-6)

    def test_kkt_conditions(self):
        lam = 0.1
        for trial in range(10):
            S = self._sample_cov()
            omega = graphical_lasso(S, lam)
            W = np.linalg.inv(omega)
            with self.subTest(trial=trial):
                np.testing.assert_allclose(np.diag(W), np.diag(S), atol=1e-4)
                for i in range(4):
                    for j in range(4):
                        if i == j:
                            continue
                        if abs(omega[i, j]) > 1e-8:
                            self.assertAlmostEqual(W[i, j] - S[i, j],
                                                   lam * np.sign(omega[i, j]), delta=1e-4)
                        else:
                            self.assertLessEqual(abs(W[i, j] - S[i, j]), lam + 1e-4)

    def test_rank_deficient_covariance_with_penalty(self):
        R = self.rng.standard_normal((3, 5))
        omega = graphical_lasso(R.T @ R / 3, 0.1)
        self.assertGreater(np.linalg.eigvalsh(omega).min(), 0.0)

    def test_singular_covariance_without_penalty(self):
        R = self.rng.standard_normal((3, 5))
        with self.assertRaises(NumericalError):
            graphical_lasso(R.T @ R / 3, 0.0)

    def test_asymmetric_input(self):
        with self.assertRaises(DataError):
            graphical_lasso(np.array([[1.0, 0.5], [0.0, 1.0]]), 0.1)


class MatrixHelpersTest(SimpleTestCase):
    def setUp(self):
        self.rng = np.random.default_rng(13)

    def test_sqrt_identity(self):
        np.testing.assert_allclose(matrix_sqrt_spd(np.eye(3)), np.eye(3))

    def test_sqrt_diagonal(self):
        np.testing.assert_allclose(matrix_sqrt_spd(np.diag([4.0, 9.0])), np.diag([2.0, 3.0]))

    def test_sqrt_multiplies_back(self):
        M = _random_spd(self.rng, 5)
        R = matrix_sqrt_spd(M)
        np.testing.assert_allclose(R @ R, M, atol=1e-10)
        np.testing.assert_allclose(R, R.T, atol=1e-12)

    def test_inverse_sqrt(self):
        M = _random_spd(self.rng, 4)
        R = matrix_inv_sqrt_spd(M)
        np.testing.assert_allclose(R @ M @ R, np.eye(4), atol=1e-10)

    def test_not_positive_definite(self):
        with self.assertRaises(NumericalError):
            matrix_sqrt_spd(np.diag([1.0, -1.0]))
        with self.assertRaises(NumericalError):
            matrix_inv_sqrt_spd(np.zeros((2, 2)))

    def test_pseudo_inverse_of_invertible(self):
        M = _random_spd(self.rng, 4)
        np.testing.assert_allclose(pseudo_inverse(M), np.linalg.inv(M), atol=1e-10)

    def test_pseudo_inverse_of_zero(self):
        np.testing.assert_array_equal(pseudo_inverse(np.zeros((3, 2))), np.zeros((2, 3)))

    def test_pseudo_inverse_of_outer_product(self):
        u = self.rng.standard_normal((4, 1))
        v = self.rng.standard_normal((3, 1))
        M = u @ v.T
        P = pseudo_inverse(M)
        expected = v @ u.T / (float(u.T @ u) * float(v.T @ v))
        np.testing.assert_allclose(P, expected, atol=1e-12)
        np.testing.assert_allclose(M @ P @ M, M, atol=1e-10)
        np.testing.assert_allclose(P @ M @ P, P, atol=1e-10)
        np.testing.assert_allclose((M @ P).T, M @ P, atol=1e-10)
        np.testing.assert_allclose((P @ M).T, P @ M, atol=1e-10)

    def test_numerical_rank(self):
        u = self.rng.standard_normal((5, 1))
        self.assertEqual(numerical_rank(u @ u.T), 1)
        self.assertEqual(numerical_rank(np.zeros((3, 3))), 0)
        self.assertEqual(numerical_rank(np.eye(3)), 3)


@tag('slow')
class LassoKktSlowTest(SimpleTestCase):
    def test_two_hundred_instances(self):
        for seed in range(200):
            rng = np.random.default_rng(10000 + seed)
            n, k = rng.integers(20, 80), rng.integers(2, 12)
            X = rng.standard_normal((n, k))
            y = X[:, :1] * 2.0 + rng.standard_normal((n, 1))
            lam = float(lasso_lambda_max(X, y)[0]) * rng.uniform(0.01, 0.95)
            fit = lasso_multivariate(X, y, lam, tol=1e-12, max_iter=100000)
            with self.subTest(seed=seed):
                self.assertLess(_lasso_kkt_violation(X, y[:, 0], fit.coef[:, 0], lam), 1e-6)

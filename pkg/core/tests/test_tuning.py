"""
Tests for cross-validated and BIC tuning-parameter selection.
Run: python manage.py test core.tests.test_tuning
"""
import numpy as np
from django.test import SimpleTestCase, tag

from core.exceptions import DataError, NumericalError
from core.solvers import graphical_lasso, ridge_multivariate
from core.tuning import (
    GridRole,
    LambdaGrid,
    bic_select_lambda3,
    calibration_size,
    cv_select_lambda,
    default_grid,
    lasso_forecaster,
    ridge_forecaster,
    tune_lambda1,
    tune_lambda2,
    tune_lambda3,
)


class GridTest(SimpleTestCase):
    def test_sorted_descending_without_duplicates(self):
        grid = LambdaGrid((0.1, 1.0, 0.1, 0.01), GridRole.BETA)
        self.assertEqual(grid.values, (1.0, 0.1, 0.01))

    def test_rejects_non_positive(self):
        with self.assertRaises(DataError):
            LambdaGrid((1.0, 0.0), GridRole.BETA)
        with self.assertRaises(DataError):
            LambdaGrid((), GridRole.BETA)

    def test_gamma_grid(self):
        grid = default_grid(GridRole.GAMMA)
        self.assertEqual(len(grid), 20)
        self.assertAlmostEqual(grid.values[0], 1e2)
        self.assertAlmostEqual(grid.values[-1], 1e-3)

    def test_beta_grid_spans_three_decades(self):
        grid = default_grid(GridRole.BETA, size=10, upper=4.0)
        self.assertAlmostEqual(grid.values[0], 4.0)
        self.assertAlmostEqual(grid.values[-1], 4e-3)

    def test_upper_bound_required(self):
        with self.assertRaises(DataError):
            default_grid(GridRole.OMEGA, upper=0.0)


class CrossValidationTest(SimpleTestCase):
    def setUp(self):
        self.rng = np.random.default_rng(17)

    def test_calibration_size(self):
        self.assertEqual(calibration_size(100), 80)

    def test_single_value_grid(self):
        lam, curve = cv_select_lambda(self.rng.standard_normal((30, 2)),
                                      lambda lam, t: np.zeros(2), [0.7])
        self.assertEqual(lam, 0.7)
        self.assertTrue(np.isnan(curve[0]))

    def test_ties_go_to_larger_lambda(self):
        lam, curve = cv_select_lambda(self.rng.standard_normal((30, 2)),
                                      lambda lam, t: np.zeros(2), [0.1, 1.0, 10.0])
        self.assertEqual(lam, 10.0)
        self.assertEqual(len(set(curve)), 1)

    def test_forecasts_every_row_after_calibration(self):
        seen = []

        def fit_fn(lam, t):
            seen.append(t)
            return np.zeros(1)

        cv_select_lambda(self.rng.standard_normal(50), fit_fn, [1.0, 2.0])
        self.assertEqual(seen, list(range(40, 50)) * 2)

    def test_constant_series_is_ignored(self):
        z = np.column_stack([self.rng.standard_normal(30), np.full(30, 4.0)])
        with self.assertLogs('core.tuning', 'WARNING'):
            lam, curve = cv_select_lambda(z, lambda lam, t: np.array([0.0, lam]), [1.0, 4.0])
        self.assertTrue(np.all(np.isfinite(curve)))
        self.assertEqual(curve[0], curve[1])

    def test_failed_grid_point_is_dropped(self):
        def fit_fn(lam, t):
            if lam > 1:
                raise NumericalError('singular')
            return np.zeros(1)

        with self.assertLogs('core.tuning', 'WARNING'):
            lam, curve = cv_select_lambda(self.rng.standard_normal(30), fit_fn, [0.5, 5.0])
        self.assertEqual(lam, 0.5)
        self.assertEqual(curve[0], np.inf)

    def test_every_grid_point_failing(self):
        def fit_fn(lam, t):
            raise NumericalError('singular')

        with self.assertRaises(NumericalError):
            cv_select_lambda(self.rng.standard_normal(30), fit_fn, [0.5, 5.0])

    def test_ridge_forecaster_scales_penalty_with_sample(self):
        X = self.rng.standard_normal((40, 3))
        z = self.rng.standard_normal((40, 2))
        fit_fn = ridge_forecaster(X, z)
        expected = X[30] @ ridge_multivariate(X[:30], z[:30], 30 * 0.2)
        np.testing.assert_allclose(fit_fn(0.2, 30), expected)

    def test_lasso_forecaster_predicts_next_row(self):
        Z = self.rng.standard_normal((40, 3))
        u = Z @ np.array([1.0, 0.0, -1.0]) + 0.01 * self.rng.standard_normal(40)
        forecast = lasso_forecaster(Z, u)(1e-4, 35)
        self.assertAlmostEqual(float(forecast[0]), u[35], delta=0.1)

    def test_tune_lambda2_without_regressors(self):
        lam, curve = tune_lambda2(np.zeros((30, 0)), self.rng.standard_normal((30, 2)))
        self.assertEqual(lam, 0.0)
        self.assertEqual(curve.size, 0)

    def test_tune_lambda1_one_value_per_vector(self):
        Z = self.rng.standard_normal((60, 4))
        U = Z @ self.rng.standard_normal((4, 2)) + self.rng.standard_normal((60, 2))
        selected = tune_lambda1(Z, U, grid_size=5)
        self.assertEqual(selected.shape, (2,))
        self.assertTrue(np.all(selected > 0))

    def test_tune_lambda1_without_signal(self):
        with self.assertLogs('core.tuning', 'WARNING'):
            selected = tune_lambda1(self.rng.standard_normal((30, 3)), np.zeros((30, 1)))
        np.testing.assert_array_equal(selected, [0.0])


class BicTest(SimpleTestCase):
    def test_single_value_grid(self):
        R = np.random.default_rng(1).standard_normal((50, 3))
        self.assertEqual(bic_select_lambda3(R, [0.2]), 0.2)

    def test_diagonal_truth_selects_sparse_precision(self):
        zeros = 0
        total = 0
        for seed in range(10):
            R = np.random.default_rng(seed).standard_normal((400, 4))
            lam = tune_lambda3(R, grid_size=10)
            omega = graphical_lasso(R.T @ R / 400, lam)
            upper = np.abs(omega[np.triu_indices(4, k=1)])
            zeros += int(np.sum(upper <= 1e-10))
            total += upper.size
        self.assertGreaterEqual(zeros / total, 0.8)

    def test_too_few_rows(self):
        with self.assertRaises(DataError):
            bic_select_lambda3(np.ones((1, 2)), [0.1])


def _tridiagonal_precision(q=4):
    omega = np.eye(q)
    for i in range(q - 1):
        omega[i, i + 1] = omega[i + 1, i] = 0.45
    return omega


@tag('slow')
class TuningMonteCarloSlowTest(SimpleTestCase):
    def test_null_coefficients_favor_large_lambda(self):
        upper_half = 0
        for seed in range(100):
            rng = np.random.default_rng(seed)
            Z = rng.standard_normal((100, 5))
            u = rng.standard_normal(100)
            upper = float(np.abs(2 * Z.T @ u / 100).max())
            grid = default_grid(GridRole.BETA, size=20, upper=upper)
            lam, _ = cv_select_lambda(u, lasso_forecaster(Z, u), grid)
            if grid.values.index(lam) < len(grid) // 2:
                upper_half += 1
        self.assertGreaterEqual(upper_half, 80)

    def test_diagonal_truth_hundred_seeds(self):
        zeros = total = 0
        for seed in range(100):
            R = np.random.default_rng(seed).standard_normal((500, 4))
            omega = graphical_lasso(R.T @ R / 500, tune_lambda3(R))
            upper = np.abs(omega[np.triu_indices(4, k=1)])
            zeros += int(np.sum(upper <= 1e-10))
            total += upper.size
        self.assertGreaterEqual(zeros / total, 0.9)

    def test_tridiagonal_support_recovery(self):
        truth = _tridiagonal_precision()
        cov = np.linalg.inv(truth)
        support = np.abs(truth[np.triu_indices(4, k=1)]) > 0
        recovered = 0
        for seed in range(100):
            R = np.random.default_rng(seed).multivariate_normal(np.zeros(4), cov, size=200)
            omega = graphical_lasso(R.T @ R / 200, tune_lambda3(R))
            if np.array_equal(np.abs(omega[np.triu_indices(4, k=1)]) > 1e-10, support):
                recovered += 1
        self.assertGreaterEqual(recovered, 70)

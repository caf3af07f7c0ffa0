"""
Tests for rolling forecasts and the Diebold-Mariano comparison.
Run: python manage.py test core.tests.test_forecast
"""
from unittest import mock

import numpy as np
from django.test import SimpleTestCase, tag

from core.estimator import Method, fit_by_method
from core.exceptions import DataError, NumericalError
from core.forecast import compare_forecasts, diebold_mariano, one_step_forecast, rolling_forecast
from core.simulation import synthetic_forecast_system
from core.vecm import PenaltyConfig, build_design

FIXED = PenaltyConfig(lambda1=0.05, lambda2=0.05, lambda3=0.05)


def _random_walks(seed, T=40, q=3):
    return np.random.default_rng(seed).standard_normal((T, q)).cumsum(axis=0)


class DieboldMarianoTest(SimpleTestCase):
    def test_identical_errors(self):
        e = np.random.default_rng(0).standard_normal(30)
        self.assertEqual(diebold_mariano(e, e), (0.0, 1.0))

    def test_too_few_errors(self):
        with self.assertRaises(DataError):
            diebold_mariano(np.ones(5), np.zeros(5))

    def test_length_mismatch(self):
        with self.assertRaises(DataError):
            diebold_mariano(np.ones(20), np.ones(21))

    def test_clearly_better_forecast(self):
        rng = np.random.default_rng(1)
        e1 = 0.2 * rng.standard_normal(200)
        e2 = 2.0 * rng.standard_normal(200)
        statistic, p_value = diebold_mariano(e1, e2)
        self.assertLess(statistic, 0.0)
        self.assertLess(p_value, 0.01)

    def test_symmetric(self):
        rng = np.random.default_rng(2)
        e1, e2 = rng.standard_normal(50), rng.standard_normal(50)
        s12, p12 = diebold_mariano(e1, e2)
        s21, p21 = diebold_mariano(e2, e1)
        self.assertAlmostEqual(s12, -s21)
        self.assertAlmostEqual(p12, p21)


class OneStepForecastTest(SimpleTestCase):
    def test_matches_vecm_recursion(self):
        levels = _random_walks(3, T=60, q=2)
        design = build_design(levels, 2, intercept=True)
        fit = fit_by_method(design, 1, Method.JOHANSEN)
        dy_lag = levels[-1] - levels[-2]
        expected = levels[-1] + fit.pi @ levels[-1] + np.append(dy_lag, 1.0) @ fit.gamma
        np.testing.assert_allclose(one_step_forecast(fit, levels), expected)


class RollingForecastTest(SimpleTestCase):
    def test_one_forecast_when_window_is_t_minus_one(self):
        levels = _random_walks(4)
        report = rolling_forecast(levels, 39, p=1, r=1, method='johansen')
        self.assertEqual(report.forecasts['johansen'].shape, (1, 3))
        np.testing.assert_array_equal(report.targets, [39])

    def test_window_must_leave_a_target(self):
        with self.assertRaises(DataError):
            rolling_forecast(_random_walks(4), 40, p=1, r=1)

    def test_window_too_short_for_lag(self):
        with self.assertRaises(DataError):
            rolling_forecast(_random_walks(4), 3, p=2, r=1)

    def test_invalid_rank(self):
        with self.assertRaises(DataError):
            rolling_forecast(_random_walks(4), 30, p=1, r=4)

    def test_failed_fit_carries_last_value_forward(self):
        levels = _random_walks(5)
        with mock.patch('core.forecast.fit_by_method', side_effect=NumericalError('boom')), \
                self.assertLogs('core.forecast', 'WARNING'):
            report = rolling_forecast(levels, 30, p=1, r=1, method='johansen')
        np.testing.assert_array_equal(report.forecasts['johansen'], levels[29:39])
        self.assertEqual(report.fallbacks['johansen'], 10)

    def test_tiny_noise_is_forecast_closely(self):
        levels = np.cumsum(np.full((50, 2), 0.5), axis=0)
        levels += 1e-4 * np.random.default_rng(6).standard_normal(levels.shape)
        report = rolling_forecast(levels, 40, p=1, r=0, method='johansen', intercept=True)
        self.assertLess(report.total_mafe('johansen'), 0.01)


class CompareForecastsTest(SimpleTestCase):
    def test_reference_and_keys(self):
        levels = _random_walks(7, T=45)
        report = compare_forecasts(levels, 30, p=1, r=1, methods=('sparse_lasso', 'johansen'),
                                   config=FIXED)
        self.assertEqual(report.reference, 'johansen')
        self.assertEqual(set(report.dm_pvalues), {'sparse_lasso'})
        self.assertEqual(report.dm_pvalues['sparse_lasso'].shape, (3,))
        self.assertEqual(report.mafe('sparse_lasso').shape, (3,))
        np.testing.assert_array_equal(report.actuals, levels[30:])

    def test_last_method_is_reference_without_johansen(self):
        report = compare_forecasts(_random_walks(8, T=45), 30, p=1, r=1,
                                   methods=('sparse_lasso', 'sparse_adaptive_lasso'), config=FIXED)
        self.assertEqual(report.reference, 'sparse_adaptive_lasso')

    def test_short_evaluation_skips_dm(self):
        with self.assertLogs('core.forecast', 'WARNING'):
            report = compare_forecasts(_random_walks(9, T=36), 30, p=1, r=1,
                                       methods=('sparse_lasso', 'johansen'), config=FIXED)
        self.assertEqual(report.dm_pvalues, {})

    def test_automatic_rank(self):
        report = compare_forecasts(_random_walks(10, T=45), 40, p=1, r='auto',
                                   methods=('johansen',))
        self.assertTrue(0 <= report.rank <= 3)

    def test_no_methods(self):
        with self.assertRaises(DataError):
            compare_forecasts(_random_walks(11), 30, p=1, r=1, methods=())


@tag('slow')
class ForecastAccuracySlowTest(SimpleTestCase):
    def test_sparse_support_recovery(self):
        recovered = 0
        for seed in range(100):
            series, design = synthetic_forecast_system(seed)
            fit = fit_by_method(build_design(series, 2, intercept=True), 1, Method.SPARSE_LASSO)
            support = np.abs(fit.beta[:, 0]) > 1e-8
            if np.array_equal(support, np.abs(design.beta_true[:, 0]) > 0):
                recovered += 1
        self.assertGreaterEqual(recovered, 90)

    def test_sparse_forecasts_beat_johansen(self):
        series, _ = synthetic_forecast_system(0, T=150)
        report = compare_forecasts(series, 100, p=2, r=1)
        self.assertLess(report.total_mafe('sparse_lasso'), report.total_mafe('johansen'))

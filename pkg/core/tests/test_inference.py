"""
Tests for the bootstrap zero-sum test.
Run: python manage.py test core.tests.test_inference
"""
import numpy as np
from django.test import SimpleTestCase, tag

from core.exceptions import DataError
from core.inference import (
    bootstrap_zero_sum_test,
    eht_null_beta,
    simulate_null_sample,
    zero_sum_theta,
)
from core.simulation import SimDesign, generate_sample


def _null_series(seed, T=200, q=3, a=-0.2):
    design = SimDesign('zero_sum_null', q, T, eht_null_beta(q), a, 0.0, q - 1)
    return generate_sample(design, seed)


class NullBetaTest(SimpleTestCase):
    def test_two_series(self):
        np.testing.assert_array_equal(eht_null_beta(2), [[1.0], [-1.0]])

    def test_three_series(self):
        np.testing.assert_array_equal(eht_null_beta(3), [[1.0, 1.0], [-1.0, 0.0], [0.0, -1.0]])

    def test_columns_sum_to_zero(self):
        np.testing.assert_array_equal(zero_sum_theta(eht_null_beta(6)), np.zeros(5))

    def test_single_series(self):
        with self.assertRaises(DataError):
            eht_null_beta(1)


class ThetaTest(SimpleTestCase):
    def test_near_zero_sum(self):
        np.testing.assert_allclose(zero_sum_theta([1.0, -1.01]), [-0.01])

    def test_positive_sum(self):
        np.testing.assert_allclose(zero_sum_theta([[1.0], [-0.95]]), [0.05])

    def test_one_value_per_vector(self):
        np.testing.assert_allclose(zero_sum_theta([[1.0, 2.0], [3.0, -2.0]]), [4.0, 0.0])


class NullSampleTest(SimpleTestCase):
    def test_shape_and_start(self):
        rng = np.random.default_rng(0)
        start = np.arange(6.0).reshape(2, 3)
        residuals = rng.standard_normal((40, 3))
        sample = simulate_null_sample(start, np.zeros((3, 3)), np.zeros((3, 3)), residuals,
                                      2, False, rng)
        self.assertEqual(sample.shape, (42, 3))
        np.testing.assert_array_equal(sample[:2], start)

    def test_steps_are_resampled_residuals(self):
        rng = np.random.default_rng(1)
        residuals = rng.standard_normal((30, 2))
        sample = simulate_null_sample(np.zeros((1, 2)), np.zeros((2, 2)), np.zeros((0, 2)),
                                      residuals, 1, False, rng)
        steps = np.diff(sample, axis=0)
        for step in steps:
            self.assertTrue(np.any(np.all(np.isclose(residuals, step), axis=1)))

    def test_same_stream_same_sample(self):
        residuals = np.random.default_rng(2).standard_normal((30, 2))
        args = (np.zeros((1, 2)), -0.1 * np.eye(2), np.zeros((0, 2)), residuals, 1, False)
        first = simulate_null_sample(*args, np.random.default_rng([7, 3]))
        second = simulate_null_sample(*args, np.random.default_rng([7, 3]))
        np.testing.assert_array_equal(first, second)


class BootstrapTest(SimpleTestCase):
    def test_small_run_is_reproducible(self):
        series = _null_series(4)
        with self.assertLogs('core.inference', 'WARNING'):
            first = bootstrap_zero_sum_test(series, 2, 'johansen', B=19, seed=11)
        with self.assertLogs('core.inference', 'WARNING'):
            second = bootstrap_zero_sum_test(series, 2, 'johansen', B=19, seed=11)
        self.assertTrue(0.0 <= first.p_value <= 1.0)
        self.assertEqual(first.q_boot.shape, (19,))
        self.assertEqual(first.theta_hat.shape, (2,))
        self.assertEqual(first.p_value, second.p_value)
        np.testing.assert_array_equal(first.q_boot, second.q_boot)
        self.assertEqual(first.reject, first.p_value <= 0.05)
        self.assertIsNone(first.config)

    def test_sparse_method_records_tuned_penalties(self):
        with self.assertLogs('core.inference', 'WARNING'):
            result = bootstrap_zero_sum_test(_null_series(5, T=120), 1, 'sparse_lasso', B=5,
                                             seed=3)
        self.assertEqual(result.method, 'sparse_lasso')
        self.assertTrue(result.config.is_tuned)

    def test_invalid_replicate_count(self):
        with self.assertRaises(DataError):
            bootstrap_zero_sum_test(_null_series(0), 2, B=1)

    def test_invalid_level(self):
        for eta in (0.0, 1.0, 1.5):
            with self.subTest(eta=eta), self.assertRaises(DataError):
                bootstrap_zero_sum_test(_null_series(0), 2, B=199, eta=eta)


@tag('slow')
class BootstrapSizeSlowTest(SimpleTestCase):
    def test_rejection_rate_under_null(self):
        rejections = 0
        for rep in range(100):
            result = bootstrap_zero_sum_test(_null_series(1000 + rep, T=300), 2, 'johansen',
                                             B=499, seed=rep)
            rejections += int(result.reject)
        self.assertLessEqual(rejections / 100, 0.12)

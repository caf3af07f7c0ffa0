"""
Tests for the VECM data model.
Run: python manage.py test core.tests.test_vecm
"""
import numpy as np
from django.test import SimpleTestCase

from core.exceptions import DataError
from core.vecm import (
    BetaPenalty,
    PenaltyConfig,
    TimeSeriesMatrix,
    build_design,
    difference,
    lag_regressors,
)


class BuildDesignTest(SimpleTestCase):
    def setUp(self):
        self.rng = np.random.default_rng(11)

    def test_dimensions_small(self):
        """q=2, T=10, p=2 gives 8 x 2 blocks."""
        design = build_design(self.rng.standard_normal((10, 2)).cumsum(axis=0), p=2)
        self.assertEqual(design.Y.shape, (8, 2))
        self.assertEqual(design.X.shape, (8, 2))
        self.assertEqual(design.Z.shape, (8, 2))

    def test_dimensions_simulation_size(self):
        design = build_design(self.rng.standard_normal((500, 4)), p=2)
        self.assertEqual((design.n, design.q, design.k), (498, 4, 4))
        self.assertEqual(design.Z.shape, (498, 4))

    def test_constant_series(self):
        """Differences of a constant vanish; every lagged level equals the constant."""
        design = build_design(np.full((12, 3), 2.5), p=3)
        self.assertFalse(np.any(design.Y))
        self.assertFalse(np.any(design.X))
        np.testing.assert_array_equal(design.Z, 2.5)

    def test_p_one_has_no_short_run_terms(self):
        design = build_design(self.rng.standard_normal((20, 2)), p=1)
        self.assertEqual(design.X.shape, (19, 0))
        self.assertEqual(design.gamma_penalty_mask().shape, (0,))

    def test_intercept_column(self):
        design = build_design(self.rng.standard_normal((20, 2)), p=2, intercept=True)
        self.assertEqual(design.k, 3)
        np.testing.assert_array_equal(design.X[:, -1], 1.0)
        np.testing.assert_array_equal(design.gamma_penalty_mask(False), [1.0, 1.0, 0.0])
        np.testing.assert_array_equal(design.gamma_penalty_mask(True), [1.0, 1.0, 1.0])

    def test_rows_follow_the_vecm_timing(self):
        levels = self.rng.standard_normal((15, 2)).cumsum(axis=0)
        p = 3
        design = build_design(levels, p, intercept=True)
        for i in range(design.n):
            np.testing.assert_allclose(design.Y[i], levels[p + i] - levels[p + i - 1])
            np.testing.assert_allclose(design.Z[i], levels[p + i - 1])
            np.testing.assert_allclose(design.X[i], lag_regressors(levels[:p + i], p, True))

    def test_too_few_observations(self):
        with self.assertRaises(DataError):
            build_design(np.zeros((3, 2)), p=2)

    def test_lag_order_must_be_positive(self):
        with self.assertRaises(DataError):
            build_design(np.zeros((10, 2)), p=0)


class DifferenceTest(SimpleTestCase):
    def test_first_difference(self):
        np.testing.assert_array_equal(difference([1, 2, 4, 7]).values.ravel(), [1, 2, 3])

    def test_second_difference(self):
        np.testing.assert_array_equal(difference([1, 2, 4, 7], 2).values.ravel(), [1, 1])

    def test_constant_series(self):
        self.assertFalse(np.any(difference(np.full((6, 2), 3.0)).values))

    def test_order_too_large(self):
        with self.assertRaises(DataError):
            difference([1.0, 2.0], order=2)


class TimeSeriesMatrixTest(SimpleTestCase):
    def test_rejects_non_finite(self):
        with self.assertRaises(DataError):
            TimeSeriesMatrix([[1.0, np.nan], [2.0, 3.0]])

    def test_label_count_must_match(self):
        with self.assertRaises(DataError):
            TimeSeriesMatrix(np.zeros((3, 2)), ('a',))

    def test_default_labels(self):
        self.assertEqual(TimeSeriesMatrix(np.zeros((3, 2))).column_labels(), ['y1', 'y2'])

    def test_values_are_read_only(self):
        series = TimeSeriesMatrix(np.zeros((3, 2)))
        with self.assertRaises(ValueError):
            series.values[0, 0] = 1.0


class PenaltyConfigTest(SimpleTestCase):
    def test_lambda1_broadcast(self):
        np.testing.assert_array_equal(PenaltyConfig(lambda1=0.3).lambda1_for(3), [0.3] * 3)

    def test_lambda1_per_vector(self):
        config = PenaltyConfig(lambda1=[0.1, 0.2])
        np.testing.assert_array_equal(config.lambda1_for(2), [0.1, 0.2])
        with self.assertRaises(DataError):
            config.lambda1_for(3)

    def test_negative_penalties_rejected(self):
        for kwargs in ({'lambda1': -1.0}, {'lambda2': -0.1}, {'lambda3': float('inf')}):
            with self.subTest(**kwargs), self.assertRaises(DataError):
                PenaltyConfig(**kwargs)

    def test_is_tuned(self):
        self.assertFalse(PenaltyConfig().is_tuned)
        self.assertTrue(PenaltyConfig(lambda1=0, lambda2=0, lambda3=0).is_tuned)

    def test_round_trip_through_dict(self):
        config = PenaltyConfig(lambda1=[0.1], lambda2=0.5, beta_penalty='adaptive_lasso')
        self.assertEqual(PenaltyConfig(**config.as_dict()), config)
        self.assertIs(config.beta_penalty, BetaPenalty.ADAPTIVE_LASSO)

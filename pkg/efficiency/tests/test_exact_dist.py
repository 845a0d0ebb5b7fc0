import math
from unittest import mock

import numpy as np
from django.test import SimpleTestCase

from efficiency.services import exact_dist
from efficiency.services.poisson_oracle import PoissonContext, moment_summary
from efficiency.services.errors import DegenerateVarianceError, EnumerationBudgetError, InvalidInputError
from efficiency.services.statistics import CellFunction


class EnumerateTests(SimpleTestCase):
    def test_two_balls_in_two_cells(self):
        dist = exact_dist.enumerate(CellFunction.chi_square(), 2, 2)

        np.testing.assert_array_equal(dist.values, [0.0, 2.0])
        np.testing.assert_allclose(dist.probs, [0.5, 0.5], rtol=1e-12)

    def test_total_mass_and_chi_square_mean(self):
        for n, N in ((1, 2), (6, 4), (8, 6)):
            dist = exact_dist.enumerate(CellFunction.chi_square(), n, N)
            self.assertAlmostEqual(dist.total_mass, 1.0, places=12)
            self.assertAlmostEqual(dist.mean, N - 1.0, places=10)

    def test_outcomes_with_empty_cells_keep_their_mass(self):
        dist = exact_dist.enumerate(CellFunction.indicator(0), 3, 3)

        np.testing.assert_array_equal(dist.values, [0.0, 1.0, 2.0])
        np.testing.assert_allclose(dist.probs, [6 / 27, 18 / 27, 3 / 27], rtol=1e-12)

    def test_empty_cell_mean_under_unequal_probabilities(self):
        p = [0.1, 0.2, 0.3, 0.4]
        dist = exact_dist.enumerate(CellFunction.indicator(0), 5, 4, p=p)

        self.assertAlmostEqual(dist.mean, math.fsum((1.0 - q) ** 5 for q in p), places=12)

    def test_many_cells(self):
        dist = exact_dist.enumerate(CellFunction.chi_square(), 1, 1100)

        self.assertEqual(len(dist.atoms), 1)
        self.assertAlmostEqual(dist.total_mass, 1.0, places=12)

    def test_result_does_not_depend_on_chunk_size(self):
        whole = exact_dist.enumerate(CellFunction.log_likelihood(), 6, 4)
        with mock.patch.object(exact_dist, "CHUNK_CELLS", 12):
            chunked = exact_dist.enumerate(CellFunction.log_likelihood(), 6, 4, threads=2)

        np.testing.assert_array_equal(whole.values, chunked.values)
        np.testing.assert_allclose(whole.probs, chunked.probs, rtol=1e-12)

    def test_empty_cell_mean(self):
        n, N = 7, 5
        dist = exact_dist.enumerate(CellFunction.indicator(0), n, N)

        self.assertAlmostEqual(dist.mean, N * (1.0 - 1.0 / N) ** n, places=12)

    def test_atoms_are_sorted_and_distinct(self):
        dist = exact_dist.enumerate(CellFunction.log_likelihood(), 8, 5)

        self.assertTrue(np.all(np.diff(dist.values) > exact_dist.MERGE_TOL))
        self.assertTrue(np.all(dist.probs > 0))

    def test_non_uniform_probabilities(self):
        dist = exact_dist.enumerate(CellFunction.chi_square(), 2, 2, p=[0.25, 0.75])

        self.assertEqual(len(dist.atoms), 2)
        self.assertAlmostEqual(dist.probs[0], 0.375, places=12)
        self.assertAlmostEqual(dist.probs[1], 0.625, places=12)

    def test_result_does_not_depend_on_threads(self):
        single = exact_dist.enumerate(CellFunction.freeman_tukey(), 9, 5, threads=1)
        pooled = exact_dist.enumerate(CellFunction.freeman_tukey(), 9, 5, threads=4)

        np.testing.assert_array_equal(single.values, pooled.values)
        np.testing.assert_array_equal(single.probs, pooled.probs)

    def test_budget_is_enforced(self):
        with self.assertRaises(EnumerationBudgetError) as ctx:
            exact_dist.enumerate(CellFunction.chi_square(), 10, 10, budget=100)

        self.assertEqual(ctx.exception.count, math.comb(19, 9))
        self.assertEqual(ctx.exception.budget, 100)

    def test_rejects_invalid_inputs(self):
        with self.assertRaises(InvalidInputError):
            exact_dist.enumerate(CellFunction.chi_square(), 0, 3)
        with self.assertRaises(InvalidInputError):
            exact_dist.enumerate(CellFunction.chi_square(), 3, 1)
        with self.assertRaises(InvalidInputError):
            exact_dist.enumerate(CellFunction.chi_square(), 3, 2, p=[0.2, 0.3, 0.5])
        with self.assertRaises(InvalidInputError):
            exact_dist.enumerate(CellFunction.chi_square(), 3, 2, p=[0.0, 1.0])


class TailAndCriticalTests(SimpleTestCase):
    def setUp(self):
        self.dist = exact_dist.enumerate(CellFunction.chi_square(), 2, 2)

    def test_tail_is_strict(self):
        self.assertAlmostEqual(exact_dist.exact_tail(self.dist, 0.0), 0.5, places=12)
        self.assertAlmostEqual(exact_dist.exact_tail(self.dist, -1.0), 1.0, places=12)
        self.assertEqual(exact_dist.exact_tail(self.dist, 2.0), 0.0)

    def test_critical_value_and_attained_level(self):
        self.assertEqual(exact_dist.exact_critical(self.dist, 0.3), (2.0, 0.0))
        t, level = exact_dist.exact_critical(self.dist, 0.6)
        self.assertEqual(t, 0.0)
        self.assertAlmostEqual(level, 0.5, places=12)

    def test_critical_level_never_exceeds_alpha(self):
        dist = exact_dist.enumerate(CellFunction.log_likelihood(), 8, 6)
        for alpha in (0.01, 0.05, 0.1, 0.5):
            t, level = exact_dist.exact_critical(dist, alpha)
            self.assertLessEqual(level, alpha + exact_dist.LEVEL_TOL)
            below = dist.values[dist.values < t]
            if below.size:
                self.assertGreater(exact_dist.exact_tail(dist, float(below[-1])), alpha)

    def test_rejects_alpha_outside_unit_interval(self):
        with self.assertRaises(InvalidInputError):
            exact_dist.exact_critical(self.dist, 1.0)

    def test_standardized_keeps_probabilities(self):
        standardized = self.dist.standardized(2.0, 2.0)

        np.testing.assert_allclose(standardized.values, [-1.0, 0.0])
        np.testing.assert_array_equal(standardized.probs, self.dist.probs)


class JointCorrelationTests(SimpleTestCase):
    def test_statistic_with_itself(self):
        corr = exact_dist.exact_joint_corr(CellFunction.log_likelihood(), CellFunction.log_likelihood(), 6, 4)

        self.assertAlmostEqual(corr, 1.0, places=12)

    def test_empty_cells_track_chi_square_for_two_balls(self):
        corr = exact_dist.exact_joint_corr(CellFunction.chi_square(), CellFunction.indicator(0), 2, 2)

        self.assertAlmostEqual(corr, 1.0, places=12)

    def test_log_likelihood_tracks_the_poisson_correlation(self):
        corr = exact_dist.exact_joint_corr(CellFunction.log_likelihood(), CellFunction.chi_square(), 8, 6)
        rho = moment_summary(CellFunction.log_likelihood(), PoissonContext(lam=8 / 6, truncation_tol=1e-12)).rho

        self.assertLess(corr, 1.0)
        self.assertAlmostEqual(corr, rho, delta=0.1)

    def test_correlation_is_bounded(self):
        corr = exact_dist.exact_joint_corr(CellFunction.chi_square(), CellFunction.indicator(1), 8, 6)

        self.assertLess(abs(corr), 1.0)

    def test_constant_statistic_is_rejected(self):
        with self.assertRaises(DegenerateVarianceError):
            exact_dist.exact_joint_corr(CellFunction.chi_square(), CellFunction.indicator(5), 2, 2)

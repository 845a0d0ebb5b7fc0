import math
from unittest import mock

import numpy as np
from django.test import SimpleTestCase

from efficiency.services import acceptance, exact_dist, poisson_oracle
from efficiency.services.acceptance import RunOptions, run_acceptance, tail_thresholds
from efficiency.services.errors import InvalidInputError
from efficiency.services.montecarlo import SeedSpec
from efficiency.services.statistics import CellFunction

OPTIONS = RunOptions(seed=SeedSpec(master_seed=20240611))


class CriteriaTests(SimpleTestCase):
    def test_rho_maximality(self):
        passed, measured, _ = acceptance.check_rho_maximality(OPTIONS)

        self.assertTrue(passed, measured)
        self.assertLessEqual(measured["max_abs_rho_square_minus_1"], 1e-9)

    def test_square_cell_reaches_the_bound(self):
        square = acceptance.square_cell()

        self.assertEqual(square(np.array([0, 3, 7]), 2.0).tolist(), [0.0, 9.0, 49.0])
        self.assertGreater(acceptance.SQUARE_TABLE_SIZE, 100.0 + 12.0 * 10.0 + 30.0)

    def test_small_lambda_constants(self):
        passed, measured, detail = acceptance.check_small_lambda(OPTIONS)

        self.assertTrue(passed, detail)
        self.assertAlmostEqual(measured["mu:1"]["c"], 3.0 / 8.0)

    def test_wrong_small_lambda_constant_is_detected(self):
        with mock.patch.dict(poisson_oracle.INDICATOR_SMALL_LAMBDA_CONSTANTS, {1: 0.5}):
            passed, _, detail = acceptance.check_small_lambda(OPTIONS)

        self.assertFalse(passed)
        self.assertIn("mu:1", detail)

    def test_identities(self):
        passed, gaps, detail = acceptance.check_identities(OPTIONS)

        self.assertTrue(passed, detail)
        self.assertEqual(set(gaps), {"cr1_chi2", "cr_half_ft", "barred_form", "collision_empty"})

    def test_oracle_agreement_with_fewer_replicates(self):
        passed, measured, _ = acceptance.check_oracle_agreement(RunOptions(seed=OPTIONS.seed, reps=10_000))

        self.assertTrue(passed, measured)
        self.assertGreater(measured["tail_comparisons"], 100)

    def test_verdict_table(self):
        passed, measured, detail = acceptance.check_verdicts(OPTIONS)

        self.assertTrue(passed, detail)
        self.assertEqual(measured["familia_alternativa_pocas_celdas"], "satisfied")

    def test_closed_form(self):
        passed, measured, detail = acceptance.check_closed_form(OPTIONS)

        self.assertTrue(passed, detail)
        self.assertEqual(measured["vanishing_tau"], 0.0)

    def test_large_lambda_expansion(self):
        passed, measured, detail = acceptance.check_large_lambda(OPTIONS)

        self.assertTrue(passed, detail)
        self.assertEqual(set(measured), {"pd:-0.5", "llr", "pd:2", "pd:3", "chi2_gap"})

    def test_barred_form_covers_non_integer_indices(self):
        for d in (0.0, 0.3, 1.0, 2.0):
            self.assertIn(d, acceptance.BARRED_FORM_INDICES)

    def test_normality_with_exact_centering(self):
        passed, measured, _ = acceptance.check_normality(OPTIONS)

        self.assertTrue(passed, measured)
        self.assertAlmostEqual(measured["center_shift"], -1.0 / math.sqrt(2000.0), places=8)

    def test_chi_square_correlation_of_likelihood_ratio(self):
        passed, measured, _ = acceptance.check_chi2_correlation(OPTIONS)

        self.assertTrue(passed, measured)
        self.assertLess(measured["exact_corr_n8_N6"], 1.0)

    def test_power_formula(self):
        passed, measured, _ = acceptance.check_power_formula(RunOptions(seed=OPTIONS.seed, reps=50_000))

        self.assertTrue(passed, measured)
        self.assertAlmostEqual(measured["asymptotic_power"], 0.4088, places=3)


class TailThresholdTests(SimpleTestCase):
    def test_thresholds_fall_between_atoms(self):
        dist = exact_dist.enumerate(CellFunction.log_likelihood(), 8, 6)
        thresholds = tail_thresholds(dist)

        self.assertEqual(len(thresholds), 5)
        for t, tail in thresholds:
            self.assertNotIn(t, dist.values.tolist())
            self.assertTrue(0.01 <= tail <= 0.99)

    def test_two_atoms_give_one_threshold(self):
        thresholds = tail_thresholds(exact_dist.enumerate(CellFunction.chi_square(), 2, 2))

        self.assertEqual(len(thresholds), 1)
        self.assertEqual(thresholds[0][0], 1.0)


class RunAcceptanceTests(SimpleTestCase):
    def test_reports_each_item(self):
        results = run_acceptance(["A9", "A10"], OPTIONS)

        self.assertEqual([result.item for result in results], ["A9", "A10"])
        self.assertTrue(all(result.passed for result in results))
        self.assertTrue(all(result.wall_time_s >= 0 for result in results))

    def test_errors_become_failures(self):
        def broken(opts):
            raise InvalidInputError("sin datos")

        with mock.patch.dict(acceptance.CRITERIA, {"A1": ("roto", broken)}):
            (result,) = run_acceptance(["A1"], OPTIONS)

        self.assertFalse(result.passed)
        self.assertEqual(result.detail, "sin datos")

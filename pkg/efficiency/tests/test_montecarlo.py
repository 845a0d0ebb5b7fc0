import math

import numpy as np
from django.test import SimpleTestCase

from efficiency.services import exact_dist, montecarlo
from efficiency.services.alternatives import RateFamily, make_profile
from efficiency.services.errors import InsufficientReplicatesError, InvalidInputError, KnNotFoundError
from efficiency.services.montecarlo import SeedSpec
from efficiency.services.rates import GrowthLaw
from efficiency.services.statistics import CellFunction

SEED = SeedSpec(master_seed=20240611)


class SeedSpecTests(SimpleTestCase):
    def test_parse_and_format(self):
        seed = SeedSpec.parse("42:3")

        self.assertEqual(seed, SeedSpec(master_seed=42, stream_id=3))
        self.assertEqual(str(seed), "42:3")
        self.assertEqual(SeedSpec.parse("7"), SeedSpec(master_seed=7))

    def test_offset_moves_stream_only(self):
        self.assertEqual(SeedSpec(5, 2).offset(3), SeedSpec(5, 5))

    def test_rejects_invalid_seeds(self):
        with self.assertRaises(InvalidInputError):
            SeedSpec.parse("abc")
        with self.assertRaises(InvalidInputError):
            SeedSpec(master_seed=-1)
        with self.assertRaises(InvalidInputError):
            SeedSpec(master_seed=2**64)
        with self.assertRaises(InvalidInputError):
            SeedSpec(master_seed=1, stream_id=-2)

    def test_streams_are_distinct(self):
        first = SEED.generator(0).integers(0, 2**32, size=8)
        second = SEED.offset(1).generator(0).integers(0, 2**32, size=8)

        self.assertFalse(np.array_equal(first, second))


class SamplingTests(SimpleTestCase):
    def test_replicate_is_reproducible(self):
        p = np.full(6, 1.0 / 6)
        first = montecarlo.sample_counts(30, p, SEED, 37, block_size=16)
        second = montecarlo.sample_counts(30, p, SEED, 37, block_size=16)

        np.testing.assert_array_equal(first.counts, second.counts)
        self.assertEqual(int(first.counts.sum()), 30)

    def test_simulate_does_not_depend_on_threads(self):
        p = np.full(8, 1.0 / 8)
        table = CellFunction.log_likelihood()(np.arange(41), 5.0)
        (single,) = montecarlo.simulate([table], 40, p, 1000, SEED, threads=1, block_size=64)
        (pooled,) = montecarlo.simulate([table], 40, p, 1000, SEED, threads=4, block_size=64)

        self.assertEqual(single.shape, (1000,))
        np.testing.assert_array_equal(single, pooled)

    def test_replicate_matches_simulated_value(self):
        p = np.full(5, 0.2)
        table = CellFunction.chi_square()(np.arange(21), 4.0)
        (values,) = montecarlo.simulate([table], 20, p, 100, SEED, block_size=16)
        freq = montecarlo.sample_counts(20, p, SEED, 37, block_size=16)

        self.assertAlmostEqual(values[37], float(table[freq.counts].sum()), places=12)

    def test_sample_counts_rejects_invalid_inputs(self):
        with self.assertRaises(InvalidInputError):
            montecarlo.sample_counts(0, [0.5, 0.5], SEED, 0)
        with self.assertRaises(InvalidInputError):
            montecarlo.sample_counts(5, [0.5, 0.5], SEED, -1)
        with self.assertRaises(InvalidInputError):
            montecarlo.sample_counts(5, [0.7, 0.7], SEED, 0)


class EstimatorTests(SimpleTestCase):
    def test_tail_agrees_with_enumeration(self):
        h = CellFunction.chi_square()
        dist = exact_dist.enumerate(h, 10, 5)
        t = float(dist.values[len(dist.values) // 2])
        estimate = montecarlo.estimate_tail(h, 10, 5, None, t, 20_000, SEED)

        self.assertLessEqual(abs(estimate.p_hat - exact_dist.exact_tail(dist, t)), 5 * estimate.std_err)
        self.assertEqual(estimate.reps, 20_000)

    def test_minimum_replicates(self):
        h = CellFunction.chi_square()
        with self.assertRaises(InsufficientReplicatesError):
            montecarlo.estimate_tail(h, 10, 5, None, 1.0, 50, SEED)
        with self.assertRaises(InsufficientReplicatesError):
            montecarlo.estimate_corr_chi2(h, 10, 5, 5_000, SEED)
        with self.assertRaises(InsufficientReplicatesError):
            montecarlo.estimate_critical(h, 10, 5, 0.01, 1_000, SEED)

    def test_critical_for_two_atom_statistic(self):
        critical = montecarlo.estimate_critical(CellFunction.chi_square(), 2, 2, 0.3, 1_000, SEED)

        self.assertAlmostEqual(critical, 0.0, places=9)

    def test_power_requires_matching_cells(self):
        with self.assertRaises(InvalidInputError):
            montecarlo.estimate_power(
                CellFunction.chi_square(), 10, 5, make_profile("two-block", 4, 0.01), 1.0, 1_000, SEED
            )

    def test_power_exceeds_level_under_alternative(self):
        h = CellFunction.chi_square()
        alt = make_profile("two-block", 10, 0.09)
        level = montecarlo.estimate_tail(h, 200, 10, None, 15.0, 4_000, SEED)
        power = montecarlo.estimate_power(h, 200, 10, alt, 15.0, 4_000, SEED.offset(1))

        self.assertGreater(power.p_hat, level.p_hat)

    def test_chi_square_correlates_with_itself(self):
        corr = montecarlo.estimate_corr_chi2(CellFunction.chi_square(), 30, 10, 10_000, SEED)

        self.assertAlmostEqual(corr, 1.0, places=9)

    def test_normality_of_chi_square_in_moderate_regime(self):
        diagnostic = montecarlo.normality_diagnostic(CellFunction.chi_square(), 400, 100, 4_000, SEED)

        self.assertLess(diagnostic.ks_distance, 0.1)
        self.assertLess(abs(diagnostic.mean), 0.2)
        self.assertLess(abs(diagnostic.var - 1.0), 0.2)

    def test_binomial_center_of_chi_square(self):
        self.assertAlmostEqual(montecarlo.binomial_center(CellFunction.chi_square(), 300, 100), 99.0, places=9)

    def test_binomial_centering_removes_the_poisson_offset(self):
        h = CellFunction.chi_square()
        poisson = montecarlo.normality_diagnostic(h, 400, 100, 4_000, SEED)
        exact = montecarlo.normality_diagnostic(h, 400, 100, 4_000, SEED, centering=montecarlo.Centering.BINOMIAL)

        self.assertEqual(exact.centering, "binomial")
        self.assertAlmostEqual(exact.center_shift, -1.0 / math.sqrt(200.0), places=8)
        self.assertAlmostEqual(exact.mean - poisson.mean, -exact.center_shift, places=9)
        self.assertAlmostEqual(exact.var, poisson.var, places=9)

    def test_rejects_unknown_centering(self):
        with self.assertRaises(InvalidInputError):
            montecarlo.normality_diagnostic(CellFunction.chi_square(), 40, 10, 4_000, SEED, centering="mediana")


class FindKnTests(SimpleTestCase):
    def setUp(self):
        self.fam = RateFamily(profile="two-block", c=1.0, gamma=0.4, growth=GrowthLaw(c=1.0, q=1.0))

    def test_same_statistic_needs_a_comparable_sample(self):
        h = CellFunction.chi_square()
        result = montecarlo.find_kn(h, h, 0.0, 20, self.fam, 4_000, SEED, window=2, k_max=160)

        self.assertTrue(0 < result.alpha_n < 1)
        self.assertGreater(result.kappa, 0.0)
        self.assertTrue(2 <= result.k_n <= 160)
        self.assertAlmostEqual(result.ratio, result.k_n / 20)
        self.assertIn(result.k_n, result.critical_values)
        self.assertGreaterEqual(result.power_at_kn.p_hat, result.target_power.p_hat)

    def test_useless_statistic_hits_the_search_limit(self):
        with self.assertRaises(KnNotFoundError) as ctx:
            montecarlo.find_kn(
                CellFunction.chi_square(), CellFunction.indicator(5), 0.0, 20, self.fam, 500, SEED, k_max=4
            )

        self.assertEqual(ctx.exception.k_max, 4)

    def test_rejects_invalid_arguments(self):
        h = CellFunction.chi_square()
        with self.assertRaises(InvalidInputError):
            montecarlo.find_kn(h, h, 0.0, 1, self.fam, 500, SEED)
        with self.assertRaises(InvalidInputError):
            montecarlo.find_kn(h, h, 0.0, 20, self.fam, 500, SEED, window=-1)

    def test_chi_square_needs_fewer_observations_than_likelihood_ratio(self):
        result = montecarlo.find_kn(
            CellFunction.chi_square(), CellFunction.log_likelihood(), 0.0, 200, self.fam, 20_000, SEED, window=2
        )

        self.assertGreaterEqual(result.ratio, 1.0)

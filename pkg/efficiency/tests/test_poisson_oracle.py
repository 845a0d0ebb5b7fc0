import math

import numpy as np
from django.test import SimpleTestCase

from efficiency.services.alternatives import AlternativeSpec, make_profile
from efficiency.services.errors import DegenerateVarianceError, InvalidInputError
from efficiency.services.poisson_oracle import (
    LLR_SMALL_LAMBDA_CONSTANT,
    PoissonContext,
    exact_shift,
    expect,
    kappa_asymptotic,
    kappa_second_order,
    moment_summary,
    polynomial_checks,
    rho_large_lambda,
    rho_small_lambda,
    small_lambda_constant,
)
from efficiency.services.statistics import CellFunction

TOL = 1e-12


def ctx(lam: float) -> PoissonContext:
    return PoissonContext(lam=lam, truncation_tol=TOL)


def square() -> CellFunction:
    return CellFunction.custom([float(k * k) for k in range(400)], tail_rule="zero")


class ExpectTests(SimpleTestCase):
    def test_poisson_moments(self):
        self.assertAlmostEqual(expect(lambda k: k, ctx(3.5)), 3.5, places=11)
        self.assertAlmostEqual(expect(lambda k: k * k, ctx(2.0)), 6.0, places=11)
        self.assertAlmostEqual(expect(lambda k: (k == 0).astype(float), ctx(1.0)), math.exp(-1.0), places=12)

    def test_rejects_invalid_context(self):
        with self.assertRaises(InvalidInputError):
            PoissonContext(lam=0.0, truncation_tol=TOL)
        with self.assertRaises(InvalidInputError):
            PoissonContext(lam=1.0, truncation_tol=1e-6)

    def test_rejects_non_finite_values_in_window(self):
        with self.assertRaises(InvalidInputError):
            expect(lambda k: np.where(k == 3, np.inf, 1.0), ctx(1.0))

    def test_centered_polynomial_identities(self):
        for lam in (0.05, 0.5, 1.0, 5.0, 50.0):
            checks = polynomial_checks(ctx(lam))
            self.assertLessEqual(abs(checks["mean_phi2"]), 10 * TOL * max(1.0, lam))
            self.assertLessEqual(abs(checks["mean_xi_phi2"]), 10 * TOL * max(1.0, lam) ** 2)
            self.assertAlmostEqual(checks["var_phi2"] / (2.0 * lam * lam), 1.0, places=9)
            self.assertAlmostEqual(checks["var_phi3"] / (6.0 * lam**3), 1.0, places=9)


class MomentSummaryTests(SimpleTestCase):
    def test_chi_square_cell(self):
        for lam in (0.3, 1.0, 7.0):
            summary = moment_summary(CellFunction.chi_square(), ctx(lam))
            self.assertAlmostEqual(summary.mean_h, 1.0, places=10)
            self.assertAlmostEqual(summary.sigma2, 2.0, places=9)
            self.assertAlmostEqual(summary.rho, 1.0, places=9)

    def test_square_cell_attains_maximal_rho(self):
        summary = moment_summary(square(), ctx(2.0))

        self.assertAlmostEqual(summary.r_n, 5.0, places=9)
        self.assertAlmostEqual(summary.sigma2, 8.0, places=8)
        self.assertAlmostEqual(summary.rho, 1.0, places=9)

    def test_empty_cell_indicator_near_small_lambda_expansion(self):
        summary = moment_summary(CellFunction.indicator(0), ctx(0.1))

        self.assertLessEqual(abs(summary.rho - (1.0 - 0.1 / 6.0)), 0.01)
        self.assertFalse(summary.degenerate)

    def test_variance_reduction_invariants(self):
        for h in (CellFunction.log_likelihood(), CellFunction.indicator(1), CellFunction.collision()):
            summary = moment_summary(h, ctx(2.0))
            self.assertLessEqual(summary.sigma2, summary.var_h)
            expected = summary.var_h * (1.0 - summary.cov_h_xi**2 / (summary.var_h * 2.0))
            self.assertAlmostEqual(summary.sigma2, expected, places=10)
            self.assertLessEqual(abs(summary.rho), 1.0)

    def test_affine_invariance(self):
        h = CellFunction.log_likelihood()
        base = moment_summary(h, ctx(2.0))
        ks = np.arange(200)
        shifted = CellFunction.custom((3.0 * h(ks, 2.0) + 0.5 * ks + 1.0).tolist(), tail_rule="zero")
        summary = moment_summary(shifted, ctx(2.0))

        self.assertAlmostEqual(summary.rho, base.rho, places=9)
        self.assertAlmostEqual(summary.sigma2 / (9.0 * base.sigma2), 1.0, places=9)

    def test_affine_cell_is_flagged(self):
        affine = CellFunction.custom([1.0, 3.0, 5.0, 7.0], tail_rule="linear")
        summary = moment_summary(affine, ctx(1.0))

        self.assertTrue(summary.degenerate)
        self.assertEqual(summary.rho, 0.0)


class ExpansionTests(SimpleTestCase):
    def test_small_lambda_closed_forms(self):
        self.assertAlmostEqual(rho_small_lambda(CellFunction.power_divergence(2.0), 0.1), 1.0 - 0.1 / 6.0, places=12)
        self.assertAlmostEqual(rho_small_lambda(CellFunction.log_likelihood(), 0.1), 0.99354, places=5)
        self.assertAlmostEqual(rho_small_lambda(CellFunction.indicator(1), 0.2), 0.925, places=12)
        self.assertAlmostEqual(LLR_SMALL_LAMBDA_CONSTANT, 0.0645960, places=6)
        self.assertAlmostEqual(small_lambda_constant(CellFunction.freeman_tukey()), 0.116337, places=5)

    def test_generic_constant_for_collision(self):
        self.assertAlmostEqual(small_lambda_constant(CellFunction.collision()), 1.0 / 6.0, places=12)

    def test_generic_constant_requires_second_difference(self):
        with self.assertRaises(InvalidInputError):
            small_lambda_constant(CellFunction.custom([0.0, 1.0, 2.0, 5.0], tail_rule="zero"))

    def test_large_lambda_expansion(self):
        self.assertEqual(rho_large_lambda(1.0, 50.0), 1.0)
        self.assertAlmostEqual(rho_large_lambda(0.0, 100.0), 1.0 - 1.0 / 600.0, places=14)
        self.assertAlmostEqual(rho_large_lambda(-0.5, 25.0), 0.985, places=14)

    def small_lambda_residuals(self, h):
        c = small_lambda_constant(h)
        return [abs(moment_summary(h, ctx(lam)).rho - (1.0 - c * lam)) for lam in (0.04, 0.02)]

    def test_small_lambda_residual_is_quadratic(self):
        cells = (
            CellFunction.power_divergence(-0.5),
            CellFunction.log_likelihood(),
            CellFunction.power_divergence(2.0),
            CellFunction.indicator(2),
        )
        for h in cells:
            r04, r02 = self.small_lambda_residuals(h)
            self.assertTrue(3.0 <= r04 / r02 <= 5.0, h.label)

    def test_small_lambda_residual_is_at_least_quadratic_for_indicators(self):
        for h in (CellFunction.indicator(0), CellFunction.indicator(1)):
            r04, r02 = self.small_lambda_residuals(h)
            self.assertGreaterEqual(r04 / r02, 3.0, h.label)

        r04, r02 = self.small_lambda_residuals(CellFunction.indicator(0))
        self.assertAlmostEqual(r04 / r02, 8.0, delta=0.5)

    def test_large_lambda_residual_is_quadratic(self):
        for d in (-0.5, 2.0):
            h = CellFunction.power_divergence(d)
            residuals = [abs(moment_summary(h, ctx(lam)).rho - rho_large_lambda(d, lam)) for lam in (25.0, 50.0, 100.0)]
            self.assertTrue(3.0 <= residuals[0] / residuals[1] <= 5.0, h.label)
            self.assertTrue(3.0 <= residuals[1] / residuals[2] <= 5.0, h.label)

    def test_large_lambda_order_for_likelihood_ratio_and_cubic_index(self):
        for d in (0.0, 3.0):
            h = CellFunction.log_likelihood() if d == 0 else CellFunction.power_divergence(d)
            r50, r100 = (abs(moment_summary(h, ctx(lam)).rho - rho_large_lambda(d, lam)) for lam in (50.0, 100.0))
            scaled = (1.0 - moment_summary(h, ctx(100.0)).rho) * 600.0 / (d - 1.0) ** 2
            self.assertTrue(3.0 <= r50 / r100 <= 5.0, h.label)
            self.assertTrue(0.8 <= scaled <= 1.2, h.label)


class ShiftTests(SimpleTestCase):
    def test_kappa_asymptotic_examples(self):
        chi2 = CellFunction.chi_square()

        self.assertAlmostEqual(kappa_asymptotic(chi2, 100, 100, 0.04), math.sqrt(50.0) * 0.04, places=9)
        self.assertEqual(kappa_asymptotic(CellFunction.log_likelihood(), 100, 100, 0.0), 0.0)

        rho = moment_summary(CellFunction.log_likelihood(), ctx(100.0)).rho
        value = kappa_asymptotic(CellFunction.log_likelihood(), 10_000, 100, 0.01)
        self.assertAlmostEqual(value, math.sqrt(10_000 * 100 / 2.0) * 0.01 * rho, places=9)
        self.assertAlmostEqual(value, 7.0593, places=3)

    def test_kappa_asymptotic_propagates_degenerate_variance(self):
        affine = CellFunction.custom([0.0, 1.0, 2.0, 3.0], tail_rule="linear")

        with self.assertRaises(DegenerateVarianceError):
            kappa_asymptotic(affine, 10, 10, 0.1)

    def test_exact_shift_is_zero_under_null(self):
        shift = exact_shift(CellFunction.log_likelihood(), 40, AlternativeSpec.null(20))

        self.assertAlmostEqual(shift.kappa_exact, 0.0, places=9)
        self.assertAlmostEqual(shift.sigma1, shift.sigma0, places=9)
        self.assertAlmostEqual(shift.a1, shift.a0, places=10)

    def test_exact_shift_close_to_asymptotic_for_chi_square(self):
        alt = make_profile("two-block", 50, 0.01)
        shift = exact_shift(CellFunction.chi_square(), 50, alt)

        self.assertAlmostEqual(shift.kappa_asymptotic, 0.05, places=9)
        self.assertLessEqual(abs(shift.kappa_exact - shift.kappa_asymptotic), 0.1 * shift.kappa_asymptotic)

    def test_exact_shift_sign_for_empty_cell_indicator(self):
        alt = make_profile("two-block", 100, 0.04)
        shift = exact_shift(CellFunction.indicator(0), 20, alt)

        self.assertTrue(math.isfinite(shift.kappa_exact))
        self.assertEqual(math.copysign(1.0, shift.kappa_exact), math.copysign(1.0, shift.kappa_asymptotic))

    def test_second_order_shift_reduces_to_first_for_symmetric_profile(self):
        alt = make_profile("two-block", 50, 0.01)

        first = kappa_asymptotic(CellFunction.log_likelihood(), 100, 50, 0.01)
        self.assertAlmostEqual(kappa_second_order(CellFunction.log_likelihood(), 100, alt), first, places=10)

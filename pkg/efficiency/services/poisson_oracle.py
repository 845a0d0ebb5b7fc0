"""Truncated Poisson series for the moments of a cell function.

Every functional of a symmetric statistic (centering, projection on the
Poisson variable, variance and the efficiency correlation) is an expectation
of a function of a single Poisson variable; this module evaluates them by
explicit sums over 0..K with compensated summation.
"""
from __future__ import annotations

import logging
import math
from dataclasses import dataclass

import numpy as np
from scipy.special import gammaln
from scipy.stats import poisson

from .alternatives import AlternativeSpec, epsilon_moment, epsilon_norm
from .errors import DegenerateVarianceError, InvalidInputError
from .statistics import CellFunction, CellKind

logger = logging.getLogger(__name__)

DEFAULT_TRUNCATION_TOL = 1e-12
DEGENERACY_RATIO = 1e-14
MAX_TRUNCATION = 200_000

# Constantes de la expansion para lambda pequeno: 1 - rho ~ c * lambda.
LLR_SMALL_LAMBDA_CONSTANT = 3.0 / 8.0 * (math.log(0.75) / math.log(2.0)) ** 2
INDICATOR_SMALL_LAMBDA_CONSTANTS = {0: 1.0 / 6.0, 1: 3.0 / 8.0, 2: 3.0 / 2.0}


@dataclass(frozen=True)
class PoissonContext:
    lam: float
    truncation_tol: float = DEFAULT_TRUNCATION_TOL

    def __post_init__(self):
        if not math.isfinite(self.lam) or self.lam <= 0:
            raise InvalidInputError(f"La tasa de Poisson debe ser positiva (lambda={self.lam}).")
        if not 0 < self.truncation_tol <= 1e-8:
            raise InvalidInputError("La tolerancia de truncamiento debe estar en (0, 1e-8].")


@dataclass(frozen=True)
class CenteredPolys:
    """Second and third Poisson-Charlier polynomials centred at lam."""

    lam: float

    def phi2_at(self, k):
        u = np.asarray(k, dtype=np.float64) - self.lam
        return u * u - u - self.lam

    def phi3_at(self, k):
        u = np.asarray(k, dtype=np.float64) - self.lam
        return u**3 - 3.0 * u * u + (2.0 - 3.0 * self.lam) * u + 2.0 * self.lam


@dataclass(frozen=True)
class MomentSummary:
    lam: float
    mean_h: float
    var_h: float
    cov_h_xi: float
    r_n: float
    sigma2: float
    rho: float
    rho3: float
    degenerate: bool

    @property
    def sigma(self) -> float:
        return math.sqrt(self.sigma2)


@dataclass(frozen=True)
class ShiftSummary:
    a0: float
    a1: float
    sigma0: float
    sigma1: float
    kappa_exact: float
    kappa_asymptotic: float
    kappa_second_order: float
    sigma1_expansion: float


def _tail_mass(lam: float, K: int) -> float:
    log_head = -lam + (K + 1) * math.log(lam) - float(gammaln(K + 2))
    return math.exp(log_head) / (1.0 - lam / (K + 2))


def truncation_bound(ctx: PoissonContext, f) -> int:
    lam = ctx.lam
    K = max(60, math.ceil(lam + 12.0 * math.sqrt(lam) + 30.0))
    while K <= MAX_TRUNCATION:
        beyond = np.abs(np.asarray(f(np.arange(K + 1, 2 * K + 3)), dtype=np.float64))
        scale = max(1.0, float(np.max(np.nan_to_num(beyond, nan=np.inf))))
        if _tail_mass(lam, K) * scale < ctx.truncation_tol:
            return K
        K = math.ceil(1.25 * K) + 1
    raise InvalidInputError(f"No se encontro un truncamiento valido para lambda={lam}.")


def _window(ctx: PoissonContext, f):
    K = truncation_bound(ctx, f)
    ks = np.arange(K + 1)
    weights = poisson.pmf(ks, ctx.lam)
    values = np.asarray(f(ks), dtype=np.float64)
    if not np.all(np.isfinite(values)):
        bad = int(ks[~np.isfinite(values)][0])
        raise InvalidInputError(f"La funcion no es finita en k={bad} dentro de la ventana de truncamiento.")
    return ks, weights, values


def _fsum(values) -> float:
    return math.fsum(np.asarray(values, dtype=np.float64).tolist())


def expect(f, ctx: PoissonContext) -> float:
    """E f(xi) for xi ~ Poi(ctx.lam); ``f`` receives an array of nonnegative integers."""
    _, weights, values = _window(ctx, f)
    return _fsum(weights * values)


def _moment_envelope(h: CellFunction, lam: float):
    # |h|^2 por un polinomio de grado 6 acota todos los productos que se suman.
    def bound(k):
        k = np.asarray(k, dtype=np.float64)
        return (1.0 + np.asarray(h(k, lam)) ** 2) * (1.0 + k) ** 6

    return bound


def _h_window(h: CellFunction, ctx: PoissonContext):
    K = truncation_bound(ctx, _moment_envelope(h, ctx.lam))
    ks = np.arange(K + 1)
    values = np.asarray(h(ks, ctx.lam), dtype=np.float64)
    if not np.all(np.isfinite(values)):
        raise InvalidInputError(f"La funcion {h.label} no es finita dentro de la ventana de truncamiento.")
    return ks, values


def _corr(weights, g, phi, sigma2) -> float:
    var_phi = _fsum(weights * phi * phi)
    value = _fsum(weights * g * phi) / math.sqrt(sigma2 * var_phi)
    return min(1.0, max(-1.0, value))


def moment_summary(h: CellFunction, ctx: PoissonContext) -> MomentSummary:
    lam = ctx.lam
    ks, hv = _h_window(h, ctx)
    weights = poisson.pmf(ks, lam)
    polys = CenteredPolys(lam)

    mean_h = _fsum(weights * hv)
    dh = hv - mean_h
    dk = ks - lam
    var_h = max(0.0, _fsum(weights * dh * dh))
    cov_h_xi = _fsum(weights * dh * dk)
    r_n = cov_h_xi / lam
    g = dh - r_n * dk
    sigma2 = min(var_h, max(0.0, _fsum(weights * g * g)))

    degenerate = var_h <= 0.0 or sigma2 < DEGENERACY_RATIO * var_h
    if degenerate:
        rho = rho3 = 0.0
    else:
        rho = _corr(weights, g, polys.phi2_at(ks), sigma2)
        rho3 = _corr(weights, g, polys.phi3_at(ks), sigma2)

    return MomentSummary(
        lam=lam,
        mean_h=mean_h,
        var_h=var_h,
        cov_h_xi=cov_h_xi,
        r_n=r_n,
        sigma2=sigma2,
        rho=rho,
        rho3=rho3,
        degenerate=degenerate,
    )


def polynomial_checks(ctx: PoissonContext) -> dict[str, float]:
    """Truncated moments of phi2 and phi3 that must match their closed forms."""
    polys = CenteredPolys(ctx.lam)
    return {
        "mean_phi2": expect(polys.phi2_at, ctx),
        "mean_xi_phi2": expect(lambda k: k * polys.phi2_at(k), ctx),
        "var_phi2": expect(lambda k: polys.phi2_at(k) ** 2, ctx),
        "mean_phi3": expect(polys.phi3_at, ctx),
        "mean_xi_phi3": expect(lambda k: k * polys.phi3_at(k), ctx),
        "var_phi3": expect(lambda k: polys.phi3_at(k) ** 2, ctx),
    }


def small_lambda_constant(h: CellFunction, lam: float = 1.0) -> float:
    """Constant c of rho(h, lam) = 1 - c*lam + O(lam^2) as lam -> 0."""
    d = h.divergence_index
    if h.kind == CellKind.LOG_LIKELIHOOD:
        return LLR_SMALL_LAMBDA_CONSTANT
    if h.kind in (CellKind.POWER_DIVERGENCE, CellKind.FREEMAN_TUKEY):
        return 3.0 * (3.0**d - 2.0 ** (d + 1.0) + 1.0) ** 2 / (8.0 * (2.0**d - 1.0) ** 2)
    if h.kind == CellKind.INDICATOR and h.r in INDICATOR_SMALL_LAMBDA_CONSTANTS:
        return INDICATOR_SMALL_LAMBDA_CONSTANTS[h.r]

    h0, h1, h2, h3 = (float(value) for value in h(np.arange(4), lam))
    second = h2 - 2.0 * h1 + h0
    third = h3 - 3.0 * h2 + 3.0 * h1 - h0
    if abs(second) < 1e-300:
        raise InvalidInputError(f"La segunda diferencia de {h.label} en 0 es nula: no hay expansion.")
    return (third / second) ** 2 / 6.0


def rho_small_lambda(h: CellFunction, lam: float) -> float:
    if lam <= 0:
        raise InvalidInputError("lambda debe ser positivo.")
    return 1.0 - small_lambda_constant(h, lam) * lam


def rho_large_lambda(d: float, lam: float) -> float:
    if d <= -1:
        raise InvalidInputError("La divergencia de potencia requiere d > -1.")
    if lam <= 0:
        raise InvalidInputError("lambda debe ser positivo.")
    return 1.0 - (d - 1.0) ** 2 / (6.0 * lam)


def _checked_summary(h: CellFunction, lam: float, truncation_tol: float) -> MomentSummary:
    summary = moment_summary(h, PoissonContext(lam=lam, truncation_tol=truncation_tol))
    if summary.degenerate:
        raise DegenerateVarianceError(f"La funcion {h.label} es afin en lambda={lam:g}: sigma(h) = 0.")
    return summary


def _check_sizes(n: int, N: int):
    if n < 2 or N < 2:
        raise InvalidInputError("Se requieren n >= 2 y N >= 2.")


def kappa_asymptotic(
    h: CellFunction,
    n: int,
    N: int,
    eps_norm: float,
    *,
    truncation_tol: float = DEFAULT_TRUNCATION_TOL,
) -> float:
    _check_sizes(n, N)
    if eps_norm < 0:
        raise InvalidInputError("La norma de la alternativa no puede ser negativa.")
    lam = n / N
    summary = _checked_summary(h, lam, truncation_tol)
    return math.sqrt(n * lam / 2.0) * eps_norm * summary.rho


def kappa_second_order(
    h: CellFunction,
    n: int,
    alt: AlternativeSpec,
    *,
    truncation_tol: float = DEFAULT_TRUNCATION_TOL,
) -> float:
    """Shift including the cubic term in the third moment of the alternative."""
    N = alt.N
    _check_sizes(n, N)
    lam = n / N
    summary = _checked_summary(h, lam, truncation_tol)
    first = math.sqrt(n * lam / 2.0) * epsilon_norm(alt) * summary.rho
    second = math.sqrt(n / 6.0) * lam * epsilon_moment(alt, 3) * summary.rho3
    return first + second


def exact_shift(
    h: CellFunction,
    n: int,
    alt: AlternativeSpec,
    *,
    truncation_tol: float = DEFAULT_TRUNCATION_TOL,
) -> ShiftSummary:
    N = alt.N
    _check_sizes(n, N)
    probabilities = (1.0 + alt.eps) / N
    if np.any(probabilities <= 0):
        raise InvalidInputError("Todas las probabilidades de celda deben ser positivas.")

    lam = n / N
    ctx = PoissonContext(lam=lam, truncation_tol=truncation_tol)
    null = _checked_summary(h, lam, truncation_tol)
    envelope = _moment_envelope(h, lam)

    # Las celdas con el mismo eps comparten los momentos; se agrupan.
    levels, multiplicity = np.unique(alt.eps, return_counts=True)
    means, variances = [], []
    for eps, count in zip(levels, multiplicity):
        cell_ctx = ctx if eps == 0 else PoissonContext(lam=lam * (1.0 + eps), truncation_tol=truncation_tol)
        K = truncation_bound(cell_ctx, envelope)
        ks = np.arange(K + 1)
        weights = poisson.pmf(ks, cell_ctx.lam)
        hv = np.asarray(h(ks, lam), dtype=np.float64)
        g = hv - null.mean_h - null.r_n * (ks - lam)
        mean_g = _fsum(weights * g)
        means.append(count * _fsum(weights * hv))
        variances.append(count * max(0.0, _fsum(weights * g * g) - mean_g * mean_g))

    a1 = math.fsum(means) / N
    sigma1 = math.sqrt(math.fsum(variances) / N)
    kappa_exact = math.sqrt(N) * (a1 - null.mean_h) / null.sigma

    eps2 = epsilon_norm(alt)
    polys = CenteredPolys(lam)
    ks, hv = _h_window(h, ctx)
    weights = poisson.pmf(ks, lam)
    g = hv - null.mean_h - null.r_n * (ks - lam)
    expansion = _fsum(weights * g * g) + 0.5 * eps2 * _fsum(weights * g * g * polys.phi2_at(ks))

    kappa_asym = math.sqrt(n * lam / 2.0) * eps2 * null.rho
    second = kappa_asym + math.sqrt(n / 6.0) * lam * epsilon_moment(alt, 3) * null.rho3
    logger.debug("Desplazamiento exacto %s n=%s N=%s: kappa=%.6g", h.label, n, N, kappa_exact)
    return ShiftSummary(
        a0=null.mean_h,
        a1=a1,
        sigma0=null.sigma,
        sigma1=sigma1,
        kappa_exact=kappa_exact,
        kappa_asymptotic=kappa_asym,
        kappa_second_order=second,
        sigma1_expansion=math.sqrt(max(0.0, expansion)),
    )

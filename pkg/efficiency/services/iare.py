"""Intermediate efficiency of the chi-square test against other symmetric tests.

``closed_form_iare`` solves the sample-size fixed point implied by equal
asymptotic levels and powers; ``theorem_verdict`` classifies an alternative
family against the known rate conditions and answers e>1, e=1, e=0 or open.
"""
from __future__ import annotations

import logging
import math
from dataclasses import dataclass, field
from typing import Callable

from django.db import models
from scipy.stats import norm

from .alternatives import RateFamily
from .errors import DegenerateVarianceError, InvalidInputError, NonConvergenceError
from .poisson_oracle import DEFAULT_TRUNCATION_TOL, PoissonContext, moment_summary
from .rates import (
    EXPONENT_TOL,
    N_RATE,
    Condition,
    ConditionStatus,
    GrowthLaw,
    PowerRate,
    cells_rate,
    lam_rate,
    much_greater,
    much_less,
    tends_to_infinity,
)
from .statistics import CellFunction, CellKind

logger = logging.getLogger(__name__)

DAMPING = 0.5
RELATIVE_TOL = 1e-10
MAX_ITERATIONS = 200
RHO_FLOOR = 1e-12


class RegimeTag(models.TextChoices):
    VERY_SPARSE = "very-sparse", "Very sparse"
    SPARSE = "sparse", "Sparse"
    DENSE = "dense", "Dense"


class TauKind(models.TextChoices):
    CONSTANT = "constant", "Constant"
    VANISHING = "vanishing", "Vanishing"


class VerdictValue(models.TextChoices):
    GREATER = "e>1", "Chi-square strictly better"
    EQUAL = "e=1", "Equivalent"
    ZERO = "e=0", "Chi-square strictly worse"
    OPEN = "open", "Not covered"


class PsiKind(models.TextChoices):
    DIVERGENCE = "pd", "Power divergence"
    INDICATOR = "indicator", "Cell count indicator"
    COLLISION = "collision", "Collisions"


@dataclass(frozen=True)
class Regime:
    tag: str
    lam_limit: float | None
    conditions: list[Condition] = field(default_factory=list)


@dataclass(frozen=True)
class TauSpec:
    kind: str = TauKind.CONSTANT
    value: float | None = 0.5

    def __post_init__(self):
        if self.kind not in TauKind.values:
            raise InvalidInputError(f"Tipo de tau desconocido: {self.kind!r}.")
        if self.kind == TauKind.CONSTANT and (self.value is None or not 0 < self.value <= 0.5):
            raise InvalidInputError("tau constante debe estar en (0, 1/2].")

    @classmethod
    def vanishing(cls) -> TauSpec:
        return cls(kind=TauKind.VANISHING, value=None)


@dataclass(frozen=True)
class PsiDescriptor:
    kind: str
    d: float | None = None
    r: int | None = None

    @classmethod
    def from_cell(cls, psi: CellFunction) -> PsiDescriptor:
        if psi.divergence_index is not None:
            return cls(kind=PsiKind.DIVERGENCE, d=psi.divergence_index)
        if psi.kind == CellKind.INDICATOR:
            return cls(kind=PsiKind.INDICATOR, r=psi.r)
        if psi.kind == CellKind.COLLISION:
            return cls(kind=PsiKind.COLLISION)
        raise InvalidInputError(f"No hay tabla de veredictos para la funcion {psi.label}.")

    @property
    def is_count(self) -> bool:
        return self.kind == PsiKind.COLLISION or (self.kind == PsiKind.INDICATOR and self.r in (0, 1, 2))


@dataclass(frozen=True)
class Verdict:
    value: str
    conditions_applied: list[Condition]
    citation: str

    def as_dict(self) -> dict:
        return {
            "verdict": str(self.value),
            "theorem": self.citation,
            "conditions": [{"text": c.text, "satisfied": c.satisfied} for c in self.conditions_applied],
        }


def classify_regime(g: GrowthLaw) -> Regime:
    n_lam = Condition("nλ_n → ∞", tends_to_infinity(N_RATE * lam_rate(g)))
    if g.is_sparse:
        return Regime(tag=RegimeTag.SPARSE, lam_limit=1.0 / g.c, conditions=[n_lam])
    if g.q < 1:
        return Regime(tag=RegimeTag.DENSE, lam_limit=math.inf, conditions=[n_lam])
    cubic = Condition("nλ_n³ → ∞", tends_to_infinity(N_RATE * lam_rate(g) ** 3))
    return Regime(tag=RegimeTag.VERY_SPARSE, lam_limit=0.0, conditions=[n_lam, cubic])


def cramer_flag(psi: PsiDescriptor) -> bool:
    if psi.kind == PsiKind.DIVERGENCE:
        return -1.0 < psi.d <= EXPONENT_TOL
    return True


def _rho(h: CellFunction, lam: float, truncation_tol: float = DEFAULT_TRUNCATION_TOL) -> float:
    summary = moment_summary(h, PoissonContext(lam=lam, truncation_tol=truncation_tol))
    if summary.degenerate:
        raise DegenerateVarianceError(f"La funcion {h.label} es afin en lambda={lam:g}.")
    return summary.rho


def closed_form_iare(
    h: CellFunction,
    psi: CellFunction,
    g: GrowthLaw,
    tau: TauSpec,
    n: int,
    *,
    rho: Callable[[CellFunction, float], float] | None = None,
    damping: float = DAMPING,
    rtol: float = RELATIVE_TOL,
    max_iterations: int = MAX_ITERATIONS,
    truncation_tol: float = DEFAULT_TRUNCATION_TOL,
) -> float:
    """Solve k = n * (2 tau rho_h^2 / rho_psi(lam_k)^2)^(1/(2-q)) and return k/n."""
    if tau.kind == TauKind.VANISHING:
        return 0.0
    if n < 2:
        raise InvalidInputError("Se requiere n >= 2.")
    if rho is None:
        def rho(cell, lam):
            return _rho(cell, lam, truncation_tol)

    rho_h = rho(h, g.lam(n))
    exponent = 1.0 / (2.0 - g.q)

    def step(k: float) -> float:
        rho_psi = rho(psi, g.lam(k))
        if abs(rho_psi) < RHO_FLOOR:
            raise DegenerateVarianceError(f"rho({psi.label}) se anula en k={k:g}.")
        return n * (2.0 * tau.value * rho_h**2 / rho_psi**2) ** exponent

    k = float(n)
    for iteration in range(1, max_iterations + 1):
        proposal = step(k)
        updated = k + damping * (proposal - k)
        if abs(updated - k) <= rtol * k:
            logger.debug("IARE convergio en %s iteraciones (k=%.10g)", iteration, updated)
            return step(updated) / n
        k = updated
    raise NonConvergenceError(f"El punto fijo de k_n no convergio en {max_iterations} iteraciones.")


def pitman_efficiency(
    h: CellFunction,
    psi: CellFunction,
    lam: float,
    *,
    truncation_tol: float = DEFAULT_TRUNCATION_TOL,
) -> float:
    rho_psi = _rho(psi, lam, truncation_tol)
    if abs(rho_psi) < RHO_FLOOR:
        raise DegenerateVarianceError(f"rho({psi.label}) = 0 en lambda={lam:g}.")
    return _rho(h, lam, truncation_tol) ** 2 / rho_psi**2


def omega(alpha: float) -> float:
    if not 0 < alpha < 1:
        raise InvalidInputError("El nivel alpha debe estar en (0, 1).")
    return float(norm.ppf(1.0 - alpha))


def asymptotic_power(rho: float, nabla: float, alpha: float) -> float:
    return float(norm.cdf(nabla * abs(rho) / math.sqrt(2.0) - omega(alpha)))


def log_level_asymptotic(
    h: CellFunction,
    n: int,
    N: int,
    eps_norm: float,
    tau: float,
    *,
    truncation_tol: float = DEFAULT_TRUNCATION_TOL,
) -> float:
    """First-order value of -log alpha_n for the threshold tau-scaled shift."""
    lam = n / N
    return 0.5 * tau * n * lam * eps_norm**2 * _rho(h, lam, truncation_tol) ** 2


# Reglas de la tabla de veredictos: (id, valor, condiciones).


def _sparse_rules(psi: PsiDescriptor, fam: RateFamily):
    eps = fam.eps_rate
    log_n = PowerRate(0.0, 1.0)
    rules = []
    if psi.kind == PsiKind.DIVERGENCE and abs(psi.d - 1.0) > EXPONENT_TOL:
        d_star = max(1.0, psi.d)
        bound = PowerRate(-d_star / (1.0 + 2.0 * d_star))
        rules.append((
            "sparse-chi2-dominates-pds",
            VerdictValue.GREATER,
            [Condition(f"ε(n) ≪ n^{{-{d_star:g}/{1 + 2 * d_star:g}}}", much_less(eps, bound))],
        ))
    if cramer_flag(psi):
        cramer = Condition("condicion de Cramer", ConditionStatus.SATISFIED)
        rules.append((
            "sparse-chi2-dominates-cramer",
            VerdictValue.GREATER,
            [cramer, Condition("ε(n) ≪ n^{-1/3}", much_less(eps, PowerRate(-1.0 / 3.0)))],
        ))
        rules.append((
            "sparse-chi2-loses-cramer",
            VerdictValue.ZERO,
            [cramer, Condition(
                "ε(n) ≫ n^{-1/3}·log^{2/3} n",
                much_greater(eps, PowerRate(-1.0 / 3.0) * log_n ** (2.0 / 3.0)),
            )],
        ))
    band = "abierto: c₁n^{-1/3} ≤ ε(n) ≤ c₂n^{-1/3}·log^{2/3} n (disperso)"
    return rules, band


def _very_sparse_rules(psi: PsiDescriptor, fam: RateFamily):
    g = fam.growth
    eps = fam.eps_rate
    lam = lam_rate(g)
    log_cells = PowerRate(0.0, 1.0) if 2.0 * g.q - 1.0 > 0 else PowerRate(0.0)
    n_lam = Condition("nλ_n → ∞", tends_to_infinity(N_RATE * lam))
    n_lam3 = Condition("nλ_n³ → ∞", tends_to_infinity(N_RATE * lam**3))
    small = Condition("ε(n) ≪ n^{-1/3}", much_less(eps, PowerRate(-1.0 / 3.0)))
    rules = []
    if psi.is_count:
        rules.append(("very-sparse-counts-equivalent", VerdictValue.EQUAL, [n_lam, small]))
    elif psi.kind == PsiKind.DIVERGENCE and psi.d < 0.5:
        d_star = max(0.0, psi.d)
        lam_floor = PowerRate(-(1.0 - 2.0 * d_star) / 6.0)
        base = [n_lam3, Condition(f"λ_n ≫ n^{{-{(1 - 2 * d_star) / 6:g}}}", much_greater(lam, lam_floor))]
        rules.append(("very-sparse-pds-equivalent", VerdictValue.EQUAL, base + [small]))
        rules.append((
            "very-sparse-pds-chi2-loses",
            VerdictValue.ZERO,
            base + [
                Condition(
                    "ε(n) ≫ (nλ_n)^{-1/3}·log^{2/3}(N²/n)",
                    much_greater(eps, (N_RATE * lam) ** (-1.0 / 3.0) * log_cells ** (2.0 / 3.0)),
                ),
                Condition("ε(n) ≪ (nλ_n²)^{-1/4}", much_less(eps, (N_RATE * lam**2) ** (-0.25))),
            ],
        ))
    elif psi.kind == PsiKind.DIVERGENCE:
        d = psi.d
        bound = (lam ** (1.0 - d) / N_RATE**d) ** (1.0 / (2.0 * d + 1.0))
        rules.append((
            "very-sparse-large-index-equivalent",
            VerdictValue.EQUAL,
            [n_lam3, Condition("ε(n) ≪ (λ_n^{1-d}/n^d)^{1/(2d+1)}", much_less(eps, bound))],
        ))
    band = (
        "abierto: n^{-1/3} ≤ ε(n) ≤ (nλ_n)^{-1/3} o ε(n) ≥ (nλ_n²)^{-1/4} para d < 1/2; "
        "ε(n) ≥ (λ_n^{1-d}/n^d)^{1/(2d+1)} para d ≥ 1/2 (muy disperso)"
    )
    return rules, band


def _dense_rules(psi: PsiDescriptor, fam: RateFamily):
    g = fam.growth
    eps = fam.eps_rate
    lam = lam_rate(g)
    rules = []
    if psi.kind == PsiKind.DIVERGENCE:
        rules.append((
            "dense-pds-equivalent",
            VerdictValue.EQUAL,
            [Condition("ε(n) ≪ (nλ_n²)^{-1/3}", much_less(eps, (N_RATE * lam**2) ** (-1.0 / 3.0)))],
        ))
        if abs(psi.d) <= EXPONENT_TOL:
            rules.append((
                "dense-llr-few-cells-equivalent",
                VerdictValue.EQUAL,
                [
                    Condition("N = o(n^{3/8})", much_less(cells_rate(g), PowerRate(3.0 / 8.0))),
                    Condition("∇_n = nε(n)/√N → ∞", tends_to_infinity(N_RATE * eps / cells_rate(g) ** 0.5)),
                ],
            ))
    band = "abierto: (nλ_n)^{-1/3} ≤ ε(n) ≪ (nλ_n²)^{-1/4} o estadisticas de conteo (denso)"
    return rules, band


RULE_BUILDERS = {
    RegimeTag.SPARSE: _sparse_rules,
    RegimeTag.VERY_SPARSE: _very_sparse_rules,
    RegimeTag.DENSE: _dense_rules,
}


def theorem_verdict(psi: PsiDescriptor, g: GrowthLaw, fam: RateFamily) -> Verdict:
    """Efficiency of the chi-square test relative to psi along the family."""
    if fam.growth != g:
        fam = RateFamily(profile=fam.profile, c=fam.c, gamma=fam.gamma, growth=g)
    regime = classify_regime(g)
    rules, band = RULE_BUILDERS[regime.tag](psi, fam)

    for rule_id, value, conditions in rules:
        if all(condition.satisfied for condition in conditions):
            return Verdict(value=value, conditions_applied=conditions, citation=rule_id)

    evaluated = [condition for _, _, conditions in rules for condition in conditions]
    return Verdict(value=VerdictValue.OPEN, conditions_applied=evaluated, citation=band)


def vanishing_tau_verdict() -> Verdict:
    """A level that vanishes faster than the shift leaves the chi-square test no efficiency."""
    return Verdict(
        value=VerdictValue.ZERO,
        conditions_applied=[Condition("τ_n → 0", ConditionStatus.SATISFIED)],
        citation="vanishing-level-chi2-loses",
    )

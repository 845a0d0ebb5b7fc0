"""Local alternatives p_m = (1 + eps_m) / N and the rate families built from them."""
from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
from django.db import models

from .errors import InfeasibleAlternativeError, InvalidInputError
from .rates import (
    N_RATE,
    Condition,
    GrowthLaw,
    PowerRate,
    cells_rate,
    combine,
    lam_rate,
    much_greater,
    much_less,
    tends_to_infinity,
    tends_to_zero,
)

SUM_TOL = 1e-9


class ProfileKind(models.TextChoices):
    TWO_BLOCK = "two-block", "Two blocks of opposite sign"
    SINGLE_CELL = "single-cell", "Perturbation on one cell"
    COSINE = "cosine", "Cosine wave"


@dataclass(frozen=True, eq=False)
class AlternativeSpec:
    eps: np.ndarray

    def __post_init__(self):
        eps = np.array(self.eps, dtype=np.float64)
        if eps.ndim != 1 or eps.shape[0] < 2:
            raise InvalidInputError("La alternativa requiere un vector eps con al menos dos celdas.")
        if not np.all(np.isfinite(eps)):
            raise InvalidInputError("El vector eps contiene valores no finitos.")
        scale = max(1.0, float(np.max(np.abs(eps))) * eps.shape[0])
        if abs(math.fsum(eps.tolist())) > SUM_TOL * scale:
            raise InvalidInputError("Los eps de la alternativa deben sumar cero.")
        if np.min(1.0 + eps) <= 0:
            raise InfeasibleAlternativeError("La alternativa produce probabilidades no positivas.")
        eps.setflags(write=False)
        object.__setattr__(self, "eps", eps)

    @classmethod
    def null(cls, N: int) -> AlternativeSpec:
        return cls(eps=np.zeros(N))

    @property
    def N(self) -> int:
        return int(self.eps.shape[0])

    @property
    def probabilities(self) -> np.ndarray:
        p = (1.0 + self.eps) / self.N
        return p / p.sum()

    @property
    def is_null(self) -> bool:
        return not np.any(self.eps)


def epsilon_moment(spec: AlternativeSpec, j: int) -> float:
    if j < 2:
        raise InvalidInputError("El orden del momento debe ser al menos 2.")
    return math.fsum((spec.eps**j).tolist()) / spec.N


def epsilon_norm(spec: AlternativeSpec) -> float:
    return epsilon_moment(spec, 2)


def nabla(n: int, spec: AlternativeSpec) -> float:
    return n * epsilon_norm(spec) / math.sqrt(spec.N)


def _two_block(N: int, target: float) -> np.ndarray:
    half = N // 2
    eps = np.zeros(N)
    # N impar: la celda central queda en cero y delta se reescala.
    delta = math.sqrt(target) if N % 2 == 0 else math.sqrt(target * N / (N - 1))
    eps[:half] = delta
    eps[N - half:] = -delta
    return eps


def _single_cell(N: int, target: float) -> np.ndarray:
    a = math.sqrt(target * (N - 1))
    eps = np.full(N, -a / (N - 1))
    eps[0] = a
    return eps


def _cosine(N: int, target: float) -> np.ndarray:
    wave = np.cos(2.0 * np.pi * np.arange(1, N + 1) / N)
    wave -= wave.mean()
    power = float(np.mean(wave**2))
    return wave * math.sqrt(target / power)


PROFILE_BUILDERS = {
    ProfileKind.TWO_BLOCK: _two_block,
    ProfileKind.SINGLE_CELL: _single_cell,
    ProfileKind.COSINE: _cosine,
}


def make_profile(profile: str, N: int, eps_norm_target: float) -> AlternativeSpec:
    if profile not in ProfileKind.values:
        raise InvalidInputError(f"Perfil de alternativa desconocido: {profile!r}.")
    if N < 2:
        raise InvalidInputError("Se requieren al menos N = 2 celdas.")
    if not math.isfinite(eps_norm_target) or eps_norm_target < 0:
        raise InvalidInputError("La norma objetivo debe ser no negativa.")
    if eps_norm_target == 0:
        return AlternativeSpec.null(N)

    eps = PROFILE_BUILDERS[ProfileKind(profile)](N, eps_norm_target)
    if np.min(1.0 + eps) <= 0:
        raise InfeasibleAlternativeError(
            f"La norma {eps_norm_target:g} no es alcanzable con el perfil {profile} en N={N}."
        )
    return AlternativeSpec(eps=eps)


@dataclass(frozen=True)
class RateFamily:
    """Alternatives with eps(n) = c * n^-gamma on N(n) cells of a fixed profile."""

    profile: str
    c: float
    gamma: float
    growth: GrowthLaw

    def __post_init__(self):
        if self.profile not in ProfileKind.values:
            raise InvalidInputError(f"Perfil de alternativa desconocido: {self.profile!r}.")
        if not math.isfinite(self.c) or self.c <= 0:
            raise InvalidInputError("La amplitud c de la alternativa debe ser positiva.")
        if not 0 < self.gamma <= 1:
            raise InvalidInputError("El exponente gamma debe estar en (0, 1].")

    def eps_norm_at(self, n: float) -> float:
        return self.c * n ** (-self.gamma)

    def cells_at(self, n: float) -> int:
        return self.growth.cells(n)

    def spec_at(self, n: float, eps_norm: float | None = None) -> AlternativeSpec:
        target = self.eps_norm_at(n) if eps_norm is None else eps_norm
        return make_profile(self.profile, self.cells_at(n), target)

    @property
    def eps_rate(self) -> PowerRate:
        return PowerRate(-self.gamma)

    @property
    def max_eps_squared_rate(self) -> PowerRate:
        if self.profile == ProfileKind.SINGLE_CELL:
            return self.eps_rate * cells_rate(self.growth)
        return self.eps_rate


@dataclass(frozen=True)
class SpotValue:
    n: int
    N: int
    eps_norm: float
    nabla: float
    sparsity_product: float


@dataclass
class FamilyReport:
    conditions: list[Condition]
    alt_family: str
    spot_values: list[SpotValue] = field(default_factory=list)

    def as_dict(self) -> dict:
        return {
            "alt_family": str(self.alt_family),
            "conditions": [condition.as_dict() for condition in self.conditions],
            "spot_values": [vars(spot) for spot in self.spot_values],
        }


def family_conditions(fam: RateFamily) -> list[Condition]:
    g = fam.growth
    eps = fam.eps_rate
    lam = lam_rate(g)
    log_n = PowerRate(0.0, 1.0)
    # log(N^2/n) solo crece cuando 2q - 1 > 0.
    log_cells = log_n if 2.0 * g.q - 1.0 > 0 else PowerRate(0.0)
    return [
        Condition("∇_n = nε(n)/√N → ∞", tends_to_infinity(N_RATE * eps / cells_rate(g) ** 0.5)),
        Condition("(n/N)·max ε_m² → 0", tends_to_zero(lam * fam.max_eps_squared_rate)),
        Condition("ε(n) ≪ n^{-1/3}", much_less(eps, PowerRate(-1.0 / 3.0))),
        Condition("ε(n) ≫ n^{-1/3}·log^{2/3} n", much_greater(eps, PowerRate(-1.0 / 3.0) * log_n ** (2.0 / 3.0))),
        Condition("ε(n) ≪ (nλ_n²)^{-1/3}", much_less(eps, (N_RATE * lam**2) ** (-1.0 / 3.0))),
        Condition("ε(n) ≪ (nλ_n²)^{-1/4}", much_less(eps, (N_RATE * lam**2) ** (-1.0 / 4.0))),
        Condition(
            "ε(n) ≫ (nλ_n)^{-1/3}·log^{2/3}(N²/n)",
            much_greater(eps, (N_RATE * lam) ** (-1.0 / 3.0) * log_cells ** (2.0 / 3.0)),
        ),
        Condition("nλ_n³ → ∞", tends_to_infinity(N_RATE * lam**3)),
        Condition("N = o(n^{3/8})", much_less(cells_rate(g), PowerRate(3.0 / 8.0))),
    ]


def classify_family(fam: RateFamily, n_grid) -> FamilyReport:
    n_grid = [int(n) for n in n_grid]
    if not n_grid or any(b <= a for a, b in zip(n_grid, n_grid[1:])):
        raise InvalidInputError("La malla de n debe ser no vacia y estrictamente creciente.")

    conditions = family_conditions(fam)
    alt_family = combine(condition.status for condition in conditions[:2])
    spots = []
    for n in n_grid:
        spec = fam.spec_at(n)
        spots.append(
            SpotValue(
                n=n,
                N=spec.N,
                eps_norm=epsilon_norm(spec),
                nabla=nabla(n, spec),
                sparsity_product=n / spec.N * float(np.max(spec.eps**2)),
            )
        )
    return FamilyReport(conditions=conditions, alt_family=alt_family, spot_values=spots)


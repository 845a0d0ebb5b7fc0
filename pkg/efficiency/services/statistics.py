"""Symmetric statistics S = sum_m h(eta_m) over multinomial frequency vectors.

A cell function is evaluated on a whole array of counts at once and always
receives the mean cell occupancy ``lam = n / N`` because the power divergence
kernels and the chi-square kernel are centred at it.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
from django.db import models

from .errors import DegenerateVarianceError, InvalidInputError

PD_ZERO_TOL = 1e-9


class CellKind(models.TextChoices):
    POWER_DIVERGENCE = "PD", "Power divergence"
    LOG_LIKELIHOOD = "LLR", "Log-likelihood ratio"
    CHI_SQUARE = "CHI2", "Chi-square"
    FREEMAN_TUKEY = "FT", "Freeman-Tukey"
    INDICATOR = "MU", "Cells with exactly r observations"
    COLLISION = "COLL", "Collisions"
    CUSTOM = "CUSTOM", "Custom table"


class TailRule(models.TextChoices):
    ZERO = "zero", "Zero beyond the table"
    CONSTANT = "constant", "Last value repeated"
    LINEAR = "linear", "Linear extrapolation"


@dataclass(frozen=True)
class CellFunction:
    kind: str
    d: float | None = None
    r: int | None = None
    table: tuple[float, ...] = field(default=())
    tail_rule: str = TailRule.ZERO

    def __post_init__(self):
        if self.kind not in CellKind.values:
            raise InvalidInputError(f"Tipo de funcion de celda desconocido: {self.kind!r}.")
        if self.kind == CellKind.POWER_DIVERGENCE:
            if self.d is None or not math.isfinite(self.d) or self.d <= -1:
                raise InvalidInputError("La divergencia de potencia requiere d > -1.")
            if abs(self.d) < PD_ZERO_TOL:
                raise InvalidInputError("Para |d| < 1e-9 use la razon de verosimilitud (LLR).")
        if self.kind == CellKind.INDICATOR and (self.r is None or self.r < 0):
            raise InvalidInputError("El indicador requiere r entero no negativo.")
        if self.kind == CellKind.CUSTOM:
            if len(self.table) < 2:
                raise InvalidInputError("La tabla personalizada requiere al menos dos valores.")
            if not all(math.isfinite(value) for value in self.table):
                raise InvalidInputError("La tabla personalizada contiene valores no finitos.")
            if self.tail_rule not in TailRule.values:
                raise InvalidInputError(f"Regla de cola desconocida: {self.tail_rule!r}.")

    @classmethod
    def power_divergence(cls, d: float) -> CellFunction:
        return cls(kind=CellKind.POWER_DIVERGENCE, d=float(d))

    @classmethod
    def log_likelihood(cls) -> CellFunction:
        return cls(kind=CellKind.LOG_LIKELIHOOD)

    @classmethod
    def chi_square(cls) -> CellFunction:
        return cls(kind=CellKind.CHI_SQUARE)

    @classmethod
    def freeman_tukey(cls) -> CellFunction:
        return cls(kind=CellKind.FREEMAN_TUKEY)

    @classmethod
    def indicator(cls, r: int) -> CellFunction:
        return cls(kind=CellKind.INDICATOR, r=int(r))

    @classmethod
    def collision(cls) -> CellFunction:
        return cls(kind=CellKind.COLLISION)

    @classmethod
    def custom(cls, table, tail_rule: str = TailRule.ZERO) -> CellFunction:
        return cls(kind=CellKind.CUSTOM, table=tuple(float(value) for value in table), tail_rule=tail_rule)

    @property
    def divergence_index(self) -> float | None:
        """Index d of the power divergence family, or None for other kernels."""
        if self.kind == CellKind.POWER_DIVERGENCE:
            return self.d
        if self.kind == CellKind.LOG_LIKELIHOOD:
            return 0.0
        if self.kind == CellKind.CHI_SQUARE:
            return 1.0
        if self.kind == CellKind.FREEMAN_TUKEY:
            return -0.5
        return None

    @property
    def label(self) -> str:
        if self.kind == CellKind.POWER_DIVERGENCE:
            return f"pd:{self.d:g}"
        if self.kind == CellKind.INDICATOR:
            return f"mu:{self.r}"
        if self.kind == CellKind.CUSTOM:
            return f"custom[{len(self.table)}]"
        return {
            CellKind.LOG_LIKELIHOOD: "llr",
            CellKind.CHI_SQUARE: "chi2",
            CellKind.FREEMAN_TUKEY: "ft",
            CellKind.COLLISION: "collision",
        }[self.kind]

    def __call__(self, x, lam: float) -> np.ndarray:
        x = np.asarray(x, dtype=np.float64)
        if self.kind == CellKind.CHI_SQUARE:
            return (x - lam) ** 2 / lam
        if self.kind == CellKind.LOG_LIKELIHOOD:
            return _log_likelihood_kernel(x, lam)
        if self.kind in (CellKind.POWER_DIVERGENCE, CellKind.FREEMAN_TUKEY):
            return _power_divergence_kernel(x, lam, self.divergence_index)
        if self.kind == CellKind.INDICATOR:
            return (x == self.r).astype(np.float64)
        if self.kind == CellKind.COLLISION:
            return np.where(x >= 1, x - 1.0, 0.0)
        return self._custom_values(x)

    def _custom_values(self, x: np.ndarray) -> np.ndarray:
        table = np.asarray(self.table, dtype=np.float64)
        last = len(table) - 1
        inside = np.clip(x, 0, last).astype(np.int64)
        values = table[inside]
        beyond = x > last
        if self.tail_rule == TailRule.ZERO:
            values = np.where(beyond, 0.0, values)
        elif self.tail_rule == TailRule.LINEAR:
            slope = table[-1] - table[-2]
            values = np.where(beyond, table[-1] + (x - last) * slope, values)
        return values


def _power_divergence_kernel(x: np.ndarray, lam: float, d: float) -> np.ndarray:
    # 2/(d(d+1)) * x * ((x/lam)^d - 1) escrito con expm1 para |d| pequeno; psi_d(0) = 0.
    out = np.zeros_like(x)
    positive = x > 0
    log_ratio = np.log(x[positive] / lam)
    out[positive] = 2.0 / (d * (d + 1.0)) * x[positive] * np.expm1(d * log_ratio)
    return out


def _log_likelihood_kernel(x: np.ndarray, lam: float) -> np.ndarray:
    out = np.zeros_like(x)
    positive = x > 0
    out[positive] = 2.0 * x[positive] * np.log(x[positive] / lam)
    return out


def pds_barred_kernel(x, lam: float, d: float) -> np.ndarray:
    """Per-cell kernel of the rewritten PDS, scaled so that the statistic is lam * sum."""
    x = np.asarray(x, dtype=np.float64)
    t = x / lam
    out = np.empty_like(t)
    positive = t > 0
    log_t = np.log(t[positive])
    if abs(d) < PD_ZERO_TOL:
        out[positive] = 2.0 * (t[positive] * log_t - (t[positive] - 1.0))
        out[~positive] = 2.0
        return out
    # t^(d+1) - (d+1)t + d = t*expm1(d ln t) - d(t - 1)
    out[positive] = 2.0 / (d + 1.0) * (t[positive] * np.expm1(d * log_t) / d - (t[positive] - 1.0))
    out[~positive] = 2.0 / (d + 1.0)
    return out


@dataclass(frozen=True, eq=False)
class Frequencies:
    counts: np.ndarray
    n: int

    def __post_init__(self):
        counts = np.asarray(self.counts)
        if counts.ndim != 1:
            raise InvalidInputError("El vector de frecuencias debe ser unidimensional.")
        if counts.shape[0] < 2:
            raise InvalidInputError("Se requieren al menos N = 2 celdas.")
        if not np.issubdtype(counts.dtype, np.integer):
            if not np.all(np.isfinite(counts)) or not np.all(counts == np.round(counts)):
                raise InvalidInputError("Las frecuencias deben ser enteras.")
        counts = counts.astype(np.int64)
        if np.any(counts < 0):
            raise InvalidInputError("Las frecuencias no pueden ser negativas.")
        if self.n <= 0:
            raise InvalidInputError("El tamano de muestra n debe ser positivo.")
        if int(counts.sum()) != self.n:
            raise InvalidInputError(f"Las frecuencias suman {int(counts.sum())} y no n = {self.n}.")
        counts.setflags(write=False)
        object.__setattr__(self, "counts", counts)

    @classmethod
    def from_counts(cls, counts) -> Frequencies:
        counts = np.asarray(counts)
        return cls(counts=counts, n=int(np.sum(counts)))

    @property
    def cells(self) -> int:
        return int(self.counts.shape[0])

    @property
    def lam(self) -> float:
        return self.n / self.cells


def evaluate(h: CellFunction, freq: Frequencies) -> float:
    return math.fsum(h(freq.counts, freq.lam))


def evaluate_pds_barred(d: float, freq: Frequencies) -> float:
    if d <= -1:
        raise InvalidInputError("La divergencia de potencia requiere d > -1.")
    return freq.lam * math.fsum(pds_barred_kernel(freq.counts, freq.lam, d))


def standardize(s: float, h: CellFunction, n: int, N: int, *, truncation_tol: float = 1e-12) -> float:
    from .poisson_oracle import PoissonContext, moment_summary

    summary = moment_summary(h, PoissonContext(lam=n / N, truncation_tol=truncation_tol))
    if summary.degenerate:
        raise DegenerateVarianceError(f"La funcion {h.label} es afin: sigma(h) = 0.")
    return (s - N * summary.mean_h) / (summary.sigma * math.sqrt(N))

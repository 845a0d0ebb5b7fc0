"""Growth law N(x) ~ c*x^q and the power-of-n algebra used by the rate conditions.

Sequences along the asymptotic path are products of powers of n and of
log n, so an asymptotic comparison a << b reduces to comparing exponents.
"""
from __future__ import annotations

import math
from dataclasses import dataclass

from django.db import models

from .errors import InvalidInputError

EXPONENT_TOL = 1e-9


@dataclass(frozen=True)
class GrowthLaw:
    c: float
    q: float

    def __post_init__(self):
        if not math.isfinite(self.c) or self.c <= 0:
            raise InvalidInputError("La constante c de la ley de crecimiento debe ser positiva.")
        if not 0 < self.q < 2:
            raise InvalidInputError("El indice q de la ley de crecimiento debe estar en (0, 2).")

    def cells(self, x: float) -> int:
        return max(2, int(math.floor(self.c * x**self.q + 0.5)))

    def lam(self, x: float) -> float:
        return x / self.cells(x)

    @property
    def is_sparse(self) -> bool:
        return abs(self.q - 1.0) <= EXPONENT_TOL


class ConditionStatus(models.TextChoices):
    SATISFIED = "satisfied", "Satisfied"
    VIOLATED = "violated", "Violated"
    INDETERMINATE = "indeterminate", "Exponent tie"
    LOG_REGIME = "log-regime", "Decided by log factors"


@dataclass(frozen=True)
class PowerRate:
    """The sequence n^exponent * (log n)^log_power."""

    exponent: float
    log_power: float = 0.0

    def __mul__(self, other: PowerRate) -> PowerRate:
        return PowerRate(self.exponent + other.exponent, self.log_power + other.log_power)

    def __truediv__(self, other: PowerRate) -> PowerRate:
        return PowerRate(self.exponent - other.exponent, self.log_power - other.log_power)

    def __pow__(self, power: float) -> PowerRate:
        return PowerRate(self.exponent * power, self.log_power * power)


CONSTANT = PowerRate(0.0)
N_RATE = PowerRate(1.0)


def much_less(a: PowerRate, b: PowerRate) -> str:
    gap = a.exponent - b.exponent
    if gap < -EXPONENT_TOL:
        return ConditionStatus.SATISFIED
    if gap > EXPONENT_TOL:
        return ConditionStatus.VIOLATED
    if abs(a.log_power - b.log_power) <= EXPONENT_TOL:
        return ConditionStatus.INDETERMINATE
    return ConditionStatus.LOG_REGIME


def much_greater(a: PowerRate, b: PowerRate) -> str:
    return much_less(b, a)


def tends_to_infinity(a: PowerRate) -> str:
    return much_greater(a, CONSTANT)


def tends_to_zero(a: PowerRate) -> str:
    return much_less(a, CONSTANT)


@dataclass(frozen=True)
class Condition:
    text: str
    status: str

    @property
    def satisfied(self) -> bool:
        return self.status == ConditionStatus.SATISFIED

    def as_dict(self) -> dict:
        return {"text": self.text, "satisfied": self.satisfied, "status": str(self.status)}


def combine(statuses) -> str:
    statuses = list(statuses)
    if any(status == ConditionStatus.VIOLATED for status in statuses):
        return ConditionStatus.VIOLATED
    if all(status == ConditionStatus.SATISFIED for status in statuses):
        return ConditionStatus.SATISFIED
    if any(status == ConditionStatus.LOG_REGIME for status in statuses):
        return ConditionStatus.LOG_REGIME
    return ConditionStatus.INDETERMINATE


def cells_rate(g: GrowthLaw) -> PowerRate:
    return PowerRate(g.q)


def lam_rate(g: GrowthLaw) -> PowerRate:
    return PowerRate(1.0 - g.q)

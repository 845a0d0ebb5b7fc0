"""Exact distribution of S = sum h(eta_m) by enumerating every multinomial outcome.

Compositions of n into N cells are generated by stars and bars in a fixed
order and processed in chunks of at most ``CHUNK_CELLS`` counts. Chunks may be
weighed on a thread pool; they are consumed in generation order, so the
result does not depend on the number of workers.
"""
from __future__ import annotations

import itertools
import logging
import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass

import numpy as np
from scipy.special import gammaln

from .errors import DegenerateVarianceError, EnumerationBudgetError, InvalidInputError
from .statistics import CellFunction

logger = logging.getLogger(__name__)

DEFAULT_ENUMERATION_BUDGET = 5_000_000
MERGE_TOL = 1e-12
LEVEL_TOL = 1e-12
CHUNK_CELLS = 1 << 22


@dataclass(frozen=True, eq=False)
class ExactDistribution:
    values: np.ndarray
    probs: np.ndarray

    @property
    def atoms(self) -> list[tuple[float, float]]:
        return list(zip(self.values.tolist(), self.probs.tolist()))

    @property
    def total_mass(self) -> float:
        return math.fsum(self.probs.tolist())

    @property
    def mean(self) -> float:
        return math.fsum((self.values * self.probs).tolist())

    @property
    def variance(self) -> float:
        centered = self.values - self.mean
        return math.fsum((centered * centered * self.probs).tolist())

    def standardized(self, mean: float, scale: float) -> ExactDistribution:
        return ExactDistribution(values=(self.values - mean) / scale, probs=self.probs)


def composition_count(n: int, N: int) -> int:
    return math.comb(n + N - 1, N - 1)


def _composition_chunks(total: int, cells: int):
    """Yield every vector of ``cells`` nonnegative integers summing to ``total``, in row blocks.

    Each choice of ``cells - 1`` bar positions among ``total + cells - 1`` slots
    is one composition: the counts are the gaps between consecutive bars.
    """
    rows = max(1, CHUNK_CELLS // cells)
    bars = itertools.combinations(range(total + cells - 1), cells - 1)
    while True:
        flat = np.fromiter(itertools.chain.from_iterable(itertools.islice(bars, rows)), dtype=np.int64)
        if flat.size == 0:
            return
        edges = np.empty((flat.size // (cells - 1), cells + 1), dtype=np.int64)
        edges[:, 0] = -1
        edges[:, 1:-1] = flat.reshape(-1, cells - 1)
        edges[:, -1] = total + cells - 1
        yield np.diff(edges, axis=1) - 1


def _check_inputs(n: int, N: int, p, budget: int) -> np.ndarray:
    if n < 1 or N < 2:
        raise InvalidInputError("Se requieren n >= 1 y N >= 2.")
    p = np.full(N, 1.0 / N) if p is None else np.asarray(p, dtype=np.float64)
    if p.shape != (N,):
        raise InvalidInputError(f"El vector de probabilidades debe tener longitud N={N}.")
    if np.any(p <= 0) or abs(p.sum() - 1.0) > 1e-12:
        raise InvalidInputError("Las probabilidades deben ser positivas y sumar 1.")
    count = composition_count(n, N)
    if count > budget:
        raise EnumerationBudgetError(count, budget)
    return p


def _walk(n: int, N: int, p: np.ndarray, threads: int):
    """Yield blocks of outcomes with their multinomial log-probabilities."""
    # log_factorial[k] = log k!
    log_factorial = gammaln(np.arange(n + 1, dtype=np.float64) + 1.0)
    log_p = np.log(p)

    def weigh(counts: np.ndarray):
        log_w = log_factorial[n] - log_factorial[counts].sum(axis=1) + counts @ log_p
        return counts, log_w

    chunks = _composition_chunks(n, N)
    if threads <= 1:
        yield from map(weigh, chunks)
        return
    with ThreadPoolExecutor(max_workers=threads) as pool:
        while batch := list(itertools.islice(chunks, threads)):
            yield from pool.map(weigh, batch)


def _statistic(counts: np.ndarray, table: np.ndarray) -> np.ndarray:
    # Orden fijo de suma: permutaciones de un mismo resultado dan el mismo valor.
    return np.sort(table[counts], axis=1).sum(axis=1)


def _merge(values: np.ndarray, probs: np.ndarray) -> ExactDistribution:
    order = np.argsort(values, kind="stable")
    values, probs = values[order], probs[order]
    starts = np.concatenate([[0], np.flatnonzero(np.diff(values) > MERGE_TOL) + 1])
    merged_values = values[starts]
    merged_probs = np.add.reduceat(probs, starts)
    keep = merged_probs > 0
    return ExactDistribution(values=merged_values[keep], probs=merged_probs[keep])


def enumerate(
    h: CellFunction,
    n: int,
    N: int,
    p=None,
    *,
    budget: int = DEFAULT_ENUMERATION_BUDGET,
    threads: int = 1,
) -> ExactDistribution:
    p = _check_inputs(n, N, p, budget)
    table = np.asarray(h(np.arange(n + 1), n / N), dtype=np.float64)
    values, probs = [], []
    for counts, log_w in _walk(n, N, p, threads):
        values.append(_statistic(counts, table))
        probs.append(np.exp(log_w))
    dist = _merge(np.concatenate(values), np.concatenate(probs))
    logger.debug(
        "Enumeracion %s n=%s N=%s: %s composiciones, %s atomos",
        h.label, n, N, composition_count(n, N), dist.values.shape[0],
    )
    return dist


def exact_tail(dist: ExactDistribution, t: float) -> float:
    start = int(np.searchsorted(dist.values, t, side="right"))
    return math.fsum(dist.probs[start:].tolist())


def exact_critical(dist: ExactDistribution, alpha: float) -> tuple[float, float]:
    """Smallest atom t with P{S > t} <= alpha and the level it achieves."""
    if not 0 < alpha < 1:
        raise InvalidInputError("El nivel alpha debe estar en (0, 1).")
    tail_after = np.concatenate([np.cumsum(dist.probs[::-1])[::-1][1:], [0.0]])
    index = int(np.argmax(tail_after <= alpha + LEVEL_TOL))
    return float(dist.values[index]), exact_tail(dist, float(dist.values[index]))


def exact_joint_corr(
    h1: CellFunction,
    h2: CellFunction,
    n: int,
    N: int,
    *,
    budget: int = DEFAULT_ENUMERATION_BUDGET,
    threads: int = 1,
) -> float:
    """Correlation of the two statistics under the uniform null."""
    p = _check_inputs(n, N, None, budget)
    lam = n / N
    table1 = np.asarray(h1(np.arange(n + 1), lam), dtype=np.float64)
    table2 = np.asarray(h2(np.arange(n + 1), lam), dtype=np.float64)
    first, second, weights = [], [], []
    for counts, log_w in _walk(n, N, p, threads):
        first.append(_statistic(counts, table1))
        second.append(_statistic(counts, table2))
        weights.append(np.exp(log_w))
    s1, s2, w = np.concatenate(first), np.concatenate(second), np.concatenate(weights)

    c1 = s1 - math.fsum((w * s1).tolist())
    c2 = s2 - math.fsum((w * s2).tolist())
    var1 = math.fsum((w * c1 * c1).tolist())
    var2 = math.fsum((w * c2 * c2).tolist())
    if var1 <= 1e-300 or var2 <= 1e-300:
        raise DegenerateVarianceError("Una de las estadisticas es constante bajo la hipotesis nula.")
    cov = math.fsum((w * c1 * c2).tolist())
    return min(1.0, max(-1.0, cov / (math.sqrt(var1) * math.sqrt(var2))))

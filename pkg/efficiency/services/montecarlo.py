"""Monte Carlo estimators for symmetric statistics under multinomial sampling.

Replicates are drawn in fixed-size blocks. Block b of stream s uses a Philox
generator keyed by (master_seed, s) with its counter moved to b * 2**128, so
any replicate can be regenerated on its own and the sampled vectors do not
depend on how many threads evaluate the blocks.
"""
from __future__ import annotations

import logging
import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from functools import lru_cache

import numpy as np
from django.db import models
from scipy.stats import binom, kstest

from . import exact_dist
from .alternatives import AlternativeSpec, RateFamily, epsilon_norm, make_profile
from .errors import DegenerateVarianceError, InsufficientReplicatesError, InvalidInputError, KnNotFoundError
from .poisson_oracle import DEFAULT_TRUNCATION_TOL, PoissonContext, exact_shift, kappa_asymptotic, moment_summary
from .statistics import CellFunction, Frequencies

logger = logging.getLogger(__name__)

REPLICATE_BLOCK = 1024
MIN_TAIL_REPS = 100
MIN_CORR_REPS = 10_000
MIN_CRITICAL_HITS = 20
DEFAULT_WINDOW = 5
SATURATION = 0.999
UINT64_LIMIT = 2**64


class Centering(models.TextChoices):
    POISSON = "poisson", "N * E h(Poi(lambda))"
    BINOMIAL = "binomial", "N * E h(Bin(n, 1/N))"


@dataclass(frozen=True)
class TailEstimate:
    p_hat: float
    std_err: float
    reps: int

    @classmethod
    def from_hits(cls, hits: int, reps: int) -> TailEstimate:
        p_hat = hits / reps
        return cls(p_hat=p_hat, std_err=math.sqrt(p_hat * (1.0 - p_hat) / reps), reps=reps)


@dataclass(frozen=True)
class SeedSpec:
    master_seed: int
    stream_id: int = 0

    def __post_init__(self):
        if not 0 <= self.master_seed < UINT64_LIMIT:
            raise InvalidInputError("La semilla maestra debe ser un entero de 64 bits sin signo.")
        if self.stream_id < 0:
            raise InvalidInputError("El identificador de flujo no puede ser negativo.")

    def __str__(self) -> str:
        return f"{self.master_seed}:{self.stream_id}"

    @classmethod
    def parse(cls, text: str) -> SeedSpec:
        master, sep, stream = str(text).strip().partition(":")
        try:
            return cls(master_seed=int(master), stream_id=int(stream) if sep else 0)
        except ValueError as exc:
            raise InvalidInputError(f"Semilla invalida {text!r}: use el formato 'semilla:flujo'.") from exc

    def offset(self, shift: int) -> SeedSpec:
        return SeedSpec(master_seed=self.master_seed, stream_id=self.stream_id + shift)

    def generator(self, block: int) -> np.random.Generator:
        counter = np.array([0, 0, block, 0], dtype=np.uint64)
        return np.random.Generator(np.random.Philox(key=_stream_key(self.master_seed, self.stream_id), counter=counter))


@lru_cache(maxsize=1024)
def _stream_key(master_seed: int, stream_id: int) -> np.ndarray:
    return np.random.SeedSequence([master_seed, stream_id]).generate_state(2, dtype=np.uint64)


@dataclass(frozen=True)
class NormalityDiagnostic:
    ks_distance: float
    mean: float
    var: float
    centering: str = Centering.POISSON
    center_shift: float = 0.0


@dataclass
class KnSearchResult:
    z: float
    alpha_n: float
    alpha_std_err: float
    n: int
    k_n: int
    window_checked: int
    power_at_kn: TailEstimate
    target_power: TailEstimate
    kappa: float
    critical_values: dict[int, float] = field(default_factory=dict)
    saturated: bool = False
    unstable: bool = False

    @property
    def ratio(self) -> float:
        return self.k_n / self.n


def _probabilities(p, N: int) -> np.ndarray:
    p = np.asarray(p, dtype=np.float64)
    if p.shape != (N,) or np.any(~np.isfinite(p)) or np.any(p <= 0):
        raise InvalidInputError(f"Vector de probabilidades invalido para N={N}.")
    if abs(p.sum() - 1.0) > 1e-9:
        raise InvalidInputError("Las probabilidades deben sumar 1.")
    return p / p.sum()


def _draw_block(n: int, p: np.ndarray, seed: SeedSpec, block: int, block_size: int) -> np.ndarray:
    return seed.generator(block).multinomial(n, p, size=block_size)


def sample_counts(
    n: int,
    p,
    seed: SeedSpec,
    replicate: int,
    *,
    block_size: int = REPLICATE_BLOCK,
) -> Frequencies:
    if n < 1:
        raise InvalidInputError("El tamano de muestra debe ser positivo.")
    if replicate < 0:
        raise InvalidInputError("El indice de replica no puede ser negativo.")
    p = _probabilities(p, len(p))
    block, row = divmod(replicate, block_size)
    return Frequencies(counts=_draw_block(n, p, seed, block, block_size)[row], n=n)


def simulate(
    tables: list[np.ndarray],
    n: int,
    p: np.ndarray,
    reps: int,
    seed: SeedSpec,
    *,
    threads: int = 1,
    block_size: int = REPLICATE_BLOCK,
) -> list[np.ndarray]:
    """Statistic values per replicate, one array per lookup table h(0..n)."""
    blocks = math.ceil(reps / block_size)

    def run(block: int):
        counts = _draw_block(n, p, seed, block, block_size)
        return [table[counts].sum(axis=1) for table in tables]

    if threads > 1:
        with ThreadPoolExecutor(max_workers=threads) as pool:
            results = list(pool.map(run, range(blocks)))
    else:
        results = [run(block) for block in range(blocks)]
    return [np.concatenate([result[i] for result in results])[:reps] for i in range(len(tables))]


def _table(h: CellFunction, n: int, N: int) -> np.ndarray:
    return np.asarray(h(np.arange(n + 1), n / N), dtype=np.float64)


def null_scale(h: CellFunction, n: int, N: int, truncation_tol: float) -> tuple[float, float]:
    """Centering N*A0 and scale sigma*sqrt(N) of the standardized statistic."""
    summary = moment_summary(h, PoissonContext(lam=n / N, truncation_tol=truncation_tol))
    if summary.degenerate:
        raise DegenerateVarianceError(f"La funcion {h.label} es afin: sigma(h) = 0.")
    return N * summary.mean_h, summary.sigma * math.sqrt(N)


def _check_reps(reps: int, minimum: int):
    if reps < minimum:
        raise InsufficientReplicatesError(f"Se requieren al menos {minimum} replicas (se pidieron {reps}).")


def estimate_tail(
    h: CellFunction,
    n: int,
    N: int,
    p,
    t: float,
    reps: int,
    seed: SeedSpec,
    *,
    threads: int = 1,
    block_size: int = REPLICATE_BLOCK,
) -> TailEstimate:
    _check_reps(reps, MIN_TAIL_REPS)
    p = _probabilities(np.full(N, 1.0 / N) if p is None else p, N)
    (values,) = simulate([_table(h, n, N)], n, p, reps, seed, threads=threads, block_size=block_size)
    return TailEstimate.from_hits(int(np.count_nonzero(values > t)), reps)


def estimate_critical(
    h: CellFunction,
    n: int,
    N: int,
    alpha: float,
    reps: int,
    seed: SeedSpec,
    *,
    threads: int = 1,
    block_size: int = REPLICATE_BLOCK,
    truncation_tol: float = DEFAULT_TRUNCATION_TOL,
) -> float:
    """Upper alpha quantile of the standardized statistic under the uniform null."""
    if not 0 < alpha < 1:
        raise InvalidInputError("El nivel alpha debe estar en (0, 1).")
    if alpha * reps < MIN_CRITICAL_HITS:
        raise InsufficientReplicatesError(
            f"alpha * reps = {alpha * reps:g} < {MIN_CRITICAL_HITS}: aumente el numero de replicas."
        )
    center, scale = null_scale(h, n, N, truncation_tol)
    p = np.full(N, 1.0 / N)
    (values,) = simulate([_table(h, n, N)], n, p, reps, seed, threads=threads, block_size=block_size)
    rank = math.ceil((1.0 - alpha) * (reps + 1) - 1e-9)
    rank = min(max(rank, 1), reps)
    return float((np.sort(values)[rank - 1] - center) / scale)


def estimate_power(
    h: CellFunction,
    n: int,
    N: int,
    alt: AlternativeSpec,
    t: float,
    reps: int,
    seed: SeedSpec,
    *,
    threads: int = 1,
    block_size: int = REPLICATE_BLOCK,
) -> TailEstimate:
    if alt.N != N:
        raise InvalidInputError(f"La alternativa tiene {alt.N} celdas y no N={N}.")
    return estimate_tail(h, n, N, alt.probabilities, t, reps, seed, threads=threads, block_size=block_size)


def estimate_corr_chi2(
    h: CellFunction,
    n: int,
    N: int,
    reps: int,
    seed: SeedSpec,
    *,
    threads: int = 1,
    block_size: int = REPLICATE_BLOCK,
) -> float:
    _check_reps(reps, MIN_CORR_REPS)
    p = np.full(N, 1.0 / N)
    values, chi2 = simulate(
        [_table(h, n, N), _table(CellFunction.chi_square(), n, N)], n, p, reps, seed, threads=threads, block_size=block_size
    )
    centered, centered_chi2 = values - values.mean(), chi2 - chi2.mean()
    var, var_chi2 = float(centered @ centered), float(centered_chi2 @ centered_chi2)
    if var <= 0 or var_chi2 <= 0:
        raise DegenerateVarianceError("Una de las estadisticas no varia en las replicas.")
    return float(centered @ centered_chi2) / (math.sqrt(var) * math.sqrt(var_chi2))


def binomial_center(h: CellFunction, n: int, N: int) -> float:
    """Exact null mean of S: every cell count is Bin(n, 1/N)."""
    ks = np.arange(n + 1)
    return N * math.fsum((binom.pmf(ks, n, 1.0 / N) * np.asarray(h(ks, n / N), dtype=np.float64)).tolist())


def normality_diagnostic(
    h: CellFunction,
    n: int,
    N: int,
    reps: int,
    seed: SeedSpec,
    *,
    centering: str = Centering.POISSON,
    threads: int = 1,
    block_size: int = REPLICATE_BLOCK,
    truncation_tol: float = DEFAULT_TRUNCATION_TOL,
) -> NormalityDiagnostic:
    """KS distance, mean and variance of the standardized statistic under the null.

    ``center_shift`` is the gap between the exact and the Poisson centering in
    units of the scale; with binomial centering it has been removed from the sample.
    """
    _check_reps(reps, MIN_TAIL_REPS)
    if centering not in Centering.values:
        raise InvalidInputError(f"Centrado desconocido: {centering!r}.")
    poisson_center, scale = null_scale(h, n, N, truncation_tol)
    exact_center = binomial_center(h, n, N)
    center = exact_center if centering == Centering.BINOMIAL else poisson_center
    (values,) = simulate([_table(h, n, N)], n, np.full(N, 1.0 / N), reps, seed, threads=threads, block_size=block_size)
    standardized = (values - center) / scale
    return NormalityDiagnostic(
        ks_distance=float(kstest(standardized, "norm").statistic),
        mean=float(standardized.mean()),
        var=float(standardized.var(ddof=1)),
        centering=str(centering),
        center_shift=(exact_center - poisson_center) / scale,
    )


def find_kn(
    h: CellFunction,
    psi: CellFunction,
    z: float,
    n: int,
    fam: RateFamily,
    reps: int,
    seed: SeedSpec,
    *,
    window: int = DEFAULT_WINDOW,
    k_max: int | None = None,
    use_exact_shift: bool = False,
    enumeration_budget: int = exact_dist.DEFAULT_ENUMERATION_BUDGET,
    threads: int = 1,
    block_size: int = REPLICATE_BLOCK,
    truncation_tol: float = DEFAULT_TRUNCATION_TOL,
) -> KnSearchResult:
    """Smallest k at which the psi-test matches the power of the h-test at n.

    Both tests run at the level alpha_n of the h-test with threshold z + kappa_n(h).
    The alternative strength is frozen at eps(n) and rebuilt on N(k) cells.
    Streams relative to ``seed``: 0 and 1 for the h-test level and power,
    2k+2 and 2k+3 for the psi critical value and power at size k.
    """
    if n < 2:
        raise InvalidInputError("Se requiere n >= 2.")
    if window < 0:
        raise InvalidInputError("La ventana de verificacion no puede ser negativa.")
    k_max = 64 * n if k_max is None else k_max
    opts = {"threads": threads, "block_size": block_size}

    N_n = fam.cells_at(n)
    alt_n = fam.spec_at(n)
    eps_n = epsilon_norm(alt_n)
    if use_exact_shift:
        kappa = exact_shift(h, n, alt_n, truncation_tol=truncation_tol).kappa_exact
    else:
        kappa = kappa_asymptotic(h, n, N_n, eps_n, truncation_tol=truncation_tol)
    center, scale = null_scale(h, n, N_n, truncation_tol)
    t_n = center + scale * (z + kappa)

    if exact_dist.composition_count(n, N_n) <= enumeration_budget:
        dist = exact_dist.enumerate(h, n, N_n, budget=enumeration_budget, threads=threads)
        alpha_n, alpha_se = exact_dist.exact_tail(dist, t_n), 0.0
    else:
        level = estimate_tail(h, n, N_n, None, t_n, reps, seed.offset(0), **opts)
        alpha_n, alpha_se = level.p_hat, level.std_err
        logger.warning("Nivel alpha_n estimado por Monte Carlo: %.6g +/- %.2g", alpha_n, alpha_se)
    if not 0 < alpha_n < 1:
        raise InvalidInputError(f"El nivel alpha_n = {alpha_n:g} es degenerado: ajuste z.")

    target = estimate_power(h, n, N_n, alt_n, t_n, reps, seed.offset(1), **opts)
    logger.info("k_n: n=%s alpha_n=%.6g potencia objetivo=%.6g", n, alpha_n, target.p_hat)

    powers: dict[int, TailEstimate] = {}
    critical_values: dict[int, float] = {}

    def power_at(k: int) -> TailEstimate:
        if k in powers:
            return powers[k]
        N_k = fam.cells_at(k)
        center_k, scale_k = null_scale(psi, k, N_k, truncation_tol)
        if exact_dist.composition_count(k, N_k) <= enumeration_budget:
            dist_k = exact_dist.enumerate(psi, k, N_k, budget=enumeration_budget, threads=threads)
            t_k, _ = exact_dist.exact_critical(dist_k, alpha_n)
            critical_values[k] = (t_k - center_k) / scale_k
        else:
            u_k = estimate_critical(
                psi, k, N_k, alpha_n, reps, seed.offset(2 * k + 2), truncation_tol=truncation_tol, **opts
            )
            critical_values[k] = u_k
            t_k = center_k + scale_k * u_k
        spec_k = make_profile(fam.profile, N_k, eps_n)
        powers[k] = estimate_power(psi, k, N_k, spec_k, t_k, reps, seed.offset(2 * k + 3), **opts)
        logger.debug("k=%s N=%s potencia=%.6g", k, N_k, powers[k].p_hat)
        return powers[k]

    def holds(k: int) -> bool:
        return power_at(k).p_hat >= target.p_hat

    k = max(2, n // 16)
    lower = 1
    while not holds(k):
        if k >= k_max:
            raise KnNotFoundError(k_max)
        lower = k
        k = min(2 * k, k_max)
    upper = k

    unstable = False
    if lower > 1 and power_at(upper).p_hat < power_at(lower).p_hat:
        unstable = True
    while upper - lower > 1:
        middle = (lower + upper) // 2
        if holds(middle):
            upper = middle
        else:
            lower = middle
    k_n = upper

    failing = [j for j in range(k_n + 1, k_n + window + 1) if not holds(j)]
    if failing:
        unstable = True
    if unstable:
        logger.warning("Potencia inestable alrededor de k_n=%s (fallos en %s)", k_n, failing)

    saturated = target.p_hat >= SATURATION or k_n <= 2
    if saturated:
        logger.warning("Busqueda saturada: potencia objetivo %.6g, k_n=%s", target.p_hat, k_n)

    return KnSearchResult(
        z=z,
        alpha_n=alpha_n,
        alpha_std_err=alpha_se,
        n=n,
        k_n=k_n,
        window_checked=window,
        power_at_kn=power_at(k_n),
        target_power=target,
        kappa=kappa,
        critical_values=dict(sorted(critical_values.items())),
        saturated=saturated,
        unstable=unstable,
    )

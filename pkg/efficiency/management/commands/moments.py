from efficiency.forms import MomentsConfigForm
from efficiency.management.base import ExperimentCommand, ExperimentResult
from efficiency.services.errors import InvalidInputError
from efficiency.services.poisson_oracle import (
    PoissonContext,
    moment_summary,
    polynomial_checks,
    rho_large_lambda,
    rho_small_lambda,
)
from efficiency.services.statistics import CellFunction


def rho_expansion(h: CellFunction, lam: float) -> tuple[str, float | None]:
    """Expansion of rho to compare against: large-lambda for divergences at lam >= 1, small-lambda otherwise."""
    d = h.divergence_index
    if d is not None and lam >= 1.0:
        return "large", rho_large_lambda(d, lam)
    try:
        return "small", rho_small_lambda(h, lam)
    except InvalidInputError:
        return "", None


class Command(ExperimentCommand):
    help = "Funcionales de Poisson exactos (media, varianza, r_n, sigma^2, rho) por estadistica y lambda."
    command_name = "moments"
    form_class = MomentsConfigForm
    config_required = True
    columns = [
        "statistic",
        "lambda",
        "mean",
        "var",
        "r_n",
        "sigma2",
        "rho",
        "rho3",
        "expansion",
        "rho_expansion",
        "residual",
        "degenerate",
    ]

    def run(self, config, ctx):
        rows = []
        checks = {}
        for lam in config["lambdas"]:
            poisson = PoissonContext(lam=lam, truncation_tol=ctx.truncation_tol)
            checks[f"{lam:g}"] = polynomial_checks(poisson)
            for h in config["statistics"]:
                summary = moment_summary(h, poisson)
                kind, expansion = rho_expansion(h, lam)
                rows.append({
                    "statistic": h.label,
                    "lambda": lam,
                    "mean": summary.mean_h,
                    "var": summary.var_h,
                    "r_n": summary.r_n,
                    "sigma2": summary.sigma2,
                    "rho": summary.rho,
                    "rho3": summary.rho3,
                    "expansion": kind,
                    "rho_expansion": expansion,
                    "residual": None if expansion is None else abs(summary.rho - expansion),
                    "degenerate": summary.degenerate,
                })
        return ExperimentResult(rows=rows, summary={"polynomial_checks": checks})

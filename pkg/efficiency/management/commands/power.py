import math

from efficiency.forms import PowerConfigForm
from efficiency.management.base import ExperimentCommand, ExperimentResult
from efficiency.services import exact_dist, montecarlo
from efficiency.services.alternatives import ProfileKind, RateFamily, epsilon_norm, make_profile, nabla
from efficiency.services.iare import asymptotic_power
from efficiency.services.poisson_oracle import PoissonContext, moment_summary
from efficiency.services.rates import GrowthLaw


class Command(ExperimentCommand):
    help = "Potencia Monte Carlo frente a la formula asintotica Phi(nabla |rho| / sqrt(2) - omega_alpha)."
    command_name = "power"
    form_class = PowerConfigForm
    columns = [
        "statistic",
        "n",
        "N",
        "lambda",
        "eps_norm",
        "nabla",
        "alpha",
        "level",
        "critical_value",
        "critical_method",
        "rho",
        "mc_power",
        "std_err",
        "asymptotic_power",
        "difference",
    ]

    def alternative(self, config, n: int, N: int):
        growth = config["growth"]
        family = config["family"]
        if family is not None:
            fam = RateFamily(
                profile=family["profile"],
                c=family["c"],
                gamma=family["gamma"],
                growth=GrowthLaw(c=growth["c"], q=growth["q"]),
            )
            return fam.spec_at(n)
        return make_profile(ProfileKind.TWO_BLOCK, N, config["nabla"] * math.sqrt(N) / n)

    def run(self, config, ctx):
        growth = GrowthLaw(c=config["growth"]["c"], q=config["growth"]["q"])
        alpha = config["alpha"]
        reps = config["reps"]
        rows, std_errs = [], {}
        index = 0
        for h in config["statistics"]:
            for n in config["n_grid"]:
                N = growth.cells(n)
                alt = self.alternative(config, n, N)
                center, scale = montecarlo.null_scale(h, n, N, ctx.truncation_tol)

                if exact_dist.composition_count(n, N) <= ctx.enumeration_budget:
                    dist = exact_dist.enumerate(h, n, N, budget=ctx.enumeration_budget, threads=ctx.threads)
                    t, level = exact_dist.exact_critical(dist, alpha)
                    method = "exact"
                else:
                    u = montecarlo.estimate_critical(
                        h, n, N, alpha, reps, ctx.seed.offset(2 * index),
                        truncation_tol=ctx.truncation_tol, **ctx.mc,
                    )
                    t, level, method = center + scale * u, alpha, "monte-carlo"

                power = montecarlo.estimate_power(h, n, N, alt, t, reps, ctx.seed.offset(2 * index + 1), **ctx.mc)
                rho = moment_summary(h, PoissonContext(lam=n / N, truncation_tol=ctx.truncation_tol)).rho
                expected = asymptotic_power(rho, nabla(n, alt), alpha)
                rows.append({
                    "statistic": h.label,
                    "n": n,
                    "N": N,
                    "lambda": n / N,
                    "eps_norm": epsilon_norm(alt),
                    "nabla": nabla(n, alt),
                    "alpha": alpha,
                    "level": level,
                    "critical_value": (t - center) / scale,
                    "critical_method": method,
                    "rho": rho,
                    "mc_power": power.p_hat,
                    "std_err": power.std_err,
                    "asymptotic_power": expected,
                    "difference": abs(power.p_hat - expected),
                })
                std_errs[f"{h.label}@n={n}"] = power.std_err
                index += 1
        return ExperimentResult(rows=rows, std_errs=std_errs)

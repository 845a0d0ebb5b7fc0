from efficiency.forms import CorrConfigForm
from efficiency.management.base import ExperimentCommand, ExperimentResult
from efficiency.services import exact_dist, montecarlo
from efficiency.services.poisson_oracle import PoissonContext, moment_summary
from efficiency.services.reporting import write_distribution
from efficiency.services.statistics import CellFunction


class Command(ExperimentCommand):
    help = "Correlacion de cada estadistica con chi2 bajo la nula: oraculo, Monte Carlo y enumeracion exacta."
    command_name = "corr"
    form_class = CorrConfigForm
    columns = [
        "statistic",
        "n",
        "N",
        "rho_oracle",
        "mc_corr",
        "mc_difference",
        "exact_corr",
        "exact_difference",
        "distribution_csv",
    ]

    def add_arguments(self, parser):
        super().add_arguments(parser)
        parser.add_argument(
            "--dump-distribution",
            action="store_true",
            help="Exporta la distribucion exacta de cada estadistica como CSV value,prob.",
        )

    def config_overrides(self, options):
        overrides = super().config_overrides(options)
        if options.get("dump_distribution"):
            overrides["dump_distribution"] = True
        return overrides

    def run(self, config, ctx):
        n, N = config["n"], config["N"]
        chi2 = CellFunction.chi_square()
        oracle_ctx = PoissonContext(lam=n / N, truncation_tol=ctx.truncation_tol)
        rows, std_errs = [], {}
        for index, h in enumerate(config["statistics"]):
            rho = moment_summary(h, oracle_ctx).rho
            corr = montecarlo.estimate_corr_chi2(h, n, N, config["reps"], ctx.seed.offset(index), **ctx.mc)
            row = {
                "statistic": h.label,
                "n": n,
                "N": N,
                "rho_oracle": rho,
                "mc_corr": corr,
                "mc_difference": abs(corr - rho),
                "exact_corr": None,
                "exact_difference": None,
                "distribution_csv": "",
            }
            if config["exact"]:
                exact = exact_dist.exact_joint_corr(
                    h, chi2, n, N, budget=ctx.enumeration_budget, threads=ctx.threads
                )
                row.update({"exact_corr": exact, "exact_difference": abs(exact - rho)})
            if config["dump_distribution"]:
                dist = exact_dist.enumerate(h, n, N, budget=ctx.enumeration_budget, threads=ctx.threads)
                label = h.label.replace(":", "_")
                path = write_distribution(ctx.out_dir / f"{ctx.experiment_id}-{label}-dist.csv", dist)
                row["distribution_csv"] = path.name
            rows.append(row)
            # Error estandar aproximado de la correlacion muestral.
            std_errs[h.label] = (1.0 - corr * corr) / config["reps"] ** 0.5
        return ExperimentResult(rows=rows, std_errs=std_errs)

from efficiency.forms import NormalityConfigForm
from efficiency.management.base import ExperimentCommand, ExperimentResult
from efficiency.services.montecarlo import normality_diagnostic


class Command(ExperimentCommand):
    help = "Distancia de Kolmogorov-Smirnov de la estadistica estandarizada a la normal bajo la nula."
    command_name = "normality"
    form_class = NormalityConfigForm
    columns = ["statistic", "n", "N", "lambda", "reps", "ks_distance", "mean", "var", "centering", "center_shift"]

    def run(self, config, ctx):
        rows = []
        index = 0
        for h in config["statistics"]:
            for case in config["cases"]:
                n, N = case["n"], case["N"]
                diag = normality_diagnostic(
                    h,
                    n,
                    N,
                    config["reps"],
                    ctx.seed.offset(index),
                    centering=config["centering"],
                    truncation_tol=ctx.truncation_tol,
                    **ctx.mc,
                )
                rows.append({
                    "statistic": h.label,
                    "n": n,
                    "N": N,
                    "lambda": n / N,
                    "reps": config["reps"],
                    "ks_distance": diag.ks_distance,
                    "mean": diag.mean,
                    "var": diag.var,
                    "centering": diag.centering,
                    "center_shift": diag.center_shift,
                })
                index += 1
        return ExperimentResult(rows=rows)

import logging

from efficiency.forms import IareConfigForm
from efficiency.management.base import ExperimentCommand, ExperimentResult
from efficiency.services.alternatives import RateFamily
from efficiency.services.errors import EfficiencyError
from efficiency.services.iare import (
    PsiDescriptor,
    TauKind,
    TauSpec,
    closed_form_iare,
    pitman_efficiency,
    theorem_verdict,
    vanishing_tau_verdict,
)
from efficiency.services.montecarlo import find_kn
from efficiency.services.rates import GrowthLaw

logger = logging.getLogger(__name__)


class Command(ExperimentCommand):
    help = "IARE en forma cerrada, busqueda operativa de k_n y veredicto por fila (psi, n)."
    command_name = "iare"
    form_class = IareConfigForm
    columns = [
        "h",
        "psi",
        "n",
        "N",
        "lambda",
        "e_closed_form",
        "pitman",
        "k_n",
        "k_n_ratio",
        "alpha_n",
        "target_power",
        "power_at_kn",
        "saturated",
        "unstable",
        "verdict",
        "theorem",
        "error",
    ]

    def run(self, config, ctx):
        h = config["h"]
        growth = GrowthLaw(c=config["growth"]["c"], q=config["growth"]["q"])
        family = config["family"]
        fam = RateFamily(profile=family["profile"], c=family["c"], gamma=family["gamma"], growth=growth)
        tau_config = config["tau"]
        tau = TauSpec.vanishing() if tau_config["kind"] == TauKind.VANISHING else TauSpec(value=tau_config["value"])

        rows, std_errs = [], {}
        stream = 0
        for psi in config["psi"]:
            verdict = None
            try:
                if tau.kind == TauKind.VANISHING:
                    verdict = vanishing_tau_verdict()
                else:
                    verdict = theorem_verdict(PsiDescriptor.from_cell(psi), growth, fam)
            except EfficiencyError as exc:
                logger.warning("Sin veredicto para %s: %s", psi.label, exc)

            for n in config["n_grid"]:
                row = {
                    "h": h.label,
                    "psi": psi.label,
                    "n": n,
                    "N": growth.cells(n),
                    "lambda": growth.lam(n),
                    "verdict": str(verdict.value) if verdict else "",
                    "theorem": verdict.citation if verdict else "",
                    "error": "",
                }
                k_max = config["k_max"] or 64 * n
                row_seed = ctx.seed.offset(stream)
                stream += 2 * k_max + 4
                try:
                    row["e_closed_form"] = closed_form_iare(h, psi, growth, tau, n, truncation_tol=ctx.truncation_tol)
                    row["pitman"] = pitman_efficiency(h, psi, growth.lam(n), truncation_tol=ctx.truncation_tol)
                    if config["monte_carlo"]:
                        search = find_kn(
                            h,
                            psi,
                            config["z"],
                            n,
                            fam,
                            config["reps"],
                            row_seed,
                            window=config["window"],
                            k_max=k_max,
                            use_exact_shift=config["exact_shift"],
                            enumeration_budget=ctx.enumeration_budget,
                            truncation_tol=ctx.truncation_tol,
                            **ctx.mc,
                        )
                        row.update({
                            "k_n": search.k_n,
                            "k_n_ratio": search.ratio,
                            "alpha_n": search.alpha_n,
                            "target_power": search.target_power.p_hat,
                            "power_at_kn": search.power_at_kn.p_hat,
                            "saturated": search.saturated,
                            "unstable": search.unstable,
                        })
                        std_errs[f"{psi.label}@n={n}"] = {
                            "alpha_n": search.alpha_std_err,
                            "target_power": search.target_power.std_err,
                            "power_at_kn": search.power_at_kn.std_err,
                        }
                except EfficiencyError as exc:
                    logger.warning("Fila psi=%s n=%s: %s", psi.label, n, exc)
                    row["error"] = str(exc)
                rows.append(row)
        return ExperimentResult(rows=rows, std_errs=std_errs)

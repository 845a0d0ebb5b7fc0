from efficiency.forms import VerdictConfigForm
from efficiency.management.base import ExperimentCommand, ExperimentResult
from efficiency.services.alternatives import RateFamily, classify_family
from efficiency.services.iare import PsiDescriptor, classify_regime, theorem_verdict
from efficiency.services.rates import GrowthLaw


class Command(ExperimentCommand):
    help = "Veredicto e>1, e=1, e=0 u abierto de chi2 frente a cada psi para una familia de alternativas."
    command_name = "verdict"
    form_class = VerdictConfigForm
    columns = ["psi", "regime", "verdict", "theorem", "conditions"]

    def run(self, config, ctx):
        growth = GrowthLaw(c=config["growth"]["c"], q=config["growth"]["q"])
        family = config["family"]
        fam = RateFamily(profile=family["profile"], c=family["c"], gamma=family["gamma"], growth=growth)
        regime = classify_regime(growth)

        rows = []
        for psi in config["psi"]:
            verdict = theorem_verdict(PsiDescriptor.from_cell(psi), growth, fam).as_dict()
            rows.append({
                "psi": psi.label,
                "regime": str(regime.tag),
                "verdict": verdict["verdict"],
                "theorem": verdict["theorem"],
                "conditions": verdict["conditions"],
            })
        summary = {
            "regime": {
                "tag": str(regime.tag),
                "lam_limit": regime.lam_limit,
                "conditions": [condition.as_dict() for condition in regime.conditions],
            },
            "family": classify_family(fam, config["n_grid"]).as_dict(),
        }
        return ExperimentResult(rows=rows, summary=summary)

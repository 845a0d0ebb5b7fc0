from efficiency.forms import VerifyConfigForm
from efficiency.management.base import ExperimentCommand, ExperimentResult
from efficiency.services.acceptance import RunOptions, run_acceptance


class Command(ExperimentCommand):
    help = "Ejecuta los criterios de aceptacion A1-A11 e informa los valores medidos."
    command_name = "verify"
    form_class = VerifyConfigForm
    config_required = False
    columns = ["item", "description", "passed", "wall_time_s", "measured", "detail"]

    def add_arguments(self, parser):
        super().add_arguments(parser)
        parser.add_argument("--items", nargs="+", help="Subconjunto de criterios, por ejemplo A1 A9.")

    def config_overrides(self, options):
        overrides = super().config_overrides(options)
        if options.get("items"):
            overrides["items"] = list(options["items"])
        return overrides

    def run(self, config, ctx):
        options = RunOptions(
            seed=ctx.seed,
            reps=config["reps"],
            threads=ctx.threads,
            block_size=ctx.block_size,
            truncation_tol=ctx.truncation_tol,
            enumeration_budget=ctx.enumeration_budget,
        )
        results = run_acceptance(config["items"], options)
        rows = [
            {
                "item": result.item,
                "description": result.description,
                "passed": result.passed,
                "wall_time_s": result.wall_time_s,
                "measured": result.measured,
                "detail": result.detail,
            }
            for result in results
        ]
        for result in results:
            status = self.style.SUCCESS("ok") if result.passed else self.style.ERROR("FALLA")
            self.stdout.write(f"{result.item:>4} {status} {result.description} ({result.wall_time_s:.1f} s)")
        passed = all(result.passed for result in results)
        return ExperimentResult(rows=rows, summary={"all_passed": passed}, passed=passed)

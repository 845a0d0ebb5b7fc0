import logging
import time
from dataclasses import dataclass, field
from pathlib import Path

from django.conf import settings
from django.core.management.base import BaseCommand, CommandError

from efficiency.forms import load_config, validate_config
from efficiency.models import ExperimentRecord
from efficiency.services.errors import ConfigurationError, EfficiencyError, EnumerationBudgetError, InvalidInputError
from efficiency.services.montecarlo import SeedSpec
from efficiency.services.records import new_experiment_id, save_record
from efficiency.services.reporting import write_outputs

logger = logging.getLogger(__name__)

CONFIG_ERROR = 2
BUDGET_ERROR = 3
ACCEPTANCE_FAILURE = 4


@dataclass(frozen=True)
class RunContext:
    experiment_id: str
    seed: SeedSpec
    out_dir: Path
    threads: int
    block_size: int
    truncation_tol: float
    enumeration_budget: int

    @property
    def mc(self) -> dict:
        return {"threads": self.threads, "block_size": self.block_size}


@dataclass
class ExperimentResult:
    rows: list[dict]
    summary: dict = field(default_factory=dict)
    std_errs: dict = field(default_factory=dict)
    passed: bool = True


class ExperimentCommand(BaseCommand):
    """Shared flags, config validation, output files and the result record of every experiment command."""

    command_name = ""
    form_class = None
    columns: list[str] = []
    config_required = True

    def add_arguments(self, parser):
        parser.add_argument("--config", help="Archivo JSON del experimento.")
        parser.add_argument("--seed", help="Semilla maestra (entero de 64 bits) o 'semilla:flujo'.")
        parser.add_argument("--reps", type=int, help="Numero de replicas Monte Carlo.")
        parser.add_argument("--out", help="Directorio de salida.")
        parser.add_argument("--threads", type=int, help="Hilos de trabajo; no cambia los resultados.")

    def config_overrides(self, options: dict) -> dict:
        overrides = {}
        for key in ("seed", "reps", "threads"):
            if options.get(key) is not None:
                overrides[key] = options[key]
        return overrides

    def run(self, config: dict, ctx: RunContext) -> ExperimentResult:
        raise NotImplementedError

    def handle(self, *args, **options):
        if not options.get("config") and self.config_required:
            raise CommandError("Falta --config con el archivo del experimento.", returncode=CONFIG_ERROR)

        try:
            raw = load_config(options["config"]) if options.get("config") else {}
            config, echo = validate_config(self.form_class, {**raw, **self.config_overrides(options)})
        except ConfigurationError as exc:
            raise CommandError("Configuracion invalida: " + "; ".join(exc.errors), returncode=CONFIG_ERROR) from exc

        seed = config.get("seed") or SeedSpec(master_seed=settings.EFFICIENCY_MASTER_SEED)
        echo["seed"] = str(seed)
        threads = config.get("threads") or settings.EFFICIENCY_THREADS
        echo["threads"] = threads
        identity = {key: value for key, value in echo.items() if key != "threads"}
        experiment_id = config.get("experiment_id") or new_experiment_id(self.command_name, identity)
        echo["experiment_id"] = experiment_id

        ctx = RunContext(
            experiment_id=experiment_id,
            seed=seed,
            out_dir=Path(options.get("out") or settings.EFFICIENCY_OUTPUT_DIR),
            threads=threads,
            block_size=settings.EFFICIENCY_REPLICATE_BLOCK,
            truncation_tol=config.get("truncation_tol") or settings.EFFICIENCY_TRUNCATION_TOL,
            enumeration_budget=settings.EFFICIENCY_ENUMERATION_BUDGET,
        )
        logger.info("Experimento %s (%s), semilla %s", experiment_id, self.command_name, seed)

        started = time.perf_counter()
        try:
            result = self.run(config, ctx)
        except EnumerationBudgetError as exc:
            self._save_failure(ctx, echo, started, exc)
            raise CommandError(str(exc), returncode=BUDGET_ERROR) from exc
        except InvalidInputError as exc:
            self._save_failure(ctx, echo, started, exc)
            raise CommandError(str(exc), returncode=CONFIG_ERROR) from exc
        except EfficiencyError as exc:
            self._save_failure(ctx, echo, started, exc)
            raise CommandError(str(exc)) from exc
        wall_time = time.perf_counter() - started

        summary = {
            "command": self.command_name,
            "input": echo,
            "seed": str(seed),
            "wall_time_s": wall_time,
            "std_errs": result.std_errs,
            **result.summary,
        }
        csv_path, json_path = write_outputs(ctx.out_dir, experiment_id, self.columns, result.rows, summary)
        save_record(
            experiment_id=experiment_id,
            command=self.command_name,
            status=ExperimentRecord.Status.OK if result.passed else ExperimentRecord.Status.FAILED,
            input_echo=echo,
            outputs=result.rows,
            std_errs=result.std_errs,
            seed=seed,
            wall_time_s=wall_time,
            csv_path=csv_path,
        )

        if not result.passed:
            raise CommandError(f"Hay criterios fallidos; ver {json_path}", returncode=ACCEPTANCE_FAILURE)
        self.stdout.write(self.style.SUCCESS(f"{experiment_id}: {len(result.rows)} filas en {csv_path}"))

    def _save_failure(self, ctx: RunContext, echo: dict, started: float, exc: Exception) -> None:
        logger.error("Experimento %s fallo: %s", ctx.experiment_id, exc)
        save_record(
            experiment_id=ctx.experiment_id,
            command=self.command_name,
            status=ExperimentRecord.Status.ERROR,
            input_echo={**echo, "error": str(exc)},
            seed=ctx.seed,
            wall_time_s=time.perf_counter() - started,
        )

import dataclasses
import json
import math
from hashlib import sha1
from pathlib import Path
from typing import Any

import numpy as np

from efficiency.models import ExperimentRecord

from .montecarlo import SeedSpec
from .statistics import CellFunction


def _json_safe(value: Any) -> Any:
    if isinstance(value, CellFunction):
        return value.label if not value.table else {"table": list(value.table), "tail": str(value.tail_rule)}
    if isinstance(value, SeedSpec):
        return str(value)
    if dataclasses.is_dataclass(value) and not isinstance(value, type):
        return {field.name: _json_safe(getattr(value, field.name)) for field in dataclasses.fields(value)}
    if isinstance(value, np.ndarray):
        return [_json_safe(item) for item in value.tolist()]
    if isinstance(value, np.bool_):
        return bool(value)
    if isinstance(value, np.integer):
        return int(value)
    if isinstance(value, (float, np.floating)):
        value = float(value)
        return value if math.isfinite(value) else None
    if isinstance(value, Path):
        return str(value)
    if isinstance(value, (list, tuple)):
        return [_json_safe(item) for item in value]
    if isinstance(value, dict):
        return {str(k): _json_safe(v) for k, v in value.items()}
    return value


def new_experiment_id(command: str, echo: dict) -> str:
    """Identifier derived from the command and its full input echo, so identical runs share it."""
    payload = json.dumps(_json_safe(echo), sort_keys=True, separators=(",", ":"))
    digest = sha1(f"{command}:{payload}".encode("utf-8")).hexdigest()[:12].upper()
    return f"{command.upper()}-{digest}"


def save_record(
    *,
    experiment_id: str,
    command: str,
    status: str = ExperimentRecord.Status.OK,
    input_echo: dict | None = None,
    outputs: list | None = None,
    std_errs: dict | None = None,
    seed: SeedSpec | None = None,
    wall_time_s: float = 0.0,
    csv_path: str | Path = "",
) -> ExperimentRecord:
    record, _ = ExperimentRecord.objects.update_or_create(
        experiment_id=experiment_id,
        defaults={
            "command": command,
            "status": status,
            "input_echo": _json_safe(input_echo or {}),
            "outputs": _json_safe(outputs or []),
            "std_errs": _json_safe(std_errs or {}),
            "seed_echo": str(seed) if seed is not None else "",
            "wall_time_s": float(wall_time_s),
            "csv_path": str(csv_path or ""),
        },
    )
    return record

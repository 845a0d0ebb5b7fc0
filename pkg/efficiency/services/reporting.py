import csv
import json
import logging
from pathlib import Path

import numpy as np

from .exact_dist import ExactDistribution
from .records import _json_safe

logger = logging.getLogger(__name__)

CSV_DIGITS = 15


def format_value(value) -> str:
    value = _json_safe(value)
    if value is None:
        return ""
    if isinstance(value, bool):
        return "true" if value else "false"
    if isinstance(value, float):
        return f"{value:.{CSV_DIGITS}g}"
    if isinstance(value, (list, dict)):
        return json.dumps(value, ensure_ascii=False, separators=(",", ":"))
    return str(value)


def write_csv(path: Path, columns: list[str], rows: list[dict]) -> Path:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    with path.open("w", newline="", encoding="utf-8") as handle:
        writer = csv.writer(handle)
        writer.writerow(columns)
        for row in rows:
            writer.writerow([format_value(row.get(column)) for column in columns])
    return path


def write_json(path: Path, payload: dict) -> Path:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_text(json.dumps(_json_safe(payload), ensure_ascii=False, indent=2, allow_nan=False), encoding="utf-8")
    return path


def write_distribution(path: Path, dist: ExactDistribution) -> Path:
    rows = [{"value": value, "prob": prob} for value, prob in zip(dist.values.tolist(), dist.probs.tolist())]
    return write_csv(path, ["value", "prob"], rows)


def write_outputs(out_dir, experiment_id: str, columns: list[str], rows: list[dict], summary: dict) -> tuple[Path, Path]:
    """Write <out>/<id>.csv and <out>/<id>.json; the JSON repeats the rows with full precision."""
    out_dir = Path(out_dir)
    csv_path = write_csv(out_dir / f"{experiment_id}.csv", columns, rows)
    payload = {
        **summary,
        "experiment_id": experiment_id,
        "columns": list(columns),
        "rows": [{column: row.get(column) for column in columns} for row in rows],
    }
    json_path = write_json(out_dir / f"{experiment_id}.json", payload)
    logger.info("Resultados en %s y %s (%s filas)", csv_path, json_path, len(rows))
    return csv_path, json_path


def read_csv(path: Path) -> tuple[list[str], list[dict]]:
    with Path(path).open(newline="", encoding="utf-8") as handle:
        reader = csv.DictReader(handle)
        return list(reader.fieldnames or []), list(reader)


def same_value(text: str, value) -> bool:
    """Whether a CSV cell reproduces a JSON value at the printed precision."""
    value = _json_safe(value)
    if isinstance(value, float) and not isinstance(value, bool) and text:
        return bool(np.isclose(float(text), value, rtol=10.0 ** (1 - CSV_DIGITS), atol=0.0))
    return format_value(value) == text

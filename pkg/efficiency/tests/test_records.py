import json
import math
import tempfile
from pathlib import Path

import numpy as np
from django.test import SimpleTestCase, TestCase

from efficiency.models import ExperimentRecord
from efficiency.services import exact_dist
from efficiency.services.montecarlo import SeedSpec, TailEstimate
from efficiency.services.records import _json_safe, new_experiment_id, save_record
from efficiency.services.reporting import format_value, read_csv, same_value, write_distribution, write_outputs
from efficiency.services.statistics import CellFunction


class JsonSafeTests(SimpleTestCase):
    def test_converts_domain_and_numpy_values(self):
        payload = {
            "h": CellFunction.log_likelihood(),
            "custom": CellFunction.custom([0.0, 1.0], tail_rule="linear"),
            "seed": SeedSpec(3, 1),
            "estimate": TailEstimate.from_hits(25, 100),
            "array": np.array([1, 2]),
            "flag": np.bool_(True),
            "count": np.int64(4),
            "missing": math.nan,
            1: (Path("a"), math.inf),
        }
        safe = _json_safe(payload)

        self.assertEqual(safe["h"], CellFunction.log_likelihood().label)
        self.assertEqual(safe["custom"], {"table": [0.0, 1.0], "tail": "linear"})
        self.assertEqual(safe["seed"], "3:1")
        self.assertEqual(safe["estimate"]["p_hat"], 0.25)
        self.assertEqual(safe["array"], [1, 2])
        self.assertIs(safe["flag"], True)
        self.assertEqual(safe["count"], 4)
        self.assertIsNone(safe["missing"])
        self.assertEqual(safe["1"], ["a", None])
        json.dumps(safe, allow_nan=False)


class ExperimentIdTests(SimpleTestCase):
    def test_identical_inputs_share_an_id(self):
        echo = {"statistics": ["chi2"], "lambdas": [1.0], "seed": "1:0"}

        first = new_experiment_id("moments", echo)
        self.assertEqual(first, new_experiment_id("moments", dict(reversed(list(echo.items())))))
        self.assertRegex(first, r"^MOMENTS-[0-9A-F]{12}$")

    def test_inputs_and_command_change_the_id(self):
        echo = {"statistics": ["chi2"], "lambdas": [1.0]}

        self.assertNotEqual(new_experiment_id("moments", echo), new_experiment_id("moments", {**echo, "lambdas": [2.0]}))
        self.assertNotEqual(new_experiment_id("moments", echo), new_experiment_id("corr", echo))


class SaveRecordTests(TestCase):
    def test_creates_then_updates(self):
        save_record(experiment_id="MOMENTS-1", command="moments", outputs=[{"rho": 0.9}], seed=SeedSpec(7))
        record = save_record(
            experiment_id="MOMENTS-1",
            command="moments",
            status=ExperimentRecord.Status.FAILED,
            outputs=[{"rho": math.nan}],
            wall_time_s=1.5,
        )

        self.assertEqual(ExperimentRecord.objects.count(), 1)
        record.refresh_from_db()
        self.assertEqual(record.status, ExperimentRecord.Status.FAILED)
        self.assertEqual(record.outputs, [{"rho": None}])
        self.assertEqual(record.seed_echo, "")
        self.assertEqual(str(record), "moments MOMENTS-1 FAILED")


class ReportingTests(SimpleTestCase):
    def setUp(self):
        self.tmp = tempfile.TemporaryDirectory()
        self.addCleanup(self.tmp.cleanup)
        self.out = Path(self.tmp.name)

    def test_format_value(self):
        self.assertEqual(format_value(None), "")
        self.assertEqual(format_value(True), "true")
        self.assertEqual(format_value(0.1), "0.1")
        self.assertEqual(format_value(1 / 3), "0.333333333333333")
        self.assertEqual(format_value({"a": [1, 2]}), '{"a":[1,2]}')
        self.assertEqual(format_value(math.inf), "")

    def test_csv_and_json_agree(self):
        columns = ["statistic", "rho", "flag", "note"]
        rows = [
            {"statistic": CellFunction.chi_square(), "rho": 1.0, "flag": False, "note": None},
            {"statistic": CellFunction.log_likelihood(), "rho": math.pi / 4, "flag": True, "note": "x"},
        ]
        csv_path, json_path = write_outputs(self.out, "TEST-1", columns, rows, {"command": "moments"})

        header, csv_rows = read_csv(csv_path)
        payload = json.loads(json_path.read_text(encoding="utf-8"))
        self.assertEqual(header, columns)
        self.assertEqual(payload["experiment_id"], "TEST-1")
        self.assertEqual(payload["command"], "moments")
        for csv_row, json_row in zip(csv_rows, payload["rows"]):
            for column in columns:
                self.assertTrue(same_value(csv_row[column], json_row[column]), column)

    def test_distribution_file(self):
        dist = exact_dist.enumerate(CellFunction.chi_square(), 2, 2)
        path = write_distribution(self.out / "dist.csv", dist)

        header, rows = read_csv(path)
        self.assertEqual(header, ["value", "prob"])
        self.assertEqual([row["value"] for row in rows], ["0", "2"])

import json
import os
import tempfile
import unittest

import pandas as pd

from dogss import cli, io
from dogss.model import ParseError


class TestCli(unittest.TestCase):
    def setUp(self):
        self.tmp = tempfile.TemporaryDirectory()
        self.dir = self.tmp.name

    def tearDown(self):
        self.tmp.cleanup()

    def path(self, *names):
        return os.path.join(self.dir, *names)

    def run_cli(self, *argv):
        return cli.main([str(a) for a in argv])

    def simulate(self, out="sim", *extra):
        code = self.run_cli("simulate-signal", "--preset", "small", "--seed", 1, "--out", self.path(out), *extra)
        self.assertEqual(code, 0)
        return self.path(out)

    def read_json(self, *names):
        with open(self.path(*names)) as fh:
            return json.load(fh)

    def test_simulate_then_fit(self):
        sim = self.simulate()
        self.assertEqual(
            self.run_cli(
                "fit",
                "--data", os.path.join(sim, "train.csv"),
                "--grouping", os.path.join(sim, "grouping.csv"),
                "--out", self.path("fit"),
            ),
            0,
        )
        fit = self.read_json("fit", "fit.json")
        self.assertEqual(fit["schema_version"], 1)
        self.assertEqual(fit["command"], "fit")
        self.assertEqual(len(fit["result"]["feature_prob"]), 30)
        self.assertEqual(len(fit["result"]["group_prob"]), 5)
        self.assertEqual(len(fit["inputs"]), 2)
        self.assertNotIn("out", fit["config"])
        coefficients = pd.read_csv(self.path("fit", "coefficients.csv"))
        self.assertEqual(list(coefficients.columns), ["feature", "group", "mean", "probability"])

        self.assertEqual(
            self.run_cli(
                "eval",
                "--fit", self.path("fit", "fit.json"),
                "--truth", os.path.join(sim, "manifest.json"),
                "--test", os.path.join(sim, "test.csv"),
                "--out", self.path("eval"),
            ),
            0,
        )
        report = self.read_json("eval", "metrics.json")["metrics"]
        self.assertEqual(report["N_star"], 30)
        self.assertGreater(report["auroc"], 0.5)
        self.assertIn("error", report)

    def test_fit_ungrouped(self):
        sim = self.simulate()
        code = self.run_cli("fit", "--data", os.path.join(sim, "train.csv"), "--ungrouped", "--out", self.path("fit"))
        self.assertEqual(code, 0)
        self.assertEqual(len(self.read_json("fit", "fit.json")["result"]["group_prob"]), 30)

    def test_fit_needs_grouping(self):
        sim = self.simulate()
        self.assertEqual(self.run_cli("fit", "--data", os.path.join(sim, "train.csv"), "--out", self.path("fit")), 2)

    def test_missing_data_file(self):
        self.assertEqual(self.run_cli("fit", "--data", self.path("nope.csv"), "--ungrouped", "--out", self.dir), 2)

    def test_directory_as_data_file(self):
        self.assertEqual(self.run_cli("fit", "--data", self.dir, "--ungrouped", "--out", self.path("fit")), 2)

    def test_unreadable_inputs_raise_parse_errors(self):
        self.assertRaises(ParseError, io.read_table, self.dir)
        self.assertRaises(ParseError, io.read_json, self.dir)

    def test_short_grouping_file(self):
        sim = self.simulate()
        pd.DataFrame({"feature": ["x1", "x2"], "group": [1, 1]}).to_csv(self.path("short.csv"), index=False)
        code = self.run_cli(
            "fit", "--data", os.path.join(sim, "train.csv"), "--grouping", self.path("short.csv"), "--out", self.dir
        )
        self.assertEqual(code, 3)

    def test_invalid_hyperparameter(self):
        sim = self.simulate()
        code = self.run_cli(
            "fit", "--data", os.path.join(sim, "train.csv"), "--ungrouped", "--sigma0", 0, "--out", self.dir
        )
        self.assertEqual(code, 2)

    def test_simulation_is_reproducible(self):
        first = self.simulate("a", "--preset", "medium", "--seed", 7)
        second = self.simulate("b", "--preset", "medium", "--seed", 7)
        for name in ("train.csv", "test.csv", "grouping.csv", "manifest.json"):
            with open(os.path.join(first, name), "rb") as a, open(os.path.join(second, name), "rb") as b:
                self.assertEqual(a.read(), b.read(), name)

    def test_simulate_network(self):
        self.assertEqual(self.run_cli("simulate-network", "--preset", "small", "--out", self.path("net")), 0)
        nodes = pd.read_csv(self.path("net", "nodes.csv"))
        self.assertEqual(len(nodes), 100)
        self.assertEqual(int(nodes["hub"].sum()), 10)
        self.assertEqual(pd.read_csv(self.path("net", "train.csv")).shape, (100, 100))
        self.assertEqual(self.read_json("net", "manifest.json")["P"], 100)

    def test_reconstruct_and_eval(self):
        net = ["--P", 20, "--G", 2, "--H", 3, "--M", 60, "--seed", 2]
        self.assertEqual(self.run_cli("simulate-network", *(net + ["--out", self.path("net")])), 0)
        args = [
            "reconstruct",
            "--data", self.path("net", "train.csv"),
            "--nodes", self.path("net", "nodes.csv"),
            "--grouping", "random",
            "--seed", 4,
        ]
        self.assertEqual(self.run_cli(*(args + ["--out", self.path("r1")])), 0)
        self.assertEqual(self.run_cli(*(args + ["--out", self.path("r2")])), 0)
        with open(self.path("r1", "ranking.csv")) as a, open(self.path("r2", "ranking.csv")) as b:
            self.assertEqual(a.read(), b.read())
        self.assertEqual(self.read_json("r1", "manifest.json")["failures"], [])

        code = self.run_cli(
            "eval",
            "--ranking", self.path("r1", "ranking.csv"),
            "--gold", self.path("net", "edges.csv"),
            "--test", self.path("net", "test.csv"),
            "--coefficients", self.path("r1", "coefficients.csv"),
            "--out", self.path("eval"),
        )
        self.assertEqual(code, 0)
        report = self.read_json("eval", "metrics.json")["metrics"]
        self.assertEqual(report["N_star"], 20 * 19 // 2)
        self.assertIn("error", report)

    def test_eval_of_gold_ordered_ranking(self):
        pd.DataFrame({"node_a": [0, 2], "node_b": [1, 3]}).to_csv(self.path("gold.csv"), index=False)
        pd.DataFrame({"node_a": [0, 2, 0], "node_b": [1, 3, 2], "score": [0.9, 0.8, 0.1]}).to_csv(
            self.path("ranking.csv"), index=False
        )
        code = self.run_cli(
            "eval", "--ranking", self.path("ranking.csv"), "--gold", self.path("gold.csv"), "--out", self.dir
        )
        self.assertEqual(code, 0)
        report = self.read_json("metrics.json")["metrics"]
        self.assertEqual((report["auroc"], report["aupr"], report["N_star"]), (1.0, 1.0, 6))
        self.assertEqual(len(self.read_json("metrics.json")["inputs"]), 2)

    def test_eval_needs_inputs(self):
        self.assertEqual(self.run_cli("eval", "--out", self.dir), 2)

    def test_oracle_compare_feature_limit(self):
        sim = self.simulate()
        code = self.run_cli(
            "oracle-compare",
            "--data", os.path.join(sim, "train.csv"),
            "--grouping", os.path.join(sim, "grouping.csv"),
            "--out", self.dir,
        )
        self.assertEqual(code, 2)

    def test_oracle_compare(self):
        sim = self.simulate("sim", "--N", 8, "--G", 3, "--k", 2)
        code = self.run_cli(
            "oracle-compare",
            "--data", os.path.join(sim, "train.csv"),
            "--grouping", os.path.join(sim, "grouping.csv"),
            "--out", self.path("cmp"),
        )
        self.assertEqual(code, 0)
        report = self.read_json("cmp", "report.json")["report"]
        self.assertLessEqual(report["mean_abs_prob_deviation"], report["max_abs_prob_deviation"])

    def test_cutoff(self):
        sim = self.simulate()
        code = self.run_cli(
            "cutoff",
            "--data", os.path.join(sim, "train.csv"),
            "--grouping", os.path.join(sim, "grouping.csv"),
            "--folds", 5,
            "--out", self.path("cut"),
        )
        self.assertEqual(code, 0)
        self.assertEqual(self.read_json("cut", "cutoff.json")["folds_used"], 5)
        self.assertEqual(len(pd.read_csv(self.path("cut", "cv_curve.csv"))), 101)

    def test_experiment(self):
        code = self.run_cli("experiment", "--sweep", "baseline", "--replicates", 2, "--out", self.path("exp"))
        self.assertEqual(code, 0)
        self.assertEqual(len(pd.read_csv(self.path("exp", "results.csv"))), 4)
        self.assertIn("median", pd.read_csv(self.path("exp", "summary.csv")).columns)

    def test_usage_error(self):
        with self.assertRaises(SystemExit) as cm:
            cli.main(["simulate-signal", "--corr", "diagonal"])
        self.assertEqual(cm.exception.code, 2)

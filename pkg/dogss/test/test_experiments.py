import math
import os
import unittest

import numpy as np

from dogss import ep, experiments
from dogss.model import Hyperparams, ParseError, RegressionData
from dogss.simulate import ScenarioSpec, gen_instance


class TestExperiments(unittest.TestCase):
    def test_baseline_rows(self):
        results = experiments.run_signal_experiment("baseline", "small", replicates=2, seed=3)
        self.assertEqual(len(results), 4)
        self.assertEqual([row["seed"] for row in results], [3, 3, 4, 4])
        self.assertEqual({row["method"] for row in results}, set(experiments.METHODS))
        for row in results:
            self.assertEqual(row["setting"], "baseline")
            self.assertTrue(0.0 <= row["auroc"] <= 1.0)
            self.assertNotIn("seconds", row)

    def test_timing(self):
        results = experiments.run_signal_experiment(
            "baseline", "small", replicates=1, methods=(experiments.DOGSS,), timing=True
        )
        self.assertGreaterEqual(results[0]["seconds"], 0.0)

    def test_noise_sweep_keeps_method_noise(self):
        labels = [setting.label for setting in experiments.NOISE]
        self.assertEqual(labels, ["sigma0=0", "sigma0=0.1", "sigma0=1", "sigma0=3", "sigma0=5"])
        self.assertTrue(all(setting.hyper == {"sigma0": 1.0} for setting in experiments.NOISE))

    def test_summary(self):
        results = experiments.run_signal_experiment("baseline", "small", replicates=3, methods=(experiments.DOGSS,))
        summary = experiments.summarize(results)
        auroc = summary[summary["metric"] == "auroc"].iloc[0]
        self.assertEqual(auroc["n"], 3)
        self.assertEqual(auroc["setting"], "baseline")
        self.assertNotIn("replicate", set(summary["metric"]))
        (setting, median), = experiments.medians(results, "auroc")
        self.assertEqual(setting, "baseline")
        self.assertAlmostEqual(median, auroc["median"])

    def test_no_signal_scores_are_undefined(self):
        instance = gen_instance(ScenarioSpec(M=20, N=6, G=2, k=0))
        data = RegressionData.prepare(instance.X, instance.y)
        scores = experiments.score_fit(ep.fit(data, instance.grouping, Hyperparams()), instance, data)
        self.assertTrue(math.isnan(scores["auroc"]))
        self.assertTrue(np.isfinite(scores["error"]))

    def test_unknown_names(self):
        self.assertRaises(ParseError, experiments.run_signal_experiment, "wind")
        self.assertRaises(ParseError, experiments.run_signal_experiment, methods=("lasso",))


SLOW = unittest.skipUnless(os.environ.get("DOGSS_SLOW_TESTS"), "set DOGSS_SLOW_TESTS=1 for the seed sweeps")


class TestRecovery(unittest.TestCase):
    def dogss_medians(self, sweep, preset, replicates, metric):
        results = experiments.run_signal_experiment(sweep, preset, replicates=replicates, methods=(experiments.DOGSS,))
        return [value for _, value in experiments.medians(results, metric)]

    def test_small_scenario_is_nearly_perfect(self):
        (auroc,) = self.dogss_medians("baseline", "small", 10, "auroc")
        self.assertGreaterEqual(auroc, 0.9)

    @SLOW
    def test_small_scenario_many_seeds(self):
        (auroc,) = self.dogss_medians("baseline", "small", 50, "auroc")
        self.assertGreaterEqual(auroc, 0.95)

    @SLOW
    def test_grouping_helps_on_medium(self):
        results = experiments.run_signal_experiment("baseline", "medium", replicates=100)
        (dogss,) = experiments.medians(results, "aupr", experiments.DOGSS)
        (ssep,) = experiments.medians(results, "aupr", experiments.SSEP)
        self.assertGreaterEqual(dogss[1], ssep[1])

    @SLOW
    def test_aupr_falls_with_noise(self):
        medians = self.dogss_medians("noise", "small", 50, "aupr")[1:]
        drops = [later - earlier for earlier, later in zip(medians, medians[1:])]
        rises = [d for d in drops if d > 0]
        self.assertLessEqual(len(rises), 1)
        self.assertTrue(all(d <= 0.02 for d in rises))

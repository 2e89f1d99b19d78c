import unittest

import numpy as np

from dogss.metrics import (
    CUTOFF_GRID,
    RankedPredictions,
    aggregate_replicates,
    curve_table,
    cv_cutoff_1se,
    roc_pr,
    thresholded,
)
from dogss.model import DimensionError, Grouping, Hyperparams, ParseError, RegressionData


class TestRocPr(unittest.TestCase):
    def test_perfect_ranking(self):
        preds = RankedPredictions(np.array([0.9, 0.8, 0.3, 0.2, 0.1]), np.array([1, 1, 0, 0, 0]))
        result = roc_pr(preds)
        self.assertEqual(result.auroc, 1.0)
        self.assertEqual(result.aupr, 1.0)

    def test_reversed_ranking(self):
        preds = RankedPredictions(np.array([0.1, 0.2, 0.7, 0.8, 0.9]), np.array([1, 1, 0, 0, 0]))
        self.assertEqual(roc_pr(preds).auroc, 0.0)

    def test_random_baseline(self):
        rng = np.random.default_rng(0)
        labels = np.zeros(1000, dtype=bool)
        labels[:100] = True
        result = roc_pr(RankedPredictions(rng.uniform(size=1000), labels))
        self.assertAlmostEqual(result.auroc, 0.5, delta=0.05)
        self.assertAlmostEqual(result.aupr, 0.1, delta=0.05)

    def test_random_permutations_average_to_baseline(self):
        rng = np.random.default_rng(10)
        labels = np.zeros(1000, dtype=bool)
        labels[:100] = True
        scores = np.arange(1000.0)
        runs = [roc_pr(RankedPredictions(scores, rng.permutation(labels))) for _ in range(200)]
        self.assertAlmostEqual(np.mean([r.auroc for r in runs]), 0.5, delta=0.05)
        self.assertAlmostEqual(np.mean([r.aupr for r in runs]), 0.1, delta=0.05)

    def test_monotone_transform_invariance(self):
        rng = np.random.default_rng(1)
        scores = rng.uniform(size=50)
        labels = rng.uniform(size=50) < 0.3
        first = roc_pr(RankedPredictions(scores, labels))
        second = roc_pr(RankedPredictions(scores**3 + 2.0, labels))
        self.assertAlmostEqual(first.auroc, second.auroc, places=12)
        self.assertAlmostEqual(first.aupr, second.aupr, places=12)

    def test_reversed_scores_complement_auroc(self):
        rng = np.random.default_rng(2)
        scores = rng.uniform(size=40)
        labels = np.arange(40) % 4 == 0
        forward = roc_pr(RankedPredictions(scores, labels)).auroc
        backward = roc_pr(RankedPredictions(-scores, labels)).auroc
        self.assertAlmostEqual(forward + backward, 1.0, places=12)

    def test_all_ties(self):
        labels = np.array([1, 0, 0, 0, 1, 0, 0, 0, 0, 0])
        result = roc_pr(RankedPredictions(np.full(10, 0.4), labels))
        self.assertAlmostEqual(result.auroc, 0.5)
        self.assertAlmostEqual(result.aupr, 0.2)

    def test_curves(self):
        preds = RankedPredictions(np.array([0.9, 0.7, 0.7, 0.2]), np.array([1, 0, 1, 0]))
        result = roc_pr(preds)
        self.assertEqual(list(result.roc_curve.columns), ["threshold", "fpr", "tpr"])
        self.assertEqual(list(result.pr_curve.columns), ["recall", "precision"])
        table = curve_table(preds)
        # one row per distinct score
        self.assertEqual(len(table), 3)
        self.assertEqual(table["threshold"].tolist(), [0.9, 0.7, 0.2])
        self.assertEqual(table["precision"].iloc[0], 1.0)
        # everything predicted: precision is the positive rate
        self.assertEqual(table["precision"].iloc[-1], 0.5)
        self.assertEqual(table["tpr"].iloc[-1], 1.0)

    def test_needs_both_labels(self):
        self.assertRaises(ParseError, roc_pr, RankedPredictions(np.ones(3), np.zeros(3)))
        self.assertRaises(ParseError, roc_pr, RankedPredictions(np.ones(3), np.ones(3)))
        self.assertRaises(ParseError, curve_table, RankedPredictions(np.ones(3), np.zeros(3)))

    def test_shape_mismatch(self):
        self.assertRaises(DimensionError, RankedPredictions, np.ones(3), np.ones(4))
        self.assertRaises(ValueError, RankedPredictions, np.array([0.1, np.nan]), np.array([0, 1]))


class TestCandidates(unittest.TestCase):
    def test_from_coefficients(self):
        preds = RankedPredictions.from_coefficients([0.9, 0.1, 0.5], [2.0, 0.0, -1.0])
        np.testing.assert_array_equal(preds.labels, [True, False, True])
        self.assertEqual((preds.k, preds.N_star), (2, 3))

    def test_from_edges(self):
        preds = RankedPredictions.from_edges([(1, 0, 0.9), (2, 3, 0.1)], {(1, 0)}, 4)
        self.assertEqual(preds.N_star, 6)
        self.assertEqual(preds.k, 1)
        # pairs in order (0,1) (0,2) (0,3) (1,2) (1,3) (2,3)
        np.testing.assert_array_equal(preds.scores, [0.9, 0, 0, 0, 0, 0.1])
        self.assertTrue(preds.labels[0])

    def test_from_edges_invalid(self):
        self.assertRaises(ParseError, RankedPredictions.from_edges, [(0, 4, 0.5)], set(), 4)
        self.assertRaises(ParseError, RankedPredictions.from_edges, [], {(2, 2)}, 4)


class TestCutoff(unittest.TestCase):
    def test_thresholded(self):
        mean = np.array([1.0, -2.0, 3.0])
        prob = np.array([0.2, 0.6, 0.9])
        np.testing.assert_array_equal(thresholded(mean, prob, 0.6), [0.0, -2.0, 3.0])
        np.testing.assert_array_equal(thresholded(mean, prob, 0.0), mean)
        np.testing.assert_array_equal(thresholded(mean, prob, 1.0), [0.0, 0.0, 0.0])

    def test_strong_signal(self):
        rng = np.random.default_rng(3)
        X = rng.normal(size=(60, 6))
        y = 3.0 * X[:, 0] - 2.0 * X[:, 3] + 0.5 * rng.normal(size=60)
        data = RegressionData.prepare(X, y)
        result = cv_cutoff_1se(data, Grouping.from_labels([0, 0, 0, 1, 1, 1]), Hyperparams(), folds=5, seed=1)
        self.assertEqual(result.folds_used, 5)
        self.assertEqual(len(result.curve()), CUTOFF_GRID.size)
        self.assertIn(result.cutoff, CUTOFF_GRID)
        # the null model is far worse than keeping the two signals
        self.assertGreater(result.mean_error[-1], 5 * result.mean_error.min())
        self.assertLess(result.cutoff, 1.0)

    def test_deterministic_folds(self):
        rng = np.random.default_rng(4)
        data = RegressionData.prepare(rng.normal(size=(30, 4)), rng.normal(size=30))
        grouping = Grouping.identity(4)
        first = cv_cutoff_1se(data, grouping, Hyperparams(), folds=3, seed=5)
        second = cv_cutoff_1se(data, grouping, Hyperparams(), folds=3, seed=5)
        np.testing.assert_array_equal(first.mean_error, second.mean_error)

    def test_constant_response(self):
        data = RegressionData.prepare(np.random.default_rng(5).normal(size=(10, 3)), np.full(10, 2.0))
        with self.assertLogs("dogss", level="WARNING"):
            with self.assertRaises(ParseError):
                cv_cutoff_1se(data, Grouping.identity(3), Hyperparams(), folds=2)

    def test_fold_count(self):
        data = RegressionData.prepare(np.zeros((4, 2)), np.arange(4.0))
        self.assertRaises(ParseError, cv_cutoff_1se, data, Grouping.identity(2), Hyperparams(), folds=1)
        self.assertRaises(ParseError, cv_cutoff_1se, data, Grouping.identity(2), Hyperparams(), folds=5)


class TestAggregate(unittest.TestCase):
    def test_quartiles(self):
        rows = [{"method": "dogss", "replicate": i, "seed": i, "auroc": float(i + 1)} for i in range(5)]
        rows += [{"method": "ssep", "replicate": 0, "seed": 0, "auroc": 0.5}]
        summary = aggregate_replicates(rows)
        self.assertEqual(list(summary.columns), ["method", "metric", "median", "q1", "q3", "n"])
        dogss = summary[summary["method"] == "dogss"].iloc[0]
        self.assertEqual((dogss["median"], dogss["q1"], dogss["q3"], dogss["n"]), (3.0, 2.0, 4.0, 5))
        self.assertEqual(set(summary["metric"]), {"auroc"})

    def test_non_numeric_columns_are_dropped(self):
        rows = [
            {"method": "dogss", "setting": "sigma0=1", "error": 0.2},
            {"method": "dogss", "setting": "sigma0=3", "error": 0.4},
        ]
        summary = aggregate_replicates(rows)
        self.assertEqual(summary["metric"].tolist(), ["error"])
        self.assertAlmostEqual(summary["median"].iloc[0], 0.3)

    def test_empty(self):
        self.assertRaises(ValueError, aggregate_replicates, [])

"""Ranking metrics, the cross-validated probability cutoff and replicate summaries."""
import logging
import math
from dataclasses import dataclass
from typing import Iterable, NamedTuple, Sequence

import numpy as np
import pandas as pd
from sklearn import metrics as skm
from sklearn.model_selection import KFold

from dogss import ep
from dogss.model import DimensionError, Grouping, Hyperparams, ParseError, RegressionData

log = logging.getLogger("dogss")

CUTOFF_GRID = np.linspace(0.0, 1.0, 101)


@dataclass(frozen=True, eq=False)
class RankedPredictions:
    """Scores of N* candidates (features or node pairs) and their gold-standard labels."""

    scores: np.ndarray
    labels: np.ndarray

    def __post_init__(self):
        scores = np.asarray(self.scores, dtype=float)
        labels = np.asarray(self.labels).astype(bool)
        if scores.shape != labels.shape or scores.ndim != 1:
            raise DimensionError("{0} scores for {1} labels".format(scores.shape, labels.shape))
        if not np.all(np.isfinite(scores)):
            raise ValueError("scores must be finite")
        object.__setattr__(self, "scores", scores)
        object.__setattr__(self, "labels", labels)

    @property
    def k(self):
        return int(np.sum(self.labels))

    @property
    def N_star(self):
        return int(self.labels.size)

    @classmethod
    def from_coefficients(cls, scores, beta_true):
        return cls(scores, np.asarray(beta_true, dtype=float) != 0)

    @classmethod
    def from_edges(cls, ranking, gold_edges, P):
        """All (P^2 - P) / 2 node pairs in canonical order; pairs missing from `ranking` score 0."""
        scored = {}
        for a, b, score in ranking:
            scored[_canonical(a, b)] = float(score)
        gold = {_canonical(a, b) for a, b in gold_edges}
        pairs = [(a, b) for a in range(P) for b in range(a + 1, P)]
        unknown = (set(scored) | gold) - set(pairs)
        if unknown:
            raise ParseError("edges {0} reference nodes outside 0..{1}".format(sorted(unknown)[:5], P - 1))
        scores = np.array([scored.get(pair, 0.0) for pair in pairs])
        labels = np.array([pair in gold for pair in pairs])
        return cls(scores, labels)


def _canonical(a, b):
    a, b = int(a), int(b)
    if a == b:
        raise ParseError("self-loop ({0}, {0}) is not an edge".format(a))
    return (a, b) if a < b else (b, a)


class RocPr(NamedTuple):
    roc_curve: pd.DataFrame
    pr_curve: pd.DataFrame
    auroc: float
    aupr: float


def _check_labels(preds: RankedPredictions):
    if preds.k < 1 or preds.N_star <= preds.k:
        raise ParseError(
            "ROC/PR needs at least one positive and one negative label, got {0} of {1}".format(preds.k, preds.N_star)
        )


def roc_pr(preds: RankedPredictions) -> RocPr:
    """ROC and PR curves with one step per distinct score, AUROC (trapezoidal) and AUPR (step-wise)."""
    _check_labels(preds)
    fpr, tpr, thresholds = skm.roc_curve(preds.labels, preds.scores, drop_intermediate=False)
    precision, recall, _ = skm.precision_recall_curve(preds.labels, preds.scores)
    if np.unique(preds.scores).size == 1:
        log.debug("all %d scores are equal, curves collapse to a single step", preds.N_star)
    roc = pd.DataFrame({"threshold": thresholds, "fpr": fpr, "tpr": tpr})
    pr = pd.DataFrame({"recall": recall, "precision": precision})
    auroc = float(skm.auc(fpr, tpr))
    aupr = float(skm.average_precision_score(preds.labels, preds.scores))
    return RocPr(roc_curve=roc, pr_curve=pr, auroc=auroc, aupr=aupr)


def curve_table(preds: RankedPredictions) -> pd.DataFrame:
    """(threshold, fpr, tpr, precision) at every distinct score, highest threshold first."""
    _check_labels(preds)
    fpr, tpr, thresholds = skm.roc_curve(preds.labels, preds.scores, drop_intermediate=False)
    # first row is the empty prediction set added by roc_curve
    fpr, tpr, thresholds = fpr[1:], tpr[1:], thresholds[1:]
    tp = tpr * preds.k
    fp = fpr * (preds.N_star - preds.k)
    return pd.DataFrame({"threshold": thresholds, "fpr": fpr, "tpr": tpr, "precision": tp / (tp + fp)})


@dataclass(frozen=True, eq=False)
class CVResult:
    cutoff: float
    grid: np.ndarray
    mean_error: np.ndarray
    standard_error: np.ndarray
    folds_used: int

    def curve(self) -> pd.DataFrame:
        return pd.DataFrame({"cutoff": self.grid, "mean_error": self.mean_error, "standard_error": self.standard_error})

    def to_dict(self):
        return {
            "cutoff": self.cutoff,
            "folds_used": self.folds_used,
            "grid": self.grid,
            "mean_error": self.mean_error,
            "standard_error": self.standard_error,
        }


def thresholded(mean, prob, cutoff):
    """Posterior means of the features with probability >= cutoff; cutoff 1 is the null model."""
    if cutoff >= 1.0:
        return np.zeros_like(mean)
    return np.where(prob >= cutoff, mean, 0.0)


def cv_cutoff_1se(data: RegressionData, grouping: Grouping, hyper: Hyperparams, folds=10, seed=0, grid=None):
    """Largest probability cutoff whose cross-validated error is within one standard error of the minimum.

    The error of a fold is the held-out relative residual sum of squares, computed on the test response
    centered with the training mean.
    """
    grid = CUTOFF_GRID if grid is None else np.asarray(grid, dtype=float)
    if not 2 <= folds <= data.n_samples:
        raise ParseError("folds must lie in 2..{0}, got {1}".format(data.n_samples, folds))

    errors = []
    splitter = KFold(n_splits=folds, shuffle=True, random_state=seed)
    for index, (train, test) in enumerate(splitter.split(data.X)):
        part = RegressionData.prepare(data.X[train], data.y[train])
        X_test = part.transform(data.X[test])
        y_test = data.y[test] - part.y_offset
        denominator = float(y_test @ y_test)
        if denominator == 0:
            log.warning("fold %d has a constant test response, skipping it", index)
            continue
        result = ep.fit(part, grouping, hyper)
        fold_errors = []
        for cutoff in grid:
            residual = y_test - X_test @ thresholded(result.mean, result.feature_prob, cutoff)
            fold_errors.append(float(residual @ residual) / denominator)
        errors.append(fold_errors)
        log.debug("fold %d: %d sweeps, converged=%s", index, result.iterations, result.converged)

    if not errors:
        raise ParseError("no fold has a non-constant test response")
    errors = np.array(errors)
    mean_error = errors.mean(axis=0)
    if len(errors) > 1:
        standard_error = errors.std(axis=0, ddof=1) / math.sqrt(len(errors))
    else:
        standard_error = np.zeros(grid.size)
    best = int(np.argmin(mean_error))
    within = np.flatnonzero(mean_error <= mean_error[best] + standard_error[best])
    cutoff = float(grid[within.max()])
    log.debug("cutoff %.2f (minimum %.4g at %.2f)", cutoff, mean_error[best], grid[best])
    return CVResult(
        cutoff=cutoff, grid=grid, mean_error=mean_error, standard_error=standard_error, folds_used=len(errors)
    )


def aggregate_replicates(results: Iterable[dict], by: Sequence[str] = ("method",), exclude=("replicate", "seed")):
    """Median and quartiles of every numeric metric, one row per (by..., metric)."""
    frame = pd.DataFrame(list(results))
    if frame.empty:
        raise ValueError("need at least one replicate")
    by = [column for column in by if column in frame.columns]
    value_columns = [
        column
        for column in frame.columns
        if column not in by and column not in exclude and pd.api.types.is_numeric_dtype(frame[column])
    ]
    long = frame.melt(id_vars=by, value_vars=value_columns, var_name="metric", value_name="value")
    long["value"] = long["value"].astype(float)
    grouped = long.groupby(by + ["metric"], sort=True)["value"]
    summary = pd.DataFrame(
        {
            "median": grouped.median(),
            "q1": grouped.quantile(0.25),
            "q3": grouped.quantile(0.75),
            "n": grouped.count(),
        }
    )
    return summary.reset_index()

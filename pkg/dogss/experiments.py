"""Named signal-recovery sweeps: replicate instances, fit dogss and ssep, score them."""
import logging
from typing import Dict, List, NamedTuple, Optional

import monotonic
import numpy as np

from dogss import ep
from dogss.metrics import RankedPredictions, aggregate_replicates, roc_pr
from dogss.model import Grouping, Hyperparams, ParseError, RegressionData
from dogss.simulate import CORRELATIONS, ScenarioSpec, gen_instance, signal_prediction_error
from dogss.utils import derive_seed

log = logging.getLogger("dogss")

DOGSS = "dogss"
SSEP = "ssep"
METHODS = (DOGSS, SSEP)


class Setting(NamedTuple):
    """One point of a sweep: scenario and hyperparameter overrides."""

    label: str
    scenario: Dict
    hyper: Dict


# true noise varies, the method keeps sigma0 = 1
NOISE = tuple(Setting("sigma0={0:g}".format(s), {"sigma0": s}, {"sigma0": 1.0}) for s in (0.0, 0.1, 1.0, 3.0, 5.0))
SLAB = tuple(Setting("sigma_slab={0:g}".format(s), {}, {"sigma_slab": s}) for s in (0.1, 1.0, 2.0, 5.0, 10.0, 100.0))
CORRELATION = tuple(Setting(c, {"corr": c}, {}) for c in CORRELATIONS)
BASELINE = (Setting("baseline", {}, {}),)

SWEEPS = {"noise": NOISE, "slab": SLAB, "correlation": CORRELATION, "baseline": BASELINE}


def score_fit(result, instance, data: RegressionData):
    """AUROC, AUPR and held-out prediction error of one fit against the instance's true coefficients."""
    preds = RankedPredictions.from_coefficients(result.feature_prob, instance.beta)
    if preds.k >= 1 and preds.N_star > preds.k:
        curves = roc_pr(preds)
        auroc, aupr = curves.auroc, curves.aupr
    else:
        auroc = aupr = float("nan")
    coef, intercept = data.original_coefficients(result.mean)
    error = signal_prediction_error(coef, instance.X_test, instance.y_test, intercept=intercept)
    return {"auroc": auroc, "aupr": aupr, "error": error}


def run_replicate(spec: ScenarioSpec, hyper: Hyperparams, methods=METHODS, timing=False):
    instance = gen_instance(spec)
    data = RegressionData.prepare(instance.X, instance.y)
    rows = []
    for method in methods:
        grouping = instance.grouping if method == DOGSS else Grouping.identity(spec.N)
        start = monotonic.monotonic()
        result = ep.fit(data, grouping, hyper)
        elapsed = monotonic.monotonic() - start
        row = {"method": method, "seed": spec.seed, "iterations": result.iterations, "converged": result.converged}
        row.update(score_fit(result, instance, data))
        if timing:
            row["seconds"] = elapsed
        rows.append(row)
    return rows


def run_signal_experiment(
    sweep="baseline",
    preset="small",
    replicates=10,
    seed=0,
    hyper: Optional[Hyperparams] = None,
    methods=METHODS,
    timing=False,
) -> List[dict]:
    """Per-replicate metrics for every setting of a named sweep; replicate i uses seed + i."""
    try:
        settings = SWEEPS[sweep]
    except KeyError:
        raise ParseError("unknown sweep {0!r}, expected one of {1}".format(sweep, ", ".join(sorted(SWEEPS))))
    unknown = set(methods) - set(METHODS)
    if unknown:
        raise ParseError("unknown methods {0}".format(", ".join(sorted(unknown))))
    hyper = hyper or Hyperparams()

    results = []
    for setting in settings:
        setting_hyper = hyper.replace(**setting.hyper)
        for replicate in range(replicates):
            spec = ScenarioSpec.preset(preset, seed=derive_seed(seed, replicate), **setting.scenario)
            for row in run_replicate(spec, setting_hyper, methods, timing):
                row.update({"setting": setting.label, "replicate": replicate})
                results.append(row)
        log.debug("sweep %s: setting %s done", sweep, setting.label)
    return results


def summarize(results):
    """Median and quartiles per setting, method and metric."""
    return aggregate_replicates(results, by=("setting", "method"))


def medians(results, metric, method=DOGSS):
    """Median of one metric per setting, in sweep order."""
    order = []
    values = {}
    for row in results:
        if row["method"] != method:
            continue
        if row["setting"] not in values:
            order.append(row["setting"])
            values[row["setting"]] = []
        values[row["setting"]].append(row[metric])
    return [(setting, float(np.nanmedian(values[setting]))) for setting in order]

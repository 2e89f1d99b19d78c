"""Batch command line front end.

Exit codes: 0 on success (including fits that did not converge), 2 for unreadable input or invalid
parameters, 3 for dimension mismatches.
"""
import argparse
import logging
import os
import sys

import numpy as np
import pandas as pd

from dogss import ep, io, metrics, network, oracle, simulate
from dogss.experiments import SWEEPS, run_signal_experiment, summarize
from dogss.model import DimensionError, DogssError, Grouping, Hyperparams, ParseError, RegressionData
from dogss.version import VERSION

log = logging.getLogger("dogss")

# arguments that only decide where or how verbosely a run happens
NOT_REPLAYED = ("out", "debug", "func")


def add_hyper_arguments(parser, network_defaults=False):
    defaults = Hyperparams.network() if network_defaults else Hyperparams()
    parser.add_argument("--sigma0", type=float, default=defaults.sigma0, help="noise standard deviation")
    parser.add_argument("--sigma-slab", type=float, default=defaults.sigma_slab, help="slab standard deviation")
    parser.add_argument("--p0", type=float, default=defaults.p0, help="prior feature inclusion probability")
    parser.add_argument("--pi0", type=float, default=defaults.pi0, help="prior group inclusion probability")
    parser.add_argument("--alpha0", type=float, default=defaults.alpha0, help="initial damping factor")
    parser.add_argument("--alpha-decay", type=float, default=defaults.alpha_decay, help="damping decay per sweep")
    parser.add_argument("--tol", type=float, default=defaults.tol, help="convergence tolerance")
    parser.add_argument("--max-iter", type=int, default=defaults.max_iter, help="maximum number of sweeps")


def hyperparams(options):
    try:
        return Hyperparams(
            sigma0=options.sigma0,
            sigma_slab=options.sigma_slab,
            p0=options.p0,
            pi0=options.pi0,
            alpha0=options.alpha0,
            alpha_decay=options.alpha_decay,
            tol=options.tol,
            max_iter=options.max_iter,
        )
    except ValueError as e:
        raise ParseError(str(e))


def run_config(options):
    return {k: v for k, v in sorted(vars(options).items()) if k not in NOT_REPLAYED}


def output_dir(options):
    os.makedirs(options.out, exist_ok=True)
    return lambda name: os.path.join(options.out, name)


def load_regression(options):
    X, y, names = io.read_regression(options.data, response=options.response)
    if options.ungrouped:
        grouping = Grouping.identity(len(names))
    elif options.grouping:
        grouping = io.read_grouping(options.grouping, names)
    else:
        raise ParseError("a grouping file is required unless --ungrouped is given")
    return RegressionData.prepare(X, y, feature_names=names, response_name=options.response), grouping


def add_regression_arguments(parser):
    parser.add_argument("--data", required=True, help="CSV with one column per feature plus the response")
    parser.add_argument("--grouping", help="CSV with columns feature, group")
    parser.add_argument("--ungrouped", action="store_true", help="put every feature in its own group")
    parser.add_argument("--response", default="y", help="name of the response column")


def cmd_fit(options):
    data, grouping = load_regression(options)
    result = ep.fit(data, grouping, hyperparams(options))
    path = output_dir(options)
    coef, intercept = data.original_coefficients(result.mean)
    payload = io.manifest("fit", run_config(options), [options.data, options.grouping])
    payload["result"] = result.to_dict()
    payload["result"].update(
        {
            "feature_names": list(data.feature_names),
            "group_labels": list(grouping.labels),
            "coefficients": coef,
            "intercept": intercept,
        }
    )
    io.write_json(path("fit.json"), payload)
    pd.DataFrame(
        {
            "feature": list(data.feature_names),
            "group": [grouping.labels[g] for g in grouping.assignments],
            "mean": result.mean,
            "probability": result.feature_prob,
        }
    ).to_csv(path("coefficients.csv"), index=False)
    if not result.converged:
        log.warning("fit did not converge, see fit.json")
    return 0


def cmd_simulate_signal(options):
    overrides = {
        name: getattr(options, name)
        for name in ("M", "N", "G", "k", "sigma0")
        if getattr(options, name) is not None
    }
    try:
        spec = simulate.ScenarioSpec.preset(
            options.preset, corr=options.corr, seed=options.seed, n_test=options.n_test, **overrides
        )
    except ValueError as e:
        raise ParseError(str(e))
    instance = simulate.gen_instance(spec)
    path = output_dir(options)
    names = ["x{0}".format(n + 1) for n in range(spec.N)]
    io.write_regression(path("train.csv"), instance.X, instance.y, names)
    io.write_regression(path("test.csv"), instance.X_test, instance.y_test, names)
    io.write_grouping(path("grouping.csv"), names, instance.grouping)
    payload = io.manifest("simulate-signal", run_config(options))
    payload.update({"scenario": spec.to_dict(), "beta": instance.beta, "support": list(instance.support)})
    io.write_json(path("manifest.json"), payload)
    return 0


def cmd_simulate_network(options):
    P, G, H, q = network.PRESETS[options.preset]
    P = options.P or P
    G = options.G or G
    H = options.H or H
    q = q if options.q is None else options.q
    rng = np.random.default_rng(options.seed)
    try:
        graph = network.gen_scale_free_graph(P, G, H, q, rng)
    except ValueError as e:
        raise ParseError(str(e))
    sample = network.graph_to_gaussian(graph, options.M, rng, n_test=options.n_test)
    path = output_dir(options)
    names = ["n{0}".format(p) for p in range(P)]
    io.write_edges(path("edges.csv"), graph.edges)
    hubs = set(graph.hubs)
    pd.DataFrame(
        {"node": range(P), "group": list(graph.node_groups), "hub": [int(p in hubs) for p in range(P)]}
    ).to_csv(path("nodes.csv"), index=False)
    io.write_matrix(path("train.csv"), sample.X_train, names)
    io.write_matrix(path("test.csv"), sample.X_test, names)
    payload = io.manifest("simulate-network", run_config(options))
    payload.update({"P": P, "G": G, "H": H, "q": q, "hubs": list(graph.hubs), "n_edges": len(graph.edges)})
    io.write_json(path("manifest.json"), payload)
    return 0


def read_nodes(path, P):
    frame = io.read_table(path)
    for column in ("node", "group", "hub"):
        if column not in frame.columns:
            raise ParseError("{0} has no {1!r} column".format(path, column))
    if len(frame) != P:
        raise DimensionError("{0} describes {1} nodes, the data has {2}".format(path, len(frame), P))
    frame = frame.sort_values("node")
    hubs = frame.loc[frame["hub"].astype(int) == 1, "node"].astype(int).tolist()
    return hubs, frame["group"].astype(int).tolist()


def cmd_reconstruct(options):
    X, names = io.read_matrix(options.data)
    hubs = node_groups = None
    if options.nodes:
        hubs, node_groups = read_nodes(options.nodes, X.shape[1])
    ranking = network.neighborhood_selection(
        X,
        hubs=hubs,
        node_groups=node_groups,
        feature_mode=network.HUBS_ONLY if options.features == "hubs" else network.ALL_NODES,
        grouping_mode=options.grouping,
        hyper=hyperparams(options),
        symmetrize=options.symmetrize,
        non_hub_policy=options.non_hub_policy,
        seed=options.seed,
        jobs=options.jobs,
    )
    path = output_dir(options)
    ranking.to_frame().to_csv(path("ranking.csv"), index=False)
    io.write_matrix(path("coefficients.csv"), ranking.coefficients, names)
    payload = io.manifest("reconstruct", run_config(options), [options.data, options.nodes])
    payload["failures"] = [{"node": node, "error": message} for node, message in ranking.failures]
    io.write_json(path("manifest.json"), payload)
    return 0


def cmd_eval(options):
    path = output_dir(options)
    report = {}
    if options.ranking:
        if not options.gold:
            raise ParseError("--ranking needs --gold")
        scored = io.read_ranking(options.ranking)
        gold = io.read_edges(options.gold)
        X_test = None
        if options.test:
            X_test, _ = io.read_matrix(options.test)
            P = X_test.shape[1]
        else:
            P = 1 + max(max(a, b) for a, b in list(gold) + [(a, b) for a, b, _ in scored])
        preds = metrics.RankedPredictions.from_edges(scored, gold, P)
        if X_test is not None and options.coefficients:
            B, _ = io.read_matrix(options.coefficients)
            report["error"] = network.network_prediction_error(B, X_test)
        inputs = [options.ranking, options.gold, options.test, options.coefficients]
    elif options.fit:
        if not options.truth:
            raise ParseError("--fit needs --truth")
        fitted = io.read_json(options.fit).get("result", {})
        beta = io.read_json(options.truth).get("beta")
        if beta is None or "feature_prob" not in fitted:
            raise ParseError("{0} or {1} lacks the expected fields".format(options.fit, options.truth))
        preds = metrics.RankedPredictions.from_coefficients(fitted["feature_prob"], beta)
        if options.test:
            X_test, y_test, _ = io.read_regression(options.test, response=options.response)
            report["error"] = simulate.signal_prediction_error(
                fitted["coefficients"], X_test, y_test, intercept=fitted["intercept"]
            )
        inputs = [options.fit, options.truth, options.test]
    else:
        raise ParseError("eval needs either --ranking and --gold or --fit and --truth")

    curves = metrics.roc_pr(preds)
    report.update({"auroc": curves.auroc, "aupr": curves.aupr, "k": preds.k, "N_star": preds.N_star})
    payload = io.manifest("eval", run_config(options), inputs)
    payload["metrics"] = report
    io.write_json(path("metrics.json"), payload)
    metrics.curve_table(preds).to_csv(path("curve.csv"), index=False)
    return 0


def cmd_oracle_compare(options):
    data, grouping = load_regression(options)
    hyper = hyperparams(options)
    exact = oracle.enumerate_posterior(data, grouping, hyper)
    result = ep.fit(data, grouping, hyper)
    path = output_dir(options)
    payload = io.manifest("oracle-compare", run_config(options), [options.data, options.grouping])
    payload["report"] = oracle.compare(result, exact)
    payload["report"]["converged"] = result.converged
    io.write_json(path("report.json"), payload)
    return 0


def cmd_cutoff(options):
    data, grouping = load_regression(options)
    cv = metrics.cv_cutoff_1se(data, grouping, hyperparams(options), folds=options.folds, seed=options.seed)
    path = output_dir(options)
    payload = io.manifest("cutoff", run_config(options), [options.data, options.grouping])
    payload.update({"cutoff": cv.cutoff, "folds_used": cv.folds_used})
    io.write_json(path("cutoff.json"), payload)
    cv.curve().to_csv(path("cv_curve.csv"), index=False)
    return 0


def cmd_experiment(options):
    results = run_signal_experiment(
        sweep=options.sweep,
        preset=options.preset,
        replicates=options.replicates,
        seed=options.seed,
        hyper=hyperparams(options),
        timing=options.timing,
    )
    path = output_dir(options)
    pd.DataFrame(results).to_csv(path("results.csv"), index=False)
    summarize(results).to_csv(path("summary.csv"), index=False)
    io.write_json(path("manifest.json"), io.manifest("experiment", run_config(options)))
    return 0


def build_parser():
    parser = argparse.ArgumentParser(prog="dogss", description="sparse-group spike-and-slab feature selection")
    parser.add_argument("--version", action="version", version="%(prog)s " + VERSION)
    parser.add_argument("--debug", action="store_true", help="log every sweep")
    commands = parser.add_subparsers(dest="command", required=True)

    fit = commands.add_parser("fit", help="fit one regression problem")
    add_regression_arguments(fit)
    add_hyper_arguments(fit)
    fit.add_argument("--out", default=".", help="output directory")
    fit.set_defaults(func=cmd_fit)

    signal = commands.add_parser("simulate-signal", help="generate a signal-recovery instance")
    signal.add_argument("--preset", choices=sorted(simulate.PRESETS), default="small")
    for name in ("M", "N", "G", "k"):
        signal.add_argument("--" + name, type=int, help="override the preset's " + name)
    signal.add_argument("--sigma0", type=float, help="true noise standard deviation")
    signal.add_argument("--corr", choices=simulate.CORRELATIONS, default=simulate.INDEPENDENT)
    signal.add_argument("--n-test", type=int, default=simulate.TEST_ROWS, help="test set size")
    signal.add_argument("--seed", type=int, default=0)
    signal.add_argument("--out", default=".", help="output directory")
    signal.set_defaults(func=cmd_simulate_signal)

    net = commands.add_parser("simulate-network", help="generate a network and Gaussian samples from it")
    net.add_argument("--preset", choices=sorted(network.PRESETS), default="small")
    for name in ("P", "G", "H"):
        net.add_argument("--" + name, type=int, help="override the preset's " + name)
    net.add_argument("--q", type=float, help="probability of a random edge to any hub")
    net.add_argument("--M", type=int, default=100, help="training samples")
    net.add_argument("--n-test", type=int, help="test samples (default: M)")
    net.add_argument("--seed", type=int, default=0)
    net.add_argument("--out", default=".", help="output directory")
    net.set_defaults(func=cmd_simulate_network)

    rec = commands.add_parser("reconstruct", help="rank network edges by neighborhood selection")
    rec.add_argument("--data", required=True, help="numeric CSV, one column per node")
    rec.add_argument("--nodes", help="CSV with columns node, group, hub")
    rec.add_argument("--features", choices=("hubs", "all"), default="hubs")
    rec.add_argument("--grouping", choices=network.GROUPING_MODES, default=network.ORIGINAL)
    rec.add_argument("--symmetrize", choices=network.SYMMETRIZE, default="max")
    rec.add_argument("--non-hub-policy", choices=network.NON_HUB_POLICIES, default=network.PER_GROUP)
    rec.add_argument("--seed", type=int, default=0)
    rec.add_argument("--jobs", type=int, default=1, help="concurrent node regressions")
    add_hyper_arguments(rec, network_defaults=True)
    rec.add_argument("--out", default=".", help="output directory")
    rec.set_defaults(func=cmd_reconstruct)

    ev = commands.add_parser("eval", help="score a ranking or a fit against the truth")
    ev.add_argument("--ranking", help="ranking.csv from reconstruct")
    ev.add_argument("--gold", help="edge list CSV of the true network")
    ev.add_argument("--coefficients", help="coefficient matrix CSV from reconstruct")
    ev.add_argument("--fit", help="fit.json from fit")
    ev.add_argument("--truth", help="manifest.json from simulate-signal")
    ev.add_argument("--test", help="held-out data for the prediction error")
    ev.add_argument("--response", default="y", help="response column of --test for fits")
    ev.add_argument("--out", default=".", help="output directory")
    ev.set_defaults(func=cmd_eval)

    orc = commands.add_parser("oracle-compare", help="compare the fit with exact enumeration")
    add_regression_arguments(orc)
    add_hyper_arguments(orc)
    orc.add_argument("--out", default=".", help="output directory")
    orc.set_defaults(func=cmd_oracle_compare)

    cut = commands.add_parser("cutoff", help="choose a probability cutoff by cross validation")
    add_regression_arguments(cut)
    add_hyper_arguments(cut)
    cut.add_argument("--folds", type=int, default=10)
    cut.add_argument("--seed", type=int, default=0)
    cut.add_argument("--out", default=".", help="output directory")
    cut.set_defaults(func=cmd_cutoff)

    exp = commands.add_parser("experiment", help="run a named simulation sweep")
    exp.add_argument("--sweep", choices=sorted(SWEEPS), default="baseline")
    exp.add_argument("--preset", choices=sorted(simulate.PRESETS), default="small")
    exp.add_argument("--replicates", type=int, default=10)
    exp.add_argument("--seed", type=int, default=0)
    exp.add_argument("--timing", action="store_true", help="record run times (not replayable)")
    add_hyper_arguments(exp)
    exp.add_argument("--out", default=".", help="output directory")
    exp.set_defaults(func=cmd_experiment)
    return parser


def main(argv=None):
    options = build_parser().parse_args(argv)

    if options.debug:
        ch = logging.StreamHandler()
        ch.setLevel(logging.DEBUG)
        log.addHandler(ch)
        log.setLevel(logging.DEBUG)

    try:
        return options.func(options)
    except DogssError as e:
        log.error("%s failed: %s", options.command, e.message)
        print(str(e), file=sys.stderr)
        return e.status
    except ValueError as e:
        # invalid parameter combinations that reach the library
        log.error("%s failed: %s", options.command, e)
        print("[dogss] {0} (2)".format(e), file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())

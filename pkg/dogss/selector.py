import logging
import numbers

import numpy as np

from dogss import ep, metrics, network, oracle
from dogss.model import Grouping, Hyperparams, RegressionData
from dogss.utils import require

NUMBER_TYPES = (numbers.Number,)


class Selector(object):
    """Create a new feature selector with fixed hyperparameters."""

    log = logging.getLogger("dogss")

    def __init__(
        self,
        sigma0=1.0,
        sigma_slab=2.0,
        p0=0.5,
        pi0=0.5,
        alpha0=0.9,
        alpha_decay=0.01,
        tol=None,
        max_iter=None,
        v_replace=100.0,
        center=True,
        standardize=False,
        method=ep.AUTO,
        debug=False,
        jobs=1,
    ):
        require("sigma0", sigma0, NUMBER_TYPES)
        require("sigma_slab", sigma_slab, NUMBER_TYPES)
        require("max_iter", max_iter, (numbers.Integral, type(None)))
        require("jobs", jobs, numbers.Integral)

        # tol and max_iter left unset fall back to the single-fit or the network defaults
        self.overrides = {k: v for k, v in (("tol", tol), ("max_iter", max_iter)) if v is not None}

        self.hyper = Hyperparams(
            sigma0=sigma0,
            sigma_slab=sigma_slab,
            p0=p0,
            pi0=pi0,
            alpha0=alpha0,
            alpha_decay=alpha_decay,
            v_replace=v_replace,
            **self.overrides
        )
        self.center = center
        self.standardize = standardize
        self.method = method
        self.debug = debug
        self.jobs = jobs

        if debug:
            # debug level messages are only shown when debug mode is on, otherwise WARNING
            logging.basicConfig()
            self.log.setLevel(logging.DEBUG)
        else:
            self.log.setLevel(logging.WARNING)

    def prepare(self, X, y, feature_names=None):
        return RegressionData.prepare(
            X, y, center=self.center, standardize=self.standardize, feature_names=feature_names
        )

    def _grouping(self, groups, n_features):
        if isinstance(groups, Grouping):
            return groups
        require("groups", groups, (list, tuple, np.ndarray))
        if len(groups) != n_features:
            raise ValueError("{0} group labels for {1} features".format(len(groups), n_features))
        return Grouping.from_labels(list(groups))

    def fit(self, X, y, groups):
        """Posterior inclusion probabilities and means under the grouped spike-and-slab prior."""
        data = self.prepare(X, y)
        grouping = self._grouping(groups, data.n_features)
        result = ep.fit(data, grouping, self.hyper, method=self.method)
        self.log.debug("fit %d features in %d groups: %d sweeps", data.n_features, grouping.n_groups, result.iterations)
        return result

    def fit_ungrouped(self, X, y):
        return ep.fit_ungrouped(self.prepare(X, y), self.hyper, method=self.method)

    def enumerate_posterior(self, X, y, groups):
        """Exact posterior by enumeration; at most oracle.MAX_FEATURES features."""
        data = self.prepare(X, y)
        return oracle.enumerate_posterior(data, self._grouping(groups, data.n_features), self.hyper)

    def cv_cutoff(self, X, y, groups, folds=10, seed=0):
        data = self.prepare(X, y)
        return metrics.cv_cutoff_1se(data, self._grouping(groups, data.n_features), self.hyper, folds=folds, seed=seed)

    def reconstruct(
        self,
        X,
        hubs=None,
        node_groups=None,
        feature_mode=network.HUBS_ONLY,
        grouping_mode=network.ORIGINAL,
        symmetrize="max",
        non_hub_policy=network.PER_GROUP,
        seed=0,
    ):
        """Rank the undirected edges of a Gaussian graphical model by neighborhood selection.

        The per-node fits use the relaxed network tolerance and sweep limit unless the selector was built with
        explicit ones.
        """
        settings = {k: v for k, v in self.hyper.to_dict().items() if k not in ("tol", "max_iter")}
        settings.update(self.overrides)
        hyper = Hyperparams.network(**settings)
        return network.neighborhood_selection(
            X,
            hubs=hubs,
            node_groups=node_groups,
            feature_mode=feature_mode,
            grouping_mode=grouping_mode,
            hyper=hyper,
            symmetrize=symmetrize,
            non_hub_policy=non_hub_policy,
            seed=seed,
            jobs=self.jobs,
        )

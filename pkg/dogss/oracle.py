"""Exact posterior of the sparse-group spike-and-slab model by enumerating active sets.

beta is integrated out analytically: given the active set S, y ~ N(0, sigma0^2 I + sigma_slab^2 X_S X_S').
The group indicators are summed out per group, so the enumeration runs over the 2^N feature subsets.
"""
import itertools
import logging
import math
from dataclasses import dataclass
from typing import List, Tuple

import numpy as np
from scipy import linalg, special

from dogss.model import DimensionError, DogssError, FitResult, Grouping, Hyperparams, RegressionData

log = logging.getLogger("dogss")

MAX_FEATURES = 20


class EnumerationLimitError(DogssError):
    def __init__(self, n_features):
        super().__init__(
            2, "exact enumeration supports at most {0} features, got {1}".format(MAX_FEATURES, n_features)
        )


@dataclass(frozen=True)
class ModelConfig:
    gamma: Tuple[int, ...]
    z: Tuple[int, ...]

    def is_consistent(self, grouping: Grouping):
        return all(self.gamma[g] == 1 for n, g in enumerate(grouping.assignments) if self.z[n] == 1)


@dataclass(frozen=True, eq=False)
class OracleResult:
    feature_prob: np.ndarray
    group_prob: np.ndarray
    mean: np.ndarray
    log_evidence: float


class _Evidence(object):
    """Log marginal likelihood and conditional posterior mean for active sets of one data set."""

    def __init__(self, data: RegressionData, hyper: Hyperparams):
        self.s0sq = hyper.sigma0**2
        self.ssq = hyper.sigma_slab**2
        self.M = data.n_samples
        self.XtX = data.X.T @ data.X
        self.Xty = data.X.T @ data.y
        self.yty = float(data.y @ data.y)
        self.base = -0.5 * (self.M * math.log(2 * math.pi * self.s0sq) + self.yty / self.s0sq)

    def __call__(self, active):
        """(log N(y | 0, sigma0^2 I + sigma_slab^2 X_S X_S'), E[beta_S | y, S])."""
        k = len(active)
        if k == 0:
            return self.base, np.zeros(0)
        idx = np.asarray(active)
        # A = I / sigma_slab^2 + X_S'X_S / sigma0^2 (k x k), via the determinant lemma and push-through identity
        A = np.eye(k) / self.ssq + self.XtX[np.ix_(idx, idx)] / self.s0sq
        b = self.Xty[idx] / self.s0sq
        factor = linalg.cho_factor(A, lower=True, check_finite=False)
        mean = linalg.cho_solve(factor, b, check_finite=False)
        logdet_A = 2.0 * np.sum(np.log(np.diag(factor[0])))
        loglik = self.base - 0.5 * (k * math.log(self.ssq) + logdet_A) + 0.5 * float(b @ mean)
        return loglik, mean


def _group_log_priors(grouping: Grouping, hyper: Hyperparams):
    p0 = hyper.feature_prior(grouping.n_features)
    pi0 = hyper.group_prior(grouping.n_groups)
    log_p = np.log(p0)
    log_q = np.log1p(-p0)
    # P(S_g = {} ) = (1 - pi) + pi * prod(1 - p); with Gamma_g = 1 in that case weighted by pi * prod(1 - p)
    empty = np.zeros(grouping.n_groups)
    gamma_on_when_empty = np.zeros(grouping.n_groups)
    for g in range(grouping.n_groups):
        members = grouping.members(g)
        all_off = float(np.sum(log_q[members]))
        empty[g] = np.logaddexp(math.log1p(-pi0[g]), math.log(pi0[g]) + all_off)
        gamma_on_when_empty[g] = math.exp(math.log(pi0[g]) + all_off - empty[g])
    return log_p, log_q, np.log(pi0), empty, gamma_on_when_empty


def enumerate_posterior(data: RegressionData, grouping: Grouping, hyper: Hyperparams) -> OracleResult:
    N = data.n_features
    if N > MAX_FEATURES:
        raise EnumerationLimitError(N)
    if grouping.n_features != N:
        raise DimensionError("grouping covers {0} features, data has {1}".format(grouping.n_features, N))

    evidence = _Evidence(data, hyper)
    log_p, log_q, log_pi, log_empty, gamma_on_when_empty = _group_log_priors(grouping, hyper)
    G = grouping.n_groups
    assignments = grouping.assignments

    n_sets = 1 << N
    log_weights = np.empty(n_sets)
    means = np.zeros((n_sets, N))
    z = np.zeros((n_sets, N), dtype=bool)
    group_on = np.zeros((n_sets, G))

    for s, bits in enumerate(itertools.product((0, 1), repeat=N)):
        mask = np.array(bits, dtype=bool)
        active = np.flatnonzero(mask)
        occupied = np.zeros(G, dtype=bool)
        occupied[assignments[active]] = True
        # groups with an active feature must be on: pi * prod p (active) * prod (1 - p) (inactive)
        log_prior = float(np.sum(log_pi[occupied]))
        log_prior += float(np.sum(np.where(mask, log_p, log_q)[occupied[assignments]]))
        log_prior += float(np.sum(log_empty[~occupied]))

        loglik, beta_s = evidence(active)
        log_weights[s] = log_prior + loglik
        means[s, active] = beta_s
        z[s] = mask
        group_on[s] = np.where(occupied, 1.0, gamma_on_when_empty)

    log_evidence = float(special.logsumexp(log_weights))
    weights = np.exp(log_weights - log_evidence)
    total = math.fsum(weights)
    weights = weights / total

    feature_prob = np.array([math.fsum(weights[z[:, n]]) for n in range(N)])
    group_prob = np.array([math.fsum(weights * group_on[:, g]) for g in range(G)])
    mean = np.array([math.fsum(weights * means[:, n]) for n in range(N)])
    log.debug("enumerated %d active sets, log evidence %.6g", n_sets, log_evidence)
    return OracleResult(feature_prob=feature_prob, group_prob=group_prob, mean=mean, log_evidence=log_evidence)


def config_log_prior(config: ModelConfig, grouping: Grouping, hyper: Hyperparams):
    """log P(Z, Gamma); -inf for configurations with an active feature in an inactive group."""
    if not config.is_consistent(grouping):
        return -math.inf
    p0 = hyper.feature_prior(grouping.n_features)
    pi0 = hyper.group_prior(grouping.n_groups)
    total = 0.0
    for g, on in enumerate(config.gamma):
        total += math.log(pi0[g]) if on else math.log1p(-pi0[g])
    for n, g in enumerate(grouping.assignments):
        if config.gamma[g]:
            total += math.log(p0[n]) if config.z[n] else math.log1p(-p0[n])
    return total


def config_weights(
    data: RegressionData, grouping: Grouping, hyper: Hyperparams
) -> Tuple[List[ModelConfig], np.ndarray]:
    """Posterior weight of every (Gamma, Z) pair, consistent or not. Only for very small problems."""
    N, G = data.n_features, grouping.n_groups
    if N + G > MAX_FEATURES:
        raise EnumerationLimitError(N + G)
    evidence = _Evidence(data, hyper)
    configs = []
    log_weights = []
    for gamma in itertools.product((0, 1), repeat=G):
        for z in itertools.product((0, 1), repeat=N):
            config = ModelConfig(gamma=gamma, z=z)
            log_prior = config_log_prior(config, grouping, hyper)
            if log_prior == -math.inf:
                log_weight = -math.inf
            else:
                log_weight = log_prior + evidence(np.flatnonzero(z))[0]
            configs.append(config)
            log_weights.append(log_weight)
    log_weights = np.array(log_weights)
    weights = np.exp(log_weights - special.logsumexp(log_weights))
    return configs, weights


def compare(result: FitResult, exact: OracleResult):
    """Deviation of an EP fit from the exact posterior."""
    prob_dev = np.abs(result.feature_prob - exact.feature_prob)
    mean_dev = np.abs(result.mean - exact.mean)
    group_dev = np.abs(result.group_prob - exact.group_prob)
    return {
        "max_abs_prob_deviation": float(np.max(prob_dev)),
        "mean_abs_prob_deviation": float(np.mean(prob_dev)),
        "max_abs_group_prob_deviation": float(np.max(group_dev)),
        "max_abs_mean_deviation": float(np.max(mean_dev)),
        "mean_abs_mean_deviation": float(np.mean(mean_dev)),
        "ep_feature_prob": result.feature_prob,
        "exact_feature_prob": exact.feature_prob,
        "ep_mean": result.mean,
        "exact_mean": exact.mean,
        "log_evidence": exact.log_evidence,
    }

"""Signal-recovery benchmark instances: correlated designs, group-sparse coefficients and noisy responses."""
import dataclasses
import logging
import math
from dataclasses import dataclass
from typing import Optional, Tuple

import backoff
import numpy as np
from scipy import linalg

from dogss.model import DimensionError, DogssError, Grouping

log = logging.getLogger("dogss")

INDEPENDENT = "independent"
PAIRWISE = "pairwise"
GROUPWISE = "groupwise"
CORRELATIONS = (INDEPENDENT, PAIRWISE, GROUPWISE)

ACTIVE_GROUPS = 3
COEFFICIENT_BOUND = 5.0
MAX_GROUP_DRAWS = 100
TEST_ROWS = 100

# (M, N, G, k, sigma0)
PRESETS = {
    "small": (30, 30, 5, 5, 1.0),
    "medium": (30, 100, 20, 10, 1.0),
    "large": (100, 1000, 100, 10, 1.0),
}


class InsufficientSupportError(DogssError):
    def __init__(self, message):
        super().__init__(2, message)


@dataclass(frozen=True)
class ScenarioSpec:
    M: int
    N: int
    G: int
    k: int
    sigma0: float = 1.0
    corr: str = INDEPENDENT
    seed: int = 0
    n_test: int = TEST_ROWS

    def __post_init__(self):
        for name in ("M", "N", "G", "n_test"):
            if int(getattr(self, name)) < 1:
                raise ValueError("{0} must be at least 1, got {1}".format(name, getattr(self, name)))
        if not 0 <= self.k <= self.N:
            raise ValueError("k must lie in [0, N], got k={0}, N={1}".format(self.k, self.N))
        if self.G > self.N:
            raise ValueError("G must not exceed N, got G={0}, N={1}".format(self.G, self.N))
        if not self.sigma0 >= 0:
            raise ValueError("sigma0 must be non-negative")
        if self.corr not in CORRELATIONS:
            raise ValueError("corr must be one of {0}, got {1!r}".format(", ".join(CORRELATIONS), self.corr))

    @classmethod
    def preset(cls, name, **overrides):
        try:
            M, N, G, k, sigma0 = PRESETS[name]
        except KeyError:
            raise ValueError("unknown scenario preset {0!r}".format(name))
        settings = dict(M=M, N=N, G=G, k=k, sigma0=sigma0)
        settings.update(overrides)
        return cls(**settings)

    def replace(self, **changes):
        return dataclasses.replace(self, **changes)

    def to_dict(self):
        return dataclasses.asdict(self)


@dataclass(frozen=True, eq=False)
class SignalInstance:
    spec: ScenarioSpec
    X: np.ndarray
    y: np.ndarray
    X_test: np.ndarray
    y_test: np.ndarray
    grouping: Grouping
    beta: np.ndarray

    @property
    def support(self) -> Tuple[int, ...]:
        return tuple(int(n) for n in np.flatnonzero(self.beta))


def correlation_matrix(corr, grouping: Grouping):
    N = grouping.n_features
    if corr == INDEPENDENT:
        return np.eye(N)
    if corr == PAIRWISE:
        return np.full((N, N), 0.5) + 0.5 * np.eye(N)
    if corr == GROUPWISE:
        same = grouping.assignments[:, None] == grouping.assignments[None, :]
        return 0.5 * same + 0.5 * np.eye(N)
    raise ValueError("unknown correlation structure {0!r}".format(corr))


def sample_rows(C, n_rows, rng):
    """n_rows i.i.d. draws from N(0, C)."""
    L = linalg.cholesky(C, lower=True)
    return rng.standard_normal((n_rows, C.shape[0])) @ L.T


def gen_design(spec: ScenarioSpec, rng):
    grouping = Grouping(rng.integers(0, spec.G, spec.N), spec.G)
    X = sample_rows(correlation_matrix(spec.corr, grouping), spec.M, rng)
    return X, grouping


def gen_coefficients(spec: ScenarioSpec, grouping: Grouping, rng):
    beta = np.zeros(grouping.n_features)
    if spec.k == 0:
        return beta
    n_active = min(ACTIVE_GROUPS, grouping.n_groups)

    @backoff.on_exception(
        backoff.constant, InsufficientSupportError, max_tries=MAX_GROUP_DRAWS, interval=0, jitter=None
    )
    def draw_pool():
        groups = rng.choice(grouping.n_groups, size=n_active, replace=False)
        pool = np.flatnonzero(np.isin(grouping.assignments, groups))
        if pool.size < spec.k:
            raise InsufficientSupportError(
                "groups {0} hold {1} features, {2} needed".format(sorted(groups.tolist()), pool.size, spec.k)
            )
        return pool

    pool = draw_pool()
    support = np.sort(rng.choice(pool, size=spec.k, replace=False))
    beta[support] = rng.uniform(-COEFFICIENT_BOUND, COEFFICIENT_BOUND, spec.k)
    return beta


def gen_response(X, beta, sigma0, rng):
    X = np.asarray(X, dtype=float)
    beta = np.asarray(beta, dtype=float)
    if X.shape[1] != beta.shape[0]:
        raise DimensionError("X has {0} columns, beta has {1} entries".format(X.shape[1], beta.shape[0]))
    # noise is drawn even for sigma0 = 0 so the stream position does not depend on the noise level
    return X @ beta + sigma0 * rng.standard_normal(X.shape[0])


def signal_prediction_error(beta_hat, X_test, y_test, intercept=0.0):
    """Relative residual sum of squares sum (y - X beta)^2 / sum y^2; nan when y_test is all zero."""
    X_test = np.asarray(X_test, dtype=float)
    y_test = np.asarray(y_test, dtype=float)
    beta_hat = np.asarray(beta_hat, dtype=float)
    if X_test.shape != (y_test.shape[0], beta_hat.shape[0]):
        raise DimensionError(
            "test design {0} does not match {1} responses and {2} coefficients".format(
                X_test.shape, y_test.shape[0], beta_hat.shape[0]
            )
        )
    denominator = float(y_test @ y_test)
    if denominator == 0:
        log.warning("test response is identically zero, prediction error is undefined")
        return math.nan
    residual = y_test - X_test @ beta_hat - intercept
    return float(residual @ residual) / denominator


def gen_instance(spec: ScenarioSpec, rng: Optional[np.random.Generator] = None) -> SignalInstance:
    """Training data, a test set from the same distribution, the grouping and the true coefficients."""
    if rng is None:
        rng = np.random.default_rng(spec.seed)
    X, grouping = gen_design(spec, rng)
    beta = gen_coefficients(spec, grouping, rng)
    y = gen_response(X, beta, spec.sigma0, rng)
    X_test = sample_rows(correlation_matrix(spec.corr, grouping), spec.n_test, rng)
    y_test = gen_response(X_test, beta, spec.sigma0, rng)
    log.debug("instance seed=%d: %d active features in groups %s", spec.seed, spec.k, _active_groups(beta, grouping))
    return SignalInstance(spec=spec, X=X, y=y, X_test=X_test, y_test=y_test, grouping=grouping, beta=beta)


def _active_groups(beta, grouping):
    return sorted(set(grouping.assignments[np.flatnonzero(beta)].tolist()))

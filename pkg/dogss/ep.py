"""Expectation propagation for the sparse-group spike-and-slab linear model.

One sweep refines all f2 factors against cavities taken from the sweep-start posterior, refreshes the
Gaussian part of Q once, then refines all f3 factors and refreshes the logits. f1 and f4 are exact and
never change.
"""
import logging
from dataclasses import dataclass
from typing import NamedTuple, Optional

import monotonic
import numpy as np
from scipy import linalg

from dogss.model import (
    DimensionError,
    FactorState,
    FitResult,
    Grouping,
    Hyperparams,
    IllConditionedError,
    PosteriorQ,
    RegressionData,
    clamp_logit,
    logit,
    sigmoid,
)

log = logging.getLogger("dogss")

AUTO = "auto"
DIRECT = "direct"
WOODBURY = "woodbury"


@dataclass(frozen=True)
class CavityF2:
    """Marginal of Q with f2,n divided out. A non-positive (or infinite) V_cav means: skip this feature."""

    V_cav: np.ndarray
    m_cav: np.ndarray
    r_cav: np.ndarray

    @property
    def usable(self):
        return np.isfinite(self.V_cav) & (self.V_cav > 0)


@dataclass(frozen=True)
class CavityF3:
    r_cav: np.ndarray
    rho_cav: np.ndarray


class F2Update(NamedTuple):
    r2: np.ndarray
    V2: np.ndarray
    m2: np.ndarray
    replaced: np.ndarray
    degenerate: np.ndarray


def initialize(data: RegressionData, grouping: Grouping, hyper: Hyperparams):
    """Factor parameters and Q before the first sweep."""
    if grouping.n_features != data.n_features:
        raise DimensionError(
            "grouping covers {0} features but X has {1} columns".format(grouping.n_features, data.n_features)
        )
    X, y = data.X, data.y
    s0sq = hyper.sigma0**2
    p0 = hyper.feature_prior(data.n_features)
    pi0 = hyper.group_prior(grouping.n_groups)
    r0 = logit(p0)
    rho0 = logit(pi0)

    fs = FactorState(
        V1inv=X.T @ X / s0sq,
        V1inv_m1=X.T @ y / s0sq,
        V2=hyper.sigma_slab**2 * p0,
        m2=np.zeros(data.n_features),
        r2=r0,
        r3=r0,
        rho3=rho0[grouping.assignments],
        rho4=rho0,
    )
    m, V = _gaussian_part(fs, data, hyper, AUTO)
    q = PosteriorQ(m=m, V=V, r=r0, rho=rho0)
    return fs, q


def cavity_f2(q: PosteriorQ, fs: FactorState, n: Optional[int] = None) -> CavityF2:
    """Q / f2,n for feature `n`, or for every feature at once when `n` is None."""
    idx = slice(None) if n is None else n
    Vnn = np.diag(q.V)[idx]
    V2 = fs.V2[idx]
    with np.errstate(divide="ignore", invalid="ignore"):
        V_cav = 1.0 / (1.0 / Vnn - 1.0 / V2)
        m_cav = V_cav * (q.m[idx] / Vnn - fs.m2[idx] / V2)
    r_cav = q.r[idx] - fs.r2[idx]
    return CavityF2(V_cav=V_cav, m_cav=m_cav, r_cav=r_cav)


def update_f2(cav: CavityF2, hyper: Hyperparams) -> F2Update:
    """Moment-matched f2 parameters for a usable cavity.

    Non-positive new variances are replaced by `hyper.v_replace` and the mean is recomputed with the
    replaced variance. `degenerate` flags a^2 == b, for which no update exists.
    """
    Vc = np.asarray(cav.V_cav, dtype=float)
    mc = np.asarray(cav.m_cav, dtype=float)
    ssq = hyper.sigma_slab**2
    Vs = Vc + ssq

    r2_new = 0.5 * (np.log(Vc / Vs) + mc**2 * (1.0 / Vc - 1.0 / Vs))
    p_aux = sigmoid(clamp_logit(r2_new + cav.r_cav))
    a = p_aux * mc / Vs + (1.0 - p_aux) * mc / Vc
    b = p_aux * (mc**2 - Vs) / Vs**2 + (1.0 - p_aux) * (mc**2 - Vc) / Vc**2

    denom = a**2 - b
    degenerate = denom == 0
    with np.errstate(divide="ignore", invalid="ignore"):
        V2_new = 1.0 / denom - Vc
    replaced = ~degenerate & ~(V2_new > 0)
    V2_new = np.where(replaced, hyper.v_replace, V2_new)
    m2_new = mc - a * (V2_new + Vc)
    return F2Update(
        r2=clamp_logit(r2_new),
        V2=V2_new,
        m2=m2_new,
        replaced=np.asarray(replaced),
        degenerate=np.asarray(degenerate),
    )


def cavity_f3(q: PosteriorQ, fs: FactorState, grouping: Grouping, n: Optional[int] = None) -> CavityF3:
    idx = slice(None) if n is None else n
    rho_cav = q.rho[grouping.assignments[idx]] - fs.rho3[idx]
    r_cav = q.r[idx] - fs.r3[idx]
    return CavityF3(r_cav=r_cav, rho_cav=rho_cav)


def update_f3(cav: CavityF3, p0):
    """(rho3_new, r3_new) from the f3 cavity; p0 may be a scalar or a per-feature vector.

    Evaluated in log-sum-exp form so that no exp() can overflow.
    """
    r_cav = clamp_logit(np.asarray(cav.r_cav, dtype=float))
    rho_cav = clamp_logit(np.asarray(cav.rho_cav, dtype=float))
    p0 = np.broadcast_to(np.asarray(p0, dtype=float), np.shape(r_cav))

    # log(1 + p0 (e^r - 1)) = log((1 - p0) + p0 e^r)
    rho3_new = np.logaddexp(np.log1p(-p0), np.log(p0) + r_cav)
    # log p0 - log(1 - p0 + e^-rho)
    r3_new = np.log(p0) - np.logaddexp(np.log1p(-p0), -rho_cav)

    half = p0 == 0.5
    if np.any(half):
        # log(0.5) + log1p(e^r) and -log1p(2 e^-rho)
        rho3_half = np.log(0.5) + np.logaddexp(0.0, r_cav)
        r3_half = -np.logaddexp(0.0, np.log(2.0) - rho_cav)
        rho3_new = np.where(half, rho3_half, rho3_new)
        r3_new = np.where(half, r3_half, r3_new)

    if np.ndim(cav.r_cav) == 0:
        return float(clamp_logit(rho3_new)), float(clamp_logit(r3_new))
    return clamp_logit(rho3_new), clamp_logit(r3_new)


def _gaussian_part(fs: FactorState, data: RegressionData, hyper: Hyperparams, method):
    """(m, V) of the product f1 * f2."""
    N, M = data.n_features, data.n_samples
    V2 = fs.V2
    if method == AUTO:
        method = DIRECT if N <= M else WOODBURY

    if method == DIRECT:
        precision = fs.V1inv + np.diag(1.0 / V2)
        try:
            factor = linalg.cho_factor(precision, lower=True, check_finite=False)
            V = linalg.cho_solve(factor, np.eye(N), check_finite=False)
        except linalg.LinAlgError:
            raise IllConditionedError("posterior precision is not positive definite", np.linalg.cond(precision))
    elif method == WOODBURY:
        X = data.X
        XV2 = X * V2
        inner = hyper.sigma0**2 * np.eye(M) + XV2 @ X.T
        try:
            factor = linalg.cho_factor(inner, lower=True, check_finite=False)
            V = np.diag(V2) - XV2.T @ linalg.cho_solve(factor, XV2, check_finite=False)
        except linalg.LinAlgError:
            raise IllConditionedError("Woodbury inner matrix is singular", np.linalg.cond(inner))
    else:
        raise ValueError("unknown inversion method {0!r}".format(method))

    V = 0.5 * (V + V.T)
    m = V @ (fs.V1inv_m1 + fs.m2 / V2)
    return m, V


def refresh_logits(fs: FactorState, grouping: Grouping):
    r = fs.r2 + fs.r3
    rho = fs.rho4 + grouping.sum_by_group(fs.rho3)
    return clamp_logit(r), clamp_logit(rho)


def refresh_q(fs: FactorState, data: RegressionData, hyper: Hyperparams, grouping: Grouping, method=AUTO):
    """Recombine all factors into Q.

    The covariance comes from a direct N x N inversion when N <= M and from the Woodbury identity
    (an M x M inversion) otherwise; `method` forces either path.
    """
    if np.any(fs.V2 == 0):
        raise ValueError("f2 variances must be nonzero")
    m, V = _gaussian_part(fs, data, hyper, method)
    r, rho = refresh_logits(fs, grouping)
    return PosteriorQ(m=m, V=V, r=r, rho=rho)


def damp(old: FactorState, new: FactorState, alpha: float, mask=None, exact=None) -> FactorState:
    """Convex combination of old and new f2/f3 parameters, weight `alpha` on the new ones.

    Gaussian factors are combined in natural parameters (1/V2, m2/V2). Features outside `mask` keep their
    old parameters untouched; features in `exact` take the new Gaussian parameters undamped (used for
    variances replaced by the guard).
    """
    if not 0.0 <= alpha <= 1.0:
        raise ValueError("alpha must lie in [0, 1], got {0}".format(alpha))
    if alpha == 0.0:
        return old
    N = old.V2.shape[0]
    mask = np.ones(N, dtype=bool) if mask is None else np.asarray(mask, dtype=bool)
    exact = np.zeros(N, dtype=bool) if exact is None else np.asarray(exact, dtype=bool) & mask

    def mix(a, b):
        return np.where(mask, alpha * b + (1.0 - alpha) * a, a)

    if alpha == 1.0:
        V2 = np.where(mask, new.V2, old.V2)
        m2 = np.where(mask, new.m2, old.m2)
    else:
        precision = alpha / new.V2 + (1.0 - alpha) / old.V2
        shift = alpha * new.m2 / new.V2 + (1.0 - alpha) * old.m2 / old.V2
        V2 = np.where(mask, 1.0 / precision, old.V2)
        m2 = np.where(mask, shift / precision, old.m2)
        V2 = np.where(exact, new.V2, V2)
        m2 = np.where(exact, new.m2, m2)

    return old.replace(
        V2=V2,
        m2=m2,
        r2=mix(old.r2, new.r2),
        r3=mix(old.r3, new.r3),
        rho3=mix(old.rho3, new.rho3),
    )


def _sweep(fs, q, data, grouping, hyper, p0, alpha, method):
    if alpha == 0.0:
        # no factor moves, so Q keeps its initial logits as well
        return fs, q, 0, 0

    # f2: cavities from the sweep-start Q, all updates damped, then one Q refresh
    cav2 = cavity_f2(q, fs)
    usable = cav2.usable
    # unusable cavities are replaced by harmless values and masked out below
    safe = CavityF2(
        V_cav=np.where(usable, cav2.V_cav, 1.0),
        m_cav=np.where(usable, cav2.m_cav, 0.0),
        r_cav=cav2.r_cav,
    )
    upd = update_f2(safe, hyper)
    mask = usable & ~upd.degenerate
    proposal = fs.replace(
        V2=np.where(mask, upd.V2, fs.V2),
        m2=np.where(mask, upd.m2, fs.m2),
        r2=np.where(mask, upd.r2, fs.r2),
    )
    fs = damp(fs, proposal, alpha, mask=mask, exact=upd.replaced)
    q = refresh_q(fs, data, hyper, grouping, method)

    # f3: Bernoulli-only, Q's Gaussian part is unaffected
    cav3 = cavity_f3(q, fs, grouping)
    rho3_new, r3_new = update_f3(cav3, p0)
    fs = damp(fs, fs.replace(r3=r3_new, rho3=rho3_new), alpha)
    r, rho = refresh_logits(fs, grouping)
    q = q.replace(r=r, rho=rho)

    skipped = int(np.count_nonzero(~mask))
    replaced = int(np.count_nonzero(upd.replaced & mask))
    return fs, q, skipped, replaced


def run_ep(data: RegressionData, grouping: Grouping, hyper: Hyperparams, method=AUTO):
    """Fit and return (FitResult, final FactorState, final PosteriorQ)."""
    start = monotonic.monotonic()
    fs, q = initialize(data, grouping, hyper)
    p0 = hyper.feature_prior(data.n_features)
    alpha = hyper.alpha0
    converged = False
    delta = float("inf")
    skipped = replaced = 0
    iterations = 0

    for iterations in range(1, int(hyper.max_iter) + 1):
        fs, q_new, skipped, replaced = _sweep(fs, q, data, grouping, hyper, p0, alpha, method)
        delta = q_new.max_change(q)
        q = q_new
        alpha *= 1.0 - hyper.alpha_decay
        log.debug(
            "sweep %d: max delta %.3g, %d skipped, %d variances replaced", iterations, delta, skipped, replaced
        )
        if not np.all(np.isfinite(np.diag(q.V))):
            raise IllConditionedError("posterior variances are no longer finite")
        if delta < hyper.tol:
            converged = True
            break

    elapsed = monotonic.monotonic() - start
    if converged:
        log.debug("converged after %d sweeps in %.3fs", iterations, elapsed)
    else:
        log.warning("no convergence after %d sweeps (max delta %.3g, %.3fs)", iterations, delta, elapsed)

    result = FitResult(
        mean=q.m,
        feature_prob=sigmoid(q.r),
        group_prob=sigmoid(q.rho),
        iterations=iterations,
        converged=converged,
        max_delta=delta,
        feature_logit=q.r,
        group_logit=q.rho,
        skipped=skipped,
        replaced=replaced,
    )
    return result, fs, q


def fit(data: RegressionData, grouping: Grouping, hyper: Hyperparams, method=AUTO) -> FitResult:
    """Sparse-group spike-and-slab fit (`dogss`)."""
    result, _, _ = run_ep(data, grouping, hyper, method)
    return result


def fit_ungrouped(data: RegressionData, hyper: Hyperparams, method=AUTO) -> FitResult:
    """Plain spike-and-slab fit (`ssep`): every feature is its own group."""
    return fit(data, Grouping.identity(data.n_features), hyper, method)

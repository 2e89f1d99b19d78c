"""Domain types of the sparse-group spike-and-slab regression model and the Bernoulli/Gaussian algebra.

All Bernoulli parameters travel as logits; probabilities only appear at the API boundary
(`sigmoid` on the way out, `logit` on the way in).
"""
import dataclasses
import logging
from dataclasses import dataclass, field
from typing import Optional, Sequence, Tuple, Union

import numpy as np
from scipy import special

log = logging.getLogger("dogss")

# exp() overflows a double just above 709
LOGIT_CAP = 700.0

PRODUCT = "product"
QUOTIENT = "quotient"


class DogssError(Exception):
    def __init__(self, status: int, message: str):
        self.message = message
        self.status = status

    def __str__(self):
        msg = "[dogss] {0} ({1})"
        return msg.format(self.message, self.status)


class ParseError(DogssError):
    def __init__(self, message):
        super().__init__(2, message)


class DimensionError(DogssError):
    def __init__(self, message):
        super().__init__(3, message)


class DegenerateCavityError(DogssError):
    def __init__(self, message):
        super().__init__(3, message)


class IllConditionedError(DogssError):
    def __init__(self, message, condition=float("inf")):
        super().__init__(3, "{0} (condition estimate {1:.3g})".format(message, condition))
        self.condition = condition


def _frozen(array, dtype=float):
    out = np.array(array, dtype=dtype)
    out.setflags(write=False)
    return out


def _as_output(value, like):
    """Return a Python float for scalar input and an array otherwise."""
    if np.ndim(like) == 0:
        return float(value)
    return value


def logit(p):
    """log(p / (1 - p)) for probabilities strictly inside (0, 1)."""
    arr = np.asarray(p, dtype=float)
    if not np.all((arr > 0.0) & (arr < 1.0)):
        raise ValueError("logit is only defined on the open interval (0, 1), got {0}".format(p))
    return _as_output(special.logit(arr), p)


def sigmoid(r):
    """Inverse of `logit`; saturates at |r| >= LOGIT_CAP."""
    arr = np.clip(np.asarray(r, dtype=float), -LOGIT_CAP, LOGIT_CAP)
    if np.any(np.isnan(arr)):
        raise ValueError("sigmoid of NaN")
    return _as_output(special.expit(arr), r)


def clamp_logit(r):
    return np.clip(r, -LOGIT_CAP, LOGIT_CAP)


def bern_combine_logit(r1, r2, mode=PRODUCT):
    """Logit of Bern(p1) * Bern(p2) (product) or Bern(p1) / Bern(p2) (quotient), up to normalization."""
    if mode == PRODUCT:
        return r1 + r2
    if mode == QUOTIENT:
        return r1 - r2
    raise ValueError("mode must be {0!r} or {1!r}, got {2!r}".format(PRODUCT, QUOTIENT, mode))


def gauss_combine(m1, V1, m2, V2, mode=PRODUCT):
    """Mean and variance of N(m1, V1) * N(m2, V2) or N(m1, V1) / N(m2, V2), up to normalization.

    A quotient can come out with negative variance; that is returned as-is and the caller decides.
    """
    V1 = np.asarray(V1, dtype=float)
    V2 = np.asarray(V2, dtype=float)
    if np.any(V1 == 0) or np.any(V2 == 0):
        raise ValueError("variances must be nonzero")
    if mode == PRODUCT:
        if np.any(V1 < 0) or np.any(V2 < 0):
            raise ValueError("product requires positive variances")
        sign = 1.0
    elif mode == QUOTIENT:
        sign = -1.0
    else:
        raise ValueError("mode must be {0!r} or {1!r}, got {2!r}".format(PRODUCT, QUOTIENT, mode))

    precision = 1.0 / V1 + sign / V2
    if np.any(precision == 0):
        raise DegenerateCavityError("quotient of two normals with equal variance has no normal form")
    V = 1.0 / precision
    m = V * (np.asarray(m1, dtype=float) / V1 + sign * np.asarray(m2, dtype=float) / V2)
    return _as_output(m, m1), _as_output(V, V1)


@dataclass(frozen=True, eq=False)
class Grouping:
    """Map from feature index (0..N-1) to group index (0..G-1).

    `labels[g]` is the label group g carried in the input, if any. Groups without features are allowed
    when `n_groups` is given explicitly (simulated groupings); `from_labels` never produces them.
    """

    assignments: np.ndarray
    n_groups: int
    labels: Tuple = ()

    def __post_init__(self):
        assignments = np.asarray(self.assignments)
        if assignments.ndim != 1:
            raise DimensionError("group assignments must be a vector")
        if assignments.size and not np.issubdtype(assignments.dtype, np.integer):
            if not np.all(np.equal(np.mod(assignments, 1), 0)):
                raise ValueError("group assignments must be integers")
        assignments = assignments.astype(np.int64)
        if self.n_groups < 1:
            raise ValueError("a grouping needs at least one group")
        if assignments.size and (assignments.min() < 0 or assignments.max() >= self.n_groups):
            raise ValueError("group assignments must lie in 0..{0}".format(self.n_groups - 1))
        labels = tuple(self.labels) or tuple(range(self.n_groups))
        if len(labels) != self.n_groups:
            raise DimensionError("expected {0} group labels, got {1}".format(self.n_groups, len(labels)))
        object.__setattr__(self, "assignments", _frozen(assignments, np.int64))
        object.__setattr__(self, "labels", labels)

    @classmethod
    def identity(cls, n_features):
        """Every feature in its own group; the model reduces to the ungrouped spike-and-slab."""
        return cls(np.arange(n_features), n_features)

    @classmethod
    def from_labels(cls, labels: Sequence):
        """Normalize arbitrary (possibly non-contiguous) group labels to 0..G-1 in sorted label order."""
        labels = list(labels)
        if not labels:
            raise ValueError("cannot build a grouping from an empty label list")
        distinct = sorted(set(labels), key=_label_sort_key)
        index = {label: g for g, label in enumerate(distinct)}
        assignments = np.array([index[label] for label in labels], dtype=np.int64)
        grouping = cls(assignments, len(distinct), tuple(distinct))
        if distinct != list(range(len(distinct))):
            log.debug("remapped %d group labels to 0..%d", len(distinct), len(distinct) - 1)
        return grouping

    @property
    def n_features(self):
        return int(self.assignments.size)

    def sizes(self):
        return np.bincount(self.assignments, minlength=self.n_groups)

    def members(self, g):
        return np.flatnonzero(self.assignments == g)

    def label_map(self):
        return {str(label): g for g, label in enumerate(self.labels)}

    def subset(self, indices):
        """Grouping of the selected features, renormalized to contiguous groups."""
        return Grouping.from_labels([self.labels[g] for g in self.assignments[np.asarray(indices, dtype=int)]])

    def shuffled(self, rng):
        """Same group sizes, labels permuted uniformly across features."""
        return Grouping(rng.permutation(self.assignments), self.n_groups, self.labels)

    def sum_by_group(self, values):
        """Per-group sums of a per-feature vector, accumulated in feature order."""
        return np.bincount(self.assignments, weights=values, minlength=self.n_groups)


def _label_sort_key(label):
    # numbers before strings, numbers numerically
    if isinstance(label, (int, float, np.integer, np.floating)) and not isinstance(label, bool):
        return (0, float(label), "")
    return (1, 0.0, str(label))


@dataclass(frozen=True, eq=False)
class RegressionData:
    """Design matrix X (M x N) and response y (M), stored after centering (and optional scaling).

    `x_offset`, `x_scale` and `y_offset` undo the preprocessing so that predictions can be made on the
    original scale.
    """

    X: np.ndarray
    y: np.ndarray
    x_offset: np.ndarray
    x_scale: np.ndarray
    y_offset: float = 0.0
    feature_names: Tuple[str, ...] = ()
    response_name: str = "y"

    def __post_init__(self):
        X = np.asarray(self.X, dtype=float)
        y = np.asarray(self.y, dtype=float)
        if X.ndim != 2:
            raise DimensionError("X must be a matrix, got {0} dimensions".format(X.ndim))
        if y.ndim != 1:
            raise DimensionError("y must be a vector, got {0} dimensions".format(y.ndim))
        if X.shape[0] != y.shape[0]:
            raise DimensionError("X has {0} rows but y has {1} entries".format(X.shape[0], y.shape[0]))
        if not (np.all(np.isfinite(X)) and np.all(np.isfinite(y))):
            raise ValueError("X and y must be finite")
        names = tuple(self.feature_names) or tuple("x{0}".format(n + 1) for n in range(X.shape[1]))
        if len(names) != X.shape[1]:
            raise DimensionError("{0} feature names for {1} columns".format(len(names), X.shape[1]))
        object.__setattr__(self, "X", _frozen(X))
        object.__setattr__(self, "y", _frozen(y))
        object.__setattr__(self, "x_offset", _frozen(self.x_offset))
        object.__setattr__(self, "x_scale", _frozen(self.x_scale))
        object.__setattr__(self, "y_offset", float(self.y_offset))
        object.__setattr__(self, "feature_names", names)

    @classmethod
    def prepare(cls, X, y, center=True, standardize=False, feature_names=None, response_name="y"):
        X = np.asarray(X, dtype=float)
        y = np.asarray(y, dtype=float)
        if X.ndim != 2 or y.ndim != 1:
            raise DimensionError("expected a matrix X and a vector y")
        if X.shape[0] != y.shape[0]:
            raise DimensionError("X has {0} rows but y has {1} entries".format(X.shape[0], y.shape[0]))
        if not (np.all(np.isfinite(X)) and np.all(np.isfinite(y))):
            raise ValueError("X and y must be finite")

        x_offset = X.mean(axis=0) if center else np.zeros(X.shape[1])
        y_offset = float(y.mean()) if center else 0.0
        Xc = X - x_offset
        x_scale = np.ones(X.shape[1])
        if standardize:
            x_scale = Xc.std(axis=0)
            # constant columns stay as they are
            x_scale[x_scale == 0] = 1.0
            Xc = Xc / x_scale
        return cls(Xc, y - y_offset, x_offset, x_scale, y_offset, tuple(feature_names or ()), response_name)

    @property
    def n_samples(self):
        return int(self.X.shape[0])

    @property
    def n_features(self):
        return int(self.X.shape[1])

    def transform(self, X):
        """Apply this data set's preprocessing to new rows."""
        X = np.asarray(X, dtype=float)
        if X.ndim != 2 or X.shape[1] != self.n_features:
            raise DimensionError("expected {0} feature columns".format(self.n_features))
        return (X - self.x_offset) / self.x_scale

    def predict(self, beta, X=None):
        """Predictions on the original response scale for coefficients fitted on the preprocessed data."""
        beta = np.asarray(beta, dtype=float)
        if beta.shape != (self.n_features,):
            raise DimensionError("expected {0} coefficients, got shape {1}".format(self.n_features, beta.shape))
        Z = self.X if X is None else self.transform(X)
        return Z @ beta + self.y_offset

    def original_coefficients(self, beta):
        """(coefficients, intercept) of the same fit expressed on the unprocessed columns."""
        coef = np.asarray(beta, dtype=float) / self.x_scale
        return coef, float(self.y_offset - self.x_offset @ coef)


@dataclass(frozen=True)
class Hyperparams:
    """Prior and algorithm settings. `p0`/`pi0` may be scalars or per-feature/per-group vectors."""

    sigma0: float = 1.0
    sigma_slab: float = 2.0
    p0: Union[float, Tuple[float, ...]] = 0.5
    pi0: Union[float, Tuple[float, ...]] = 0.5
    alpha0: float = 0.9
    alpha_decay: float = 0.01
    tol: float = 1e-5
    max_iter: int = 1000
    v_replace: float = 100.0

    def __post_init__(self):
        if not self.sigma0 > 0:
            raise ValueError("sigma0 must be positive, got {0}".format(self.sigma0))
        if not self.sigma_slab > 0:
            raise ValueError("sigma_slab must be positive, got {0}".format(self.sigma_slab))
        for name in ("p0", "pi0"):
            value = getattr(self, name)
            if np.ndim(value) > 0:
                value = tuple(float(v) for v in np.ravel(value))
                object.__setattr__(self, name, value)
            arr = np.asarray(value, dtype=float)
            if not np.all((arr > 0) & (arr < 1)):
                raise ValueError("{0} must lie in (0, 1)".format(name))
        if not 0.0 <= self.alpha0 <= 1.0:
            raise ValueError("alpha0 must lie in [0, 1], got {0}".format(self.alpha0))
        if not 0.0 <= self.alpha_decay < 1.0:
            raise ValueError("alpha_decay must lie in [0, 1), got {0}".format(self.alpha_decay))
        if not self.tol > 0:
            raise ValueError("tol must be positive")
        if int(self.max_iter) < 0:
            raise ValueError("max_iter must be non-negative")
        if not self.v_replace > 0:
            raise ValueError("v_replace must be positive")

    @classmethod
    def network(cls, **overrides):
        """Relaxed settings used for the many regressions of a network reconstruction."""
        settings = dict(tol=1e-3, max_iter=100)
        settings.update(overrides)
        return cls(**settings)

    def replace(self, **changes):
        return dataclasses.replace(self, **changes)

    def feature_prior(self, n_features):
        return _broadcast_prior(self.p0, n_features, "p0")

    def group_prior(self, n_groups):
        return _broadcast_prior(self.pi0, n_groups, "pi0")

    def to_dict(self):
        return dataclasses.asdict(self)


def _broadcast_prior(value, size, name):
    arr = np.asarray(value, dtype=float)
    if arr.ndim == 0:
        return np.full(size, float(arr))
    if arr.shape != (size,):
        raise DimensionError("{0} has {1} entries, expected {2}".format(name, arr.size, size))
    return arr.copy()


@dataclass(frozen=True, eq=False)
class FactorState:
    """Natural parameters of the four approximating factors.

    f1: V1inv = X'X / sigma0^2 and V1inv_m1 = X'y / sigma0^2 (exact, never updated)
    f2: per-feature Gaussian (V2, m2) and Bernoulli logit r2
    f3: per-feature logits r3 (feature) and rho3 (its group)
    f4: per-group logits rho4 (exact, never updated)
    """

    V1inv: np.ndarray
    V1inv_m1: np.ndarray
    V2: np.ndarray
    m2: np.ndarray
    r2: np.ndarray
    r3: np.ndarray
    rho3: np.ndarray
    rho4: np.ndarray

    def __post_init__(self):
        for name in ("V1inv", "V1inv_m1", "V2", "m2", "r2", "r3", "rho3", "rho4"):
            object.__setattr__(self, name, _frozen(getattr(self, name)))

    def replace(self, **changes):
        return dataclasses.replace(self, **changes)


@dataclass(frozen=True, eq=False)
class PosteriorQ:
    """Approximate posterior N(beta | m, V) * prod Bern(Z_n | sigmoid(r_n)) * prod Bern(Gamma_g | sigmoid(rho_g))."""

    m: np.ndarray
    V: np.ndarray
    r: np.ndarray
    rho: np.ndarray

    def __post_init__(self):
        for name in ("m", "V", "r", "rho"):
            object.__setattr__(self, name, _frozen(getattr(self, name)))

    def replace(self, **changes):
        return dataclasses.replace(self, **changes)

    def max_change(self, other: "PosteriorQ"):
        """Largest absolute change over m, diag V, r and rho."""
        return float(
            max(
                np.max(np.abs(self.m - other.m), initial=0.0),
                np.max(np.abs(np.diag(self.V) - np.diag(other.V)), initial=0.0),
                np.max(np.abs(self.r - other.r), initial=0.0),
                np.max(np.abs(self.rho - other.rho), initial=0.0),
            )
        )


@dataclass(frozen=True, eq=False)
class FitResult:
    mean: np.ndarray
    feature_prob: np.ndarray
    group_prob: np.ndarray
    iterations: int
    converged: bool
    max_delta: float
    feature_logit: np.ndarray = field(default_factory=lambda: np.zeros(0))
    group_logit: np.ndarray = field(default_factory=lambda: np.zeros(0))
    skipped: int = 0
    replaced: int = 0

    def __post_init__(self):
        for name in ("mean", "feature_prob", "group_prob", "feature_logit", "group_logit"):
            object.__setattr__(self, name, _frozen(getattr(self, name)))

    def coefficients(self, cutoff: Optional[float] = None):
        """Posterior means, zeroed where the inclusion probability falls below `cutoff`."""
        if cutoff is None:
            return self.mean.copy()
        return np.where(self.feature_prob >= cutoff, self.mean, 0.0)

    def to_dict(self):
        return {
            "mean": self.mean,
            "feature_prob": self.feature_prob,
            "group_prob": self.group_prob,
            "iterations": self.iterations,
            "converged": self.converged,
            "max_delta": self.max_delta,
            "skipped": self.skipped,
            "replaced": self.replaced,
        }

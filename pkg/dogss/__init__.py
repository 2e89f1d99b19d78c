from typing import Optional, Sequence

from dogss.model import FitResult
from dogss.selector import Selector
from dogss.version import VERSION

__version__ = VERSION

"""Settings."""
sigma0 = 1.0  # type: float
sigma_slab = 2.0  # type: float
p0 = 0.5  # type: float
pi0 = 0.5  # type: float
tol = None  # type: Optional[float]
max_iter = None  # type: Optional[int]
debug = False  # type: bool
disabled = False  # type: bool
jobs = 1  # type: int

default_selector = None


def fit(
    X,
    y,
    groups,  # type: Sequence
):
    # type: (...) -> Optional[FitResult]
    """
    Fit the sparse-group spike-and-slab model and return posterior inclusion probabilities and means.

    A `fit` call requires
    - `X`, an M x N design matrix
    - `y`, the M responses
    - `groups`, one group label per column of X

    For example:
    ```python
    result = dogss.fit(X, y, groups=[1, 1, 2, 2, 3])
    result.feature_prob  # P(feature n is in the model)
    result.group_prob  # P(group g is in the model)
    ```
    """
    return _proxy("fit", X=X, y=y, groups=groups)


def fit_ungrouped(X, y):
    """Fit without group information; every feature is its own group."""
    return _proxy("fit_ungrouped", X=X, y=y)


def enumerate_posterior(X, y, groups):
    """Exact posterior by enumerating all feature subsets (small problems only)."""
    return _proxy("enumerate_posterior", X=X, y=y, groups=groups)


def cv_cutoff(X, y, groups, folds=10, seed=0):
    """
    Choose a probability cutoff by cross validation with the one-standard-error rule.

    For example:
    ```python
    cv = dogss.cv_cutoff(X, y, groups, folds=10)
    selected = result.feature_prob >= cv.cutoff
    ```
    """
    return _proxy("cv_cutoff", X=X, y=y, groups=groups, folds=folds, seed=seed)


def reconstruct(X, hubs=None, node_groups=None, **kwargs):
    """Rank the edges of an undirected network by regressing every node on the others."""
    return _proxy("reconstruct", X=X, hubs=hubs, node_groups=node_groups, **kwargs)


def reset():
    """Drop the default selector so that changed settings take effect."""
    global default_selector
    default_selector = None


def _proxy(method, *args, **kwargs):
    """Create a selector if one doesn't exist and send to it."""
    global default_selector
    if disabled:
        return None
    if not default_selector:
        default_selector = Selector(
            sigma0=sigma0,
            sigma_slab=sigma_slab,
            p0=p0,
            pi0=pi0,
            tol=tol,
            max_iter=max_iter,
            debug=debug,
            jobs=jobs,
        )

    fn = getattr(default_selector, method)
    return fn(*args, **kwargs)

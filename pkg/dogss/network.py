"""Network reconstruction: hub-dominated graph generation, Gaussian graphical sampling and neighborhood selection."""
import logging
import math
import queue
from dataclasses import dataclass, field
from typing import Dict, FrozenSet, NamedTuple, Optional, Sequence, Tuple

import networkx as nx
import numpy as np
import pandas as pd
from scipy import linalg
from sklearn.cluster import KMeans

from dogss import ep
from dogss.consumer import Consumer
from dogss.model import DimensionError, Grouping, Hyperparams, ParseError, RegressionData
from dogss.utils import derive_seed

log = logging.getLogger("dogss")

HUBS_ONLY = "hubs_only"
ALL_NODES = "all_nodes"
FEATURE_MODES = (HUBS_ONLY, ALL_NODES)

ORIGINAL = "original"
RANDOM = "random"
KMEANS = "kmeans"
GROUPING_MODES = (ORIGINAL, RANDOM, KMEANS)

PER_GROUP = "per_group"
SINGLETON = "singleton"
SHARED = "shared"
NON_HUB_POLICIES = (PER_GROUP, SINGLETON, SHARED, ORIGINAL)

SYMMETRIZE = ("max", "min")

INTRA_GROUP_EDGE_PROB = 0.5
EDGE_WEIGHT_RANGE = (0.5, 1.0)
EIGEN_SHIFT = 0.1

# (P, G, H, q)
PRESETS = {
    "small": (100, 3, 10, 0.01),
    "large": (1000, 20, 100, 0.001),
}


@dataclass(frozen=True, eq=False)
class NetworkGraph:
    """Undirected graph on nodes 0..P-1; `edges` holds (a, b) pairs with a < b."""

    P: int
    edges: FrozenSet[Tuple[int, int]]
    hubs: Tuple[int, ...]
    node_groups: Tuple[int, ...]
    n_groups: int

    def __post_init__(self):
        edges = frozenset((min(a, b), max(a, b)) for a, b in self.edges)
        if any(a == b for a, b in edges):
            raise ValueError("graphs have no self-loops")
        if any(b >= self.P or a < 0 for a, b in edges):
            raise ValueError("edge endpoints must lie in 0..{0}".format(self.P - 1))
        if len(self.node_groups) != self.P:
            raise DimensionError("{0} node groups for {1} nodes".format(len(self.node_groups), self.P))
        object.__setattr__(self, "edges", edges)
        object.__setattr__(self, "hubs", tuple(sorted(int(h) for h in self.hubs)))
        object.__setattr__(self, "node_groups", tuple(int(g) for g in self.node_groups))

    @property
    def grouping(self):
        return Grouping(np.asarray(self.node_groups), self.n_groups)

    def to_networkx(self):
        graph = nx.Graph()
        graph.add_nodes_from(range(self.P))
        graph.add_edges_from(sorted(self.edges))
        return graph

    def degrees(self):
        return np.array([d for _, d in sorted(self.to_networkx().degree())])


def gen_scale_free_graph(P, G, H, q, rng) -> NetworkGraph:
    """Hub-dominated graph: every non-hub links to a hub of a sampled group, plus intra-group and random hub edges."""
    if not 1 <= H <= P:
        raise ValueError("need 1 <= H <= P, got H={0}, P={1}".format(H, P))
    if G < 1:
        raise ValueError("need at least one group")
    if not 0.0 <= q <= 1.0:
        raise ValueError("q must lie in [0, 1], got {0}".format(q))

    weights = rng.uniform(0.0, 1.0, G)
    weights = weights / weights.sum()
    hubs = np.sort(rng.choice(P, size=H, replace=False))
    hub_groups = rng.integers(0, G, H)
    group_hubs = {g: hubs[hub_groups == g] for g in range(G)}
    # non-hubs can only join groups that own at least one hub
    populated = np.array([g for g in range(G) if group_hubs[g].size])
    populated_weights = weights[populated] / weights[populated].sum()

    hub_group = dict(zip(hubs.tolist(), hub_groups.tolist()))
    node_groups = np.zeros(P, dtype=np.int64)
    graph = nx.Graph()
    graph.add_nodes_from(range(P))
    for node in range(P):
        if node in hub_group:
            g = hub_group[node]
        else:
            g = int(populated[rng.choice(populated.size, p=populated_weights)])
            graph.add_edge(node, int(rng.choice(group_hubs[g])))
        node_groups[node] = g
        for hub in group_hubs[g]:
            if hub != node and not graph.has_edge(node, hub) and rng.random() < INTRA_GROUP_EDGE_PROB:
                graph.add_edge(node, int(hub))
        for hub in hubs:
            if hub != node and not graph.has_edge(node, hub) and rng.random() < q:
                graph.add_edge(node, int(hub))

    log.debug("graph with %d nodes, %d hubs, %d edges", P, H, graph.number_of_edges())
    return NetworkGraph(P=P, edges=frozenset(graph.edges()), hubs=tuple(hubs), node_groups=node_groups, n_groups=G)


def preset_graph(name, rng) -> NetworkGraph:
    try:
        P, G, H, q = PRESETS[name]
    except KeyError:
        raise ValueError("unknown network preset {0!r}".format(name))
    return gen_scale_free_graph(P, G, H, q, rng)


class GaussianSample(NamedTuple):
    X_train: np.ndarray
    X_test: np.ndarray
    precision: np.ndarray


def precision_matrix(graph: NetworkGraph, rng):
    """Unit-diagonal positive definite matrix whose off-diagonal support is exactly the edge set."""
    A = np.zeros((graph.P, graph.P))
    low, high = EDGE_WEIGHT_RANGE
    for a, b in sorted(graph.edges):
        sign = 1.0 if rng.random() < 0.5 else -1.0
        A[a, b] = A[b, a] = sign * rng.uniform(low, high)
    shift = abs(np.linalg.eigvalsh(A)[0]) + EIGEN_SHIFT
    omega = A + shift * np.eye(graph.P)
    scale = 1.0 / np.sqrt(np.diag(omega))
    return omega * scale[:, None] * scale[None, :]


def graph_to_gaussian(graph: NetworkGraph, M, rng, n_test=None) -> GaussianSample:
    omega = precision_matrix(graph, rng)
    covariance = linalg.cho_solve(linalg.cho_factor(omega, lower=True), np.eye(graph.P))
    covariance = (covariance + covariance.T) / 2
    L = linalg.cholesky(covariance, lower=True)
    X_train = rng.standard_normal((M, graph.P)) @ L.T
    X_test = rng.standard_normal((M if n_test is None else n_test, graph.P)) @ L.T
    return GaussianSample(X_train=X_train, X_test=X_test, precision=omega)


class RankedEdge(NamedTuple):
    node_a: int
    node_b: int
    score: float
    coefficient: float


@dataclass(frozen=True, eq=False)
class EdgeRanking:
    """Scored undirected edges, best first, and the directed coefficient matrix (row = response node)."""

    edges: Tuple[RankedEdge, ...]
    coefficients: np.ndarray
    failures: Tuple[Tuple[int, str], ...] = ()
    settings: Dict = field(default_factory=dict)

    def to_frame(self):
        return pd.DataFrame(list(self.edges), columns=list(RankedEdge._fields))

    def scored_pairs(self):
        return [(edge.node_a, edge.node_b, edge.score) for edge in self.edges]

    def top(self, K):
        return self.edges[:K]


def _node_labels(P, hubs, node_groups, feature_mode, non_hub_policy):
    """Group label of every node as a feature.

    With all nodes as features, hubs keep their own groups and non-hubs move to extra groups: one per original
    group (`per_group`), one per node (`singleton`) or a single shared one (`shared`).
    """
    if node_groups is None:
        return np.arange(P)
    labels = np.asarray(node_groups, dtype=np.int64).copy()
    if feature_mode == HUBS_ONLY or non_hub_policy == ORIGINAL:
        return labels
    hub_set = set(hubs)
    offset = int(labels.max()) + 1
    for j in range(P):
        if j in hub_set:
            continue
        if non_hub_policy == PER_GROUP:
            labels[j] += offset
        elif non_hub_policy == SHARED:
            labels[j] = offset
        else:
            labels[j] = offset + j
    return labels


def _kmeans_labels(X, candidates, n_clusters, seed):
    columns = X[:, candidates]
    columns = (columns - columns.mean(axis=0)) / np.where(columns.std(axis=0) > 0, columns.std(axis=0), 1.0)
    n_clusters = max(1, min(n_clusters, len(candidates)))
    model = KMeans(n_clusters=n_clusters, n_init=10, random_state=seed).fit(columns.T)
    return model.labels_


def neighborhood_selection(
    X,
    hubs: Optional[Sequence[int]] = None,
    node_groups: Optional[Sequence[int]] = None,
    feature_mode=HUBS_ONLY,
    grouping_mode=ORIGINAL,
    hyper: Optional[Hyperparams] = None,
    symmetrize="max",
    non_hub_policy=PER_GROUP,
    seed=0,
    jobs=1,
) -> EdgeRanking:
    """Regress every node on the allowed feature nodes and rank the undirected edges by inclusion probability."""
    X = np.asarray(X, dtype=float)
    if X.ndim != 2:
        raise DimensionError("expected an M x P matrix")
    P = X.shape[1]
    if feature_mode not in FEATURE_MODES:
        raise ParseError("feature mode must be one of {0}, got {1!r}".format(", ".join(FEATURE_MODES), feature_mode))
    if grouping_mode not in GROUPING_MODES:
        raise ParseError("grouping mode must be one of {0}, got {1!r}".format(", ".join(GROUPING_MODES), grouping_mode))
    if symmetrize not in SYMMETRIZE:
        raise ParseError("symmetrize must be max or min, got {0!r}".format(symmetrize))
    if non_hub_policy not in NON_HUB_POLICIES:
        raise ParseError("unknown non-hub policy {0!r}".format(non_hub_policy))
    if node_groups is not None and len(node_groups) != P:
        raise DimensionError("{0} node groups for {1} columns".format(len(node_groups), P))
    hubs = sorted(int(h) for h in hubs) if hubs is not None else list(range(P))
    if feature_mode == HUBS_ONLY and not hubs:
        raise ParseError("hubs-only mode needs at least one hub")
    hyper = hyper or Hyperparams.network()

    candidates = np.array(hubs if feature_mode == HUBS_ONLY else range(P), dtype=np.int64)
    labels = _node_labels(P, hubs, node_groups, feature_mode, non_hub_policy)
    rng = np.random.default_rng(seed)
    if grouping_mode == RANDOM:
        labels[candidates] = rng.permutation(labels[candidates])
    elif grouping_mode == KMEANS:
        n_clusters = len(set(labels[candidates].tolist()))
        labels[candidates] = _kmeans_labels(X, candidates, n_clusters, derive_seed(seed, 1))

    fits = {}
    failures = {}

    def solve(node):
        features = candidates[candidates != node]
        if features.size == 0:
            return
        data = RegressionData.prepare(X[:, features], X[:, node])
        result = ep.fit(data, Grouping.from_labels(labels[features].tolist()), hyper)
        fits[node] = (features, result)

    def record_failure(error, node):
        log.error("regression for node %d failed: %s", node, error)
        failures[node] = str(error)

    tasks = queue.Queue()
    for node in range(P):
        tasks.put(node)
    if jobs <= 1:
        Consumer(tasks, solve, on_error=record_failure).drain()
    else:
        consumers = [Consumer(tasks, solve, on_error=record_failure) for _ in range(jobs)]
        for consumer in consumers:
            consumer.start()
        tasks.join()
        for consumer in consumers:
            consumer.pause()
        for consumer in consumers:
            consumer.join()

    B = np.zeros((P, P))
    prob = {}
    for node in sorted(fits):
        features, result = fits[node]
        B[node, features] = result.mean
        for j, p in zip(features.tolist(), result.feature_prob.tolist()):
            prob[(node, j)] = p

    ranked = []
    pick = max if symmetrize == "max" else min
    for a in range(P):
        for b in range(a + 1, P):
            directions = [(prob[(r, f)], r, f) for r, f in ((a, b), (b, a)) if (r, f) in prob]
            if not directions:
                continue
            score = pick(p for p, _, _ in directions)
            _, r, f = next(d for d in directions if d[0] == score)
            ranked.append(RankedEdge(a, b, float(score), float(B[r, f])))
    ranked.sort(key=lambda e: (-e.score, -abs(e.coefficient), e.node_a, e.node_b))

    if failures:
        log.warning("%d of %d node regressions failed", len(failures), P)
    settings = dict(
        feature_mode=feature_mode,
        grouping_mode=grouping_mode,
        symmetrize=symmetrize,
        non_hub_policy=non_hub_policy,
        seed=seed,
    )
    return EdgeRanking(
        edges=tuple(ranked),
        coefficients=B,
        failures=tuple(sorted(failures.items())),
        settings=settings,
    )


def network_prediction_error(B_hat, X_test):
    """sum ||x_p - sum_{q != p} B[p, q] x_q||^2 / sum ||x_p||^2 over all nodes p."""
    B_hat = np.asarray(B_hat, dtype=float)
    X_test = np.asarray(X_test, dtype=float)
    P = X_test.shape[1]
    if B_hat.shape != (P, P):
        raise DimensionError("coefficient matrix {0} for {1} nodes".format(B_hat.shape, P))
    if np.any(np.diag(B_hat) != 0):
        raise ValueError("coefficient matrix must have a zero diagonal")
    denominator = float(np.sum(X_test**2))
    if denominator == 0:
        log.warning("test data is identically zero, prediction error is undefined")
        return math.nan
    residual = X_test - X_test @ B_hat.T
    return float(np.sum(residual**2)) / denominator


def prediction_error_curve(ranking: EdgeRanking, X_test, sizes):
    """Network prediction error when only the K best-ranked edges keep their coefficients."""
    rows = []
    for K in sizes:
        mask = np.zeros_like(ranking.coefficients, dtype=bool)
        for edge in ranking.top(int(K)):
            mask[edge.node_a, edge.node_b] = mask[edge.node_b, edge.node_a] = True
        B = np.where(mask, ranking.coefficients, 0.0)
        rows.append({"edges": int(K), "error": network_prediction_error(B, X_test)})
    return pd.DataFrame(rows, columns=["edges", "error"])

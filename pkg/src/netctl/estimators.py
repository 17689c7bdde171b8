"""scikit-learn style wrappers around the control-node selection strategies.

The selectors are fit-shaped: hyperparameters in the constructor, a weight
matrix (or Network) to ``fit``, and the chosen nodes in ``nodes_``.  They
inherit ``get_params``/``set_params`` from ``BaseEstimator`` so they compose
with sklearn tooling (cloning, grid search over ``m``, pipelines that score a
selection).
"""

from __future__ import annotations

import numpy as np
from sklearn.base import BaseEstimator

from ._validation import as_square_matrix
from .gramian import INFINITE
from .netmodel import Network, network_from_adjacency
from .partition import (
    DEFAULT_SUBSET_CAP,
    brute_force_select,
    modal_select,
    select_by_partitioning,
    trace_optimal_select,
)


def _as_network(X) -> Network:
    if isinstance(X, Network):
        return X
    return network_from_adjacency(as_square_matrix(X, "X"))


class _BaseSelector(BaseEstimator):
    def fit(self, X, y=None):
        net = _as_network(X)
        self.n_features_in_ = net.n
        self.result_ = self._select(net)
        self.nodes_ = np.asarray(self.result_.control_set.nodes, dtype=int)
        return self

    def _select(self, net):
        raise NotImplementedError


class PartitionSelector(_BaseSelector):
    """Recursive Fiedler-partition selection of ``m`` control nodes.

    After ``fit``, ``partition_`` holds the final node partition and
    ``history_`` the nondecreasing lambda_min trace.
    """

    def __init__(self, m=1, horizon=INFINITE, tol=1e-10, cluster_horizon=None):
        self.m = m
        self.horizon = horizon
        self.tol = tol
        self.cluster_horizon = cluster_horizon

    def _select(self, net):
        result = select_by_partitioning(
            net, self.m, horizon=self.horizon, tol=self.tol, cluster_horizon=self.cluster_horizon
        )
        self.partition_ = result.partition
        self.history_ = np.asarray(result.lambda_min_history)
        return result


class ModalSelector(_BaseSelector):
    """Pick the k nodes with the largest modal controllability scores."""

    def __init__(self, k=1):
        self.k = k

    def _select(self, net):
        return modal_select(net, self.k)


class TraceOptimalSelector(_BaseSelector):
    """Closed-form Gramian-trace maximizer (largest diagonal power-sum entries)."""

    def __init__(self, m=1, horizon=INFINITE):
        self.m = m
        self.horizon = horizon

    def _select(self, net):
        return trace_optimal_select(net, self.m, self.horizon)


class BruteForceSelector(_BaseSelector):
    """Exhaustive subset search for the best Gramian metric.

    After ``fit``, ``objective_`` holds the achieved metric value.
    """

    def __init__(self, m=1, horizon=INFINITE, metric="lambda_min", cap=DEFAULT_SUBSET_CAP, workers=None):
        self.m = m
        self.horizon = horizon
        self.metric = metric
        self.cap = cap
        self.workers = workers

    def _select(self, net):
        result = brute_force_select(
            net, self.m, self.horizon, metric=self.metric, cap=self.cap, workers=self.workers
        )
        self.objective_ = result.objective
        return result

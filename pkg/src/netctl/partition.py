"""Spectral partitioning, boundary nodes, and control-node selection strategies."""

from __future__ import annotations

import itertools
import math
import os
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass

import numpy as np
import scipy.linalg

from ._validation import check_horizon, is_connected, is_symmetric
from .errors import PartitionError, SubsetCapError, UnstableError
from .gramian import (
    INFINITE,
    ControlSet,
    _gramian_sum,
    _matrix_geometric_sum,
    _solve_lyapunov,
    gramian_finite,
    gramian_infinite,
)
from .netmodel import STABILITY_MARGIN, Network

#: Default cap on the number of Gramian evaluations in exhaustive search.
DEFAULT_SUBSET_CAP = 2_000_000

_FIEDLER_ZERO_TOL = 1e-12

METRICS = ("lambda_min", "trace", "trace_inv", "log_det")


@dataclass(frozen=True, eq=False)
class Partition:
    """Disjoint node blocks covering the network, with per-block boundary sets.

    ``permutation`` concatenates the blocks; relabeling the nodes with it
    puts the weight matrix into block form.
    """

    blocks: tuple
    boundary: tuple
    permutation: tuple

    def __len__(self):
        return len(self.blocks)

    def to_dict(self) -> dict:
        return {
            "blocks": [[i + 1 for i in blk] for blk in self.blocks],
            "boundary": [[i + 1 for i in psi] for psi in self.boundary],
            "permutation": [i + 1 for i in self.permutation],
        }


@dataclass(frozen=True, eq=False)
class SelectionResult:
    """Outcome of a control-node selection strategy.

    ``lambda_min_history`` traces the whole-network Gramian lambda_min after
    each partition-refinement step (recursive method only, pre-trim).
    ``cluster_lambda_min`` reports per-cluster controllability from the
    selected nodes; positivity is reported, never guaranteed.
    """

    control_set: ControlSet
    method: str
    partition: Partition | None = None
    lambda_min_history: tuple = ()
    cluster_lambda_min: tuple | None = None
    padded: bool = False
    warning: str | None = None
    objective: float | None = None

    def to_dict(self) -> dict:
        out = {
            "control_nodes": [k + 1 for k in self.control_set.nodes],
            "method": self.method,
            "lambda_min_history": list(self.lambda_min_history),
            "padded": self.padded,
        }
        if self.partition is not None:
            out["partition"] = self.partition.to_dict()
        if self.cluster_lambda_min is not None:
            out["cluster_lambda_min"] = list(self.cluster_lambda_min)
        if self.warning is not None:
            out["warning"] = self.warning
        if self.objective is not None:
            out["objective"] = self.objective
        return out


def _check_blocks(net: Network, blocks, require_cover: bool = True):
    normalized = []
    seen = set()
    for blk in blocks:
        nodes = tuple(sorted(int(i) for i in blk))
        if not nodes:
            raise PartitionError("blocks must be nonempty")
        if nodes[0] < 0 or nodes[-1] >= net.n:
            raise PartitionError(f"block {nodes} has out-of-range nodes for n = {net.n}")
        overlap = seen.intersection(nodes)
        if overlap:
            raise PartitionError(f"overlapping blocks: node {min(overlap)} appears twice")
        seen.update(nodes)
        normalized.append(nodes)
    if require_cover and len(seen) != net.n:
        missing = sorted(set(range(net.n)) - seen)
        raise PartitionError(f"blocks do not cover all nodes; missing {missing[:5]}")
    return tuple(normalized)


def boundary_nodes(net: Network, blocks) -> tuple:
    """Per-block sets of nodes with an incoming weight from outside their block.

    Node i in block k is a boundary node exactly when A[i, j] != 0 for some
    j outside block k (row scan on the weight matrix).
    """
    normalized = _check_blocks(net, blocks)
    out = []
    for blk in normalized:
        inside = np.zeros(net.n, dtype=bool)
        inside[list(blk)] = True
        rows = net.A[list(blk)][:, ~inside]
        has_out = np.any(rows != 0, axis=1)
        out.append(tuple(np.asarray(blk)[has_out]))
    return tuple(tuple(int(i) for i in psi) for psi in out)


def make_partition(net: Network, blocks) -> Partition:
    """Validate blocks (disjoint cover) and compute boundary sets and permutation."""
    normalized = _check_blocks(net, blocks)
    psi = boundary_nodes(net, normalized)
    permutation = tuple(i for blk in normalized for i in blk)
    return Partition(blocks=normalized, boundary=psi, permutation=permutation)


def _symmetrized_weights(A: np.ndarray) -> np.ndarray:
    return 0.5 * (np.abs(A) + np.abs(A.T))


def fiedler_bipartition(net: Network, block=None) -> tuple:
    """Split a (sub)graph in two by the sign pattern of its Fiedler eigenvector.

    Directed weights are symmetrized as (|A| + |A'|)/2 before forming the
    Laplacian.  Entries of the eigenvector within 1e-12 of zero go to the
    positive side; the eigenvector sign is canonicalized so the first
    significant entry is positive.
    """
    nodes = tuple(range(net.n)) if block is None else tuple(sorted(int(i) for i in block))
    if len(nodes) < 2:
        raise PartitionError("cannot bipartition a block with fewer than two nodes")
    S = _symmetrized_weights(net.A[np.ix_(nodes, nodes)])
    if not is_connected(S):
        raise PartitionError("cannot bipartition a disconnected block")
    np.fill_diagonal(S, 0.0)
    L = np.diag(S.sum(axis=1)) - S
    _, vecs = np.linalg.eigh(L)
    v = vecs[:, 1]
    significant = np.abs(v) >= _FIEDLER_ZERO_TOL
    first = int(np.argmax(significant))
    if v[first] < 0:
        v = -v
    negative = v < -_FIEDLER_ZERO_TOL
    pos = tuple(n_i for n_i, neg in zip(nodes, negative) if not neg)
    neg = tuple(n_i for n_i, neg in zip(nodes, negative) if neg)
    if not pos or not neg:
        raise PartitionError("degenerate Fiedler vector produced an empty side")
    return pos, neg


def _local_control_gramian_lambda_min(A_blk, local_nodes, horizon) -> float:
    if not local_nodes:
        return 0.0
    nb = A_blk.shape[0]
    B = np.zeros((nb, len(local_nodes)))
    B[list(local_nodes), np.arange(len(local_nodes))] = 1.0
    if horizon == INFINITE:
        W = _solve_lyapunov(A_blk, B @ B.T)
    else:
        W = _gramian_sum(A_blk, B @ B.T, int(horizon))
    return float(max(np.linalg.eigvalsh(0.5 * (W + W.T))[0], 0.0))


def _modal_scores(A_blk: np.ndarray) -> np.ndarray:
    """Per-node score sum_j (1 - |lambda_j|^2) |v_ij|^2 from unit eigenvectors."""
    if is_symmetric(A_blk):
        w, V = np.linalg.eigh(A_blk)
        return (V**2) @ (1.0 - w**2)
    w, V = np.linalg.eig(A_blk)
    V = V / np.linalg.norm(V, axis=0, keepdims=True)
    return np.real((np.abs(V) ** 2) @ (1.0 - np.abs(w) ** 2))


def _cluster_boundary(net: Network, blocks) -> list:
    out = []
    for blk in blocks:
        inside = np.zeros(net.n, dtype=bool)
        inside[list(blk)] = True
        rows = net.A[list(blk)][:, ~inside]
        has_out = np.any(rows != 0, axis=1)
        out.append(set(np.asarray(blk)[has_out]))
    return out


def select_by_partitioning(
    net: Network,
    m: int,
    horizon=INFINITE,
    tol: float = 1e-10,
    cluster_horizon: int | None = None,
) -> SelectionResult:
    """Grow a control set by recursively Fiedler-splitting the least controllable cluster.

    Each iteration splits the cluster whose boundary-controlled Gramian has
    the smallest lambda_min, and adds the new cut's boundary nodes to the
    control set.  On overshoot the last cut's boundary nodes are removed (and
    the reported partition reverts to the pre-split one); on undershoot the
    set is padded with the best modal-score nodes of the least controllable
    clusters.  The recorded lambda_min history (whole-network Gramian at
    ``horizon``) is nondecreasing because the set only grows before the trim.

    Per-cluster Gramians default to a horizon equal to the cluster size,
    which makes them positive definite whenever the cluster is controllable;
    pass ``cluster_horizon`` to override.
    """
    horizon = check_horizon(horizon)
    if m < 1:
        raise ValueError("must select at least one control node")
    if not is_connected(_symmetrized_weights(net.A)):
        raise PartitionError("recursive selection requires a connected network")
    if m >= net.n:
        blocks = (tuple(range(net.n)),)
        full = ControlSet(tuple(range(net.n)))
        report = _whole_network_lambda_min(net, full, horizon)
        return SelectionResult(
            control_set=full,
            method="partition",
            partition=make_partition(net, blocks),
            lambda_min_history=(report,),
            cluster_lambda_min=(report,),
        )

    blocks = [tuple(range(net.n))]
    selected: set = set()
    history: list = []
    warning = None
    last_cut: set = set()
    prev_blocks = list(blocks)

    def cluster_lambdas(blks):
        psis = _cluster_boundary(net, blks)
        lams = []
        for blk, psi in zip(blks, psis):
            A_blk = net.A[np.ix_(blk, blk)]
            local = [blk.index(i) for i in sorted(psi)]
            T_blk = cluster_horizon if cluster_horizon is not None else len(blk)
            lams.append(_local_control_gramian_lambda_min(A_blk, local, T_blk))
        return lams

    while len(selected) < m:
        lams = cluster_lambdas(blocks)
        order = sorted(range(len(blocks)), key=lambda i: (lams[i], blocks[i][0]))
        chosen = None
        for idx in order:
            blk = blocks[idx]
            if len(blk) < 2:
                continue
            S = _symmetrized_weights(net.A[np.ix_(blk, blk)])
            if not is_connected(S):
                continue
            chosen = idx
            break
        if chosen is None or (order and chosen != order[0]):
            # The least controllable cluster cannot be split further; stop
            # refining and fill the remaining slots heuristically.
            warning = "least controllable cluster is not splittable; padded heuristically"
            break
        side_a, side_b = fiedler_bipartition(net, blocks[chosen])
        cut = set()
        for here, there in ((side_a, side_b), (side_b, side_a)):
            cols = list(there)
            rows = net.A[list(here)][:, cols]
            cut.update(np.asarray(here)[np.any(rows != 0, axis=1)])
        prev_blocks = list(blocks)
        first, second = (side_a, side_b) if side_a[0] < side_b[0] else (side_b, side_a)
        blocks[chosen : chosen + 1] = [first, second]
        last_cut = set(int(i) for i in cut)
        selected |= last_cut
        history.append(_whole_network_lambda_min(net, ControlSet(tuple(sorted(selected))), horizon))

    padded = False
    if len(selected) > m:
        selected -= last_cut
        blocks = prev_blocks
    if len(selected) < m:
        padded = True
        lams = cluster_lambdas(blocks)
        order = sorted(range(len(blocks)), key=lambda i: (lams[i], blocks[i][0]))
        for idx in order:
            if len(selected) >= m:
                break
            blk = blocks[idx]
            scores = _modal_scores(net.A[np.ix_(blk, blk)])
            ranked = sorted(range(len(blk)), key=lambda i: (-scores[i], blk[i]))
            for i in ranked:
                if len(selected) >= m:
                    break
                if blk[i] not in selected:
                    selected.add(blk[i])

    control_set = ControlSet(tuple(sorted(selected)))
    part = make_partition(net, blocks)
    cluster_lams = []
    for blk in part.blocks:
        A_blk = net.A[np.ix_(blk, blk)]
        local = [blk.index(i) for i in blk if i in selected]
        T_blk = cluster_horizon if cluster_horizon is not None else len(blk)
        cluster_lams.append(_local_control_gramian_lambda_min(A_blk, local, T_blk))
    return SelectionResult(
        control_set=control_set,
        method="partition",
        partition=part,
        lambda_min_history=tuple(history),
        cluster_lambda_min=tuple(cluster_lams),
        padded=padded,
        warning=warning,
    )


def _whole_network_lambda_min(net: Network, controls: ControlSet, horizon) -> float:
    if horizon == INFINITE:
        return gramian_infinite(net, controls).lambda_min
    return gramian_finite(net, controls, int(horizon)).lambda_min


def modal_select(net: Network, k: int) -> SelectionResult:
    """Pick the k nodes with the largest modal controllability scores.

    The score of node i is sum_j (1 - lambda_j^2) v_ij^2 over an orthonormal
    eigenbasis, so ordering the scores solves the max-min selection exactly.
    Only symmetric networks are supported; extending the scores through a
    general eigenbasis is out of scope here.
    """
    if not is_symmetric(net.A):
        raise ValueError(
            "modal selection requires a symmetric weight matrix; "
            "see spectral_facts for general eigenstructure"
        )
    if not 1 <= k <= net.n:
        raise ValueError(f"k must be in [1, {net.n}], got {k}")
    scores = _modal_scores(net.A)
    ranked = sorted(range(net.n), key=lambda i: (-scores[i], i))
    return SelectionResult(control_set=ControlSet(tuple(sorted(ranked[:k]))), method="modal")


def trace_optimal_select(net: Network, m: int, horizon) -> SelectionResult:
    """Maximize the Gramian trace: pick the m largest diagonal entries of sum_t A^(2t).

    For an infinite horizon on a Schur-stable symmetric network the power sum
    is (I - A^2)^{-1}.  Ties break toward lower node indices.
    """
    if not is_symmetric(net.A):
        raise ValueError("trace-optimal selection requires a symmetric weight matrix")
    if not 1 <= m <= net.n:
        raise ValueError(f"m must be in [1, {net.n}], got {m}")
    horizon = check_horizon(horizon)
    A2 = net.A @ net.A
    if horizon == INFINITE:
        if np.max(np.abs(np.linalg.eigvalsh(net.A))) >= 1.0 - STABILITY_MARGIN:
            raise UnstableError("infinite-horizon trace selection requires Schur stability")
        M = scipy.linalg.solve(np.eye(net.n) - A2, np.eye(net.n), assume_a="pos")
    else:
        M = _matrix_geometric_sum(A2, int(horizon))
    diag = np.diag(M)
    ranked = sorted(range(net.n), key=lambda i: (-diag[i], i))
    chosen = tuple(sorted(ranked[:m]))
    return SelectionResult(
        control_set=ControlSet(chosen),
        method="trace",
        objective=float(diag[list(chosen)].sum()),
    )


def _resolve_workers(workers) -> int:
    if workers is None:
        workers = os.environ.get("NETCTL_THREADS", "1")
    try:
        return max(1, int(workers))
    except ValueError:
        return 1


def _make_subset_evaluator(net: Network, horizon, metric: str):
    """Per-subset Gramian metric evaluator.

    Symmetric networks get a closed form in the eigenbasis: the transformed
    Gramian is an elementwise product of sum-of-outer-products with a
    geometric factor, and every supported metric is invariant under the
    orthogonal change of basis.
    """
    A = net.A
    n = net.n
    if is_symmetric(A):
        w, V = np.linalg.eigh(A)
        prod = np.outer(w, w)
        if horizon == INFINITE:
            if np.max(np.abs(w)) >= 1.0 - STABILITY_MARGIN:
                raise UnstableError("infinite-horizon search requires Schur stability")
            F = 1.0 / (1.0 - prod)
        else:
            T = int(horizon)
            near_one = np.abs(1.0 - prod) < 1e-14
            safe = np.where(near_one, 1.0, 1.0 - prod)
            F = np.where(near_one, float(T), (1.0 - prod**T) / safe)
        G = (V[:, :, None] * V[:, None, :]) * F[None, :, :]

        def gram(subset):
            return G[list(subset)].sum(axis=0)

    else:
        if horizon == INFINITE and np.max(np.abs(np.linalg.eigvals(A))) >= 1.0 - STABILITY_MARGIN:
            raise UnstableError("infinite-horizon search requires Schur stability")

        def gram(subset):
            B = np.zeros((n, len(subset)))
            B[list(subset), np.arange(len(subset))] = 1.0
            if horizon == INFINITE:
                return _solve_lyapunov(A, B @ B.T)
            return _gramian_sum(A, B @ B.T, int(horizon))

    def value(subset):
        Wt = gram(subset)
        if metric == "trace":
            return float(np.trace(Wt))
        evals = np.linalg.eigvalsh(0.5 * (Wt + Wt.T))
        if metric == "lambda_min":
            return float(evals[0])
        if evals[0] <= 0.0:
            return -math.inf
        if metric == "trace_inv":
            return float(-np.sum(1.0 / evals))
        return float(np.sum(np.log(evals)))  # log_det

    return value


def brute_force_select(
    net: Network,
    m: int,
    horizon,
    metric: str = "lambda_min",
    cap: int = DEFAULT_SUBSET_CAP,
    workers: int | None = None,
) -> SelectionResult:
    """Exact search over all node subsets of size m for the best Gramian metric.

    ``lambda_min``, ``trace`` and ``log_det`` are maximized; ``trace_inv`` is
    minimized (the stored objective is its negative, so the argmax convention
    is uniform).  Ties break toward the lexicographically smallest subset.
    The enumeration refuses to start beyond ``cap`` subsets; worker threads
    (default from NETCTL_THREADS) only split the enumeration, the reduction
    order is fixed.
    """
    if metric not in METRICS:
        raise ValueError(f"unknown metric {metric!r}; expected one of {METRICS}")
    if not 1 <= m <= net.n:
        raise ValueError(f"m must be in [1, {net.n}], got {m}")
    horizon = check_horizon(horizon)
    total = math.comb(net.n, m)
    if total > cap:
        raise SubsetCapError(
            f"{total} subsets of size {m} exceed the cap of {cap} Gramian solves; "
            "use select_by_partitioning instead"
        )
    evaluate = _make_subset_evaluator(net, horizon, metric)

    def eval_chunk(chunk):
        best_score = -math.inf
        best_subset = None
        for subset in chunk:
            score = evaluate(subset)
            if score > best_score:
                best_score = score
                best_subset = subset
        return best_score, best_subset

    subsets = itertools.combinations(range(net.n), m)
    chunks = iter(lambda: list(itertools.islice(subsets, 2048)), [])
    n_workers = _resolve_workers(workers)
    if n_workers == 1:
        results = map(eval_chunk, chunks)
        best_score, best_subset = -math.inf, None
        for score, subset in results:
            if subset is not None and score > best_score:
                best_score, best_subset = score, subset
    else:
        with ThreadPoolExecutor(max_workers=n_workers) as pool:
            best_score, best_subset = -math.inf, None
            for score, subset in pool.map(eval_chunk, chunks):
                if subset is not None and score > best_score:
                    best_score, best_subset = score, subset
    return SelectionResult(
        control_set=ControlSet(best_subset),
        method="brute",
        objective=best_score,
    )

import itertools
import math

import numpy as np
import pytest

from helpers import random_control_set, random_symmetric_stable, ring_with_chords
from netctl.errors import PartitionError, SubsetCapError, UnstableError
from netctl.gramian import INFINITE, gramian_finite, gramian_infinite
from netctl.netmodel import (
    asymmetric_line_network,
    circulant_network,
    network_from_adjacency,
)
from netctl.partition import (
    boundary_nodes,
    brute_force_select,
    fiedler_bipartition,
    make_partition,
    modal_select,
    select_by_partitioning,
    trace_optimal_select,
)


def path_network(n, weight=0.3, self_loop=0.3):
    A = np.zeros((n, n))
    i = np.arange(n - 1)
    A[i, i + 1] = A[i + 1, i] = weight
    np.fill_diagonal(A, self_loop)
    return network_from_adjacency(A)


class TestFiedlerBipartition:
    def test_path_splits_in_the_middle(self):
        net = path_network(4)
        side_a, side_b = fiedler_bipartition(net)
        assert {frozenset(side_a), frozenset(side_b)} == {frozenset({0, 1}), frozenset({2, 3})}

    def test_two_cliques_split_at_the_bridge(self):
        A = np.zeros((8, 8))
        for block in (range(4), range(4, 8)):
            for i, j in itertools.combinations(block, 2):
                A[i, j] = A[j, i] = 1.0
        A[3, 4] = A[4, 3] = 0.2
        net = network_from_adjacency(A)
        side_a, side_b = fiedler_bipartition(net)
        assert {frozenset(side_a), frozenset(side_b)} == {
            frozenset({0, 1, 2, 3}),
            frozenset({4, 5, 6, 7}),
        }
        # Cross-check against an independently assembled Laplacian eigensolve.
        L = np.diag(A.sum(axis=1)) - A
        fiedler = np.linalg.eigh(L)[1][:, 1]
        expected_a = frozenset(np.flatnonzero(fiedler >= 0).tolist())
        assert frozenset(side_a) in (expected_a, frozenset(range(8)) - expected_a)

    def test_ring_splits_into_contiguous_arcs(self):
        net = circulant_network(24, 0.5)
        side_a, side_b = fiedler_bipartition(net)
        for side in (side_a, side_b):
            on_ring = np.zeros(24, dtype=bool)
            on_ring[list(side)] = True
            breaks = sum(1 for i in range(24) if on_ring[i] and not on_ring[(i + 1) % 24])
            assert breaks == 1
        assert abs(len(side_a) - len(side_b)) <= 2

    def test_restricted_block(self):
        net = path_network(6)
        side_a, side_b = fiedler_bipartition(net, block=(0, 1, 2, 3))
        assert set(side_a) | set(side_b) == {0, 1, 2, 3}

    def test_disconnected_rejected(self):
        A = np.zeros((4, 4))
        A[0, 1] = A[1, 0] = 1.0
        A[2, 3] = A[3, 2] = 1.0
        with pytest.raises(PartitionError, match="disconnected"):
            fiedler_bipartition(network_from_adjacency(A))

    def test_singleton_rejected(self):
        with pytest.raises(PartitionError):
            fiedler_bipartition(path_network(3), block=(1,))

    def test_invariant_under_positive_rescaling(self):
        net = path_network(7)
        scaled = network_from_adjacency(3.5 * net.A)
        assert fiedler_bipartition(net) == fiedler_bipartition(scaled)

    def test_deterministic(self):
        net = ring_with_chords(np.random.default_rng(0), 12, chords=3)
        assert fiedler_bipartition(net) == fiedler_bipartition(net)


class TestBoundaryNodes:
    def test_single_block_has_no_boundary(self):
        net = circulant_network(6, 0.5)
        assert boundary_nodes(net, [range(6)]) == ((),)

    def test_ring_blocks_expose_their_ends(self):
        net = circulant_network(24, 0.5)
        blocks = [tuple(range(i * 4, (i + 1) * 4)) for i in range(6)]
        psi = boundary_nodes(net, blocks)
        assert psi == tuple((blk[0], blk[-1]) for blk in blocks)
        assert sum(len(p) for p in psi) == 12

    def test_block_diagonal_has_no_boundary(self):
        A = np.zeros((5, 5))
        A[:2, :2] = 0.3
        A[2:, 2:] = 0.2
        net = network_from_adjacency(A)
        assert boundary_nodes(net, [(0, 1), (2, 3, 4)]) == ((), ())

    def test_row_scan_is_directional(self):
        # Node 0 listens to node 2 across the cut; node 2 hears nothing.
        A = np.zeros((3, 3))
        A[0, 2] = 0.5
        net = network_from_adjacency(A)
        psi = boundary_nodes(net, [(0, 1), (2,)])
        assert psi == ((0,), ())

    def test_overlap_rejected(self):
        net = circulant_network(4, 0.5)
        with pytest.raises(PartitionError, match="overlap"):
            boundary_nodes(net, [(0, 1), (1, 2, 3)])

    def test_missing_nodes_rejected(self):
        net = circulant_network(4, 0.5)
        with pytest.raises(PartitionError, match="cover"):
            boundary_nodes(net, [(0, 1), (2,)])


class TestMakePartition:
    def test_permutation_realizes_block_form(self):
        rng = np.random.default_rng(1)
        net = ring_with_chords(rng, 10, chords=4)
        part = make_partition(net, [(3, 1, 0), (2, 4, 5), (6, 7, 8, 9)])
        assert part.blocks == ((0, 1, 3), (2, 4, 5), (6, 7, 8, 9))
        perm = list(part.permutation)
        P = net.A[np.ix_(perm, perm)]
        sizes = [len(b) for b in part.blocks]
        offset = 0
        for blk, size in zip(part.blocks, sizes):
            assert np.array_equal(
                P[offset : offset + size, offset : offset + size],
                net.A[np.ix_(blk, blk)],
            )
            offset += size

    def test_serialization_is_one_based(self):
        net = circulant_network(4, 0.5)
        part = make_partition(net, [(0, 1), (2, 3)])
        d = part.to_dict()
        assert d["blocks"] == [[1, 2], [3, 4]]


class TestSelectByPartitioning:
    def test_zero_request_rejected(self):
        with pytest.raises(ValueError):
            select_by_partitioning(path_network(4), 0)

    def test_saturation_returns_everything(self):
        net = path_network(5)
        result = select_by_partitioning(net, 7, horizon=8)
        assert result.control_set.nodes == tuple(range(5))

    def test_path_first_cut_takes_the_middle(self):
        net = path_network(8)
        result = select_by_partitioning(net, 2, horizon=10)
        assert result.control_set.nodes == (3, 4)
        assert result.partition.blocks == ((0, 1, 2, 3), (4, 5, 6, 7))
        assert not result.padded

    def test_padding_to_odd_count(self):
        net = path_network(8)
        result = select_by_partitioning(net, 3, horizon=10)
        assert len(result.control_set) == 3
        assert result.padded
        assert {3, 4} <= set(result.control_set.nodes)

    def test_history_is_nondecreasing(self):
        rng = np.random.default_rng(2)
        for trial in range(3):
            net = ring_with_chords(rng, 14, chords=4)
            result = select_by_partitioning(net, 8, horizon=INFINITE)
            history = result.lambda_min_history
            assert len(history) >= 1
            assert all(a <= b + 1e-12 for a, b in zip(history, history[1:]))

    def test_exact_count_and_boundary_containment_pre_trim(self):
        net = circulant_network(24, 0.5)
        result = select_by_partitioning(net, 12, horizon=INFINITE)
        assert len(result.control_set) == 12
        if not result.padded:
            covered = {i for psi in result.partition.boundary for i in psi}
            assert covered <= set(result.control_set.nodes)

    def test_beats_random_median(self):
        rng = np.random.default_rng(3)
        net = ring_with_chords(rng, 16, chords=2)
        m = 6
        chosen = select_by_partitioning(net, m, horizon=INFINITE)
        lam = gramian_infinite(net, chosen.control_set).lambda_min
        draws = [
            gramian_infinite(net, random_control_set(rng, 16, m)).lambda_min for _ in range(15)
        ]
        assert lam + 1e-9 >= float(np.median(draws))

    def test_disconnected_network_rejected(self):
        A = np.zeros((4, 4))
        A[0, 1] = A[1, 0] = 0.4
        A[2, 3] = A[3, 2] = 0.4
        with pytest.raises(PartitionError):
            select_by_partitioning(network_from_adjacency(A), 2)

    def test_cluster_report_present(self):
        net = path_network(8)
        result = select_by_partitioning(net, 2, horizon=10)
        assert result.cluster_lambda_min is not None
        assert len(result.cluster_lambda_min) == len(result.partition.blocks)


class TestModalSelect:
    def test_two_mode_example(self):
        net = network_from_adjacency(np.diag([0.5, 0.25]))
        result = modal_select(net, 1)
        assert result.control_set.nodes == (1,)

    def test_zero_dynamics_breaks_ties_by_index(self):
        net = network_from_adjacency(np.zeros((5, 5)))
        assert modal_select(net, 2).control_set.nodes == (0, 1)

    def test_full_request_returns_everything(self):
        net = random_symmetric_stable(np.random.default_rng(4), 6)
        assert modal_select(net, 6).control_set.nodes == tuple(range(6))

    def test_asymmetric_rejected(self):
        with pytest.raises(ValueError, match="symmetric"):
            modal_select(asymmetric_line_network(4), 1)

    def test_equivariant_under_relabeling(self):
        rng = np.random.default_rng(5)
        net = random_symmetric_stable(rng, 7)
        perm = rng.permutation(7)
        relabeled = network_from_adjacency(net.A[np.ix_(perm, perm)])
        base = modal_select(net, 3).control_set.nodes
        moved = modal_select(relabeled, 3).control_set.nodes
        assert {int(perm[i]) for i in moved} == set(base)


class TestTraceOptimalSelect:
    def test_two_mode_example(self):
        net = network_from_adjacency(np.diag([0.5, 0.25]))
        result = trace_optimal_select(net, 1, INFINITE)
        assert result.control_set.nodes == (0,)
        assert result.objective == pytest.approx(4.0 / 3.0, rel=1e-12)

    def test_ring_is_indifferent(self):
        # Every node has the same diagonal power-sum entry (to fp noise), so
        # any placement achieves the optimal trace.
        net = circulant_network(12, 0.6)
        M = np.linalg.inv(np.eye(12) - net.A @ net.A)
        assert np.max(np.diag(M)) - np.min(np.diag(M)) < 1e-12
        result = trace_optimal_select(net, 4, INFINITE)
        arbitrary = gramian_infinite(net, (0, 1, 2, 3)).trace
        assert result.objective == pytest.approx(arbitrary, rel=1e-12)

    def test_matches_exhaustive_maximum(self):
        rng = np.random.default_rng(6)
        for _ in range(6):
            n = int(rng.integers(3, 9))
            net = random_symmetric_stable(rng, n)
            m = int(rng.integers(1, n + 1))
            chosen = trace_optimal_select(net, m, INFINITE)
            best = brute_force_select(net, m, INFINITE, metric="trace")
            assert chosen.objective == pytest.approx(best.objective, rel=1e-12)

    def test_finite_horizon_matches_power_sum(self):
        rng = np.random.default_rng(7)
        net = random_symmetric_stable(rng, 6)
        T = 5
        M = np.zeros((6, 6))
        for tau in range(T):
            M += np.linalg.matrix_power(net.A, 2 * tau)
        diag = np.diag(M)
        expected = tuple(sorted(sorted(range(6), key=lambda i: (-diag[i], i))[:2]))
        assert trace_optimal_select(net, 2, T).control_set.nodes == expected

    def test_unstable_infinite_rejected(self):
        with pytest.raises(UnstableError):
            trace_optimal_select(circulant_network(5, 1.0), 1, INFINITE)

    def test_asymmetric_rejected(self):
        with pytest.raises(ValueError, match="symmetric"):
            trace_optimal_select(asymmetric_line_network(4), 1, 5)


class TestBruteForceSelect:
    def test_full_set_for_every_metric(self):
        net = random_symmetric_stable(np.random.default_rng(8), 5)
        for metric in ("lambda_min", "trace", "trace_inv", "log_det"):
            result = brute_force_select(net, 5, 7, metric=metric)
            assert result.control_set.nodes == tuple(range(5))

    def test_best_singleton_matches_direct_sweep(self):
        net = circulant_network(10, 0.75)
        result = brute_force_select(net, 1, INFINITE)
        best = max(gramian_infinite(net, (k,)).lambda_min for k in range(10))
        assert result.objective == pytest.approx(best, rel=1e-10)

    def test_block_endpoints_optimal_on_ring(self):
        net = circulant_network(16, 0.5)
        result = brute_force_select(net, 8, INFINITE)
        endpoints = (0, 3, 4, 7, 8, 11, 12, 15)
        lam_endpoints = gramian_infinite(net, endpoints).lambda_min
        assert lam_endpoints == pytest.approx(result.objective, rel=1e-10)

    def test_cap_enforced(self):
        net = random_symmetric_stable(np.random.default_rng(9), 12)
        with pytest.raises(SubsetCapError, match="cap"):
            brute_force_select(net, 6, 5, cap=100)

    def test_fast_path_matches_direct_gramian(self):
        rng = np.random.default_rng(10)
        net = random_symmetric_stable(rng, 9)
        for horizon in (4, INFINITE):
            from netctl.partition import _make_subset_evaluator

            evaluate = _make_subset_evaluator(net, horizon, "lambda_min")
            for _ in range(10):
                subset = random_control_set(rng, 9, int(rng.integers(1, 5)))
                if horizon == INFINITE:
                    direct = gramian_infinite(net, subset).lambda_min
                else:
                    direct = gramian_finite(net, subset, horizon).lambda_min
                assert evaluate(subset) == pytest.approx(direct, rel=1e-9, abs=1e-13)

    def test_asymmetric_general_path(self):
        net = asymmetric_line_network(6)
        result = brute_force_select(net, 2, 6)
        best = -math.inf
        arg = None
        for subset in itertools.combinations(range(6), 2):
            lam = gramian_finite(net, subset, 6).lambda_min
            if lam > best:
                best, arg = lam, subset
        assert result.control_set.nodes == arg
        assert result.objective == pytest.approx(best, rel=1e-10)

    def test_dominates_heuristics(self):
        rng = np.random.default_rng(11)
        net = ring_with_chords(rng, 10, chords=2)
        m = 3
        exact = brute_force_select(net, m, INFINITE).objective
        heuristic = select_by_partitioning(net, m, horizon=INFINITE)
        lam_heuristic = gramian_infinite(net, heuristic.control_set).lambda_min
        draws = [
            gramian_infinite(net, random_control_set(rng, 10, m)).lambda_min for _ in range(15)
        ]
        assert exact + 1e-12 >= lam_heuristic
        assert exact + 1e-12 >= float(np.median(draws))

    def test_threaded_enumeration_matches_serial(self):
        net = random_symmetric_stable(np.random.default_rng(12), 10)
        serial = brute_force_select(net, 3, INFINITE, workers=1)
        threaded = brute_force_select(net, 3, INFINITE, workers=4)
        assert serial.control_set.nodes == threaded.control_set.nodes
        assert serial.objective == threaded.objective

    def test_trace_inverse_prefers_nonsingular(self):
        net = path_network(4)
        result = brute_force_select(net, 2, 4, metric="trace_inv")
        rep = gramian_finite(net, result.control_set, 4)
        assert rep.controllable
        assert result.objective == pytest.approx(-rep.trace_inverse, rel=1e-9)

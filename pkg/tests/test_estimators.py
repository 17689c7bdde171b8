import numpy as np
import pytest
from sklearn.base import clone

from helpers import random_symmetric_stable, ring_with_chords
from netctl.estimators import (
    BruteForceSelector,
    ModalSelector,
    PartitionSelector,
    TraceOptimalSelector,
)
from netctl.gramian import INFINITE
from netctl.partition import (
    brute_force_select,
    modal_select,
    select_by_partitioning,
    trace_optimal_select,
)


class TestEstimatorContract:
    @pytest.mark.parametrize(
        "estimator",
        [
            PartitionSelector(m=3),
            ModalSelector(k=2),
            TraceOptimalSelector(m=2),
            BruteForceSelector(m=2, horizon=4),
        ],
    )
    def test_get_params_roundtrip_and_clone(self, estimator):
        params = estimator.get_params()
        rebuilt = clone(estimator)
        assert rebuilt.get_params() == params

    def test_set_params(self):
        selector = ModalSelector(k=1)
        selector.set_params(k=4)
        assert selector.k == 4

    def test_fit_returns_self_and_sets_attributes(self):
        net = random_symmetric_stable(np.random.default_rng(0), 8)
        selector = ModalSelector(k=3)
        assert selector.fit(net.A) is selector
        assert selector.nodes_.shape == (3,)
        assert selector.n_features_in_ == 8

    def test_accepts_plain_arrays_and_networks(self):
        net = random_symmetric_stable(np.random.default_rng(1), 6)
        from_array = ModalSelector(k=2).fit(np.asarray(net.A)).nodes_
        from_network = ModalSelector(k=2).fit(net).nodes_
        assert np.array_equal(from_array, from_network)

    def test_rejects_non_square_input(self):
        with pytest.raises(ValueError):
            ModalSelector(k=1).fit(np.zeros((3, 4)))


class TestEstimatorsMatchFunctions:
    def test_partition_selector(self):
        net = ring_with_chords(np.random.default_rng(2), 12, chords=2)
        est = PartitionSelector(m=4, horizon=INFINITE).fit(net)
        ref = select_by_partitioning(net, 4, horizon=INFINITE)
        assert tuple(est.nodes_) == ref.control_set.nodes
        assert est.partition_.blocks == ref.partition.blocks
        assert np.allclose(est.history_, ref.lambda_min_history)

    def test_modal_selector(self):
        net = random_symmetric_stable(np.random.default_rng(3), 9)
        est = ModalSelector(k=3).fit(net)
        assert tuple(est.nodes_) == modal_select(net, 3).control_set.nodes

    def test_trace_selector(self):
        net = random_symmetric_stable(np.random.default_rng(4), 9)
        est = TraceOptimalSelector(m=3, horizon=INFINITE).fit(net)
        assert tuple(est.nodes_) == trace_optimal_select(net, 3, INFINITE).control_set.nodes

    def test_brute_selector(self):
        net = random_symmetric_stable(np.random.default_rng(5), 8)
        est = BruteForceSelector(m=2, horizon=INFINITE).fit(net)
        ref = brute_force_select(net, 2, INFINITE)
        assert tuple(est.nodes_) == ref.control_set.nodes
        assert est.objective_ == ref.objective

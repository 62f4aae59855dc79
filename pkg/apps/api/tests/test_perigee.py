"""
Perigee baseline: memoryless subset scoring.
"""

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from apps.api.tests.conftest import make_batch, matrix_graph
from goldfish.errors import SelectionError
from goldfish.harness.agents import PerigeeAgent
from goldfish.perigee import SubsetAggregate, perigee_select, score_subsets
from goldfish.perigee.subset import block_costs
from goldfish.schemas.experiment import ExperimentConfig
from goldfish.schemas.simulation import EpochBatch
from goldfish.selector.pool import DepletingPool

ROWS = [
    {1: 0.0, 2: 10.0, 3: 20.0, 4: 30.0},
    {1: 0.0, 2: 5.0, 3: 8.0, 4: 50.0},
    {1: 0.0, 2: 12.0, 3: 3.0, 4: 40.0},
]


def test_every_subset_is_scored_in_lexicographic_order() -> None:
    scored = score_subsets(make_batch(0, [4, 3, 2, 1], ROWS), 3)
    assert [s.subset for s in scored] == [(1, 2, 3), (1, 2, 4), (1, 3, 4), (2, 3, 4)]


def test_single_peer_sums_by_hand() -> None:
    scored = score_subsets(make_batch(0, [1, 2, 3, 4], ROWS), 1, SubsetAggregate.SUM)
    assert {s.subset[0]: s.score for s in scored} == {1: 0.0, 2: 27.0, 3: 31.0, 4: 120.0}


def test_pairs_take_the_faster_peer_per_block() -> None:
    scored = score_subsets(make_batch(0, [1, 2, 3, 4], ROWS), 2, "sum")
    by_subset = {s.subset: s.score for s in scored}
    assert by_subset[(2, 3)] == pytest.approx(10 + 5 + 3)
    assert by_subset[(3, 4)] == pytest.approx(20 + 8 + 3)


def test_p90_aggregate_uses_numpy_percentile() -> None:
    scored = score_subsets(make_batch(0, [1, 2, 3, 4], ROWS), 1, "p90")
    assert {s.subset[0]: s.score for s in scored}[2] == pytest.approx(
        np.percentile([10.0, 5.0, 12.0], 90)
    )


def test_symbolic_records_cost_the_worst_time_plus_one() -> None:
    batch = make_batch(0, [1, 2, 3, 4], [{1: None, 2: 4.0, 3: 0.0}, {1: None, 2: None}])
    peers, costs = block_costs(batch)
    assert peers == [1, 2, 3, 4]
    # the all-symbolic block carries no number and is dropped
    assert costs.tolist() == [[5.0, 4.0, 0.0, 5.0]]


def test_always_first_peer_is_kept_and_ties_go_lexicographic() -> None:
    pool = DepletingPool(0, 10, np.random.default_rng(0))
    d = perigee_select(make_batch(0, [1, 2, 3, 4], ROWS), 3, pool)
    assert d.exploit == [1, 2, 3]
    assert len(d.explore) == 1
    assert d.explore[0] not in {0, 1, 2, 3}
    assert d.ranked == [1, 2, 3, 4]


def test_perigee_needs_enough_peers() -> None:
    pool = DepletingPool(0, 10, np.random.default_rng(0))
    with pytest.raises(SelectionError):
        perigee_select(make_batch(0, [1, 2], ROWS[:1]), 3, pool)
    with pytest.raises(SelectionError):
        perigee_select(make_batch(0, [1, 2, 3, 4], ROWS), 3, DepletingPool(0, 4, pool.rng))


def test_epoch_without_numbers_keeps_the_first_subset() -> None:
    batch = make_batch(0, [5, 6, 7], [{5: None}, {}])
    d = perigee_select(batch, 2, DepletingPool(0, 10, np.random.default_rng(0)))
    assert d.exploit == [5, 6]


def _random_batch(rng: np.random.Generator, epoch: int) -> EpochBatch:
    peers = [1, 2, 3, 4, 5, 6]
    rows = []
    for _ in range(6):
        times = rng.uniform(0.0, 50.0, size=len(peers))
        times -= times.min()
        row: dict[int, float | None] = {}
        for v, t in zip(peers, times):
            row[v] = None if t > 0 and rng.random() < 0.2 else float(t)
        rows.append(row)
    return make_batch(epoch, peers, rows)


@settings(max_examples=25, deadline=None)
@given(seed=st.integers(min_value=0, max_value=10_000), n_prior=st.integers(1, 4))
def test_earlier_epochs_never_change_the_decision(seed: int, n_prior: int) -> None:
    rng = np.random.default_rng(seed)
    cfg = ExperimentConfig(n_nodes=20, n_publishers=3, n_adapters=1, epochs=8, seeds=[0])
    graph = matrix_graph(np.ones((20, 20)) - np.eye(20))
    current = _random_batch(rng, n_prior)

    fresh = PerigeeAgent(0, cfg, DepletingPool(0, 20, np.random.default_rng(seed)))
    fed = PerigeeAgent(0, cfg, DepletingPool(0, 20, np.random.default_rng(seed)))
    for e in range(n_prior):
        fed.decide(e, _random_batch(rng, e), graph)

    a = fresh.decide(n_prior, current, graph)
    b = fed.decide(n_prior, current, graph)
    assert a is not None and b is not None
    assert a.exploit == b.exploit
    assert a.ranked == b.ranked
    assert a.scores == b.scores

"""
pytest configuration (fixtures).

The API keeps experiment runs in a module-level in-memory store, so tests reset it before
every case to stay independent. Shared builders for small graphs and batches live here too.
"""

from __future__ import annotations

import os

import numpy as np
import pytest

from apps.api import storage
from goldfish.config import is_truthy
from goldfish.netgraph.graph import NetworkGraph
from goldfish.schemas.graph import EdgeRole, LatencyKind, LatencyModel
from goldfish.schemas.simulation import DeliveryRecord, EpochBatch

RUN_SLOW = is_truthy(os.getenv("GOLDFISH_RUN_SLOW"))


@pytest.fixture(autouse=True)
def _reset_store_before_each_test(monkeypatch: pytest.MonkeyPatch) -> None:
    """Fresh experiment store, in-process studies and no debug dumps for every test."""

    storage.BACKEND.reset()
    monkeypatch.setenv("GOLDFISH_THREADS", "1")
    monkeypatch.delenv("GOLDFISH_DEBUG_DIR", raising=False)


def line_graph(n: int, *, spacing: float = 10.0, node_delay_ms: float = 20.0) -> NetworkGraph:
    """Nodes on a horizontal line, i -> i+1 exploit edges (hop delay = spacing + node delay)."""

    latency = LatencyModel(
        kind=LatencyKind.PLANAR2D,
        node_delay_ms=node_delay_ms,
        plane_size=max(spacing * n, 1.0),
        positions=[(spacing * i, 0.0) for i in range(n)],
    )
    g = NetworkGraph(n, max_out=4, max_in=8, latency=latency)
    for i in range(n - 1):
        g.connect(i, i + 1, EdgeRole.EXPLOIT)
    return g


def matrix_graph(
    delays: list[list[float]], *, max_out: int = 4, max_in: int = 8, node_delay_ms: float = 0.0
) -> NetworkGraph:
    """Empty graph over a measured propagation matrix."""

    latency = LatencyModel(
        kind=LatencyKind.MEASURED, node_delay_ms=node_delay_ms, matrix=np.asarray(delays).tolist()
    )
    return NetworkGraph(len(delays), max_out=max_out, max_in=max_in, latency=latency)


def make_batch(
    epoch: int,
    peers: list[int],
    rows: list[dict[int, float | None]],
    *,
    node: int = 0,
    first_block: int | None = None,
) -> EpochBatch:
    """
    Batch from per-block dicts `{peer: rel_time or None}`; `None` means SYMBOLIC and absent
    peers record nothing.
    """

    start = epoch * len(rows) if first_block is None else first_block
    batch = EpochBatch(epoch_id=epoch, node=node, peer_set=list(peers))
    for k, row in enumerate(rows):
        block = start + k
        batch.blocks.append(block)
        for peer, value in row.items():
            batch.records.append(DeliveryRecord(peer=peer, block=block, rel_time_ms=value))
    return batch


def two_epoch_batches() -> list[EpochBatch]:
    """
    Two 4-block epochs seen from one node: peers {1, 2, 4}, then {1, 2, 3}.

    Rows 1 and 4 hold blocks the node got from peer 2 and forwarded to its other peers; in
    row 7 only peer 1 got the block through the node.
    """

    first = make_batch(
        0,
        [1, 2, 4],
        [
            {1: 0.0, 2: 12.0, 4: 30.0},
            {1: None, 2: 0.0, 4: None},
            {1: 0.0, 2: 8.0, 4: 25.0},
            {1: 5.0, 2: 0.0, 4: 40.0},
        ],
    )
    second = make_batch(
        1,
        [1, 2, 3],
        [
            {1: None, 2: 0.0, 3: None},
            {1: 0.0, 2: 10.0, 3: 20.0},
            {1: 0.0, 2: 15.0, 3: 18.0},
            {1: None, 2: 0.0, 3: 7.0},
        ],
    )
    return [first, second]

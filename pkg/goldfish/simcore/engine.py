"""
Round / epoch engine.

One round = one publisher emits one block, which floods over every connection. Because each
per-hop delay is fixed, the flood is fully described by the Dijkstra distances from the
publisher over the undirected view of all connections; no event queue is needed.

What a node observes
--------------------
For node u and each neighbour v (any connection, either direction):

- v's copy arrives at `d(v) + delay(v, u)`
- if u is the *only* neighbour through which v's shortest path arrives (`d(u) + delay(u, v) ==
  d(v)` and no other neighbour w of v has `d(w) + delay(w, v) == d(v)`), v got the block from u
  first and never sends it back: u records (v, block, SYMBOLIC)
- otherwise u records the arrival minus the earliest non-symbolic arrival (fastest peer = 0)

Shortest-path distances satisfy `d(v) <= d(u) + delay(u, v)` for every edge, so "u delivered
first" means equality. When v has several equally fast senders it may well send to u, and the
measurement wins over the marker. A node never observes its own block (every neighbour
received it from the node first), so those rows are all SYMBOLIC.
"""

from __future__ import annotations

import json
import logging
from collections.abc import Iterable, Sequence

import numpy as np

from goldfish.netgraph.graph import NetworkGraph, shortest_paths
from goldfish.schemas.graph import EdgeFilter, NodeId
from goldfish.schemas.simulation import DeliveryRecord, EpochBatch, NodeRole
from goldfish.simcore.publishers import draw_publishers

logger = logging.getLogger("goldfish.simcore")

TIE_EPS = 1e-9


def first_senders(g: NetworkGraph, distances: np.ndarray) -> np.ndarray:
    """
    For every node, the single neighbour its first copy came from, or -1.

    -1 marks the publisher, unreachable nodes and nodes with several equally fast senders.
    """

    delays = g.delays
    sender = np.full(g.n_nodes, -1, dtype=int)
    for v in range(g.n_nodes):
        if not np.isfinite(distances[v]) or distances[v] == 0.0:
            continue
        nb = np.asarray(g.neighbors(v), dtype=int)
        if nb.size == 0:
            continue
        via = distances[nb] + delays[nb, v]
        tight = nb[via <= distances[v] + TIE_EPS]
        if tight.size == 1:
            sender[v] = int(tight[0])
    return sender


def run_round(
    g: NetworkGraph,
    round: int,
    publisher: NodeId,
    *,
    observers: Iterable[NodeId] | None = None,
    distances: np.ndarray | None = None,
    peer_sets: dict[NodeId, list[NodeId]] | None = None,
    senders: np.ndarray | None = None,
) -> dict[NodeId, list[DeliveryRecord]]:
    """
    Delivery records of block `round` at every observer (all nodes by default).

    `distances` may pass precomputed `shortest_paths(g, publisher, ALL)`, `senders` the matching
    `first_senders` and `peer_sets` per-observer neighbour snapshots. An observer the block
    cannot reach records nothing.
    """

    d = distances if distances is not None else shortest_paths(g, publisher, EdgeFilter.ALL)
    if senders is None:
        senders = first_senders(g, d)
    delays = g.delays
    nodes = range(g.n_nodes) if observers is None else observers
    out: dict[NodeId, list[DeliveryRecord]] = {}

    for u in nodes:
        peers = peer_sets[u] if peer_sets is not None else g.neighbors(u)
        if not peers or np.isinf(d[u]):
            out[u] = []
            continue
        if u == publisher:
            out[u] = [DeliveryRecord(peer=v, block=round, rel_time_ms=None) for v in peers]
            continue

        nb = np.asarray(peers)
        symbolic = senders[nb] == u
        arrival = d[nb] + delays[nb, u]
        if symbolic.all():
            symbolic[np.argmin(arrival)] = False
        first = arrival[~symbolic].min()
        rel = arrival - first
        out[u] = [
            DeliveryRecord(peer=int(v), block=round, rel_time_ms=None if s else float(t))
            for v, s, t in zip(nb, symbolic, rel)
        ]
    return out


def epoch_publishers(probs: np.ndarray, n_rounds: int, seed: int, epoch_id: int) -> np.ndarray:
    """Seeded publisher draw for every round of one epoch (one stream per (seed, epoch))."""

    rng = np.random.default_rng([seed, epoch_id])
    return draw_publishers(probs, n_rounds, rng)


def run_epoch(
    g: NetworkGraph,
    roles: Sequence[NodeRole],
    n_rounds: int,
    seed: int,
    *,
    epoch_id: int = 0,
    first_block: int | None = None,
    observers: Iterable[NodeId] | None = None,
) -> dict[NodeId, EpochBatch]:
    """
    Run `n_rounds` rounds on a frozen graph and batch the observations per adaptive node.

    Block ids are a global round counter (`first_block` defaults to `epoch_id * n_rounds`).
    Distances are computed once per distinct publisher since the graph cannot change inside an
    epoch.
    """

    if n_rounds < 1:
        raise ValueError("n_rounds must be >= 1")
    probs = np.array([r.publish_prob for r in sorted(roles, key=lambda r: r.node)])
    watch = (
        sorted(observers) if observers is not None else [r.node for r in roles if r.is_adaptive]
    )
    start = epoch_id * n_rounds if first_block is None else first_block
    peer_sets = {u: g.neighbors(u) for u in watch}
    batches = {
        u: EpochBatch(epoch_id=epoch_id, node=u, peer_set=list(peer_sets[u])) for u in watch
    }

    publishers = epoch_publishers(probs, n_rounds, seed, epoch_id)
    dist_cache: dict[int, np.ndarray] = {}
    sender_cache: dict[int, np.ndarray] = {}
    for offset, pub in enumerate(publishers):
        pub = int(pub)
        if pub not in dist_cache:
            dist_cache[pub] = shortest_paths(g, pub, EdgeFilter.ALL)
            sender_cache[pub] = first_senders(g, dist_cache[pub])
        block = start + offset
        per_node = run_round(
            g,
            block,
            pub,
            observers=watch,
            distances=dist_cache[pub],
            peer_sets=peer_sets,
            senders=sender_cache[pub],
        )
        for u in watch:
            batches[u].blocks.append(block)
            batches[u].records.extend(per_node[u])

    logger.debug(
        json.dumps(
            {
                "event": "epoch_simulated",
                "epoch": epoch_id,
                "rounds": n_rounds,
                "observers": len(watch),
                "distinct_publishers": len(dist_cache),
            }
        )
    )
    return batches


def format_batch_records(batch: EpochBatch) -> list[str]:
    """Debug lines `epoch,block,peer,rel_time|S` in record order."""

    return [
        f"{batch.epoch_id},{rec.block},{rec.peer},"
        + ("S" if rec.rel_time_ms is None else f"{rec.rel_time_ms:.3f}")
        for rec in batch.records
    ]

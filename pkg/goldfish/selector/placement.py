"""
Turning a `SelectorDecision` into graph mutations.

The node drops all of its outgoing connections, then re-opens them in decision order
(exploitation first, then exploration). A target whose in-capacity is full rejects the
connection:

- a rejected exploitation target is replaced by the next candidate in `decision.ranked`
- a rejected exploration target is replaced by the next draw from the node's pool
- if a slot still cannot be filled, one of the node's previous connections is re-opened in
  its place and a warning is logged
"""

from __future__ import annotations

import json
import logging
from collections.abc import Iterator

from goldfish.netgraph.graph import NetworkGraph
from goldfish.schemas.graph import EdgeRole, NodeId
from goldfish.schemas.selection import SelectorDecision
from goldfish.selector.pool import DepletingPool

logger = logging.getLogger("goldfish.selector")


def apply_decision(
    g: NetworkGraph,
    u: NodeId,
    d: SelectorDecision,
    *,
    pool: DepletingPool | None = None,
) -> NetworkGraph:
    """Replace `u`'s out-edges by the decision (mutates and returns `g`)."""

    if d.node != u:
        raise ValueError(f"decision for node {d.node} applied to node {u}")
    previous = g.out_edges(u)
    for v, _ in previous:
        g.disconnect(u, v)

    placed: list[tuple[NodeId, EdgeRole]] = []
    rejected: list[NodeId] = []

    def place(candidates: Iterator[NodeId], role: EdgeRole) -> bool:
        for v in candidates:
            if v == u or any(v == p for p, _ in placed):
                continue
            if g.can_connect(u, v):
                g.connect(u, v, role)
                placed.append((v, role))
                return True
            rejected.append(v)
        return False

    decided = set(d.exploit) | set(d.explore)
    fallbacks = iter([v for v in d.ranked if v not in decided])
    for target in d.exploit:
        if not place(_chain([target], fallbacks), EdgeRole.EXPLOIT):
            _restore(g, u, previous, placed, EdgeRole.EXPLOIT)

    for target in d.explore:
        draws = _pool_draws(pool, u, g, placed) if pool is not None else iter(())
        if not place(_chain([target], draws), EdgeRole.EXPLORE):
            _restore(g, u, previous, placed, EdgeRole.EXPLORE)

    if rejected:
        logger.info(
            json.dumps(
                {"event": "placement_rejected", "node": u, "rejected": sorted(set(rejected))}
            )
        )
    logger.debug(
        json.dumps(
            {
                "event": "decision_applied",
                "node": u,
                "edges": [[v, r.value] for v, r in g.out_edges(u)],
            }
        )
    )
    return g


def _chain(first: list[NodeId], rest: Iterator[NodeId]) -> Iterator[NodeId]:
    yield from first
    yield from rest


def _pool_draws(
    pool: DepletingPool, u: NodeId, g: NetworkGraph, placed: list[tuple[NodeId, EdgeRole]]
) -> Iterator[NodeId]:
    # one sweep of the universe at most: a full pool cycle has then been offered
    for _ in range(g.n_nodes):
        v = pool.draw({u} | {p for p, _ in placed})
        if v is None:
            return
        yield v


def _restore(
    g: NetworkGraph,
    u: NodeId,
    previous: list[tuple[NodeId, EdgeRole]],
    placed: list[tuple[NodeId, EdgeRole]],
    role: EdgeRole,
) -> None:
    used = {v for v, _ in placed}
    for v, _ in previous:
        if v not in used and g.can_connect(u, v):
            g.connect(u, v, role)
            placed.append((v, role))
            logger.warning(
                json.dumps({"event": "placement_kept_previous", "node": u, "peer": v})
            )
            return
    logger.warning(json.dumps({"event": "placement_unfilled", "node": u, "role": role.value}))

"""
Broadcast-latency metrics.

Wasted latency
--------------
For a node, sort publishers by their exploitation-only shortest-path distance and take the
smallest distance that covers 90% of the publishing probability. Do the same with a
hypothetical direct connection to every publisher (`edge_delay(node, p)`) and subtract:

    wasted = coverage_distance(topology) - coverage_distance(direct)

A node that publishes itself is at distance 0 in both cases.

Optimality gap
--------------
λ_i = exploitation-only distance to publisher i - direct delay to i, summed over publishers.
The gap is 0 exactly when the node's exploitation edges realise direct-connection distances.
"""

from __future__ import annotations

import json
import logging
from collections.abc import Sequence
from decimal import ROUND_HALF_EVEN, Decimal

import numpy as np

from goldfish.netgraph.graph import NetworkGraph, shortest_paths
from goldfish.schemas.experiment import PercentileRow
from goldfish.schemas.graph import EdgeFilter, NodeId

logger = logging.getLogger("goldfish.harness")

COVERAGE = 0.9
COVERAGE_SLACK = 1e-12


def coverage_distance(
    distances: np.ndarray, probs: np.ndarray, coverage: float = COVERAGE
) -> float:
    """Smallest distance whose cumulative probability (nearest first) reaches `coverage`."""

    order = np.argsort(distances, kind="stable")
    cum = np.cumsum(probs[order])
    idx = int(np.searchsorted(cum, coverage - COVERAGE_SLACK, side="left"))
    idx = min(idx, len(order) - 1)
    return float(distances[order][idx])


def wasted_latency(
    g: NetworkGraph,
    node: NodeId,
    publish_prob: np.ndarray,
    *,
    distances: np.ndarray | None = None,
) -> float:
    """
    Wasted broadcast latency of `node` (ms); +inf when 90% of the mass is unreachable over
    exploitation edges.

    `distances` may pass a precomputed `shortest_paths(g, node, EXPLOIT_ONLY)`.
    """

    probs = np.asarray(publish_prob, dtype=float)
    if abs(probs.sum() - 1.0) > 1e-9:
        raise ValueError(f"publishing probabilities sum to {probs.sum()}, expected 1")
    pubs = np.flatnonzero(probs > 0)
    d = distances if distances is not None else shortest_paths(g, node, EdgeFilter.EXPLOIT_ONLY)

    topo = coverage_distance(d[pubs], probs[pubs])
    if np.isinf(topo):
        logger.warning(
            json.dumps({"event": "coverage_unreachable", "node": node, "coverage": COVERAGE})
        )
        return float("inf")
    direct = coverage_distance(g.delays[node, pubs], probs[pubs])
    return topo - direct


def optimality_gap(
    g: NetworkGraph,
    node: NodeId,
    publishers: Sequence[NodeId],
    *,
    distances: np.ndarray | None = None,
) -> np.ndarray:
    """Per-publisher λ_i (ms): exploitation-only distance minus direct delay."""

    d = distances if distances is not None else shortest_paths(g, node, EdgeFilter.EXPLOIT_ONLY)
    pubs = np.asarray(publishers, dtype=int)
    return d[pubs] - g.delays[node, pubs]


def round_half_even(value: float | None, places: int) -> float | None:
    """Exact decimal rounding (half to even) of the binary value; None and inf pass through."""

    if value is None or not np.isfinite(value):
        return value
    quantum = Decimal(1).scaleb(-places)
    return float(Decimal(float(value)).quantize(quantum, rounding=ROUND_HALF_EVEN))


def summarize_epoch(epoch: int, values: Sequence[float], *, places: int = 1) -> PercentileRow:
    """25/50/75th percentiles and mean of the finite values (inf counted as unreachable)."""

    arr = np.asarray(values, dtype=float)
    finite = arr[np.isfinite(arr)]
    unreachable = int(arr.size - finite.size)
    if finite.size == 0:
        return PercentileRow(
            epoch=epoch, p25=None, p50=None, p75=None, mean=None, count=0, unreachable=unreachable
        )
    p25, p50, p75 = np.percentile(finite, [25, 50, 75])
    return PercentileRow(
        epoch=epoch,
        p25=round_half_even(p25, places),
        p50=round_half_even(p50, places),
        p75=round_half_even(p75, places),
        mean=round_half_even(float(finite.mean()), places),
        count=int(finite.size),
        unreachable=unreachable,
    )

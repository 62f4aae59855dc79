"""
Perigee-style subset selection (baseline).

Only the current epoch's observations are used. Every combination of `n_exploit` peers from
the current peer set is scored:

    cost(block, S) = min over peers in S of the peer's relative time for that block
    score(S)       = aggregate of cost over blocks (90th percentile by default, or sum)

A SYMBOLIC record costs the block's worst observed relative time + 1 ms: the peer was
demonstrably not the fastest. Blocks without any numeric record are skipped. The subset with
the lowest score wins; ties go to the lexicographically least subset.
"""

from __future__ import annotations

from dataclasses import dataclass
from enum import Enum
from itertools import combinations

import numpy as np

from goldfish.errors import SelectionError
from goldfish.schemas.graph import NodeId
from goldfish.schemas.selection import SelectorDecision
from goldfish.schemas.simulation import EpochBatch
from goldfish.selector.altruistic import draw_explore
from goldfish.selector.pool import DepletingPool

SYMBOLIC_PENALTY_MS = 1.0


class SubsetAggregate(str, Enum):
    P90 = "p90"
    SUM = "sum"


@dataclass(frozen=True, slots=True)
class SubsetScore:
    subset: tuple[NodeId, ...]
    score: float


def block_costs(batch: EpochBatch) -> tuple[list[NodeId], np.ndarray]:
    """
    Per-block, per-peer cost matrix (blocks without numeric records dropped).

    Columns follow the ascending peer set.
    """

    peers = sorted(batch.peer_set)
    col = {v: j for j, v in enumerate(peers)}
    rows: list[np.ndarray] = []
    for block, records in batch.records_by_block().items():
        numeric = [r.rel_time_ms for r in records if r.rel_time_ms is not None]
        if not numeric:
            continue
        penalty = max(numeric) + SYMBOLIC_PENALTY_MS
        row = np.full(len(peers), penalty)
        for r in records:
            if r.rel_time_ms is not None and r.peer in col:
                row[col[r.peer]] = r.rel_time_ms
        rows.append(row)
    if not rows:
        return peers, np.zeros((0, len(peers)))
    return peers, np.vstack(rows)


def score_subsets(
    batch: EpochBatch,
    n_exploit: int,
    aggregate: SubsetAggregate | str = SubsetAggregate.P90,
) -> list[SubsetScore]:
    """Score every C(|peer_set|, n_exploit) subset, in lexicographic order."""

    aggregate = SubsetAggregate(aggregate)
    peers, costs = block_costs(batch)
    if len(peers) < n_exploit:
        raise SelectionError(
            f"node {batch.node}: {len(peers)} peers cannot fill {n_exploit} exploit slots"
        )
    out: list[SubsetScore] = []
    for idx in combinations(range(len(peers)), n_exploit):
        subset = tuple(peers[j] for j in idx)
        if costs.shape[0] == 0:
            out.append(SubsetScore(subset, 0.0))
            continue
        per_block = costs[:, list(idx)].min(axis=1)
        if aggregate == SubsetAggregate.P90:
            value = float(np.percentile(per_block, 90))
        else:
            value = float(per_block.sum())
        out.append(SubsetScore(subset, value))
    return out


def perigee_select(
    batch: EpochBatch,
    n_exploit: int,
    pool: DepletingPool,
    *,
    n_explore: int = 1,
    aggregate: SubsetAggregate | str = SubsetAggregate.P90,
) -> SelectorDecision:
    """Best-scoring subset as exploitation peers plus pool-drawn exploration peers."""

    if pool.n_nodes < n_exploit + n_explore + 1:
        raise SelectionError(
            f"network of {pool.n_nodes} nodes cannot host {n_exploit} exploit + "
            f"{n_explore} explore peers"
        )
    scored = score_subsets(batch, n_exploit, aggregate)
    best = scored[0]
    for candidate in scored[1:]:
        if candidate.score < best.score:
            best = candidate

    peers, costs = block_costs(batch)
    if costs.shape[0]:
        solo = {v: float(np.percentile(costs[:, j], 90)) for j, v in enumerate(peers)}
    else:
        solo = {v: 0.0 for v in peers}
    others = sorted((v for v in peers if v not in best.subset), key=lambda v: (solo[v], v))
    exploit = list(best.subset)
    explore = draw_explore(pool, n_explore, set(exploit) | {batch.node})
    return SelectorDecision(
        node=batch.node,
        exploit=exploit,
        explore=explore,
        scores={v: -solo[v] for v in peers},
        ranked=exploit + others,
    )

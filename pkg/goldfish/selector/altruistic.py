"""
Altruistic exploitation scoring and peer selection.

Scoring rule
------------
For every block row of the completed matrix, the *contributing* peer is the column with the
smallest defined common-frame value (ties to the lowest NodeId). It earns one baseline point
plus one point per *benefiting* peer, i.e. per SYMBOLIC cell of that row (a peer the local node
served first for that block). Columns that never contribute score 0.

Rows with no defined value are skipped.

Credit is then put on a per-window footing: a peer's raw credit is divided by the number of
scored rows in which its column was active (defined or SYMBOLIC) and multiplied by the number
of scored rows. A peer explored for one epoch of a three-epoch window only competes for a
third of the rows, so its raw credit is scaled up threefold. Peers active in every scored row
keep their raw credit.
"""

from __future__ import annotations

from collections.abc import Mapping

import numpy as np

from goldfish.completer.solver import CompletedMatrix
from goldfish.errors import SelectionError
from goldfish.obsmatrix.constructor import ObservationMatrix
from goldfish.schemas.graph import NodeId
from goldfish.schemas.selection import SelectorDecision
from goldfish.selector.pool import DepletingPool


def score_peers(M: CompletedMatrix, T: ObservationMatrix) -> dict[NodeId, float]:
    """Per-peer altruistic score over all rows of the window."""

    peers = np.asarray(T.col_peer)
    raw = np.zeros(T.q)
    symbolic_per_row = T.symbolic.sum(axis=1)
    scored = np.zeros(T.p, dtype=bool)

    for i in range(T.p):
        row = M.M[i]
        defined = ~np.isnan(row)
        if not defined.any():
            continue
        scored[i] = True
        best = row[defined].min()
        winners = np.flatnonzero(defined & (row == best))
        raw[winners[np.argmin(peers[winners])]] += 1.0 + float(symbolic_per_row[i])

    active = (~np.isnan(M.M) | T.symbolic)[scored].sum(axis=0)
    n_rows = int(scored.sum())
    scores = np.where(active > 0, raw * n_rows / np.maximum(active, 1), 0.0)
    return {int(v): float(s) for v, s in zip(peers, scores)}


def rank_candidates(scores: Mapping[NodeId, float]) -> list[NodeId]:
    """Candidates best first: higher score, then lower NodeId."""

    return sorted(scores, key=lambda v: (-scores[v], v))


def draw_explore(
    pool: DepletingPool, n_explore: int, exclude: set[NodeId]
) -> list[NodeId]:
    picks: list[NodeId] = []
    for _ in range(n_explore):
        v = pool.draw(exclude | set(picks))
        if v is None:
            break
        picks.append(v)
    return picks


def select(
    scores: Mapping[NodeId, float],
    pool: DepletingPool,
    n_exploit: int = 3,
    n_explore: int = 1,
) -> SelectorDecision:
    """
    Top `n_exploit` candidates by score become exploitation peers; `n_explore` exploration
    peers come from the pool's seeded generator, excluding the owner and the chosen exploit
    peers.
    """

    node = pool.owner
    if pool.n_nodes < n_exploit + n_explore + 1:
        raise SelectionError(
            f"network of {pool.n_nodes} nodes cannot host {n_exploit} exploit + "
            f"{n_explore} explore peers"
        )
    ranked = [v for v in rank_candidates(scores) if v != node]
    if len(ranked) < n_exploit:
        raise SelectionError(
            f"node {node}: only {len(ranked)} scored candidates for {n_exploit} exploit slots"
        )
    exploit = ranked[:n_exploit]
    explore = draw_explore(pool, n_explore, set(exploit) | {node})
    return SelectorDecision(
        node=node,
        exploit=exploit,
        explore=explore,
        scores={int(v): float(s) for v, s in scores.items()},
        ranked=ranked,
    )

"""
Depleting exploration pool.

Peers are drawn uniformly without replacement; when the pool is empty it is refilled with the
whole universe (every node except the owner and its current exploitation peers at refill
time). One full cycle therefore visits every universe member exactly once.
"""

from __future__ import annotations

from collections.abc import Collection

import numpy as np

from goldfish.errors import SelectionError
from goldfish.schemas.graph import NodeId


class DepletingPool:
    def __init__(
        self,
        owner: NodeId,
        n_nodes: int,
        rng: np.random.Generator,
        *,
        exclude: Collection[NodeId] = (),
    ) -> None:
        if n_nodes < 2:
            raise SelectionError("a pool needs at least one node besides its owner")
        self.owner = owner
        self.n_nodes = n_nodes
        self.rng = rng
        self.universe: list[NodeId] = []
        self.remaining: list[NodeId] = []
        self.refills = 0
        self.explored: set[NodeId] = set()
        self.refill(exclude)

    def __len__(self) -> int:
        return len(self.remaining)

    def refill(self, exclude: Collection[NodeId] = ()) -> None:
        skip = set(exclude) | {self.owner}
        self.universe = [v for v in range(self.n_nodes) if v not in skip]
        self.remaining = list(self.universe)
        self.refills += 1

    def draw(self, exclude: Collection[NodeId] = ()) -> NodeId | None:
        """
        Remove and return one uniformly drawn member not in `exclude`.

        Excluded members stay in the pool while other members remain. Once only excluded
        members are left they are retired as visited (callers exclude peers they are already
        connected to) and the emptied pool is refilled, with `exclude` left out of the new
        universe. Returns None when no eligible node exists at all.
        """

        skip = set(exclude)
        if self.remaining and skip.issuperset(self.remaining):
            self.explored.update(self.remaining)
            self.remaining = []
        if not self.remaining:
            self.refill(skip)
        eligible = [v for v in self.remaining if v not in skip]
        if not eligible:
            return None
        pick = eligible[int(self.rng.integers(len(eligible)))]
        self.remaining.remove(pick)
        self.explored.add(pick)
        return pick

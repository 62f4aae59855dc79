"""
Simulation schemas: node roles, delivery observations and epoch batches.

Two kinds of objects live here
------------------------------
- `NodeRole` is a boundary contract (Pydantic v2): it is validated once when an experiment
  is set up.
- `DeliveryRecord` and `EpochBatch` are produced in bulk by the round engine (tens of thousands
  per epoch at desk scale), so they are plain slotted dataclasses instead of pydantic models.

Relative time
-------------
Nodes do not share clocks. For every block, a node records each peer's delivery time minus the
earliest delivery time of that block, so the fastest peer records 0. A peer that never sent the
block because the local node delivered it to that peer first is recorded as SYMBOLIC
(`rel_time_ms is None`).
"""

from __future__ import annotations

from dataclasses import dataclass, field
from enum import Enum

from pydantic import BaseModel, Field

from goldfish.schemas.graph import NodeId


class Strategy(str, Enum):
    """Peer-selection strategy a node runs."""

    GOLDFISH = "goldfish"
    PERIGEE = "perigee"
    STATIC = "static"


class PublishDistribution(str, Enum):
    """
    How publishing probability is spread over the publisher set.

    - EXPONENTIAL: prob ∝ exp(-beta * rank), beta calibrated so 20% of nodes hold 80% of mass
    - UNIFORM: equal mass over the designated publisher subset
    - FIXED_SET: equal mass over an explicit list of nodes
    """

    EXPONENTIAL = "exp"
    UNIFORM = "unif"
    FIXED_SET = "fixed"


class NodeRole(BaseModel):
    """Per-node behaviour in an experiment."""

    node: NodeId = Field(..., ge=0, description="Node this role applies to.")
    is_publisher: bool = Field(default=False, description="Whether the node originates blocks.")
    publish_prob: float = Field(
        default=0.0, ge=0.0, le=1.0, description="Probability this node publishes a round's block."
    )
    is_adaptive: bool = Field(default=False, description="Whether the node re-selects peers.")
    strategy: Strategy = Field(
        default=Strategy.STATIC, description="Selection strategy (static nodes never rewire)."
    )


@dataclass(frozen=True, slots=True)
class DeliveryRecord:
    """One (peer, block, relative time) observation at a node. `None` means SYMBOLIC."""

    peer: NodeId
    block: int
    rel_time_ms: float | None

    @property
    def is_symbolic(self) -> bool:
        return self.rel_time_ms is None


@dataclass(slots=True)
class EpochBatch:
    """
    One node's observations for one connection-stable epoch.

    `blocks` lists the consecutive round ids covered by the epoch (one matrix row each, even if
    the node recorded nothing for a block); `peer_set` is the neighbour snapshot taken at
    epoch start.
    """

    epoch_id: int
    node: NodeId
    peer_set: list[NodeId]
    blocks: list[int] = field(default_factory=list)
    records: list[DeliveryRecord] = field(default_factory=list)

    @property
    def n_blocks(self) -> int:
        return len(self.blocks)

    def records_by_block(self) -> dict[int, list[DeliveryRecord]]:
        grouped: dict[int, list[DeliveryRecord]] = {b: [] for b in self.blocks}
        for rec in self.records:
            grouped.setdefault(rec.block, []).append(rec)
        return grouped

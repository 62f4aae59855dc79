"""
Peer-selection schemas (Pydantic v2).

A `SelectorDecision` is the output of one selection step for one node: which peers to keep as
exploitation connections next epoch, which to try as exploration connections, and the scores
that produced the ranking. Decisions are what the harness logs to `decisions.csv` and what
`apply_decision` turns into graph mutations.
"""

from __future__ import annotations

from enum import Enum

from pydantic import BaseModel, Field, model_validator

from goldfish.schemas.graph import NodeId


class ScheduleAction(str, Enum):
    """What a Goldfish node does at an epoch boundary."""

    LEARN_AND_SELECT = "learn_and_select"
    EXPLORE_ONLY = "explore_only"


class Schedule(BaseModel):
    """
    Learning cadence.

    Defaults: a matrix spans 3 epochs and learning runs every 2 epochs, so the epoch between
    two learning runs is a pure exploration epoch (the middle of the window).

    Window positions count from the oldest epoch; the last position is the learning epoch
    itself. A position is exploration-only when its distance to the last one is not a multiple
    of `cadence`. With `cadence=1` no such position exists and `pure_explore_position` is None.
    """

    window: int = Field(default=3, ge=1, description="Epochs combined into one matrix.")
    cadence: int = Field(default=2, ge=1, description="Epochs between learning runs.")
    pure_explore_position: int | None = Field(
        default=None,
        ge=0,
        description="Index of the exploration-only epoch inside the window (default: middle).",
    )

    def explore_positions(self) -> list[int]:
        return [k for k in range(self.window) if (self.window - 1 - k) % self.cadence != 0]

    @model_validator(mode="after")
    def _position_inside_window(self) -> "Schedule":
        allowed = self.explore_positions()
        if self.pure_explore_position is None:
            middle = self.window // 2
            if middle in allowed:
                self.pure_explore_position = middle
            elif allowed:
                self.pure_explore_position = allowed[0]
            return self
        if self.pure_explore_position >= self.window:
            raise ValueError("pure_explore_position must be < window")
        if self.pure_explore_position not in allowed:
            raise ValueError(
                f"window position {self.pure_explore_position} falls on a learning epoch "
                f"(exploration-only positions: {allowed})"
            )
        return self


class SelectorDecision(BaseModel):
    """Next epoch's outgoing connections for one node."""

    node: NodeId = Field(..., ge=0, description="Node the decision applies to.")
    exploit: list[NodeId] = Field(..., description="Exploitation peers, best first.")
    explore: list[NodeId] = Field(default_factory=list, description="Exploration peers.")
    scores: dict[NodeId, float] = Field(
        default_factory=dict, description="Score per candidate peer (higher is better)."
    )
    ranked: list[NodeId] = Field(
        default_factory=list,
        description="All candidates best-first; fallbacks for rejected exploitation targets.",
    )

    @model_validator(mode="after")
    def _disjoint_and_not_self(self) -> "SelectorDecision":
        if set(self.exploit) & set(self.explore):
            raise ValueError("exploit and explore peers must be disjoint")
        if self.node in self.exploit or self.node in self.explore:
            raise ValueError("a node cannot select itself")
        if len(set(self.exploit)) != len(self.exploit) or len(set(self.explore)) != len(
            self.explore
        ):
            raise ValueError("duplicate peers in decision")
        return self

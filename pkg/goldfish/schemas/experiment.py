"""
Experiment schemas (Pydantic v2).

`ExperimentConfig` is the single description of a study run: topology, publishing law,
adapters, strategy, cadence and completer knobs. Every default mirrors the reference
setting (100 nodes, 4 out / 8 in connections, 3 exploit + 1 explore, 40 rounds per epoch,
K = 2, at most 2000 solver steps, 3-epoch window learned every 2 epochs).

Results of the two studies are plain pydantic models too, so the HTTP API, the CLI writers and
the tests all share one shape.
"""

from __future__ import annotations

from datetime import datetime
from enum import Enum
from typing import Any
from uuid import UUID, uuid4

from pydantic import BaseModel, Field, model_validator

from goldfish.completer.solver import Optimizer, ResidualNorm
from goldfish.perigee.subset import SubsetAggregate
from goldfish.schemas.graph import LatencyKind, NodeId
from goldfish.schemas.selection import Schedule
from goldfish.schemas.simulation import PublishDistribution, Strategy


class Topology(str, Enum):
    RANDOM2D = "random2d"
    MEASURED = "measured"

    @property
    def latency_kind(self) -> LatencyKind:
        return LatencyKind.PLANAR2D if self == Topology.RANDOM2D else LatencyKind.MEASURED


class ExperimentConfig(BaseModel):
    """Parameters of one study (defaults = reference setting)."""

    topology: Topology = Field(default=Topology.RANDOM2D, description="random2d or measured.")
    latency_file: str | None = Field(
        default=None, description="Measured-latency CSV (required for measured topology)."
    )
    n_nodes: int = Field(default=100, ge=2, description="Network size.")
    n_publishers: int = Field(default=100, ge=1, description="Size of the publisher set.")
    publishers: list[NodeId] | None = Field(
        default=None, description="Explicit publisher ids (required for pub_dist=fixed)."
    )
    pub_dist: PublishDistribution = Field(
        default=PublishDistribution.EXPONENTIAL, description="Publishing-probability law."
    )
    n_adapters: int = Field(default=32, ge=0, description="Number of adaptive nodes.")
    strategy: Strategy = Field(default=Strategy.GOLDFISH, description="Adapters' strategy.")
    epochs: int = Field(default=100, ge=1, description="Epochs per run.")
    rounds_per_epoch: int = Field(default=40, ge=1, description="Blocks per epoch.")
    K: int = Field(default=2, ge=1, description="Nearest neighbours per estimated cell.")
    max_steps: int = Field(default=2000, ge=1, description="Solver iteration cap.")
    reg_weight: float = Field(default=1e-4, ge=0.0, description="Regularisation weight.")
    temperature: float | None = Field(
        default=None, gt=0.0, description="Softmax temperature (None = per-cell automatic)."
    )
    residual_norm: ResidualNorm = Field(default=ResidualNorm.SQUARED)
    optimizer: Optimizer = Field(default=Optimizer.CG)
    step_size: float = Field(default=0.05, gt=0.0, description="Gradient-descent step size.")
    tolerance: float = Field(default=1e-8, gt=0.0, description="Relative loss tolerance.")
    seeds: list[int] = Field(default_factory=lambda: [0], min_length=1)
    plane_size: float = Field(default=500.0, gt=0.0)
    node_delay_ms: float = Field(default=20.0, ge=0.0)
    max_out: int = Field(default=4, ge=1)
    max_in: int = Field(default=8, ge=1)
    n_exploit: int = Field(default=3, ge=1)
    n_explore: int = Field(default=1, ge=0)
    window: int = Field(default=3, ge=1)
    cadence: int = Field(default=2, ge=1)
    perigee_aggregate: SubsetAggregate = Field(default=SubsetAggregate.P90)
    debug_dir: str | None = Field(
        default=None, description="Directory for debug dumps (batches, matrices, completer)."
    )

    @model_validator(mode="after")
    def _cross_checks(self) -> "ExperimentConfig":
        if self.n_publishers > self.n_nodes:
            raise ValueError("n_publishers must be <= n_nodes")
        if self.n_adapters > self.n_nodes:
            raise ValueError("n_adapters must be <= n_nodes")
        if self.n_exploit + self.n_explore > self.max_out:
            raise ValueError("n_exploit + n_explore must be <= max_out")
        if self.topology == Topology.MEASURED and not self.latency_file:
            raise ValueError("measured topology requires latency_file")
        if self.pub_dist == PublishDistribution.FIXED_SET and not self.publishers:
            raise ValueError("pub_dist=fixed requires an explicit publishers list")
        if self.publishers is not None:
            if any(p < 0 or p >= self.n_nodes for p in self.publishers):
                raise ValueError("publisher ids must lie in [0, n_nodes)")
        return self

    @classmethod
    def global_optimal(cls, **overrides: Any) -> "ExperimentConfig":
        """Defaults of the global-optimal study: 3 publishers at 1/3, one adapter, 300 epochs."""

        base: dict[str, Any] = {
            "n_publishers": 3,
            "pub_dist": PublishDistribution.UNIFORM,
            "n_adapters": 1,
            "epochs": 300,
        }
        base.update(overrides)
        return cls(**base)

    @property
    def schedule(self) -> Schedule:
        return Schedule(window=self.window, cadence=self.cadence)


# -------
# Results
# -------


class PercentileRow(BaseModel):
    """Wasted-latency summary of one strategy at one epoch (adapters pooled over seeds)."""

    epoch: int
    p25: float | None
    p50: float | None
    p75: float | None
    mean: float | None
    count: int = Field(..., description="Finite values summarised.")
    unreachable: int = Field(default=0, description="Values excluded because they were inf.")


class SortedCurvePoint(BaseModel):
    rank: int = Field(..., description="Position in the ascending per-node order.")
    p25: float
    p50: float
    p75: float


class ComparisonResult(BaseModel):
    config: ExperimentConfig
    percentiles: dict[str, list[PercentileRow]] = Field(
        ..., description="Per strategy, one row per epoch."
    )
    final_ratio: float | None = Field(
        ..., description="Final-epoch mean wasted latency, goldfish / perigee."
    )
    digests: dict[str, dict[int, str]] = Field(
        ..., description="Per strategy, per seed: digest of the pre-adaptation state."
    )
    sorted_curve: dict[str, list[SortedCurvePoint]] = Field(default_factory=dict)
    failures: dict[str, int] = Field(
        default_factory=dict, description="Per strategy: node-epochs that kept old edges."
    )


class ScenarioSpec(BaseModel):
    """One row of a comparison grid."""

    topology: Topology = Topology.RANDOM2D
    n_publishers: int = Field(default=100, ge=1)
    pub_dist: PublishDistribution = PublishDistribution.EXPONENTIAL
    n_adapters: int = Field(default=32, ge=0)


class ComparisonRow(BaseModel):
    scenario: ScenarioSpec
    goldfish: PercentileRow
    perigee: PercentileRow
    ratio: float | None


class GraphOptimality(BaseModel):
    """Optimality trace summary of one graph in the global-optimal study."""

    graph: int
    seed: int
    adapter: NodeId
    publishers: list[NodeId]
    non_optimal_epochs: int
    far_epochs: int
    lambda0: float | None = Field(..., description="Initial gap (ms); None when unreachable.")
    first_retained_optimal_epoch: int | None
    reached_and_retained: bool
    near_optimal: bool
    pool_emptied_epoch: int | None
    explored_peers: int


class OptimalStudyResult(BaseModel):
    config: ExperimentConfig
    n_graphs: int
    retain_within: int
    near_from: int
    far_ratio: float
    graphs: list[GraphOptimality]
    histogram: dict[int, int] = Field(..., description="non-optimal epoch count -> graphs")
    histogram_far: dict[int, int] = Field(..., description="far epoch count -> graphs")
    fraction_retained: float
    fraction_near_optimal: float


# -----------------
# HTTP API payloads
# -----------------


class CompletionRequest(BaseModel):
    """Standalone completion of a block x peer grid (`null` = no number)."""

    values: list[list[float | None]] = Field(..., min_length=1)
    symbolic: list[list[bool]] | None = Field(
        default=None, description="True where the cell is symbolically known."
    )
    peers: list[NodeId] | None = Field(default=None, description="Column peer ids.")
    K: int = Field(default=2, ge=1)
    reg_weight: float = Field(default=1e-4, ge=0.0)
    max_steps: int = Field(default=2000, ge=1)
    temperature: float | None = Field(default=None, gt=0.0)
    residual_norm: ResidualNorm = ResidualNorm.SQUARED
    optimizer: Optimizer = Optimizer.CG

    @model_validator(mode="after")
    def _rectangular(self) -> "CompletionRequest":
        width = len(self.values[0])
        if width == 0 or any(len(row) != width for row in self.values):
            raise ValueError("values must be a non-empty rectangular grid")
        if self.symbolic is not None:
            if len(self.symbolic) != len(self.values) or any(
                len(row) != width for row in self.symbolic
            ):
                raise ValueError("symbolic mask must match the values grid")
        if self.peers is not None and len(self.peers) != width:
            raise ValueError("peers must list one id per column")
        return self


class CompletionResponse(BaseModel):
    class_counts: dict[str, int]
    classes: list[list[str]]
    completed: list[list[float | None]] = Field(..., description="Common-frame values.")
    raw_estimates: list[dict[str, Any]] = Field(
        ..., description="Estimated cells: row, peer, raw-frame value, ambiguous flag."
    )
    offsets: list[float]
    final_loss: float
    steps: int
    converged: bool
    ambiguous_count: int
    scores: dict[NodeId, float]


class OptimalStudyRequest(BaseModel):
    config: ExperimentConfig = Field(default_factory=ExperimentConfig.global_optimal)
    n_graphs: int = Field(default=5, ge=1)


class ExperimentKind(str, Enum):
    OPTIMAL = "optimal"
    COMPARE = "compare"


class ExperimentRun(BaseModel):
    run_id: UUID = Field(default_factory=uuid4)
    kind: ExperimentKind
    created_at: datetime = Field(default_factory=datetime.utcnow)
    correlation_id: str | None = None
    result: OptimalStudyResult | ComparisonResult


class ExperimentRunSummary(BaseModel):
    run_id: UUID
    kind: ExperimentKind
    created_at: datetime
    headline: float | None = Field(
        ..., description="fraction_retained (optimal) or final_ratio (compare)."
    )

    @classmethod
    def from_run(cls, run: ExperimentRun) -> "ExperimentRunSummary":
        if isinstance(run.result, OptimalStudyResult):
            headline: float | None = run.result.fraction_retained
        else:
            headline = run.result.final_ratio
        return cls(
            run_id=run.run_id, kind=run.kind, created_at=run.created_at, headline=headline
        )

"""
One (scenario, strategy) simulation run.

Scenario vs run
---------------
A *scenario* is the pre-adaptation state shared by paired runs: initial graph, publishing
probabilities, adapter set and (implicitly, through the seed) every round's publisher draw.
Its sha256 digest lets a comparison prove that Goldfish and Perigee started from the same
world.

A *run* replays the scenario epoch by epoch for one strategy:

1. metrics for epoch e are taken on the graph in effect during epoch e
2. the epoch's rounds are simulated and every adapter gets its batch
3. all adapters decide on the same graph, then decisions are applied in ascending NodeId order
"""

from __future__ import annotations

import hashlib
import json
import logging
from collections.abc import Sequence
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from eval.metrics import optimality_gap, wasted_latency
from goldfish.harness.agents import SelectionAgent, make_agent
from goldfish.netgraph.graph import NetworkGraph, generate_random_graph, shortest_paths
from goldfish.schemas.experiment import ExperimentConfig
from goldfish.schemas.graph import EdgeFilter, EdgeRole, NodeId
from goldfish.schemas.simulation import NodeRole, Strategy
from goldfish.selector.placement import apply_decision
from goldfish.simcore.engine import epoch_publishers, format_batch_records, run_epoch
from goldfish.simcore.publishers import sample_publishers, with_publish_probs

logger = logging.getLogger("goldfish.harness")


@dataclass
class Scenario:
    seed: int
    graph: NetworkGraph
    roles: list[NodeRole]
    probs: np.ndarray
    adapters: list[NodeId]
    digest: str = ""

    @property
    def publishers(self) -> list[NodeId]:
        return [int(v) for v in np.flatnonzero(self.probs > 0)]


@dataclass
class DecisionRow:
    strategy: str
    seed: int
    epoch: int
    node: NodeId
    exploit: list[NodeId]
    explore: list[NodeId]


@dataclass
class RunTrace:
    """Everything a study needs from one run."""

    strategy: Strategy
    seed: int
    population: list[NodeId]
    wasted: np.ndarray
    exploit_sets: list[dict[NodeId, tuple[NodeId, ...]]]
    gaps: np.ndarray | None = None
    decisions: list[DecisionRow] = field(default_factory=list)
    failures: int = 0
    pool_emptied_epoch: dict[NodeId, int | None] = field(default_factory=dict)
    explored: dict[NodeId, int] = field(default_factory=dict)
    digest: str = ""


def assign_initial_roles(g: NetworkGraph, adapters: Sequence[NodeId], n_exploit: int) -> None:
    """Adapters keep their first `n_exploit` out-edges as exploit, the rest become explore."""

    for u in adapters:
        for v, _ in g.out_edges(u)[n_exploit:]:
            g.set_role(u, v, EdgeRole.EXPLORE)


def scenario_digest(cfg: ExperimentConfig, scenario: Scenario) -> str:
    """sha256 over initial edges, probabilities, adapters and every round's publisher."""

    h = hashlib.sha256()
    h.update(json.dumps(scenario.graph.edge_list()).encode())
    h.update(json.dumps([repr(float(p)) for p in scenario.probs]).encode())
    h.update(json.dumps(scenario.adapters).encode())
    for e in range(cfg.epochs):
        draws = epoch_publishers(scenario.probs, cfg.rounds_per_epoch, scenario.seed, e)
        h.update(draws.astype(np.int64).tobytes())
    return h.hexdigest()


def prepare_scenario(
    cfg: ExperimentConfig,
    seed: int,
    *,
    measured_matrix: np.ndarray | None = None,
    graph_seed: int | None = None,
    adapters: Sequence[NodeId] | None = None,
    exclude_publishers_from_adapters: bool = False,
) -> Scenario:
    """
    Build the shared pre-adaptation state for `seed`.

    Adapters are drawn with a seeded generator unless given; the global-optimal study asks
    for adapters outside the publisher set.
    """

    g = generate_random_graph(
        cfg.n_nodes,
        cfg.max_out,
        cfg.max_in,
        cfg.topology.latency_kind,
        seed if graph_seed is None else graph_seed,
        plane_size=cfg.plane_size,
        node_delay_ms=cfg.node_delay_ms,
        measured_matrix=measured_matrix,
    )
    base = [NodeRole(node=i) for i in range(cfg.n_nodes)]
    probs = sample_publishers(
        base, cfg.pub_dist, seed, publishers=cfg.publishers, n_publishers=cfg.n_publishers
    )

    if adapters is None:
        rng = np.random.default_rng([seed, cfg.n_nodes, 2])
        pool = np.arange(cfg.n_nodes)
        if exclude_publishers_from_adapters:
            pool = pool[probs[pool] == 0]
        if len(pool) < cfg.n_adapters:
            raise ValueError(f"cannot pick {cfg.n_adapters} adapters from {len(pool)} nodes")
        adapters = rng.choice(pool, size=cfg.n_adapters, replace=False)
    chosen = sorted(int(a) for a in adapters)

    roles = [
        r.model_copy(update={"is_adaptive": r.node in set(chosen)})
        for r in with_publish_probs(base, probs)
    ]
    assign_initial_roles(g, chosen, cfg.n_exploit)
    scenario = Scenario(seed=seed, graph=g, roles=roles, probs=probs, adapters=chosen)
    scenario.digest = scenario_digest(cfg, scenario)
    return scenario


def run_strategy(
    cfg: ExperimentConfig,
    scenario: Scenario,
    strategy: Strategy | str,
    *,
    track_optimality: bool = False,
) -> RunTrace:
    """Replay `scenario` under `strategy` for `cfg.epochs` epochs."""

    strategy = Strategy(strategy)
    g = scenario.graph.copy()
    adapters = scenario.adapters
    roles = [
        r.model_copy(update={"strategy": strategy if r.is_adaptive else Strategy.STATIC})
        for r in scenario.roles
    ]
    agents: dict[NodeId, SelectionAgent] = {}
    for a in adapters:
        agent = make_agent(strategy, a, cfg, g, scenario.seed)
        if agent is not None:
            agents[a] = agent

    # with no adapters the whole network is measured
    population = list(adapters) or list(range(g.n_nodes))
    publishers = scenario.publishers
    wasted = np.zeros((cfg.epochs, len(population)))
    gaps = np.zeros(cfg.epochs) if track_optimality else None
    exploit_sets: list[dict[NodeId, tuple[NodeId, ...]]] = []
    decisions: list[DecisionRow] = []
    batch_log = _batch_log_path(cfg, strategy, scenario.seed)

    for e in range(cfg.epochs):
        for k, node in enumerate(population):
            dist = shortest_paths(g, node, EdgeFilter.EXPLOIT_ONLY)
            wasted[e, k] = wasted_latency(g, node, scenario.probs, distances=dist)
            if gaps is not None and k == 0:
                gaps[e] = float(optimality_gap(g, node, publishers, distances=dist).sum())
        exploit_sets.append(
            {a: tuple(sorted(g.out_peers(a, EdgeRole.EXPLOIT))) for a in adapters}
        )
        if not agents:
            continue

        batches = run_epoch(
            g, roles, cfg.rounds_per_epoch, scenario.seed, epoch_id=e, observers=agents
        )
        if batch_log is not None:
            with batch_log.open("a", encoding="utf-8") as fh:
                for a in sorted(batches):
                    fh.writelines(f"{a},{line}\n" for line in format_batch_records(batches[a]))

        pending = {a: agents[a].decide(e, batches[a], g) for a in sorted(agents)}
        for a in sorted(pending):
            d = pending[a]
            if d is None:
                continue
            apply_decision(g, a, d, pool=agents[a].pool)
            decisions.append(
                DecisionRow(strategy.value, scenario.seed, e, a, list(d.exploit), list(d.explore))
            )
        g.check_invariants()

    logger.info(
        json.dumps(
            {
                "event": "run_completed",
                "strategy": strategy.value,
                "seed": scenario.seed,
                "epochs": cfg.epochs,
                "adapters": len(adapters),
                "failures": sum(a.failures for a in agents.values()),
            }
        )
    )
    return RunTrace(
        strategy=strategy,
        seed=scenario.seed,
        population=population,
        wasted=wasted,
        exploit_sets=exploit_sets,
        gaps=gaps,
        decisions=decisions,
        failures=sum(a.failures for a in agents.values()),
        pool_emptied_epoch={a: agent.pool_emptied_epoch for a, agent in agents.items()},
        explored={a: len(agent.pool.explored) for a, agent in agents.items()},
        digest=scenario.digest,
    )


def _batch_log_path(cfg: ExperimentConfig, strategy: Strategy, seed: int) -> Path | None:
    if not cfg.debug_dir:
        return None
    path = Path(cfg.debug_dir) / f"{strategy.value}_seed{seed}_batches.ndjson"
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_text("", encoding="utf-8")
    return path

"""
Per-node selection agents.

An agent owns everything a real node would keep locally: its recent observation batches, its
depleting exploration pool and its completer settings. At every epoch boundary the harness
hands it the batch it just observed and asks for a decision; `None` means "keep the current
edges" (the agent could not decide, which is logged but never aborts a run).
"""

from __future__ import annotations

import json
import logging
from collections import deque
from pathlib import Path
from typing import Protocol

import numpy as np

from goldfish.completer import complete_matrix
from goldfish.completer.solver import dump_completion
from goldfish.errors import MatrixConstructionError, SelectionError, SolverDivergenceError
from goldfish.netgraph.graph import NetworkGraph
from goldfish.obsmatrix.constructor import build_matrix, render_matrix
from goldfish.perigee.subset import perigee_select
from goldfish.schemas.experiment import ExperimentConfig
from goldfish.schemas.graph import EdgeRole, NodeId
from goldfish.schemas.selection import ScheduleAction, SelectorDecision
from goldfish.schemas.simulation import EpochBatch, Strategy
from goldfish.selector.altruistic import draw_explore, score_peers, select
from goldfish.selector.pool import DepletingPool
from goldfish.selector.scheduler import step_schedule

logger = logging.getLogger("goldfish.harness")

_RECOVERABLE = (SelectionError, SolverDivergenceError, MatrixConstructionError)


class SelectionAgent(Protocol):
    node: NodeId
    pool: DepletingPool
    failures: int
    pool_emptied_epoch: int | None

    def decide(
        self, epoch: int, batch: EpochBatch, graph: NetworkGraph
    ) -> SelectorDecision | None: ...


class _PoolTracking:
    node: NodeId
    pool: DepletingPool
    pool_emptied_epoch: int | None = None
    failures: int = 0

    def _after_draw(self, epoch: int) -> None:
        if self.pool_emptied_epoch is None and (len(self.pool) == 0 or self.pool.refills > 1):
            self.pool_emptied_epoch = epoch

    def _failed(self, epoch: int, err: Exception) -> None:
        self.failures += 1
        logger.warning(
            json.dumps(
                {
                    "event": "selection_failed",
                    "node": self.node,
                    "epoch": epoch,
                    "error": type(err).__name__,
                    "detail": str(err),
                }
            )
        )


class GoldfishAgent(_PoolTracking):
    """Window of recent batches -> matrix -> completion -> altruistic selection."""

    def __init__(
        self, node: NodeId, cfg: ExperimentConfig, pool: DepletingPool, *, seed: int = 0
    ) -> None:
        self.node = node
        self.cfg = cfg
        self.pool = pool
        self.seed = seed
        self.schedule = cfg.schedule
        self.history: deque[EpochBatch] = deque(maxlen=cfg.window)
        self.ambiguous_cells = 0

    def decide(
        self, epoch: int, batch: EpochBatch, graph: NetworkGraph
    ) -> SelectorDecision | None:
        self.history.append(batch)
        try:
            if step_schedule(self.schedule, epoch) == ScheduleAction.LEARN_AND_SELECT:
                decision = self._learn(epoch)
            else:
                decision = self._explore_only(graph)
        except _RECOVERABLE as e:
            self._failed(epoch, e)
            return None
        self._after_draw(epoch)
        return decision

    def _learn(self, epoch: int) -> SelectorDecision:
        cfg = self.cfg
        T = build_matrix(list(self.history))
        problem, completed = complete_matrix(
            T,
            cfg.K,
            temperature=cfg.temperature,
            reg_weight=cfg.reg_weight,
            max_steps=cfg.max_steps,
            step_size=cfg.step_size,
            tolerance=cfg.tolerance,
            residual_norm=cfg.residual_norm,
            optimizer=cfg.optimizer,
        )
        self.ambiguous_cells += completed.ambiguous_count
        if cfg.debug_dir:
            base = Path(cfg.debug_dir) / f"seed{self.seed}" / f"node{self.node}"
            base.mkdir(parents=True, exist_ok=True)
            (base / f"matrix_e{epoch}.txt").write_text(
                "\n".join(render_matrix(problem.T)) + "\n", encoding="utf-8"
            )
            dump_completion(
                base / f"completion_e{epoch}.json", problem, completed, node=self.node, epoch=epoch
            )
        scores = score_peers(completed, problem.T)
        return select(scores, self.pool, cfg.n_exploit, cfg.n_explore)

    def _explore_only(self, graph: NetworkGraph) -> SelectorDecision:
        keep = graph.out_peers(self.node, EdgeRole.EXPLOIT)
        explore = draw_explore(self.pool, self.cfg.n_explore, set(keep) | {self.node})
        return SelectorDecision(node=self.node, exploit=keep, explore=explore, ranked=keep)


class PerigeeAgent(_PoolTracking):
    """Memoryless subset scoring over the epoch just observed."""

    def __init__(self, node: NodeId, cfg: ExperimentConfig, pool: DepletingPool) -> None:
        self.node = node
        self.cfg = cfg
        self.pool = pool

    def decide(
        self, epoch: int, batch: EpochBatch, graph: NetworkGraph
    ) -> SelectorDecision | None:
        try:
            decision = perigee_select(
                batch,
                self.cfg.n_exploit,
                self.pool,
                n_explore=self.cfg.n_explore,
                aggregate=self.cfg.perigee_aggregate,
            )
        except _RECOVERABLE as e:
            self._failed(epoch, e)
            return None
        self._after_draw(epoch)
        return decision


def make_agent(
    strategy: Strategy, node: NodeId, cfg: ExperimentConfig, graph: NetworkGraph, seed: int
) -> SelectionAgent | None:
    """Agent for `strategy` (None for static nodes). The pool is seeded per (seed, node)."""

    if strategy == Strategy.STATIC:
        return None
    rng = np.random.default_rng([seed, node])
    pool = DepletingPool(
        node, graph.n_nodes, rng, exclude=graph.out_peers(node, EdgeRole.EXPLOIT)
    )
    if strategy == Strategy.GOLDFISH:
        return GoldfishAgent(node, cfg, pool, seed=seed)
    return PerigeeAgent(node, cfg, pool)

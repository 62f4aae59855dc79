"""
The two studies, plus the scenario grid.

Global-optimal study
--------------------
Many random graphs, 3 publishers at 1/3 each, a single Goldfish adapter. The unique optimum is
a direct exploitation connection to every publisher, so per epoch the adapter is *optimal*
iff its exploitation set equals the publisher set. The optimality gap λ(e) (sum over
publishers of exploit-distance minus direct delay) tracks how far it is; an epoch is *far* when
λ(e) / λ(0) > 0.05.

Comparison study
----------------
Per seed one scenario, replayed once per strategy. Wasted latency of every adapter at every
epoch is pooled over seeds into 25/50/75th percentiles and a mean per epoch; the headline
number is the final-epoch Goldfish / Perigee mean ratio.

Independent (graph, seed) jobs run in a process pool sized by `GOLDFISH_THREADS`.
"""

from __future__ import annotations

import json
import logging
from collections import Counter
from collections.abc import Callable, Iterable, Sequence
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass
from typing import Any, TypeVar

import numpy as np

from eval.metrics import round_half_even, summarize_epoch
from eval.scorecard import mean_ratio
from goldfish.config import worker_threads
from goldfish.harness.runner import RunTrace, prepare_scenario, run_strategy
from goldfish.netgraph.latency import load_latency_file
from goldfish.schemas.experiment import (
    ComparisonResult,
    ComparisonRow,
    ExperimentConfig,
    GraphOptimality,
    OptimalStudyResult,
    ScenarioSpec,
    SortedCurvePoint,
    Topology,
)
from goldfish.schemas.simulation import Strategy

logger = logging.getLogger("goldfish.harness")

RETAIN_WITHIN = 96
NEAR_FROM = 48
FAR_RATIO = 0.05
COMPARED = (Strategy.GOLDFISH, Strategy.PERIGEE)

T = TypeVar("T")


def _measured(cfg: ExperimentConfig) -> np.ndarray | None:
    if cfg.topology == Topology.MEASURED and cfg.latency_file:
        return load_latency_file(cfg.latency_file)
    return None


def _fan_out(
    fn: Callable[..., T], jobs: Sequence[tuple[Any, ...]], workers: int | None
) -> list[T]:
    """Run `fn(*job)` for every job; in-process when a single worker is allowed."""

    n = min(workers if workers is not None else worker_threads(), len(jobs))
    if n <= 1:
        return [fn(*job) for job in jobs]
    with ProcessPoolExecutor(max_workers=n) as ex:
        futures = [ex.submit(fn, *job) for job in jobs]
        return [f.result() for f in futures]


def graph_seed(base: int, index: int) -> int:
    return int(np.random.SeedSequence([base, index]).generate_state(1)[0])


# ---------------------
# Global-optimal study
# ---------------------


@dataclass
class OptimalRun:
    graph: int
    seed: int
    adapter: int
    publishers: list[int]
    trace: RunTrace


def _optimal_job(
    cfg_json: str, index: int, seed: int, matrix: np.ndarray | None
) -> OptimalRun:
    cfg = ExperimentConfig.model_validate_json(cfg_json)
    scenario = prepare_scenario(
        cfg, seed, measured_matrix=matrix, exclude_publishers_from_adapters=True
    )
    trace = run_strategy(cfg, scenario, Strategy.GOLDFISH, track_optimality=True)
    return OptimalRun(index, seed, scenario.adapters[0], scenario.publishers, trace)


def collect_optimal_runs(
    cfg: ExperimentConfig, n_graphs: int, *, workers: int | None = None
) -> list[OptimalRun]:
    if cfg.n_publishers > cfg.n_exploit:
        raise ValueError("global-optimal study needs n_publishers <= n_exploit")
    if cfg.n_adapters != 1:
        raise ValueError("global-optimal study runs exactly one adapter")
    if n_graphs < 1:
        raise ValueError("n_graphs must be >= 1")
    base = cfg.seeds[0]
    matrix = _measured(cfg)
    payload = cfg.model_dump_json()
    jobs = [(payload, i, graph_seed(base, i), matrix) for i in range(n_graphs)]
    return _fan_out(_optimal_job, jobs, workers)


def graph_optimality(
    run: OptimalRun,
    *,
    retain_within: int = RETAIN_WITHIN,
    near_from: int = NEAR_FROM,
    far_ratio: float = FAR_RATIO,
) -> GraphOptimality:
    trace = run.trace
    assert trace.gaps is not None
    target = tuple(sorted(run.publishers))
    optimal = [sets[run.adapter] == target for sets in trace.exploit_sets]
    gaps = trace.gaps
    lam0 = float(gaps[0])
    if not np.isfinite(lam0):
        # no finite baseline: only epochs that are still unreachable count as far
        far = ~np.isfinite(gaps)
    elif lam0 > 0:
        far = gaps / lam0 > far_ratio
    else:
        # optimal from the start
        far = np.zeros(gaps.shape, dtype=bool)

    non_optimal_at = [e for e, ok in enumerate(optimal) if not ok]
    if not non_optimal_at:
        first_retained: int | None = 0
    elif non_optimal_at[-1] + 1 < len(optimal):
        first_retained = non_optimal_at[-1] + 1
    else:
        first_retained = None

    return GraphOptimality(
        graph=run.graph,
        seed=run.seed,
        adapter=run.adapter,
        publishers=list(target),
        non_optimal_epochs=len(non_optimal_at),
        far_epochs=int(far.sum()),
        lambda0=round_half_even(lam0, 1) if np.isfinite(lam0) else None,
        first_retained_optimal_epoch=first_retained,
        reached_and_retained=first_retained is not None and first_retained <= retain_within,
        near_optimal=bool(not far[near_from:].any()),
        pool_emptied_epoch=trace.pool_emptied_epoch.get(run.adapter),
        explored_peers=trace.explored.get(run.adapter, 0),
    )


def summarize_optimal(
    cfg: ExperimentConfig,
    runs: Sequence[OptimalRun],
    *,
    retain_within: int = RETAIN_WITHIN,
    near_from: int = NEAR_FROM,
    far_ratio: float = FAR_RATIO,
) -> OptimalStudyResult:
    graphs = [
        graph_optimality(r, retain_within=retain_within, near_from=near_from, far_ratio=far_ratio)
        for r in sorted(runs, key=lambda r: r.graph)
    ]
    n = len(graphs)
    return OptimalStudyResult(
        config=cfg,
        n_graphs=n,
        retain_within=retain_within,
        near_from=near_from,
        far_ratio=far_ratio,
        graphs=graphs,
        histogram=dict(sorted(Counter(g.non_optimal_epochs for g in graphs).items())),
        histogram_far=dict(sorted(Counter(g.far_epochs for g in graphs).items())),
        fraction_retained=round_half_even(sum(g.reached_and_retained for g in graphs) / n, 4),
        fraction_near_optimal=round_half_even(sum(g.near_optimal for g in graphs) / n, 4),
    )


def run_global_optimal_study(
    cfg: ExperimentConfig, n_graphs: int, *, workers: int | None = None
) -> OptimalStudyResult:
    """Histogram of non-optimal and far-from-optimal epoch counts over `n_graphs` graphs."""

    result = summarize_optimal(cfg, collect_optimal_runs(cfg, n_graphs, workers=workers))
    logger.info(
        json.dumps(
            {
                "event": "study_completed",
                "study": "optimal",
                "graphs": n_graphs,
                "fraction_retained": result.fraction_retained,
                "fraction_near_optimal": result.fraction_near_optimal,
            }
        )
    )
    return result


# ----------------
# Comparison study
# ----------------


def _comparison_job(
    cfg_json: str, seed: int, strategies: tuple[str, ...], matrix: np.ndarray | None
) -> list[RunTrace]:
    cfg = ExperimentConfig.model_validate_json(cfg_json)
    scenario = prepare_scenario(cfg, seed, measured_matrix=matrix)
    return [run_strategy(cfg, scenario, s) for s in strategies]


def collect_comparison_traces(
    cfg: ExperimentConfig,
    *,
    strategies: Iterable[Strategy] = COMPARED,
    workers: int | None = None,
) -> list[RunTrace]:
    matrix = _measured(cfg)
    names = tuple(Strategy(s).value for s in strategies)
    payload = cfg.model_dump_json()
    jobs = [(payload, seed, names, matrix) for seed in cfg.seeds]
    return [t for traces in _fan_out(_comparison_job, jobs, workers) for t in traces]


def _sorted_curve(traces: Sequence[RunTrace]) -> list[SortedCurvePoint]:
    finals = np.vstack([np.sort(t.wasted[-1]) for t in traces])
    finals = np.where(np.isfinite(finals), finals, np.nan)
    points = []
    for rank in range(finals.shape[1]):
        col = finals[:, rank]
        col = col[~np.isnan(col)]
        if col.size == 0:
            continue
        p25, p50, p75 = np.percentile(col, [25, 50, 75])
        points.append(
            SortedCurvePoint(
                rank=rank,
                p25=round_half_even(p25, 1),
                p50=round_half_even(p50, 1),
                p75=round_half_even(p75, 1),
            )
        )
    return points


def summarize_comparison(cfg: ExperimentConfig, traces: Sequence[RunTrace]) -> ComparisonResult:
    by_strategy: dict[str, list[RunTrace]] = {}
    for t in traces:
        by_strategy.setdefault(t.strategy.value, []).append(t)

    percentiles = {
        name: [
            summarize_epoch(e, np.concatenate([t.wasted[e] for t in runs]))
            for e in range(cfg.epochs)
        ]
        for name, runs in by_strategy.items()
    }
    digests = {
        name: {t.seed: t.digest for t in sorted(runs, key=lambda t: t.seed)}
        for name, runs in by_strategy.items()
    }
    if len({tuple(sorted(d.items())) for d in digests.values()}) > 1:
        raise RuntimeError("paired runs did not start from the same pre-adaptation state")

    ratio = None
    g_rows = percentiles.get(Strategy.GOLDFISH.value)
    p_rows = percentiles.get(Strategy.PERIGEE.value)
    if g_rows and p_rows:
        raw = mean_ratio(g_rows[-1], p_rows[-1])
        ratio = None if raw is None else round_half_even(raw, 4)

    return ComparisonResult(
        config=cfg,
        percentiles=percentiles,
        final_ratio=ratio,
        digests=digests,
        sorted_curve={name: _sorted_curve(runs) for name, runs in by_strategy.items()},
        failures={name: sum(t.failures for t in runs) for name, runs in by_strategy.items()},
    )


def run_comparison_study(
    cfg: ExperimentConfig, *, workers: int | None = None
) -> ComparisonResult:
    """Paired Goldfish / Perigee runs on identical seeds and graphs."""

    result = summarize_comparison(cfg, collect_comparison_traces(cfg, workers=workers))
    logger.info(
        json.dumps(
            {
                "event": "study_completed",
                "study": "compare",
                "seeds": len(cfg.seeds),
                "final_ratio": result.final_ratio,
            }
        )
    )
    return result


def run_comparison_grid(
    base: ExperimentConfig,
    scenarios: Sequence[ScenarioSpec],
    *,
    workers: int | None = None,
) -> list[ComparisonRow]:
    """One comparison per scenario row; final-epoch summaries side by side."""

    rows: list[ComparisonRow] = []
    for scenario in scenarios:
        cfg = base.model_copy(update=scenario.model_dump())
        cfg = ExperimentConfig.model_validate(cfg.model_dump())
        result = run_comparison_study(cfg, workers=workers)
        rows.append(
            ComparisonRow(
                scenario=scenario,
                goldfish=result.percentiles[Strategy.GOLDFISH.value][-1],
                perigee=result.percentiles[Strategy.PERIGEE.value][-1],
                ratio=result.final_ratio,
            )
        )
    return rows

"""
Experiment harness: scenario preparation, per-strategy runs, the two studies and result files.
"""

from __future__ import annotations

from goldfish.harness.outputs import write_comparison_outputs, write_grid, write_optimal_outputs
from goldfish.harness.runner import RunTrace, Scenario, prepare_scenario, run_strategy
from goldfish.harness.studies import (
    collect_comparison_traces,
    collect_optimal_runs,
    run_comparison_grid,
    run_comparison_study,
    run_global_optimal_study,
    summarize_comparison,
    summarize_optimal,
)

__all__ = [
    "RunTrace",
    "Scenario",
    "collect_comparison_traces",
    "collect_optimal_runs",
    "prepare_scenario",
    "run_comparison_grid",
    "run_comparison_study",
    "run_global_optimal_study",
    "run_strategy",
    "summarize_comparison",
    "summarize_optimal",
    "write_comparison_outputs",
    "write_grid",
    "write_optimal_outputs",
]

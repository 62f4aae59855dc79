"""
Result files.

Everything written here is a pure function of the study result, so reruns with the same
config produce byte-identical files: JSON keys are sorted, floats are rounded half-even (1
decimal for milliseconds, 4 for ratios) and no timestamps are recorded.
"""

from __future__ import annotations

import csv
import json
from collections.abc import Sequence
from pathlib import Path

from eval.metrics import round_half_even
from eval.scorecard import grid_rows, percentile_rows
from goldfish.harness.runner import RunTrace
from goldfish.harness.studies import OptimalRun
from goldfish.schemas.experiment import ComparisonResult, ComparisonRow, OptimalStudyResult


def _ms(value: float) -> str:
    rounded = round_half_even(value, 1)
    return "inf" if rounded is None or rounded == float("inf") else f"{rounded:.1f}"


def write_summary(out_dir: Path, study: str, result: ComparisonResult | OptimalStudyResult) -> Path:
    payload = {"study": study, **result.model_dump(mode="json")}
    path = out_dir / "summary.json"
    path.write_text(json.dumps(payload, indent=2, sort_keys=True) + "\n", encoding="utf-8")
    return path


def write_wasted(out_dir: Path, traces: Sequence[RunTrace]) -> Path:
    path = out_dir / "wasted.csv"
    with path.open("w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["strategy", "seed", "epoch", "node", "wasted_ms"])
        for t in sorted(traces, key=lambda t: (t.strategy.value, t.seed)):
            for e in range(t.wasted.shape[0]):
                for k, node in enumerate(t.population):
                    w.writerow([t.strategy.value, t.seed, e, node, _ms(t.wasted[e, k])])
    return path


def write_decisions(
    out_dir: Path, traces: Sequence[RunTrace], n_exploit: int, n_explore: int
) -> Path:
    path = out_dir / "decisions.csv"
    header = ["strategy", "seed", "epoch", "node"]
    header += [f"exploit{i + 1}" for i in range(n_exploit)]
    header += [f"explore{i + 1}" for i in range(n_explore)]
    with path.open("w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(header)
        for t in sorted(traces, key=lambda t: (t.strategy.value, t.seed)):
            for row in t.decisions:
                exploit = (row.exploit + [""] * n_exploit)[:n_exploit]
                explore = (row.explore + [""] * n_explore)[:n_explore]
                w.writerow([row.strategy, row.seed, row.epoch, row.node, *exploit, *explore])
    return path


def write_percentiles(out_dir: Path, result: ComparisonResult) -> Path:
    path = out_dir / "percentiles.csv"
    rows = percentile_rows(result)
    with path.open("w", newline="", encoding="utf-8") as fh:
        w = csv.DictWriter(
            fh,
            fieldnames=["strategy", "epoch", "p25", "p50", "p75", "mean", "unreachable"],
            lineterminator="\n",
        )
        w.writeheader()
        w.writerows(rows)
    return path


def write_histogram(path: Path, histogram: dict[int, int]) -> Path:
    with path.open("w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["bucket", "count"])
        for bucket, count in sorted(histogram.items()):
            w.writerow([bucket, count])
    return path


def write_comparison_outputs(
    out_dir: Path | str, result: ComparisonResult, traces: Sequence[RunTrace]
) -> list[Path]:
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    cfg = result.config
    return [
        write_summary(out, "compare", result),
        write_wasted(out, traces),
        write_percentiles(out, result),
        write_decisions(out, traces, cfg.n_exploit, cfg.n_explore),
    ]


def write_optimal_outputs(
    out_dir: Path | str, result: OptimalStudyResult, runs: Sequence[OptimalRun]
) -> list[Path]:
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    cfg = result.config
    traces = [r.trace for r in runs]
    return [
        write_summary(out, "optimal", result),
        write_histogram(out / "histogram.csv", result.histogram),
        write_histogram(out / "histogram_far.csv", result.histogram_far),
        write_wasted(out, traces),
        write_decisions(out, traces, cfg.n_exploit, cfg.n_explore),
    ]


GRID_FIELDS = [
    "topology",
    "n_publishers",
    "pub_dist",
    "n_adapters",
    "goldfish_p25",
    "goldfish_p50",
    "goldfish_p75",
    "goldfish_mean",
    "perigee_p25",
    "perigee_p50",
    "perigee_p75",
    "perigee_mean",
    "ratio",
]


def write_grid(out_dir: Path | str, rows: Sequence[ComparisonRow]) -> Path:
    """One line per scenario; empty cells where a summary has no finite value."""

    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    path = out / "grid.csv"
    with path.open("w", newline="", encoding="utf-8") as fh:
        w = csv.DictWriter(fh, fieldnames=GRID_FIELDS, lineterminator="\n")
        w.writeheader()
        w.writerows(grid_rows(list(rows)))
    return path

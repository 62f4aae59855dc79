"""
Scorecard export helpers (pure functions).

Study results are nested pydantic models; exports want flat rows. These helpers do the
flattening in one place so the CLI writers and the HTTP API produce the same table.

Rows come out in a stable order (strategy name, then epoch / scenario order), which keeps
exported CSVs diffable between runs.
"""

from __future__ import annotations

from typing import Any

from goldfish.schemas.experiment import ComparisonResult, ComparisonRow, PercentileRow


def percentile_rows(result: ComparisonResult) -> list[dict[str, Any]]:
    """One row per (strategy, epoch): p25, p50, p75, mean, unreachable."""

    rows: list[dict[str, Any]] = []
    for strategy in sorted(result.percentiles):
        for row in result.percentiles[strategy]:
            rows.append(
                {
                    "strategy": strategy,
                    "epoch": row.epoch,
                    "p25": row.p25,
                    "p50": row.p50,
                    "p75": row.p75,
                    "mean": row.mean,
                    "unreachable": row.unreachable,
                }
            )
    return rows


def mean_ratio(numerator: PercentileRow, denominator: PercentileRow) -> float | None:
    """Mean-over-mean ratio, None when either side has no finite value or a zero mean."""

    if numerator.mean is None or not denominator.mean:
        return None
    return numerator.mean / denominator.mean


def grid_rows(rows: list[ComparisonRow]) -> list[dict[str, Any]]:
    """Flatten a comparison grid: scenario columns, then each strategy's final summary."""

    out: list[dict[str, Any]] = []
    for row in rows:
        flat: dict[str, Any] = {
            "topology": row.scenario.topology.value,
            "n_publishers": row.scenario.n_publishers,
            "pub_dist": row.scenario.pub_dist.value,
            "n_adapters": row.scenario.n_adapters,
        }
        for name, summary in (("goldfish", row.goldfish), ("perigee", row.perigee)):
            for key in ("p25", "p50", "p75", "mean"):
                flat[f"{name}_{key}"] = getattr(summary, key)
        flat["ratio"] = row.ratio
        out.append(flat)
    return out

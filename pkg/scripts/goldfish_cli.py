"""
Command-line entry point for the Goldfish simulator.

Usage (from repo root):
  python scripts/goldfish_cli.py optimal --graphs 30 --epochs 300 --seed 0 --out out/optimal
  python scripts/goldfish_cli.py compare --pub-dist exp --adapters 32 --seeds 0,1,2 --out out/cmp
  python scripts/goldfish_cli.py grid --epochs 100 --seeds 0,1 --out out/grid
  python scripts/goldfish_cli.py complete --matrix-file dump.txt --k 2

Global flags (before the subcommand): --threads N overrides GOLDFISH_THREADS, --log-level sets
the root log level. Exit codes: 0 success, 1 configuration or IO error, 2 bad arguments.
"""

from __future__ import annotations

import argparse
import json
import math
import sys
from pathlib import Path

ROOT = Path(__file__).resolve().parent.parent
if str(ROOT) not in sys.path:
    sys.path.insert(0, str(ROOT))

from pydantic import ValidationError  # noqa: E402

from goldfish.completer import complete_matrix  # noqa: E402
from goldfish.config import configure_logging, debug_dir, load_env  # noqa: E402
from goldfish.errors import GoldfishError  # noqa: E402
from goldfish.harness.outputs import (  # noqa: E402
    write_comparison_outputs,
    write_grid,
    write_optimal_outputs,
)
from goldfish.harness.studies import (  # noqa: E402
    collect_comparison_traces,
    collect_optimal_runs,
    run_comparison_grid,
    summarize_comparison,
    summarize_optimal,
)
from goldfish.obsmatrix.constructor import load_matrix_dump  # noqa: E402
from goldfish.schemas.experiment import ExperimentConfig, ScenarioSpec, Topology  # noqa: E402
from goldfish.selector.altruistic import score_peers  # noqa: E402


def _seed_list(raw: str) -> list[int]:
    try:
        seeds = [int(s) for s in raw.split(",") if s.strip()]
    except ValueError as e:
        raise argparse.ArgumentTypeError(f"seeds must be comma-separated integers: {raw!r}") from e
    if not seeds:
        raise argparse.ArgumentTypeError("at least one seed is required")
    return seeds


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(description="Goldfish peer-selection simulator")
    parser.add_argument("--threads", type=int, default=None, help="Worker cap for parallel runs")
    parser.add_argument("--log-level", default=None, help="Root log level (default INFO)")
    sub = parser.add_subparsers(dest="command", required=True)

    opt = sub.add_parser("optimal", help="Global-optimal study over random graphs")
    opt.add_argument("--graphs", type=int, default=30)
    opt.add_argument("--nodes", type=int, default=100)
    opt.add_argument("--publishers", type=int, default=3)
    opt.add_argument("--epochs", type=int, default=300)
    opt.add_argument("--seed", type=int, default=0)
    opt.add_argument("--out", type=Path, required=True)

    cmp_ = sub.add_parser("compare", help="Paired Goldfish / Perigee comparison")
    cmp_.add_argument("--topology", choices=["random2d", "measured"], default="random2d")
    cmp_.add_argument("--latency-file", default=None)
    cmp_.add_argument("--nodes", type=int, default=100)
    cmp_.add_argument("--pub-dist", choices=["exp", "unif"], default="exp")
    cmp_.add_argument("--publishers", type=int, default=100)
    cmp_.add_argument("--adapters", type=int, default=32)
    cmp_.add_argument("--epochs", type=int, default=100)
    cmp_.add_argument("--seeds", type=_seed_list, default=[0])
    cmp_.add_argument("--out", type=Path, required=True)

    grid = sub.add_parser("grid", help="Comparison over a grid of scenarios")
    grid.add_argument("--latency-file", default=None, help="Adds measured-topology rows")
    grid.add_argument("--nodes", type=int, default=100)
    grid.add_argument("--epochs", type=int, default=100)
    grid.add_argument("--seeds", type=_seed_list, default=[0])
    grid.add_argument("--out", type=Path, required=True)

    comp = sub.add_parser("complete", help="Run the completer on a dumped matrix")
    comp.add_argument("--matrix-file", type=Path, required=True)
    comp.add_argument("--k", type=int, default=2)
    comp.add_argument("--max-steps", type=int, default=2000)
    comp.add_argument("--reg-weight", type=float, default=1e-4)
    return parser


def _debug_dir() -> str | None:
    path = debug_dir()
    return str(path) if path is not None else None


def _run_optimal(args: argparse.Namespace) -> int:
    cfg = ExperimentConfig.global_optimal(
        n_nodes=args.nodes,
        n_publishers=args.publishers,
        epochs=args.epochs,
        seeds=[args.seed],
        debug_dir=_debug_dir(),
    )
    runs = collect_optimal_runs(cfg, args.graphs, workers=args.threads)
    result = summarize_optimal(cfg, runs)
    write_optimal_outputs(args.out, result, runs)
    print(
        f"{result.n_graphs} graphs: retained={result.fraction_retained} "
        f"near_optimal={result.fraction_near_optimal} -> {args.out}"
    )
    return 0


def _run_compare(args: argparse.Namespace) -> int:
    cfg = ExperimentConfig(
        topology=args.topology,
        latency_file=args.latency_file,
        n_nodes=args.nodes,
        pub_dist=args.pub_dist,
        n_publishers=args.publishers,
        n_adapters=args.adapters,
        epochs=args.epochs,
        seeds=args.seeds,
        debug_dir=_debug_dir(),
    )
    traces = collect_comparison_traces(cfg, workers=args.threads)
    result = summarize_comparison(cfg, traces)
    write_comparison_outputs(args.out, result, traces)
    print(f"{len(cfg.seeds)} seeds: goldfish/perigee ratio={result.final_ratio} -> {args.out}")
    return 0


def default_scenarios(n_nodes: int, latency_file: str | None) -> list[ScenarioSpec]:
    """Exponential publishers at two adapter counts plus a uniform row, per topology."""

    topologies = [Topology.RANDOM2D] + ([Topology.MEASURED] if latency_file else [])
    n_pub = min(100, n_nodes)
    rows: list[ScenarioSpec] = []
    for topology in topologies:
        for dist, adapters in (("exp", 32), ("exp", 64), ("unif", 32)):
            rows.append(
                ScenarioSpec(
                    topology=topology,
                    n_publishers=n_pub,
                    pub_dist=dist,
                    n_adapters=min(adapters, n_nodes),
                )
            )
    return rows


def _run_grid(args: argparse.Namespace) -> int:
    base = ExperimentConfig(
        n_nodes=args.nodes,
        n_publishers=min(100, args.nodes),
        n_adapters=min(32, args.nodes),
        latency_file=args.latency_file,
        epochs=args.epochs,
        seeds=args.seeds,
    )
    rows = run_comparison_grid(
        base, default_scenarios(args.nodes, args.latency_file), workers=args.threads
    )
    path = write_grid(args.out, rows)
    print(f"{len(rows)} scenarios -> {path}")
    return 0


def _run_complete(args: argparse.Namespace) -> int:
    T = load_matrix_dump(args.matrix_file)
    problem, completed = complete_matrix(
        T, args.k, reg_weight=args.reg_weight, max_steps=args.max_steps
    )
    T = problem.T
    grid = [[None if math.isnan(v) else round(v, 3) for v in row] for row in completed.M.tolist()]
    payload = {
        "class_counts": {c.value: n for c, n in T.class_counts().items()},
        "completed": grid,
        "offsets": [round(float(c), 3) for c in completed.offsets],
        "final_loss": completed.final_loss,
        "steps": completed.steps,
        "converged": completed.converged,
        "scores": score_peers(completed, T),
    }
    print(json.dumps(payload, indent=2, sort_keys=True))
    return 0


_COMMANDS = {
    "optimal": _run_optimal,
    "compare": _run_compare,
    "grid": _run_grid,
    "complete": _run_complete,
}


def main(argv: list[str] | None = None) -> int:
    load_env()
    args = build_parser().parse_args(argv)
    configure_logging(args.log_level)
    if args.threads is not None and args.threads < 1:
        print("--threads must be >= 1", file=sys.stderr)
        return 1
    try:
        return _COMMANDS[args.command](args)
    except ValidationError as e:
        print(f"Invalid configuration:\n{e}", file=sys.stderr)
        return 1
    except (GoldfishError, ValueError, OSError) as e:
        print(f"Error: {e}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())

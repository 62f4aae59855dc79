"""
Write a synthetic measured-latency file.

Usage (from repo root):
  python scripts/generate_latency_fixture.py --cities 200 --out data/latency/synthetic_200.csv

Pseudo-cities are scattered on a sphere; latencies are great-circle distance at fibre speed
plus jitter, so the measured-topology path can run without third-party data.
"""

from __future__ import annotations

import argparse
import sys
from pathlib import Path

ROOT = Path(__file__).resolve().parent.parent
if str(ROOT) not in sys.path:
    sys.path.insert(0, str(ROOT))

from goldfish.netgraph.latency import synthetic_city_matrix, write_latency_file  # noqa: E402


def main(argv: list[str] | None = None) -> int:
    parser = argparse.ArgumentParser(description="Generate a synthetic latency matrix file")
    parser.add_argument("--cities", type=int, default=200, help="Number of pseudo-cities")
    parser.add_argument("--seed", type=int, default=0)
    parser.add_argument("--jitter-ms", type=float, default=5.0)
    parser.add_argument("--out", type=Path, required=True)
    args = parser.parse_args(argv)

    if args.cities < 2:
        print("--cities must be >= 2", file=sys.stderr)
        return 1
    matrix = synthetic_city_matrix(args.cities, args.seed, jitter_ms=args.jitter_ms)
    try:
        path = write_latency_file(args.out, matrix)
    except OSError as e:
        print(f"Cannot write {args.out}: {e}", file=sys.stderr)
        return 1
    print(f"Wrote {args.cities} x {args.cities} latencies to {path}")
    return 0


if __name__ == "__main__":
    sys.exit(main())

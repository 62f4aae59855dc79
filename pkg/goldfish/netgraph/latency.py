"""
Latency models: random planar placement and measured city-to-city matrices.

Measured-latency file format
----------------------------
Plain CSV::

    # nodes=<N>
    0,37.5,81.0,...
    37.5,0,44.2,...
    ...

The first line declares N; the next N lines hold N comma-separated non-negative floats (ms)
with a zero diagonal. Symmetry is not required: asymmetric pairs are averaged with a warning
when the model is built.
"""

from __future__ import annotations

import json
import logging
import re
from pathlib import Path

import numpy as np

from goldfish.errors import LatencyFileError
from goldfish.schemas.graph import LatencyKind, LatencyModel

logger = logging.getLogger("goldfish.netgraph")

_HEADER = re.compile(r"^#\s*nodes\s*=\s*(\d+)\s*$")


def planar_model(
    n: int, rng: np.random.Generator, *, plane_size: float = 500.0, node_delay_ms: float = 20.0
) -> LatencyModel:
    """Uniform random positions on a `plane_size` x `plane_size` plane."""

    positions = rng.uniform(0.0, plane_size, size=(n, 2))
    return LatencyModel(
        kind=LatencyKind.PLANAR2D,
        node_delay_ms=node_delay_ms,
        plane_size=plane_size,
        positions=[(float(x), float(y)) for x, y in positions],
    )


def load_latency_file(path: Path | str) -> np.ndarray:
    """
    Parse a measured-latency file into an N x N array.

    Raises `LatencyFileError` for a missing/invalid header, wrong row or column counts,
    non-numeric cells, negative values or a non-zero diagonal.
    """

    path = Path(path)
    try:
        lines = [ln.strip() for ln in path.read_text(encoding="utf-8").splitlines()]
    except OSError as e:
        raise LatencyFileError(f"cannot read latency file {path}: {e}") from e
    lines = [ln for ln in lines if ln]
    if not lines:
        raise LatencyFileError(f"{path}: empty file")

    match = _HEADER.match(lines[0])
    if match is None:
        raise LatencyFileError(f"{path}: first line must be '# nodes=<N>', got {lines[0]!r}")
    n = int(match.group(1))
    body = lines[1:]
    if len(body) != n:
        raise LatencyFileError(f"{path}: header declares {n} nodes but found {len(body)} rows")

    rows: list[list[float]] = []
    for i, line in enumerate(body):
        cells = [c.strip() for c in line.split(",")]
        if len(cells) != n:
            raise LatencyFileError(f"{path}: row {i} has {len(cells)} values, expected {n}")
        try:
            rows.append([float(c) for c in cells])
        except ValueError as e:
            raise LatencyFileError(f"{path}: row {i} is not numeric ({e})") from e

    matrix = np.asarray(rows, dtype=float).reshape(n, n)
    if np.any(matrix < 0) or not np.all(np.isfinite(matrix)):
        raise LatencyFileError(f"{path}: latencies must be finite and non-negative")
    if np.any(np.diag(matrix) != 0):
        raise LatencyFileError(f"{path}: diagonal must be zero")
    if not np.allclose(matrix, matrix.T):
        logger.warning(
            json.dumps(
                {
                    "event": "latency_asymmetric",
                    "source": str(path),
                    "max_gap_ms": float(np.abs(matrix - matrix.T).max()),
                }
            )
        )
        matrix = (matrix + matrix.T) / 2.0
    return matrix


def write_latency_file(path: Path | str, matrix: np.ndarray) -> Path:
    """Write `matrix` in the measured-latency format (1 decimal per cell)."""

    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    n = matrix.shape[0]
    out = [f"# nodes={n}"]
    out.extend(",".join(f"{v:.1f}" for v in row) for row in matrix)
    path.write_text("\n".join(out) + "\n", encoding="utf-8")
    return path


def measured_model(
    full_matrix: np.ndarray,
    n: int,
    rng: np.random.Generator,
    *,
    node_delay_ms: float = 20.0,
) -> LatencyModel:
    """
    Place `n` nodes on measured cities.

    Cities are picked by a seeded permutation of the matrix rows; node i sits on city
    `perm[i]`.
    """

    if n > full_matrix.shape[0]:
        raise LatencyFileError(
            f"need {n} nodes but the latency matrix only has {full_matrix.shape[0]} cities"
        )
    perm = rng.permutation(full_matrix.shape[0])[:n]
    sub = full_matrix[np.ix_(perm, perm)]
    return LatencyModel(
        kind=LatencyKind.MEASURED, node_delay_ms=node_delay_ms, matrix=sub.tolist()
    )


def synthetic_city_matrix(n: int, seed: int, *, jitter_ms: float = 5.0) -> np.ndarray:
    """
    Seeded stand-in for a measured dataset.

    Cities are scattered on a sphere of Earth radius; one-way latency is the great-circle
    distance at fibre speed (~200 km/ms) times a path-inflation factor, plus symmetric jitter.
    """

    rng = np.random.default_rng(seed)
    lat = np.arcsin(rng.uniform(-0.9, 0.9, size=n))
    lon = rng.uniform(-np.pi, np.pi, size=n)
    dlat = lat[:, None] - lat[None, :]
    dlon = lon[:, None] - lon[None, :]
    hav = np.sin(dlat / 2) ** 2
    hav = hav + np.cos(lat[:, None]) * np.cos(lat[None, :]) * np.sin(dlon / 2) ** 2
    km = 2 * 6371.0 * np.arcsin(np.sqrt(np.clip(hav, 0.0, 1.0)))
    ms = km / 200.0 * 1.5
    noise = rng.uniform(0.0, jitter_ms, size=(n, n))
    ms = ms + (noise + noise.T) / 2.0
    np.fill_diagonal(ms, 0.0)
    return np.round(ms, 1)

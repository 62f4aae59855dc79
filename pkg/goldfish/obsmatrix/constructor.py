"""
Matrix constructor: merge consecutive epoch batches into one partially observed matrix.

Layout
------
- rows: every block of every batch, in batch order (one row per block even if the node
  recorded nothing for it)
- columns: union of the batches' peer sets in first-seen order (ascending NodeId inside one
  batch)
- cell (i, j): OBSERVED with the relative time, SYMBOLIC, or missing

Missing cells are split by `classify_missing`:

    qualifying rows for (r, u) = { i != r : B[i, u] = 1 and |common observed columns of i, r| >= 2 }

    INFEASIBLE  row r has < 2 observed cells, or no qualifying row
    AMBIGUOUS   1 .. K-1 qualifying rows
    ESTIMABLE   >= K qualifying rows

Symbolic cells carry no number, so they never count as common observed columns.
"""

from __future__ import annotations

from collections.abc import Sequence
from dataclasses import dataclass, replace
from pathlib import Path

import numpy as np

from goldfish.errors import MatrixConstructionError
from goldfish.schemas.graph import NodeId
from goldfish.schemas.matrix import (
    AMBIGUOUS,
    ESTIMABLE,
    INFEASIBLE,
    MISSING,
    OBSERVED,
    SYMBOLIC,
    CellClass,
)
from goldfish.schemas.simulation import EpochBatch


@dataclass(frozen=True)
class ObservationMatrix:
    """
    Block x peer observation matrix.

    `values` holds NaN wherever the cell is not OBSERVED. `active[i, j]` says whether peer j
    was connected during row i's epoch. `k` is the neighbour count the classes were refined
    with (None until `classify_missing` ran).
    """

    values: np.ndarray
    classes: np.ndarray
    row_epoch: np.ndarray
    row_block: np.ndarray
    col_peer: list[NodeId]
    active: np.ndarray
    k: int | None = None

    @classmethod
    def from_arrays(
        cls,
        values: np.ndarray | Sequence[Sequence[float | None]],
        *,
        symbolic: np.ndarray | None = None,
        col_peer: Sequence[NodeId] | None = None,
        row_epoch: Sequence[int] | None = None,
        row_block: Sequence[int] | None = None,
    ) -> "ObservationMatrix":
        """
        Build an unclassified matrix from a grid (NaN / None = no number).

        Cells flagged in `symbolic` become SYMBOLIC; other non-numeric cells are MISSING.
        Every column is treated as active in every row.
        """

        grid = np.array(
            [[np.nan if v is None else float(v) for v in row] for row in values], dtype=float
        )
        if grid.ndim != 2 or grid.size == 0:
            raise MatrixConstructionError("matrix must be a non-empty 2-D grid")
        p, q = grid.shape
        sym = np.zeros((p, q), dtype=bool) if symbolic is None else np.asarray(symbolic, bool)
        if sym.shape != (p, q):
            raise MatrixConstructionError(f"symbolic mask shape {sym.shape} != {(p, q)}")
        if np.any(sym & ~np.isnan(grid)):
            raise MatrixConstructionError("a symbolic cell cannot also carry a value")
        if np.any(grid[~np.isnan(grid)] < 0):
            raise MatrixConstructionError("relative times must be non-negative")

        classes = np.full((p, q), MISSING, dtype=np.int8)
        classes[~np.isnan(grid)] = OBSERVED
        classes[sym] = SYMBOLIC
        peers = list(range(q)) if col_peer is None else [int(c) for c in col_peer]
        if len(peers) != q or len(set(peers)) != q:
            raise MatrixConstructionError("col_peer must list q distinct peers")
        return cls(
            values=grid,
            classes=classes,
            row_epoch=np.zeros(p, dtype=int) if row_epoch is None else np.asarray(row_epoch),
            row_block=np.arange(p) if row_block is None else np.asarray(row_block),
            col_peer=peers,
            active=np.ones((p, q), dtype=bool),
        )

    @property
    def p(self) -> int:
        return self.values.shape[0]

    @property
    def q(self) -> int:
        return self.values.shape[1]

    @property
    def observed(self) -> np.ndarray:
        return self.classes == OBSERVED

    @property
    def B(self) -> np.ndarray:
        """0/1 observation indicator."""

        return self.observed.astype(np.int64)

    @property
    def symbolic(self) -> np.ndarray:
        return self.classes == SYMBOLIC

    @property
    def missing(self) -> np.ndarray:
        return self.classes >= MISSING

    def cell_class(self, i: int, j: int) -> CellClass:
        return CellClass.from_code(self.classes[i, j])

    def class_counts(self) -> dict[CellClass, int]:
        return {c: int(np.count_nonzero(self.classes == c.code)) for c in CellClass}

    def zero_filled(self) -> np.ndarray:
        """Values with every non-observed cell set to 0."""

        return np.where(self.observed, self.values, 0.0)


def build_matrix(batches: Sequence[EpochBatch]) -> ObservationMatrix:
    """Concatenate `batches` (epoch order, one node) into an unclassified matrix."""

    if not batches:
        raise MatrixConstructionError("cannot build a matrix from zero epoch batches")
    if len({b.node for b in batches}) != 1:
        raise MatrixConstructionError("all batches must belong to the same node")
    epochs = [b.epoch_id for b in batches]
    if epochs != sorted(epochs):
        raise MatrixConstructionError(f"batches must be in epoch order, got {epochs}")

    col_peer: list[NodeId] = []
    for b in batches:
        for v in sorted(b.peer_set):
            if v not in col_peer:
                col_peer.append(v)
    col_of = {v: j for j, v in enumerate(col_peer)}

    p = sum(b.n_blocks for b in batches)
    q = len(col_peer)
    values = np.full((p, q), np.nan)
    classes = np.full((p, q), MISSING, dtype=np.int8)
    active = np.zeros((p, q), dtype=bool)
    row_epoch = np.zeros(p, dtype=int)
    row_block = np.zeros(p, dtype=int)

    row = 0
    for b in batches:
        row_of = {block: row + k for k, block in enumerate(b.blocks)}
        members = set(b.peer_set)
        cols = [col_of[v] for v in b.peer_set]
        for block, i in row_of.items():
            row_epoch[i] = b.epoch_id
            row_block[i] = block
            active[i, cols] = True
        for rec in b.records:
            if rec.peer not in members:
                raise MatrixConstructionError(
                    f"epoch {b.epoch_id}: record from peer {rec.peer} outside the peer set"
                )
            i = row_of.get(rec.block)
            if i is None:
                raise MatrixConstructionError(
                    f"epoch {b.epoch_id}: record for block {rec.block} outside the epoch"
                )
            j = col_of[rec.peer]
            if rec.rel_time_ms is None:
                classes[i, j] = SYMBOLIC
            else:
                classes[i, j] = OBSERVED
                values[i, j] = rec.rel_time_ms
        row += b.n_blocks

    return ObservationMatrix(
        values=values,
        classes=classes,
        row_epoch=row_epoch,
        row_block=row_block,
        col_peer=col_peer,
        active=active,
    )


def qualifying_counts(T: ObservationMatrix) -> tuple[np.ndarray, np.ndarray]:
    """
    Common-observed counts between rows (p x p, zero diagonal) and, per cell, the number of
    qualifying neighbour rows (p x q).
    """

    B = T.B
    common = B @ B.T
    np.fill_diagonal(common, 0)
    qualifying = (common >= 2).astype(np.int64) @ B
    return common, qualifying


def classify_missing(T: ObservationMatrix, K: int) -> ObservationMatrix:
    """Refine every missing cell into ESTIMABLE / AMBIGUOUS / INFEASIBLE (idempotent)."""

    if K < 1:
        raise ValueError("K must be >= 1")
    _, qualifying = qualifying_counts(T)
    row_obs = T.observed.sum(axis=1)
    missing = T.missing

    classes = T.classes.copy()
    infeasible = missing & ((row_obs < 2)[:, None] | (qualifying == 0))
    ambiguous = missing & ~infeasible & (qualifying < K)
    estimable = missing & ~infeasible & ~ambiguous
    classes[infeasible] = INFEASIBLE
    classes[ambiguous] = AMBIGUOUS
    classes[estimable] = ESTIMABLE
    return replace(T, classes=classes, k=K)


# ----------
# Debug dump
# ----------


def render_matrix(T: ObservationMatrix) -> list[str]:
    """
    Text dump: a `# peers=` header, then one `epoch,block,cell,...` line per row with
    cells `t=<ms>`, `S`, `E`, `A`, `X` (`?` for unclassified missing cells).
    """

    lines = ["# peers=" + ",".join(str(v) for v in T.col_peer)]
    for i in range(T.p):
        cells = []
        for j in range(T.q):
            cls = T.cell_class(i, j)
            cells.append(f"t={T.values[i, j]:.3f}" if cls == CellClass.OBSERVED else cls.glyph)
        lines.append(f"{T.row_epoch[i]},{T.row_block[i]}," + ",".join(cells))
    return lines


def parse_matrix_dump(text: str, *, source: str = "<matrix>") -> ObservationMatrix:
    """Inverse of `render_matrix`. Missing-cell glyphs all come back as unclassified MISSING."""

    lines = [ln.strip() for ln in text.splitlines() if ln.strip()]
    if not lines or not lines[0].startswith("# peers="):
        raise MatrixConstructionError(f"{source}: first line must be '# peers=<id,...>'")
    try:
        peers = [int(v) for v in lines[0][len("# peers=") :].split(",")]
    except ValueError as e:
        raise MatrixConstructionError(f"{source}: bad peer header ({e})") from e

    grid: list[list[float | None]] = []
    sym: list[list[bool]] = []
    epochs: list[int] = []
    blocks: list[int] = []
    for n, line in enumerate(lines[1:], start=2):
        parts = [c.strip() for c in line.split(",")]
        if len(parts) != len(peers) + 2:
            raise MatrixConstructionError(
                f"{source}: line {n} has {len(parts) - 2} cells, expected {len(peers)}"
            )
        try:
            epochs.append(int(parts[0]))
            blocks.append(int(parts[1]))
            row = [float(c[2:]) if c.startswith("t=") else None for c in parts[2:]]
        except ValueError as e:
            raise MatrixConstructionError(f"{source}: line {n} is malformed ({e})") from e
        if any(c[:2] != "t=" and c not in {"S", "E", "A", "X", "?"} for c in parts[2:]):
            raise MatrixConstructionError(f"{source}: line {n} has an unknown cell glyph")
        grid.append(row)
        sym.append([c == "S" for c in parts[2:]])

    if not grid:
        raise MatrixConstructionError(f"{source}: no matrix rows")
    return ObservationMatrix.from_arrays(
        grid, symbolic=np.array(sym), col_peer=peers, row_epoch=epochs, row_block=blocks
    )


def load_matrix_dump(path: Path | str) -> ObservationMatrix:
    path = Path(path)
    try:
        text = path.read_text(encoding="utf-8")
    except OSError as e:
        raise MatrixConstructionError(f"cannot read matrix file {path}: {e}") from e
    return parse_matrix_dump(text, source=str(path))

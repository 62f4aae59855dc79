"""
Observation-matrix cell classes.

Every cell of a block x peer matrix falls in exactly one class:

- OBSERVED: a numeric relative delivery time
- SYMBOLIC: the peer got the block from us first (no number, but "not the fastest")
- ESTIMABLE / AMBIGUOUS / INFEASIBLE: missing cells, split by how many qualifying neighbour
  rows exist for K-NN interpolation (>= K, 1..K-1, none)
- MISSING: a missing cell that has not been classified yet

Internally the matrix stores classes as small integer codes; `CellClass.code` / `from_code`
translate between the two.
"""

from __future__ import annotations

from enum import Enum


class CellClass(str, Enum):
    OBSERVED = "observed"
    SYMBOLIC = "symbolic"
    MISSING = "missing"
    ESTIMABLE = "estimable"
    AMBIGUOUS = "ambiguous"
    INFEASIBLE = "infeasible"

    @property
    def code(self) -> int:
        return _CODES[self]

    @property
    def glyph(self) -> str:
        """Single-letter rendering used by matrix dumps (OBSERVED renders as `t=<ms>`)."""

        return _GLYPHS[self]

    @classmethod
    def from_code(cls, code: int) -> "CellClass":
        return _BY_CODE[int(code)]


_CODES = {
    CellClass.OBSERVED: 0,
    CellClass.SYMBOLIC: 1,
    CellClass.MISSING: 2,
    CellClass.ESTIMABLE: 3,
    CellClass.AMBIGUOUS: 4,
    CellClass.INFEASIBLE: 5,
}
_BY_CODE = {v: k for k, v in _CODES.items()}
_GLYPHS = {
    CellClass.OBSERVED: "t",
    CellClass.SYMBOLIC: "S",
    CellClass.MISSING: "?",
    CellClass.ESTIMABLE: "E",
    CellClass.AMBIGUOUS: "A",
    CellClass.INFEASIBLE: "X",
}

OBSERVED = _CODES[CellClass.OBSERVED]
SYMBOLIC = _CODES[CellClass.SYMBOLIC]
MISSING = _CODES[CellClass.MISSING]
ESTIMABLE = _CODES[CellClass.ESTIMABLE]
AMBIGUOUS = _CODES[CellClass.AMBIGUOUS]
INFEASIBLE = _CODES[CellClass.INFEASIBLE]

"""
Overlay-graph schemas (Pydantic v2).

What this file does
-------------------
Defines the contracts shared by the topology code and everything that evaluates it:

- `EdgeRole`: why an outgoing connection exists (exploitation vs exploration)
- `EdgeFilter`: which edges a shortest-path query may use
- `LatencyKind` / `LatencyModel`: how per-hop delay is computed

The latency model is the only schema here that carries numbers. It validates them once at the
boundary and then exposes a cached numpy delay matrix, so hot loops never go back through
pydantic.
"""

from __future__ import annotations

import json
import logging
from enum import Enum

import numpy as np
from pydantic import BaseModel, Field, PrivateAttr, model_validator

logger = logging.getLogger("goldfish.netgraph")

# Node identifiers are dense integers in [0, N).
NodeId = int


class EdgeRole(str, Enum):
    """
    Role of an outgoing connection.

    - EXPLOIT: kept because it scores well
    - EXPLORE: drawn from the depleting pool to discover new peers
    """

    EXPLOIT = "exploit"
    EXPLORE = "explore"


class EdgeFilter(str, Enum):
    """
    Edge subset used by shortest-path queries.

    - ALL: every connection, both roles, both directions (message flooding)
    - EXPLOIT_ONLY: only exploitation out-edges of every node (metric evaluation)
    """

    ALL = "all"
    EXPLOIT_ONLY = "exploit_only"


class LatencyKind(str, Enum):
    PLANAR2D = "planar2d"
    MEASURED = "measured"


class LatencyModel(BaseModel):
    """
    Per-hop delay model.

    `edge_delay(u, v) = node_delay_ms + propagation(u, v)` where propagation is the Euclidean
    distance between positions (1 coordinate unit = 1 ms) for `planar2d`, or the measured
    one-way delay for `measured`.
    """

    kind: LatencyKind = Field(..., description="planar2d or measured")
    node_delay_ms: float = Field(
        default=20.0, ge=0.0, description="Fixed per-hop processing + transmission delay (ms)."
    )
    plane_size: float = Field(
        default=500.0, gt=0.0, description="Side of the square plane for planar2d positions."
    )
    positions: list[tuple[float, float]] | None = Field(
        default=None, description="Per-node (x, y) coordinates (planar2d only)."
    )
    matrix: list[list[float]] | None = Field(
        default=None, description="N x N one-way propagation delays in ms (measured only)."
    )

    _delays: np.ndarray | None = PrivateAttr(default=None)

    @model_validator(mode="after")
    def _check_shape(self) -> "LatencyModel":
        """
        Validate the fields required by `kind`.

        Measured matrices must be square, non-negative and have a zero diagonal. Asymmetric
        entries are averaged (with a warning) so that relaying over an undirected connection
        costs the same in both directions.
        """

        if self.kind == LatencyKind.PLANAR2D:
            if self.positions is None:
                raise ValueError("planar2d latency requires positions")
            for x, y in self.positions:
                if not (0.0 <= x <= self.plane_size and 0.0 <= y <= self.plane_size):
                    raise ValueError(f"position ({x}, {y}) lies outside [0, {self.plane_size}]^2")
            return self

        if self.matrix is None:
            raise ValueError("measured latency requires a matrix")
        arr = np.asarray(self.matrix, dtype=float)
        if arr.ndim != 2 or arr.shape[0] != arr.shape[1]:
            raise ValueError(f"measured matrix must be square, got shape {arr.shape}")
        if np.any(arr < 0) or not np.all(np.isfinite(arr)):
            raise ValueError("measured matrix must be finite and non-negative")
        if np.any(np.diag(arr) != 0):
            raise ValueError("measured matrix must have a zero diagonal")
        if not np.allclose(arr, arr.T):
            logger.warning(
                json.dumps(
                    {
                        "event": "latency_asymmetric",
                        "source": "model",
                        "max_gap_ms": float(np.abs(arr - arr.T).max()),
                    }
                )
            )
            self.matrix = ((arr + arr.T) / 2.0).tolist()
        return self

    @property
    def n_nodes(self) -> int:
        if self.kind == LatencyKind.PLANAR2D:
            return len(self.positions or [])
        return len(self.matrix or [])

    def delay_matrix(self) -> np.ndarray:
        """Full N x N `edge_delay` matrix (diagonal 0). Computed once and cached."""

        if self._delays is None:
            if self.kind == LatencyKind.PLANAR2D:
                pos = np.asarray(self.positions, dtype=float)
                diff = pos[:, None, :] - pos[None, :, :]
                prop = np.hypot(diff[..., 0], diff[..., 1])
            else:
                prop = np.asarray(self.matrix, dtype=float)
            delays = prop + self.node_delay_ms
            np.fill_diagonal(delays, 0.0)
            self._delays = delays
        return self._delays

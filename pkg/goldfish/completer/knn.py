"""
K-nearest-neighbour assignment for missing cells.

Distance between two block rows is the *differential variance*: the unbiased variance of
their element-wise difference over commonly observed peers. Two rows measured from nearby
publishers differ by (almost) a constant shift, so their differential variance is (almost) 0,
whatever the two rows' unknown zero points are.

For every ESTIMABLE / AMBIGUOUS cell the K qualifying rows with the smallest variance become
its neighbours, weighted by a softmax of the negated variances.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from goldfish.obsmatrix.constructor import ObservationMatrix, classify_missing, qualifying_counts
from goldfish.schemas.matrix import AMBIGUOUS, ESTIMABLE, MISSING

MIN_TEMPERATURE = 1e-6


def differential_variance(T: ObservationMatrix, r: int, i: int) -> float | None:
    """Unbiased variance of `T[r] - T[i]` over commonly observed columns; None if < 2."""

    if r == i:
        raise ValueError("differential variance needs two distinct rows")
    common = T.observed[r] & T.observed[i]
    if np.count_nonzero(common) < 2:
        return None
    diffs = T.values[r, common] - T.values[i, common]
    return float(np.var(diffs, ddof=1))


def pairwise_variances(T: ObservationMatrix) -> np.ndarray:
    """
    All differential variances at once (p x p, NaN where fewer than 2 common columns).

    With X the zero-filled values and B the indicator, for rows r, i:
    n = B B^T, S1 = X B^T - B X^T, S2 = X^2 B^T + B (X^2)^T - 2 X X^T and
    var = (S2 - S1^2 / n) / (n - 1).
    """

    B = T.B.astype(float)
    X = T.zero_filled()
    X2 = X * X
    n = B @ B.T
    s1 = X @ B.T - B @ X.T
    s2 = X2 @ B.T + B @ X2.T - 2.0 * (X @ X.T)
    with np.errstate(divide="ignore", invalid="ignore"):
        var = (s2 - s1 * s1 / n) / (n - 1.0)
    var = np.where(n >= 2, np.maximum(var, 0.0), np.nan)
    np.fill_diagonal(var, np.nan)
    return var


@dataclass
class NeighborAssignment:
    """
    Neighbour rows and weights per estimated cell.

    Cell v (0 <= v < s) sits at `cells[v] = (row, col)`; `neighbors[v]` are row indices (best
    first) with matching `weights[v]` (sum 1) and `variances[v]`.
    """

    cells: np.ndarray
    neighbors: list[np.ndarray]
    weights: list[np.ndarray]
    variances: list[np.ndarray]
    temperatures: np.ndarray
    ambiguous: np.ndarray
    k: int

    @property
    def s(self) -> int:
        return len(self.cells)

    def row(self, v: int) -> int:
        return int(self.cells[v, 0])

    def col(self, v: int) -> int:
        return int(self.cells[v, 1])

    def to_dict(self, T: ObservationMatrix) -> list[dict]:
        return [
            {
                "row": self.row(v),
                "peer": T.col_peer[self.col(v)],
                "ambiguous": bool(self.ambiguous[v]),
                "neighbors": [int(o) for o in self.neighbors[v]],
                "weights": [float(w) for w in self.weights[v]],
                "variances": [float(g) for g in self.variances[v]],
                "temperature": float(self.temperatures[v]),
            }
            for v in range(self.s)
        ]


def softmax_weights(
    variances: np.ndarray, temperature: float | None = None
) -> tuple[np.ndarray, float]:
    """Weights ∝ exp(-g / tau); tau defaults to max(mean(g), 1e-6)."""

    g = np.asarray(variances, dtype=float)
    tau = float(temperature) if temperature is not None else max(float(g.mean()), MIN_TEMPERATURE)
    if tau <= 0:
        raise ValueError("temperature must be positive")
    z = np.exp(-(g - g.min()) / tau)
    return z / z.sum(), tau


def assign_neighbors(
    T: ObservationMatrix, K: int, temperature: float | None = None
) -> NeighborAssignment:
    """
    Pick up to K qualifying rows of least differential variance for every ESTIMABLE or
    AMBIGUOUS cell (row-major order). Ties go to the lower row index.
    """

    if T.k != K or np.any(T.classes == MISSING):
        T = classify_missing(T, K)
    common, _ = qualifying_counts(T)
    variances = pairwise_variances(T)
    observed = T.observed

    targets = np.argwhere((T.classes == ESTIMABLE) | (T.classes == AMBIGUOUS))
    neighbors: list[np.ndarray] = []
    weights: list[np.ndarray] = []
    chosen_var: list[np.ndarray] = []
    temps = np.zeros(len(targets))

    for v, (r, u) in enumerate(targets):
        candidates = np.flatnonzero(observed[:, u] & (common[r] >= 2))
        g = variances[r, candidates]
        order = np.lexsort((candidates, g))[:K]
        rows, g = candidates[order], g[order]
        w, tau = softmax_weights(g, temperature)
        neighbors.append(rows)
        weights.append(w)
        chosen_var.append(g)
        temps[v] = tau

    return NeighborAssignment(
        cells=targets.reshape(-1, 2),
        neighbors=neighbors,
        weights=weights,
        variances=chosen_var,
        temperatures=temps,
        ambiguous=np.array([T.classes[r, u] == AMBIGUOUS for r, u in targets], dtype=bool),
        k=K,
    )

"""
Publishing-probability distributions and per-round publisher draws.

The exponential law is only described by its "80% of the mass on 20% of the nodes" summary, so
its decay rate is calibrated numerically (bisection) instead of being fixed analytically.
"""

from __future__ import annotations

import math
from collections.abc import Sequence

import numpy as np

from goldfish.errors import PublisherDistributionError
from goldfish.schemas.graph import NodeId
from goldfish.schemas.simulation import NodeRole, PublishDistribution

TOP_FRACTION = 0.2
TOP_MASS = 0.8


def _top_count(m: int) -> int:
    return max(1, round(TOP_FRACTION * m))


def top_mass(beta: float, m: int, k: int) -> float:
    """Mass held by the `k` highest-ranked of `m` nodes under prob ∝ exp(-beta * rank)."""

    if beta <= 0.0:
        return k / m
    return (-math.expm1(-beta * k)) / (-math.expm1(-beta * m))


def calibrate_beta(m: int, *, tol: float = 1e-12, max_iter: int = 200) -> float:
    """Decay rate so that the top 20% of `m` nodes hold 80% of the mass."""

    k = _top_count(m)
    if m <= 1 or top_mass(0.0, m, k) >= TOP_MASS:
        return 0.0
    lo, hi = 0.0, 1.0
    while top_mass(hi, m, k) < TOP_MASS:
        hi *= 2.0
    for _ in range(max_iter):
        mid = (lo + hi) / 2.0
        if top_mass(mid, m, k) < TOP_MASS:
            lo = mid
        else:
            hi = mid
        if hi - lo < tol:
            break
    return (lo + hi) / 2.0


def sample_publishers(
    roles: Sequence[NodeRole],
    dist: PublishDistribution | str,
    seed: int,
    *,
    publishers: Sequence[NodeId] | None = None,
    n_publishers: int | None = None,
) -> np.ndarray:
    """
    Per-node publishing probabilities (sum to 1).

    The publisher set is, in order of precedence: the explicit `publishers` list, the nodes
    whose role has `is_publisher`, or `n_publishers` nodes drawn with the seeded generator
    (all nodes when `n_publishers` is None). Exponential ranks are a seeded permutation of
    that set.
    """

    dist = PublishDistribution(dist)
    n = len(roles)
    rng = np.random.default_rng(seed)

    if publishers is not None:
        chosen = list(dict.fromkeys(int(p) for p in publishers))
    elif dist == PublishDistribution.FIXED_SET:
        raise PublisherDistributionError("fixed_set distribution requires an explicit list")
    else:
        chosen = [r.node for r in roles if r.is_publisher]
        if not chosen:
            count = n if n_publishers is None else n_publishers
            if count > n:
                raise PublisherDistributionError(f"{count} publishers requested, only {n} nodes")
            chosen = sorted(int(v) for v in rng.choice(n, size=count, replace=False))

    if not chosen:
        raise PublisherDistributionError("publisher set is empty")
    if any(p < 0 or p >= n for p in chosen):
        raise PublisherDistributionError(f"publisher ids must lie in [0, {n})")

    probs = np.zeros(n)
    if dist == PublishDistribution.EXPONENTIAL:
        m = len(chosen)
        beta = calibrate_beta(m)
        ranked = [chosen[i] for i in rng.permutation(m)]
        weights = np.exp(-beta * np.arange(m))
        weights /= weights.sum()
        for node, w in zip(ranked, weights):
            probs[node] = w
    else:
        probs[chosen] = 1.0 / len(chosen)
    return probs


def with_publish_probs(roles: Sequence[NodeRole], probs: np.ndarray) -> list[NodeRole]:
    """Copy of `roles` carrying `probs` (publisher flag set where prob > 0)."""

    return [
        r.model_copy(
            update={"publish_prob": float(probs[r.node]), "is_publisher": bool(probs[r.node] > 0)}
        )
        for r in roles
    ]


def draw_publishers(probs: np.ndarray, n_rounds: int, rng: np.random.Generator) -> np.ndarray:
    """Inverse-CDF draws of one publisher per round."""

    cdf = np.cumsum(probs)
    u = rng.random(n_rounds) * cdf[-1]
    idx = np.searchsorted(cdf, u, side="right")
    return np.minimum(idx, len(probs) - 1)

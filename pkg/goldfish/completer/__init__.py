"""
K-NN matrix completer: neighbour assignment, offset-compensated loss and solver.
"""

from __future__ import annotations

from goldfish.completer.knn import (
    NeighborAssignment,
    assign_neighbors,
    differential_variance,
    pairwise_variances,
)
from goldfish.completer.solver import (
    CompletedMatrix,
    CompletionProblem,
    Optimizer,
    ResidualNorm,
    gradient,
    loss,
    solve,
)
from goldfish.obsmatrix.constructor import ObservationMatrix, classify_missing


def complete_matrix(
    T: ObservationMatrix,
    K: int = 2,
    *,
    temperature: float | None = None,
    reg_weight: float = 1e-4,
    max_steps: int = 2000,
    step_size: float = 0.05,
    tolerance: float = 1e-8,
    residual_norm: ResidualNorm | str = ResidualNorm.SQUARED,
    optimizer: Optimizer | str = Optimizer.CG,
) -> tuple[CompletionProblem, CompletedMatrix]:
    """Classify, assign neighbours and solve in one call."""

    T = classify_missing(T, K)
    problem = CompletionProblem(
        T=T,
        assignment=assign_neighbors(T, K, temperature),
        reg_weight=reg_weight,
        max_steps=max_steps,
        step_size=step_size,
        tolerance=tolerance,
        residual_norm=ResidualNorm(residual_norm),
        optimizer=Optimizer(optimizer),
    )
    return problem, solve(problem)


__all__ = [
    "CompletedMatrix",
    "CompletionProblem",
    "NeighborAssignment",
    "Optimizer",
    "ResidualNorm",
    "assign_neighbors",
    "complete_matrix",
    "differential_variance",
    "gradient",
    "loss",
    "pairwise_variances",
    "solve",
]

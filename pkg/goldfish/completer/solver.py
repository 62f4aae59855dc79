"""
Offset-compensated completion loss and its solver.

Variables
---------
x = [A, C] where A (s values) are the estimated cells in the common reference frame and C (p
values) are per-row offsets. A row's observed values plus its offset live in the common frame.

Loss
----
For estimated cell v at (r, u) and neighbour row o with weight w:

    Θ_j = T[o, j] + c_o - T[r, j] - c_r      for every column j observed in both rows
    Θ_u = T[o, u] + c_o - a_v                (T[r, u] is unobserved, c_r cancels)

    loss = Σ_v Σ_o w * ||Θ||² + reg_weight * (||A||² + ||C||²)

Every Θ entry has the form `const + x[pos] - x[neg]`, so the whole objective is compiled once
into flat arrays (const, pos, neg, weight) and evaluated with vectorised numpy; the gradient
and the Hessian-vector product come from `np.bincount`. With squared residuals the problem
is a linear least-squares problem, solved by default with Jacobi-preconditioned conjugate
gradients. Plain gradient descent (fixed step with halving on divergence) is kept as an
option and is the only choice for the literal (non-squared) L2 residual norm.
"""

from __future__ import annotations

import json
import logging
from dataclasses import dataclass, field
from enum import Enum
from pathlib import Path

import numpy as np

from goldfish.completer.knn import NeighborAssignment
from goldfish.errors import SolverDivergenceError
from goldfish.obsmatrix.constructor import ObservationMatrix

logger = logging.getLogger("goldfish.completer")

DIVERGENCE_PATIENCE = 10
MAX_HALVINGS = 5


class ResidualNorm(str, Enum):
    SQUARED = "squared"
    L2 = "l2"


class Optimizer(str, Enum):
    CG = "cg"
    GD = "gd"


@dataclass
class CompletionProblem:
    """
    One node's completion problem.

    `A` and `C` hold the current variable values (zeros until `solve` runs). The residual
    system is compiled in `__post_init__`.
    """

    T: ObservationMatrix
    assignment: NeighborAssignment
    reg_weight: float = 1e-4
    max_steps: int = 2000
    step_size: float = 0.05
    tolerance: float = 1e-8
    residual_norm: ResidualNorm = ResidualNorm.SQUARED
    optimizer: Optimizer = Optimizer.CG
    A: np.ndarray = field(default=None)  # type: ignore[assignment]
    C: np.ndarray = field(default=None)  # type: ignore[assignment]

    def __post_init__(self) -> None:
        if self.reg_weight < 0:
            raise ValueError("reg_weight must be >= 0")
        if self.step_size <= 0:
            raise ValueError("step_size must be positive")
        self.residual_norm = ResidualNorm(self.residual_norm)
        self.optimizer = Optimizer(self.optimizer)
        if self.A is None:
            self.A = np.zeros(self.s)
        if self.C is None:
            self.C = np.zeros(self.p)
        self._compile()

    @property
    def s(self) -> int:
        return self.assignment.s

    @property
    def p(self) -> int:
        return self.T.p

    @property
    def n_vars(self) -> int:
        return self.s + self.p

    @property
    def x(self) -> np.ndarray:
        return np.concatenate([self.A, self.C])

    def set_x(self, x: np.ndarray) -> None:
        self.A = x[: self.s].copy()
        self.C = x[self.s :].copy()

    def _compile(self) -> None:
        values = self.T.values
        observed = self.T.observed
        s = self.s
        const: list[np.ndarray] = []
        pos: list[np.ndarray] = []
        neg: list[np.ndarray] = []
        weight: list[np.ndarray] = []
        group: list[np.ndarray] = []

        g = 0
        for v in range(s):
            r, u = self.assignment.row(v), self.assignment.col(v)
            for o, w in zip(self.assignment.neighbors[v], self.assignment.weights[v]):
                o = int(o)
                common = np.flatnonzero(observed[r] & observed[o])
                n = len(common) + 1
                const.append(np.append(values[o, common] - values[r, common], values[o, u]))
                pos.append(np.full(n, s + o))
                neg.append(np.append(np.full(n - 1, s + r), v))
                weight.append(np.full(n, w))
                group.append(np.full(n, g))
                g += 1

        def flat(parts: list[np.ndarray], dtype: type) -> np.ndarray:
            return np.concatenate(parts).astype(dtype) if parts else np.zeros(0, dtype=dtype)

        self._const = flat(const, float)
        self._pos = flat(pos, np.int64)
        self._neg = flat(neg, np.int64)
        self._w = flat(weight, float)
        self._group = flat(group, np.int64)
        self._n_groups = g

    # ------------------
    # Vectorised algebra
    # ------------------

    def residuals(self, x: np.ndarray) -> np.ndarray:
        return self._const + x[self._pos] - x[self._neg]

    def _scatter(self, y: np.ndarray) -> np.ndarray:
        """J^T y for the residual Jacobian J."""

        n = self.n_vars
        return np.bincount(self._pos, weights=y, minlength=n) - np.bincount(
            self._neg, weights=y, minlength=n
        )

    def loss_at(self, x: np.ndarray) -> float:
        res = self.residuals(x)
        reg = self.reg_weight * float(x @ x)
        if self.residual_norm == ResidualNorm.SQUARED:
            return float(self._w @ (res * res)) + reg
        norms = np.sqrt(np.bincount(self._group, weights=res * res, minlength=self._n_groups))
        group_w = np.bincount(self._group, weights=self._w, minlength=self._n_groups)
        counts = np.bincount(self._group, minlength=self._n_groups)
        return float((group_w / np.maximum(counts, 1)) @ norms) + reg

    def gradient_at(self, x: np.ndarray) -> np.ndarray:
        res = self.residuals(x)
        if self.residual_norm == ResidualNorm.SQUARED:
            y = 2.0 * self._w * res
        else:
            norms = np.sqrt(np.bincount(self._group, weights=res * res, minlength=self._n_groups))
            denom = norms[self._group]
            # subgradient 0 where a whole group's residual vanishes
            y = np.divide(self._w * res, denom, out=np.zeros_like(res), where=denom > 0)
        return self._scatter(y) + 2.0 * self.reg_weight * x

    def hessian_vector(self, d: np.ndarray) -> np.ndarray:
        """H d for the squared loss."""

        jd = d[self._pos] - d[self._neg]
        return self._scatter(2.0 * self._w * jd) + 2.0 * self.reg_weight * d

    def hessian_diagonal(self) -> np.ndarray:
        n = self.n_vars
        diag = 2.0 * (
            np.bincount(self._pos, weights=self._w, minlength=n)
            + np.bincount(self._neg, weights=self._w, minlength=n)
        )
        return diag + 2.0 * self.reg_weight


@dataclass
class CompletedMatrix:
    """
    Completion result in the common reference frame.

    `M[i, j]` is `t + c_i` for observed cells, `a_v` for estimated cells and NaN elsewhere
    (symbolic and infeasible cells).
    """

    M: np.ndarray
    offsets: np.ndarray
    estimates: np.ndarray
    cells: np.ndarray
    final_loss: float
    initial_loss: float
    steps: int
    converged: bool
    ambiguous_count: int

    @property
    def defined(self) -> np.ndarray:
        return ~np.isnan(self.M)

    def raw_estimates(self) -> np.ndarray:
        """Estimated cells shifted back to their own row's frame (`a_v - c_row`)."""

        if len(self.cells) == 0:
            return np.zeros(0)
        return self.estimates - self.offsets[self.cells[:, 0]]


def loss(problem: CompletionProblem) -> float:
    """Objective at the problem's current (A, C)."""

    return problem.loss_at(problem.x)


def gradient(problem: CompletionProblem) -> tuple[np.ndarray, np.ndarray]:
    """(∂loss/∂A, ∂loss/∂C) at the problem's current (A, C)."""

    g = problem.gradient_at(problem.x)
    return g[: problem.s], g[problem.s :]


def solve(problem: CompletionProblem) -> CompletedMatrix:
    """
    Minimise the loss from A = 0, C = 0.

    The default optimizer is `Optimizer.CG`: Jacobi-preconditioned conjugate gradients on the
    squared-residual least-squares problem. `Optimizer.GD` runs plain gradient descent with
    the step-halving schedule, and the literal L2 residual norm always takes that path.

    Stops after `max_steps` iterations or when the relative loss improvement drops below
    `tolerance`. Gradient descent halves its step after `DIVERGENCE_PATIENCE` consecutive loss
    increases and restarts; after `MAX_HALVINGS` halvings it raises `SolverDivergenceError`.
    """

    x0 = np.zeros(problem.n_vars)
    initial = problem.loss_at(x0)
    if problem.s == 0:
        problem.set_x(x0)
        return _assemble(problem, initial, initial, steps=0, converged=True)

    use_cg = (
        problem.optimizer == Optimizer.CG and problem.residual_norm == ResidualNorm.SQUARED
    )
    if use_cg:
        x, steps, converged = _conjugate_gradient(problem, x0)
    else:
        x, steps, converged = _gradient_descent(problem, x0)

    problem.set_x(x)
    final = problem.loss_at(x)
    if not converged:
        logger.debug(
            json.dumps({"event": "solver_step_cap", "steps": steps, "loss": final, "s": problem.s})
        )
    return _assemble(problem, initial, final, steps=steps, converged=converged)


def _jacobi(problem: CompletionProblem) -> np.ndarray:
    diag = problem.hessian_diagonal()
    # unconstrained variables (reg_weight = 0, no residual) keep a unit scale
    return 1.0 / np.where(diag > 0, diag, 1.0)


def _improved_little(prev: float, cur: float, tol: float) -> bool:
    return prev - cur <= tol * max(abs(prev), 1e-300)


def _conjugate_gradient(
    problem: CompletionProblem, x: np.ndarray
) -> tuple[np.ndarray, int, bool]:
    inv_diag = _jacobi(problem)
    r = -problem.gradient_at(x)
    z = inv_diag * r
    d = z.copy()
    rz = float(r @ z)
    r0 = float(np.linalg.norm(r))
    prev = problem.loss_at(x)

    for step in range(1, problem.max_steps + 1):
        if rz <= 0.0 or np.linalg.norm(r) <= 1e-14 * max(r0, 1.0):
            return x, step - 1, True
        hd = problem.hessian_vector(d)
        curvature = float(d @ hd)
        if curvature <= 0.0:
            return x, step - 1, True
        alpha = rz / curvature
        x = x + alpha * d
        r = r - alpha * hd
        z = inv_diag * r
        new_rz = float(r @ z)
        d = z + (new_rz / rz) * d
        rz = new_rz

        cur = problem.loss_at(x)
        small_gradient = np.linalg.norm(r) <= 1e-6 * max(r0, 1.0)
        if _improved_little(prev, cur, problem.tolerance) and small_gradient:
            return x, step, True
        prev = cur
    return x, problem.max_steps, False


def _gradient_descent(
    problem: CompletionProblem, x0: np.ndarray
) -> tuple[np.ndarray, int, bool]:
    scale = _jacobi(problem)
    step_size = problem.step_size
    total = 0

    for halving in range(MAX_HALVINGS + 1):
        x = x0.copy()
        prev = problem.loss_at(x)
        increases = 0
        for step in range(1, problem.max_steps + 1):
            x = x - step_size * scale * problem.gradient_at(x)
            cur = problem.loss_at(x)
            total += 1
            if not np.isfinite(cur) or cur > prev:
                increases += 1
                if increases >= DIVERGENCE_PATIENCE or not np.isfinite(cur):
                    break
            else:
                increases = 0
                if _improved_little(prev, cur, problem.tolerance):
                    return x, step, True
            prev = cur
        else:
            return x, problem.max_steps, False

        if halving == MAX_HALVINGS:
            break
        step_size /= 2.0
        logger.warning(
            json.dumps(
                {"event": "solver_step_halved", "step_size": step_size, "halvings": halving + 1}
            )
        )

    raise SolverDivergenceError(
        f"loss kept increasing after {MAX_HALVINGS} step halvings "
        f"(final step {step_size:g}, {total} iterations, s={problem.s}, p={problem.p})"
    )


def _assemble(
    problem: CompletionProblem, initial: float, final: float, *, steps: int, converged: bool
) -> CompletedMatrix:
    T = problem.T
    M = np.where(T.observed, T.values + problem.C[:, None], np.nan)
    cells = problem.assignment.cells
    if problem.s:
        M[cells[:, 0], cells[:, 1]] = problem.A
    return CompletedMatrix(
        M=M,
        offsets=problem.C.copy(),
        estimates=problem.A.copy(),
        cells=cells.copy(),
        final_loss=final,
        initial_loss=initial,
        steps=steps,
        converged=converged,
        ambiguous_count=int(np.count_nonzero(problem.assignment.ambiguous)),
    )


def dump_completion(
    path: Path | str, problem: CompletionProblem, result: CompletedMatrix, **context: object
) -> Path:
    """Write the assignment, final A and C and the loss as JSON (debug aid)."""

    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    payload = {
        **context,
        "peers": problem.T.col_peer,
        "assignment": problem.assignment.to_dict(problem.T),
        "A": result.estimates.tolist(),
        "C": result.offsets.tolist(),
        "loss": result.final_loss,
        "steps": result.steps,
        "converged": result.converged,
    }
    path.write_text(json.dumps(payload, indent=2, sort_keys=True), encoding="utf-8")
    return path

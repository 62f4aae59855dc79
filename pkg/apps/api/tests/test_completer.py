"""
K-NN completer tests: distances, weights, the loss gradient and recovery of low-variance
matrices.

Exact-recovery instances are rows of one common profile shifted by a per-row constant, which
is what a node sees when every block travels the same paths. The oracle solves the normal
equations densely from Hessian columns, independently of the iterative solvers.
"""

import json
import logging

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from apps.api.tests.conftest import two_epoch_batches
from goldfish.completer import (
    CompletionProblem,
    assign_neighbors,
    complete_matrix,
    differential_variance,
    gradient,
    loss,
    pairwise_variances,
    solve,
)
from goldfish.completer.knn import softmax_weights
from goldfish.completer.solver import Optimizer, dump_completion
from goldfish.errors import SolverDivergenceError
from goldfish.obsmatrix.constructor import ObservationMatrix, build_matrix, classify_missing
from goldfish.schemas.matrix import CellClass


def _shifted_instance(rng: np.random.Generator, K: int = 2):
    p, q = int(rng.integers(6, 21)), int(rng.integers(4, 9))
    profile = rng.uniform(0.0, 80.0, size=q)
    shifts = rng.uniform(0.0, 40.0, size=p)
    truth = profile[None, :] + shifts[:, None]
    grid = truth.copy()
    budget = int(0.3 * p * q)
    for i, j in rng.permutation([(i, j) for i in range(p) for j in range(q)])[:budget]:
        trial = grid.copy()
        trial[i, j] = np.nan
        T = classify_missing(ObservationMatrix.from_arrays(trial), K)
        still_ok = np.all(T.classes[T.missing] == CellClass.ESTIMABLE.code)
        if still_ok and np.all(T.observed.sum(axis=1) >= 2):
            grid = trial
    return ObservationMatrix.from_arrays(grid), truth


def _dense_optimum(problem: CompletionProblem) -> np.ndarray:
    n = problem.n_vars
    H = np.column_stack([problem.hessian_vector(np.eye(n)[k]) for k in range(n)])
    return np.linalg.solve(H, -problem.gradient_at(np.zeros(n)))


def test_differential_variance_by_hand() -> None:
    T = ObservationMatrix.from_arrays([[0, 5, 9], [2, 7, 10], [1, None, None]])
    assert differential_variance(T, 0, 1) == pytest.approx(1 / 3)
    assert differential_variance(T, 0, 2) is None
    with pytest.raises(ValueError):
        differential_variance(T, 1, 1)


def test_pairwise_variances_match_the_direct_formula() -> None:
    T = build_matrix(two_epoch_batches())
    var = pairwise_variances(T)
    for r in range(T.p):
        for i in range(T.p):
            if r == i:
                assert np.isnan(var[r, i])
                continue
            expected = differential_variance(T, r, i)
            if expected is None:
                assert np.isnan(var[r, i])
            else:
                assert var[r, i] == pytest.approx(expected, abs=1e-9)


def test_softmax_weights() -> None:
    w, tau = softmax_weights(np.array([0.0, 1.0]), temperature=1.0)
    assert tau == 1.0
    assert w == pytest.approx([0.7311, 0.2689], abs=1e-4)
    w, tau = softmax_weights(np.array([0.0, 0.0]))
    assert w == pytest.approx([0.5, 0.5])
    assert tau == pytest.approx(1e-6)
    with pytest.raises(ValueError):
        softmax_weights(np.array([1.0]), temperature=0.0)


def test_neighbours_are_qualifying_rows_with_least_variance() -> None:
    T = classify_missing(build_matrix(two_epoch_batches()), 2)
    a = assign_neighbors(T, 2)
    assert a.s == 5
    assert [tuple(c) for c in a.cells] == [(0, 3), (2, 3), (3, 3), (5, 2), (6, 2)]
    assert sorted(a.neighbors[0].tolist()) == [5, 6]
    for w in a.weights:
        assert w.sum() == pytest.approx(1.0)
    assert not a.ambiguous.any()


def test_single_neighbour_recovers_the_shifted_value() -> None:
    T = ObservationMatrix.from_arrays([[0, 5, 9], [2, 7, None]])
    _, done = complete_matrix(T, 1, reg_weight=1e-6)
    assert done.raw_estimates()[0] == pytest.approx(11.0, abs=1e-2)
    assert done.M[1, 2] == pytest.approx(done.estimates[0])
    assert done.ambiguous_count == 0


def test_ambiguous_cells_are_still_estimated() -> None:
    T = ObservationMatrix.from_arrays([[0, 5, 9], [2, 7, None]])
    _, done = complete_matrix(T, 2, reg_weight=1e-6)
    assert done.ambiguous_count == 1
    assert done.raw_estimates()[0] == pytest.approx(11.0, abs=1e-2)


def test_two_epoch_completion_leaves_symbolic_and_infeasible_undefined() -> None:
    problem, done = complete_matrix(build_matrix(two_epoch_batches()), 2)
    T = problem.T
    assert done.defined.sum() == 19 + 5
    assert not done.defined[T.symbolic].any()
    assert not done.defined[T.classes == CellClass.INFEASIBLE.code].any()
    assert done.final_loss <= done.initial_loss
    assert done.converged


def test_exact_recovery_on_shifted_profiles() -> None:
    rng = np.random.default_rng(2024)
    for _ in range(50):
        T, truth = _shifted_instance(rng)
        problem, done = complete_matrix(T, 2, reg_weight=1e-6, tolerance=1e-12)
        if problem.s == 0:
            continue
        rows, cols = done.cells[:, 0], done.cells[:, 1]
        assert done.raw_estimates() == pytest.approx(truth[rows, cols], abs=1e-2)

        x = _dense_optimum(problem)
        oracle = x[: problem.s] - x[problem.s :][rows]
        assert done.raw_estimates() == pytest.approx(oracle, abs=1e-2)


@pytest.mark.parametrize("norm", ["squared", "l2"])
def test_gradient_matches_finite_differences(norm: str) -> None:
    rng = np.random.default_rng(5)
    for _ in range(20):
        T, _ = _shifted_instance(rng)
        noisy = T.values + rng.uniform(0.0, 3.0, T.values.shape)
        T = ObservationMatrix.from_arrays(np.where(T.observed, noisy, np.nan).tolist())
        problem = CompletionProblem(
            T=classify_missing(T, 2),
            assignment=assign_neighbors(T, 2),
            reg_weight=1e-3,
            residual_norm=norm,
        )
        if problem.s == 0:
            continue
        x = rng.normal(0.0, 10.0, problem.n_vars)
        g = problem.gradient_at(x)
        h = 1e-5
        fd = np.array(
            [
                (problem.loss_at(x + h * e) - problem.loss_at(x - h * e)) / (2 * h)
                for e in np.eye(problem.n_vars)
            ]
        )
        assert np.linalg.norm(g - fd) <= 1e-4 * max(np.linalg.norm(fd), 1.0)


def test_loss_and_gradient_read_the_current_variables() -> None:
    T = ObservationMatrix.from_arrays([[0, 5, 9], [2, 7, None]])
    problem = CompletionProblem(T=classify_missing(T, 1), assignment=assign_neighbors(T, 1))
    # A = C = 0: two residuals of -2 and one of 9
    assert loss(problem) == pytest.approx(4 + 4 + 81)
    grad_a, grad_c = gradient(problem)
    assert grad_a.shape == (1,)
    assert grad_c.shape == (2,)
    assert grad_a[0] == pytest.approx(-18.0)


def test_gradient_descent_agrees_with_conjugate_gradients() -> None:
    T = build_matrix(two_epoch_batches())
    _, cg = complete_matrix(T, 2, optimizer="cg", reg_weight=1e-3)
    _, gd = complete_matrix(
        T, 2, optimizer="gd", reg_weight=1e-3, max_steps=20_000, step_size=0.5
    )
    assert gd.raw_estimates() == pytest.approx(cg.raw_estimates(), abs=0.5)
    assert gd.final_loss >= cg.final_loss - 1e-3


def test_l2_residuals_reduce_the_loss() -> None:
    _, done = complete_matrix(build_matrix(two_epoch_batches()), 2, residual_norm="l2")
    assert done.final_loss < done.initial_loss


def test_oversized_steps_diverge(caplog) -> None:
    T = build_matrix(two_epoch_batches())
    with caplog.at_level(logging.WARNING, logger="goldfish.completer"):
        with pytest.raises(SolverDivergenceError):
            complete_matrix(T, 2, optimizer="gd", step_size=1e4, max_steps=200)
    events = [json.loads(r.getMessage()) for r in caplog.records if r.name == "goldfish.completer"]
    halved = [e for e in events if e["event"] == "solver_step_halved"]
    assert len(halved) == 5
    assert [e["step_size"] for e in halved] == [5000.0, 2500.0, 1250.0, 625.0, 312.5]


def test_conjugate_gradients_are_the_default_optimizer() -> None:
    problem, _ = complete_matrix(build_matrix(two_epoch_batches()), 2)
    assert problem.optimizer == Optimizer.CG
    assert CompletionProblem.__dataclass_fields__["optimizer"].default == Optimizer.CG


def test_empty_problem_is_already_solved() -> None:
    T = ObservationMatrix.from_arrays([[0, 5], [1, 3]])
    problem, done = complete_matrix(T, 2)
    assert problem.s == 0
    assert done.steps == 0
    assert done.converged
    assert done.raw_estimates().size == 0


def test_problem_rejects_bad_parameters() -> None:
    T = classify_missing(ObservationMatrix.from_arrays([[0, 5, 9], [2, 7, None]]), 1)
    with pytest.raises(ValueError):
        CompletionProblem(T=T, assignment=assign_neighbors(T, 1), reg_weight=-1.0)
    with pytest.raises(ValueError):
        CompletionProblem(T=T, assignment=assign_neighbors(T, 1), step_size=0.0)


def test_dump_completion_writes_json(tmp_path) -> None:
    problem, done = complete_matrix(build_matrix(two_epoch_batches()), 2)
    path = dump_completion(tmp_path / "node0.json", problem, done, node=0, epoch=1)
    payload = json.loads(path.read_text(encoding="utf-8"))
    assert payload["node"] == 0
    assert payload["peers"] == [1, 2, 4, 3]
    assert len(payload["assignment"]) == 5
    assert len(payload["C"]) == 8


@settings(max_examples=20, deadline=None)
@given(seed=st.integers(min_value=0, max_value=10_000))
def test_solver_never_ends_above_its_start(seed: int) -> None:
    rng = np.random.default_rng(seed)
    T, _ = _shifted_instance(rng)
    noisy = np.where(T.observed, T.values + rng.uniform(0, 5, T.values.shape), np.nan)
    problem, done = complete_matrix(ObservationMatrix.from_arrays(noisy.tolist()), 2)
    assert done.final_loss <= done.initial_loss + 1e-9
    assert np.all(np.isfinite(done.estimates))
    assert solve(problem).final_loss == pytest.approx(done.final_loss, rel=1e-9, abs=1e-9)


@settings(max_examples=30, deadline=None)
@given(
    seed=st.integers(min_value=0, max_value=10_000),
    alpha=st.floats(min_value=0.0, max_value=500.0, allow_nan=False),
)
def test_differential_variance_ignores_a_constant_row_shift(seed: int, alpha: float) -> None:
    rng = np.random.default_rng(seed)
    T, _ = _shifted_instance(rng)
    noisy = np.where(T.observed, T.values + rng.uniform(0, 5, T.values.shape), np.nan)
    r, i = (int(x) for x in rng.choice(T.p, size=2, replace=False))
    moved = noisy.copy()
    moved[r] += alpha
    before = differential_variance(ObservationMatrix.from_arrays(noisy.tolist()), r, i)
    after = differential_variance(ObservationMatrix.from_arrays(moved.tolist()), r, i)
    if before is None:
        assert after is None
    else:
        assert after == pytest.approx(before, rel=1e-6, abs=1e-6)


@settings(max_examples=20, deadline=None)
@given(
    seed=st.integers(min_value=0, max_value=10_000),
    c=st.floats(min_value=1.0, max_value=100.0, allow_nan=False),
)
def test_unregularised_loss_has_a_free_offset(seed: int, c: float) -> None:
    rng = np.random.default_rng(seed)
    T, _ = _shifted_instance(rng)
    T = classify_missing(T, 2)
    free = CompletionProblem(T=T, assignment=assign_neighbors(T, 2), reg_weight=0.0)
    x = rng.uniform(0.0, 20.0, size=free.n_vars)
    assert free.loss_at(x + c) == pytest.approx(free.loss_at(x), rel=1e-9, abs=1e-6)

    pinned = CompletionProblem(T=T, assignment=assign_neighbors(T, 2), reg_weight=1e-2)
    assert pinned.loss_at(x + c) != pytest.approx(pinned.loss_at(x), rel=1e-9, abs=1e-6)

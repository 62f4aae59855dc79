"""
Observation-matrix layout and missing-cell classification.
"""

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from apps.api.tests.conftest import make_batch, two_epoch_batches
from goldfish.errors import MatrixConstructionError
from goldfish.obsmatrix.constructor import (
    ObservationMatrix,
    build_matrix,
    classify_missing,
    load_matrix_dump,
    parse_matrix_dump,
    qualifying_counts,
    render_matrix,
)
from goldfish.schemas.matrix import CellClass


def test_two_epochs_stack_into_eight_by_four() -> None:
    T = build_matrix(two_epoch_batches())
    assert (T.p, T.q) == (8, 4)
    assert T.col_peer == [1, 2, 4, 3]
    assert list(T.row_epoch) == [0, 0, 0, 0, 1, 1, 1, 1]
    assert list(T.row_block) == list(range(8))
    # first epoch never saw peer 3, second never saw peer 4
    assert not T.active[:4, 3].any()
    assert not T.active[4:, 2].any()
    assert T.missing[:4, 3].all()
    assert T.missing[4:, 2].all()


def test_classification_counts_with_two_neighbours() -> None:
    T = classify_missing(build_matrix(two_epoch_batches()), 2)
    counts = T.class_counts()
    assert counts[CellClass.OBSERVED] == 19
    assert counts[CellClass.SYMBOLIC] == 5
    assert counts[CellClass.ESTIMABLE] == 5
    assert counts[CellClass.INFEASIBLE] == 3
    assert counts[CellClass.AMBIGUOUS] == 0
    assert counts[CellClass.MISSING] == 0

    estimable = {(int(i), int(j)) for i, j in np.argwhere(T.classes == CellClass.ESTIMABLE.code)}
    assert estimable == {(0, 3), (2, 3), (3, 3), (5, 2), (6, 2)}
    for cell in [(1, 3), (4, 2), (7, 2)]:
        assert T.cell_class(*cell) == CellClass.INFEASIBLE


def test_classification_is_idempotent() -> None:
    once = classify_missing(build_matrix(two_epoch_batches()), 2)
    twice = classify_missing(once, 2)
    assert np.array_equal(once.classes, twice.classes)
    assert twice.k == 2


def test_fewer_qualifying_rows_than_k_is_ambiguous() -> None:
    T = ObservationMatrix.from_arrays([[0, 5, 9], [2, 7, None]])
    assert classify_missing(T, 1).cell_class(1, 2) == CellClass.ESTIMABLE
    assert classify_missing(T, 2).cell_class(1, 2) == CellClass.AMBIGUOUS


def test_symbolic_cells_do_not_count_as_common_columns() -> None:
    T = ObservationMatrix.from_arrays(
        [[0, 5, 9], [2, None, None]], symbolic=np.array([[False] * 3, [False, True, False]])
    )
    T = classify_missing(T, 1)
    assert T.cell_class(1, 1) == CellClass.SYMBOLIC
    assert T.cell_class(1, 2) == CellClass.INFEASIBLE


def test_qualifying_counts_match_definition() -> None:
    T = build_matrix(two_epoch_batches())
    common, qualifying = qualifying_counts(T)
    assert np.all(np.diag(common) == 0)
    assert common[0, 5] == 2  # m1 and m6 share peers 1 and 2
    assert common[0, 7] == 1
    assert qualifying[0, 3] == 2
    assert qualifying[7, 2] == 0


def test_classify_rejects_non_positive_k() -> None:
    with pytest.raises(ValueError):
        classify_missing(build_matrix(two_epoch_batches()), 0)


def test_build_matrix_rejects_inconsistent_batches() -> None:
    with pytest.raises(MatrixConstructionError):
        build_matrix([])
    with pytest.raises(MatrixConstructionError):
        build_matrix(
            [make_batch(0, [1], [{1: 0.0}], node=0), make_batch(1, [1], [{1: 0.0}], node=9)]
        )
    with pytest.raises(MatrixConstructionError):
        build_matrix([make_batch(1, [1], [{1: 0.0}]), make_batch(0, [1], [{1: 0.0}])])
    with pytest.raises(MatrixConstructionError):
        build_matrix([make_batch(0, [1], [{2: 0.0}])])


def test_empty_block_rows_are_kept() -> None:
    T = build_matrix([make_batch(0, [1, 2], [{1: 0.0, 2: 3.0}, {}])])
    assert T.p == 2
    assert T.missing[1].all()


def test_from_arrays_validates_input() -> None:
    with pytest.raises(MatrixConstructionError):
        ObservationMatrix.from_arrays([[0, -1]])
    with pytest.raises(MatrixConstructionError):
        ObservationMatrix.from_arrays([[0, 1]], symbolic=np.array([[True, False]]))
    with pytest.raises(MatrixConstructionError):
        ObservationMatrix.from_arrays([[0, 1]], col_peer=[3, 3])


def test_dump_restores_values_and_symbolic_cells(tmp_path) -> None:
    T = classify_missing(build_matrix(two_epoch_batches()), 2)
    lines = render_matrix(T)
    assert lines[0] == "# peers=1,2,4,3"
    assert lines[1] == "0,0,t=0.000,t=12.000,t=30.000,E"
    assert lines[2] == "0,1,S,t=0.000,S,X"

    path = tmp_path / "matrix.txt"
    path.write_text("\n".join(lines) + "\n", encoding="utf-8")
    back = classify_missing(load_matrix_dump(path), 2)
    assert back.col_peer == T.col_peer
    assert np.array_equal(back.classes, T.classes)
    assert np.allclose(back.values, T.values, equal_nan=True)


def test_dump_parser_rejects_garbage() -> None:
    with pytest.raises(MatrixConstructionError):
        parse_matrix_dump("0,0,t=1\n")
    with pytest.raises(MatrixConstructionError):
        parse_matrix_dump("# peers=1,2\n0,0,t=1\n")
    with pytest.raises(MatrixConstructionError):
        parse_matrix_dump("# peers=1,2\n0,0,t=1,Q\n")
    with pytest.raises(MatrixConstructionError):
        load_matrix_dump("/nonexistent/matrix.txt")


def _random_matrix(rng: np.random.Generator) -> ObservationMatrix:
    p, q = int(rng.integers(3, 16)), int(rng.integers(3, 8))
    values = rng.uniform(0.0, 50.0, size=(p, q))
    gone = rng.random((p, q)) < 0.4
    symbolic = gone & (rng.random((p, q)) < 0.3)
    grid = np.where(gone, np.nan, values)
    return ObservationMatrix.from_arrays(grid.tolist(), symbolic=symbolic)


@settings(max_examples=30, deadline=None)
@given(seed=st.integers(min_value=0, max_value=10_000), k=st.integers(min_value=1, max_value=4))
def test_raising_k_never_makes_a_cell_estimable(seed: int, k: int) -> None:
    T = _random_matrix(np.random.default_rng(seed))
    low, high = classify_missing(T, k), classify_missing(T, k + 1)
    estimable = CellClass.ESTIMABLE.code
    assert not np.any((high.classes == estimable) & (low.classes != estimable))
    infeasible = CellClass.INFEASIBLE.code
    assert np.array_equal(low.classes == infeasible, high.classes == infeasible)
    assert np.array_equal(classify_missing(high, k).classes, low.classes)

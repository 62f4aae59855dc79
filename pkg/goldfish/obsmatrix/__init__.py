"""
Matrix constructor: epoch batches -> block x peer observation matrix with classified cells.
"""

from goldfish.obsmatrix.constructor import (
    ObservationMatrix,
    build_matrix,
    classify_missing,
    load_matrix_dump,
    parse_matrix_dump,
    render_matrix,
)

__all__ = [
    "ObservationMatrix",
    "build_matrix",
    "classify_missing",
    "load_matrix_dump",
    "parse_matrix_dump",
    "render_matrix",
]

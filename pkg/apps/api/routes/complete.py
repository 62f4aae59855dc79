"""
Standalone matrix completion.

POST a block x peer grid and get back the cell classes, the completed matrix in the common
reference frame, the raw-frame estimates and the altruistic score each column would earn.
Handy for inspecting what a node would conclude from a given window without running a study.
"""

from __future__ import annotations

import math

import numpy as np
from fastapi import APIRouter, HTTPException

from goldfish.completer import complete_matrix
from goldfish.errors import GoldfishError
from goldfish.obsmatrix.constructor import ObservationMatrix
from goldfish.schemas.experiment import CompletionRequest, CompletionResponse
from goldfish.schemas.matrix import CellClass
from goldfish.selector.altruistic import score_peers

router = APIRouter(tags=["completion"])


def _nullable(values: np.ndarray) -> list[list[float | None]]:
    return [[None if math.isnan(v) else float(v) for v in row] for row in values.tolist()]


@router.post("/complete", response_model=CompletionResponse)
def complete(body: CompletionRequest) -> CompletionResponse:
    try:
        T = ObservationMatrix.from_arrays(body.values, symbolic=body.symbolic, col_peer=body.peers)
        problem, completed = complete_matrix(
            T,
            body.K,
            temperature=body.temperature,
            reg_weight=body.reg_weight,
            max_steps=body.max_steps,
            residual_norm=body.residual_norm,
            optimizer=body.optimizer,
        )
    except GoldfishError as e:
        raise HTTPException(status_code=400, detail=str(e)) from e

    T = problem.T
    raw = completed.raw_estimates()
    estimates = [
        {
            "row": int(i),
            "peer": T.col_peer[int(j)],
            "value": float(raw[v]),
            "ambiguous": bool(problem.assignment.ambiguous[v]),
        }
        for v, (i, j) in enumerate(completed.cells.tolist())
    ]
    return CompletionResponse(
        class_counts={c.value: n for c, n in T.class_counts().items()},
        classes=[[CellClass.from_code(c).value for c in row] for row in T.classes.tolist()],
        completed=_nullable(completed.M),
        raw_estimates=estimates,
        offsets=[float(c) for c in completed.offsets],
        final_loss=float(completed.final_loss),
        steps=completed.steps,
        converged=completed.converged,
        ambiguous_count=completed.ambiguous_count,
        scores=score_peers(completed, T),
    )

"""
Experiment endpoints.

Studies run synchronously inside the request, so the API refuses anything larger than
`GOLDFISH_MAX_API_GRAPHS` graphs (optimal study) or seeds (comparison study); bigger runs
belong on the CLI. Finished runs are stored and can be fetched again by `run_id`.
"""

from __future__ import annotations

import json
import logging
from uuid import UUID

from fastapi import APIRouter, HTTPException

from apps.api import storage
from goldfish.config import max_api_graphs
from goldfish.errors import GoldfishError
from goldfish.harness.studies import run_comparison_study, run_global_optimal_study
from goldfish.schemas.experiment import (
    ExperimentConfig,
    ExperimentKind,
    ExperimentRun,
    ExperimentRunSummary,
    OptimalStudyRequest,
)

router = APIRouter(prefix="/experiments", tags=["experiments"])
logger = logging.getLogger("goldfish.api")


def _check_size(n: int, what: str) -> None:
    cap = max_api_graphs()
    if n > cap:
        raise HTTPException(
            status_code=400, detail=f"{n} {what} exceeds the API limit of {cap}; use the CLI"
        )


@router.post("/optimal", response_model=ExperimentRun)
def start_optimal_study(body: OptimalStudyRequest) -> ExperimentRun:
    _check_size(body.n_graphs, "graphs")
    try:
        result = run_global_optimal_study(body.config, body.n_graphs)
    except (GoldfishError, ValueError) as e:
        raise HTTPException(status_code=400, detail=str(e)) from e
    run = storage.BACKEND.save_run(ExperimentKind.OPTIMAL, result)
    logger.info(json.dumps({"event": "experiment_stored", "run_id": str(run.run_id)}))
    return run


@router.post("/compare", response_model=ExperimentRun)
def start_comparison_study(config: ExperimentConfig) -> ExperimentRun:
    _check_size(len(config.seeds), "seeds")
    try:
        result = run_comparison_study(config)
    except (GoldfishError, ValueError) as e:
        raise HTTPException(status_code=400, detail=str(e)) from e
    run = storage.BACKEND.save_run(ExperimentKind.COMPARE, result)
    logger.info(json.dumps({"event": "experiment_stored", "run_id": str(run.run_id)}))
    return run


@router.get("", response_model=list[ExperimentRunSummary])
def list_experiments() -> list[ExperimentRunSummary]:
    return storage.BACKEND.list_runs()


@router.get("/{run_id}", response_model=ExperimentRun)
def get_experiment(run_id: UUID) -> ExperimentRun:
    run = storage.BACKEND.get_run(run_id)
    if run is None:
        raise HTTPException(status_code=404, detail="Experiment run not found")
    return run

"""
Experiment run storage for the HTTP API.

Studies started over HTTP are kept so clients can fetch the full result later by `run_id`.
Storage sits behind a small Protocol; the in-memory backend is the only one shipped, and it
resets on process restart. Tests call `BACKEND.reset()` between cases.
"""

from __future__ import annotations

import logging
from typing import Protocol
from uuid import UUID

from apps.api.correlation import get_correlation_id
from goldfish.schemas.experiment import (
    ComparisonResult,
    ExperimentKind,
    ExperimentRun,
    ExperimentRunSummary,
    OptimalStudyResult,
)

logger = logging.getLogger("goldfish.api.storage")


class ExperimentStore(Protocol):
    """Operations any experiment store must support."""

    def reset(self) -> None: ...

    def save_run(
        self, kind: ExperimentKind, result: OptimalStudyResult | ComparisonResult
    ) -> ExperimentRun: ...

    def get_run(self, run_id: UUID) -> ExperimentRun | None: ...

    def list_runs(self) -> list[ExperimentRunSummary]: ...


class InMemoryExperimentStore:
    def __init__(self) -> None:
        self._runs: dict[UUID, ExperimentRun] = {}

    def reset(self) -> None:
        self._runs.clear()

    def save_run(
        self, kind: ExperimentKind, result: OptimalStudyResult | ComparisonResult
    ) -> ExperimentRun:
        cid = get_correlation_id()
        run = ExperimentRun(
            kind=kind, result=result, correlation_id=str(cid) if cid is not None else None
        )
        self._runs[run.run_id] = run
        return run

    def get_run(self, run_id: UUID) -> ExperimentRun | None:
        return self._runs.get(run_id)

    def list_runs(self) -> list[ExperimentRunSummary]:
        """Newest first."""

        runs = sorted(self._runs.values(), key=lambda r: r.created_at, reverse=True)
        return [ExperimentRunSummary.from_run(r) for r in runs]


BACKEND: ExperimentStore = InMemoryExperimentStore()

"""Health check endpoint."""

from fastapi import APIRouter

from goldfish.config import max_api_graphs, worker_threads

router = APIRouter(tags=["health"])


@router.get("/health")
def health_check() -> dict:
    """Liveness plus the operational limits this process runs with."""

    return {"status": "ok", "workers": worker_threads(), "max_api_graphs": max_api_graphs()}

"""
Goldfish simulator HTTP API.

Every request is tagged with a correlation id (taken from an incoming `X-Correlation-ID` when it
is a valid UUID) which is echoed back, logged with the request and stored on experiment runs.
"""

import json
import logging
import time

from fastapi import FastAPI
from starlette.requests import Request
from starlette.responses import Response

from apps.api.correlation import resolve_correlation_id, set_correlation_id
from apps.api.routes.complete import router as complete_router
from apps.api.routes.experiments import router as experiments_router
from apps.api.routes.health import router as health_router
from goldfish.config import configure_logging, load_env

CORRELATION_HEADER = "X-Correlation-ID"

load_env()
configure_logging()
logger = logging.getLogger("goldfish.api")

app = FastAPI(title="Goldfish Simulator")


@app.middleware("http")
async def tag_request(request: Request, call_next) -> Response:
    cid = resolve_correlation_id(request.headers.get(CORRELATION_HEADER))
    set_correlation_id(cid)

    started = time.perf_counter()
    response: Response = await call_next(request)
    elapsed_ms = (time.perf_counter() - started) * 1000.0

    logger.info(
        json.dumps(
            {
                "event": "http_request",
                "method": request.method,
                "path": request.url.path,
                "status_code": response.status_code,
                "duration_ms": round(elapsed_ms, 2),
                "correlation_id": str(cid),
            }
        )
    )
    response.headers[CORRELATION_HEADER] = str(cid)
    return response


for router in (health_router, complete_router, experiments_router):
    app.include_router(router)

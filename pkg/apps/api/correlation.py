"""
Request correlation ID utilities.

Each HTTP request gets a UUID held in a `contextvars.ContextVar`, so deeper layers (the
experiment store, study logging) can tag their records without the id being passed around.
Experiment runs started through the API keep the id of the request that produced them.
"""

from __future__ import annotations

from contextvars import ContextVar
from uuid import UUID, uuid4

_correlation_id_var: ContextVar[UUID | None] = ContextVar("correlation_id", default=None)


def set_correlation_id(correlation_id: UUID) -> None:
    _correlation_id_var.set(correlation_id)


def get_correlation_id() -> UUID | None:
    """Correlation id of the current request, or None outside a request."""

    return _correlation_id_var.get()


def resolve_correlation_id(header: str | None) -> UUID:
    """Reuse a caller-supplied `X-Correlation-ID` when it parses as a UUID, else mint one."""

    if header:
        try:
            return UUID(header.strip())
        except ValueError:
            pass
    return uuid4()

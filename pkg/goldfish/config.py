"""
Runtime configuration read from the environment.

What lives here
---------------
Experiment parameters are explicit (`ExperimentConfig`), but a few knobs are operational
rather than scientific and are read from environment variables instead:

- `GOLDFISH_THREADS`: worker cap for independent (graph, seed) runs
- `GOLDFISH_LOG_LEVEL`: root log level for CLI / API processes
- `GOLDFISH_DEBUG_DIR`: turns on debug dumps (batches, matrices, completer state)
- `GOLDFISH_MAX_API_GRAPHS`: largest study the HTTP API will run synchronously

A `.env` file at the repo root is loaded with python-dotenv, so local settings don't have to
be exported in every shell.
"""

from __future__ import annotations

import json
import logging
import os
from pathlib import Path

from dotenv import load_dotenv

ROOT = Path(__file__).resolve().parent.parent

_TRUTHY = ("1", "true", "yes")


def load_env() -> None:
    """Load `<repo>/.env` if present. Existing environment variables win."""

    load_dotenv(dotenv_path=ROOT / ".env")


def is_truthy(value: str | None) -> bool:
    return (value or "").strip().lower() in _TRUTHY


def worker_threads() -> int:
    """
    Parallel worker cap for independent runs.

    Defaults to the number of available cores; invalid or non-positive values fall back to 1.
    """

    raw = os.getenv("GOLDFISH_THREADS", "").strip()
    if not raw:
        return os.cpu_count() or 1
    try:
        value = int(raw)
    except ValueError:
        logging.getLogger("goldfish.config").warning(
            json.dumps({"event": "invalid_threads", "value": raw, "fallback": 1})
        )
        return 1
    return max(1, value)


def debug_dir() -> Path | None:
    raw = os.getenv("GOLDFISH_DEBUG_DIR", "").strip()
    return Path(raw) if raw else None


def max_api_graphs() -> int:
    raw = os.getenv("GOLDFISH_MAX_API_GRAPHS", "50").strip()
    try:
        return max(1, int(raw))
    except ValueError:
        return 50


def configure_logging(level: str | None = None) -> None:
    """
    Configure root logging for entry points (CLI, API).

    Library modules only call `logging.getLogger("goldfish.<area>")`; they never configure
    handlers themselves.
    """

    chosen = (level or os.getenv("GOLDFISH_LOG_LEVEL", "INFO")).strip().upper()
    logging.basicConfig(
        level=getattr(logging, chosen, logging.INFO),
        format="%(levelname)s:%(name)s:%(message)s",
    )

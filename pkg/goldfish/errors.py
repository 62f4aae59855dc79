"""
Exception hierarchy for the simulator and the peer-selection engine.

Why a hierarchy?
----------------
Every failure that the domain code can diagnose derives from `GoldfishError`, so callers
(the HTTP routes, the CLI, the experiment harness) can catch "anything we know how to explain"
in one place and still let genuine programming errors surface.

Each concrete error also derives from the closest built-in (`ValueError` for bad inputs,
`RuntimeError` for procedures that gave up), which keeps `except ValueError` call sites working.
"""

from __future__ import annotations


class GoldfishError(Exception):
    """Base class for diagnosable simulator errors."""


class GraphConstructionError(GoldfishError, RuntimeError):
    """Random graph generation could not place every edge under the in-degree caps."""


class DegreeConstraintError(GoldfishError, ValueError):
    """A connect would violate a degree cap, create a self-edge, or duplicate an edge."""


class LatencyFileError(GoldfishError, ValueError):
    """A measured-latency file is malformed (header, shape, negative values, diagonal)."""


class PublisherDistributionError(GoldfishError, ValueError):
    """Publishing probabilities cannot be built (empty publisher set, bad parameters)."""


class MatrixConstructionError(GoldfishError, ValueError):
    """An observation matrix cannot be built from the given batches or file."""


class SolverDivergenceError(GoldfishError, RuntimeError):
    """The completion solver kept diverging after every allowed step-size halving."""


class SelectionError(GoldfishError, ValueError):
    """Peer selection is impossible (network or candidate set too small)."""

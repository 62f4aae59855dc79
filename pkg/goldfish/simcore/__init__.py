"""
Round/epoch simulation: publisher draws, flooding delivery times, relative-time observations.
"""

from goldfish.simcore.engine import format_batch_records, run_epoch, run_round
from goldfish.simcore.publishers import sample_publishers

__all__ = ["format_batch_records", "run_epoch", "run_round", "sample_publishers"]

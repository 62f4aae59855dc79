"""
Peer selector and scheduler: altruistic scoring, depleting-pool exploration, epoch cadence and
decision placement.
"""

from goldfish.selector.altruistic import rank_candidates, score_peers, select
from goldfish.selector.placement import apply_decision
from goldfish.selector.pool import DepletingPool
from goldfish.selector.scheduler import pure_explore_epoch, step_schedule, window_epochs

__all__ = [
    "DepletingPool",
    "apply_decision",
    "rank_candidates",
    "score_peers",
    "pure_explore_epoch",
    "select",
    "step_schedule",
    "window_epochs",
]

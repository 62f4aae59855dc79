"""
Epoch cadence: when a Goldfish node learns and when it only rotates its exploration slot.
"""

from __future__ import annotations

from goldfish.schemas.selection import Schedule, ScheduleAction


def _cadence_point(sched: Schedule, epoch: int) -> bool:
    done = epoch + 1
    return done % sched.cadence == 0 and done >= sched.window


def pure_explore_epoch(sched: Schedule, epoch: int) -> int | None:
    """Epoch sitting at `pure_explore_position` of the window that ends at `epoch`."""

    if sched.pure_explore_position is None:
        return None
    quiet = epoch - sched.window + 1 + sched.pure_explore_position
    return quiet if quiet >= 0 else None


def step_schedule(sched: Schedule, epoch: int) -> ScheduleAction:
    """
    LEARN_AND_SELECT when `(epoch + 1) % cadence == 0`, at least `window` epochs of history
    exist and the window's pure-exploration epoch did not itself learn; EXPLORE_ONLY otherwise.
    """

    if not _cadence_point(sched, epoch):
        return ScheduleAction.EXPLORE_ONLY
    quiet = pure_explore_epoch(sched, epoch)
    if quiet is not None and _cadence_point(sched, quiet):
        return ScheduleAction.EXPLORE_ONLY
    return ScheduleAction.LEARN_AND_SELECT


def window_epochs(sched: Schedule, epoch: int) -> list[int]:
    """Epochs a learning run at `epoch` combines (oldest first)."""

    return list(range(max(0, epoch - sched.window + 1), epoch + 1))

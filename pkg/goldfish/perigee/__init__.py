"""
Perigee baseline: memoryless subset scoring over the current epoch's peers.
"""

from goldfish.perigee.subset import (
    SubsetAggregate,
    SubsetScore,
    perigee_select,
    score_subsets,
)

__all__ = ["SubsetAggregate", "SubsetScore", "perigee_select", "score_subsets"]

"""
Overlay topology: degree-constrained graph, latency models, shortest paths.
"""

from goldfish.netgraph.graph import (
    NetworkGraph,
    edge_delay,
    generate_random_graph,
    shortest_paths,
)
from goldfish.netgraph.latency import load_latency_file, write_latency_file

__all__ = [
    "NetworkGraph",
    "edge_delay",
    "generate_random_graph",
    "load_latency_file",
    "shortest_paths",
    "write_latency_file",
]

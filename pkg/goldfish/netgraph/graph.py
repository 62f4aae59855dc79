"""
Degree-constrained overlay graph and shortest-path latency evaluation.

Model
-----
Every node keeps at most `max_out` outgoing connections (which it chooses) and accepts at most
`max_in` incoming ones (which it can only reject). A connection, once open, relays in both
directions, so message flooding runs over the undirected view of all connections. Broadcast
latency metrics, on the other hand, only count exploitation connections.

Design choices
--------------
- The graph is mutated only at epoch boundaries through `connect` / `disconnect`, and both
  check the degree invariants on every call.
- Shortest paths use networkx's Dijkstra on an undirected weighted view. The two views (all
  edges / exploitation edges) are cached and rebuilt lazily after a mutation.
"""

from __future__ import annotations

import json
import logging

import networkx as nx
import numpy as np

from goldfish.errors import DegreeConstraintError, GraphConstructionError
from goldfish.netgraph.latency import measured_model, planar_model
from goldfish.schemas.graph import EdgeFilter, EdgeRole, LatencyKind, LatencyModel, NodeId

logger = logging.getLogger("goldfish.netgraph")

MAX_GENERATION_ATTEMPTS = 100


class NetworkGraph:
    """
    Directed overlay with per-node in/out caps and per-edge delay.

    `out_edges(u)` is an ordered list of `(peer, role)`; `in_edges(u)` lists the nodes with an
    outgoing connection to `u` (ascending).
    """

    def __init__(self, n_nodes: int, max_out: int, max_in: int, latency: LatencyModel) -> None:
        if latency.n_nodes != n_nodes:
            raise ValueError(f"latency model covers {latency.n_nodes} nodes, graph has {n_nodes}")
        self.n_nodes = n_nodes
        self.max_out = max_out
        self.max_in = max_in
        self.latency = latency
        self._out: list[list[tuple[NodeId, EdgeRole]]] = [[] for _ in range(n_nodes)]
        self._in: list[set[NodeId]] = [set() for _ in range(n_nodes)]
        self._delays = latency.delay_matrix()
        self._views: dict[EdgeFilter, nx.Graph] = {}
        self.version = 0

    # -----------------
    # Read-only queries
    # -----------------

    def out_edges(self, u: NodeId) -> list[tuple[NodeId, EdgeRole]]:
        return list(self._out[u])

    def out_peers(self, u: NodeId, role: EdgeRole | None = None) -> list[NodeId]:
        return [v for v, r in self._out[u] if role is None or r == role]

    def in_edges(self, u: NodeId) -> list[NodeId]:
        return sorted(self._in[u])

    def neighbors(self, u: NodeId) -> list[NodeId]:
        """All peers connected to `u` in either direction, ascending."""

        return sorted({v for v, _ in self._out[u]} | self._in[u])

    def has_spare_in(self, v: NodeId) -> bool:
        return len(self._in[v]) < self.max_in

    def can_connect(self, u: NodeId, v: NodeId) -> bool:
        return (
            u != v
            and len(self._out[u]) < self.max_out
            and v not in {p for p, _ in self._out[u]}
            and self.has_spare_in(v)
        )

    def edge_delay(self, u: NodeId, v: NodeId) -> float:
        """node_delay_ms + propagation(u, v)."""

        return float(self._delays[u, v])

    @property
    def delays(self) -> np.ndarray:
        return self._delays

    # ---------
    # Mutations
    # ---------

    def connect(self, u: NodeId, v: NodeId, role: EdgeRole = EdgeRole.EXPLOIT) -> None:
        if u == v:
            raise DegreeConstraintError(f"self-edge {u}->{v}")
        if v in {p for p, _ in self._out[u]}:
            raise DegreeConstraintError(f"duplicate edge {u}->{v}")
        if len(self._out[u]) >= self.max_out:
            raise DegreeConstraintError(f"node {u} already has {self.max_out} outgoing edges")
        if len(self._in[v]) >= self.max_in:
            raise DegreeConstraintError(f"node {v} is saturated ({self.max_in} incoming edges)")
        self._out[u].append((v, role))
        self._in[v].add(u)
        self._touch()

    def disconnect(self, u: NodeId, v: NodeId) -> None:
        before = len(self._out[u])
        self._out[u] = [(p, r) for p, r in self._out[u] if p != v]
        if len(self._out[u]) == before:
            raise KeyError(f"no edge {u}->{v}")
        self._in[v].discard(u)
        self._touch()

    def set_role(self, u: NodeId, v: NodeId, role: EdgeRole) -> None:
        self._out[u] = [(p, role if p == v else r) for p, r in self._out[u]]
        self._touch()

    def _touch(self) -> None:
        self.version += 1
        self._views.clear()

    def check_invariants(self) -> None:
        """Raise `DegreeConstraintError` if caps or in/out consistency are violated."""

        for u in range(self.n_nodes):
            peers = [v for v, _ in self._out[u]]
            if len(peers) > self.max_out:
                raise DegreeConstraintError(f"node {u} exceeds max_out")
            if len(self._in[u]) > self.max_in:
                raise DegreeConstraintError(f"node {u} exceeds max_in")
            if u in peers or len(set(peers)) != len(peers):
                raise DegreeConstraintError(f"node {u} has a self or duplicate edge")
            for v in peers:
                if u not in self._in[v]:
                    raise DegreeConstraintError(f"edge {u}->{v} missing from in-view")
            for w in self._in[u]:
                if u not in {p for p, _ in self._out[w]}:
                    raise DegreeConstraintError(f"in-edge {w}->{u} missing from out-view")

    def edge_list(self) -> list[tuple[NodeId, NodeId, str]]:
        return [(u, v, r.value) for u in range(self.n_nodes) for v, r in self._out[u]]

    def copy(self) -> "NetworkGraph":
        clone = NetworkGraph(self.n_nodes, self.max_out, self.max_in, self.latency)
        clone._out = [list(edges) for edges in self._out]
        clone._in = [set(s) for s in self._in]
        return clone

    # --------------
    # Shortest paths
    # --------------

    def view(self, edge_filter: EdgeFilter) -> nx.Graph:
        """Undirected weighted graph for `edge_filter` (cached until the next mutation)."""

        cached = self._views.get(edge_filter)
        if cached is not None:
            return cached
        view = nx.Graph()
        view.add_nodes_from(range(self.n_nodes))
        for u in range(self.n_nodes):
            for v, role in self._out[u]:
                if edge_filter == EdgeFilter.EXPLOIT_ONLY and role != EdgeRole.EXPLOIT:
                    continue
                view.add_edge(u, v, weight=float(self._delays[u, v]))
        self._views[edge_filter] = view
        return view


def edge_delay(g: NetworkGraph, u: NodeId, v: NodeId) -> float:
    """Per-hop delay between two distinct nodes (ms)."""

    return g.edge_delay(u, v)


def shortest_paths(
    g: NetworkGraph, src: NodeId, edge_filter: EdgeFilter = EdgeFilter.ALL
) -> np.ndarray:
    """
    Dijkstra distances (ms) from `src` over the undirected view selected by `edge_filter`.

    Unreachable nodes get +inf.
    """

    lengths = nx.single_source_dijkstra_path_length(g.view(edge_filter), src, weight="weight")
    dist = np.full(g.n_nodes, np.inf)
    for node, d in lengths.items():
        dist[node] = d
    return dist


def generate_random_graph(
    n: int,
    max_out: int,
    max_in: int,
    latency_kind: LatencyKind | str,
    seed: int,
    *,
    plane_size: float = 500.0,
    node_delay_ms: float = 20.0,
    measured_matrix: np.ndarray | None = None,
) -> NetworkGraph:
    """
    Random overlay where every node has exactly `max_out` outgoing edges.

    Nodes are visited in a seeded random order; each picks `max_out` distinct targets uniformly
    among nodes that still have spare in-capacity. If some node runs out of candidates the
    whole placement restarts (rejection sampling), up to `MAX_GENERATION_ATTEMPTS` times.
    """

    if n < max_out + 1:
        raise GraphConstructionError(f"n={n} nodes cannot give each node {max_out} distinct peers")
    kind = LatencyKind(latency_kind)
    rng = np.random.default_rng(seed)
    if kind == LatencyKind.PLANAR2D:
        latency = planar_model(n, rng, plane_size=plane_size, node_delay_ms=node_delay_ms)
    else:
        if measured_matrix is None:
            raise GraphConstructionError("measured topology requires a latency matrix")
        latency = measured_model(measured_matrix, n, rng, node_delay_ms=node_delay_ms)

    for attempt in range(1, MAX_GENERATION_ATTEMPTS + 1):
        g = NetworkGraph(n, max_out, max_in, latency)
        if _place_edges(g, rng):
            g.check_invariants()
            logger.info(
                json.dumps(
                    {
                        "event": "graph_generated",
                        "n_nodes": n,
                        "seed": seed,
                        "attempts": attempt,
                        "latency_kind": kind.value,
                    }
                )
            )
            return g

    raise GraphConstructionError(
        f"could not place {max_out} out-edges per node under in-cap {max_in} "
        f"for n={n} after {MAX_GENERATION_ATTEMPTS} attempts (seed={seed})"
    )


def _place_edges(g: NetworkGraph, rng: np.random.Generator) -> bool:
    for u in rng.permutation(g.n_nodes):
        u = int(u)
        candidates = np.array([v for v in range(g.n_nodes) if v != u and g.has_spare_in(v)])
        if len(candidates) < g.max_out:
            return False
        for v in rng.choice(candidates, size=g.max_out, replace=False):
            g.connect(u, int(v), EdgeRole.EXPLOIT)
    return True

"""Discrete graphs: vertices, oriented lattice edges and incidence maps.

Every edge ``e`` carries lattice sites ``0..N_e``; site 0 sits on ``e.start``
and site ``N_e`` on ``e.end``. Vertex values are stored once and shared by
all incident edge endpoints, so a field on the graph is a flat vector over
"global sites": one slot per vertex followed by the interior sites of each
edge in edge-id order.
"""

from __future__ import annotations

from collections import deque
from dataclasses import dataclass, field

import numpy as np

CONTROL = "control"
CLAMPED = "clamped"
ROLES = (CONTROL, CLAMPED)


class GraphError(ValueError):
    """Raised for malformed graph descriptions."""


@dataclass(frozen=True)
class DiscreteEdge:
    id: int
    start: int
    end: int
    n_points: int

    @property
    def n(self) -> int:
        return self.n_points


@dataclass
class GraphSpec:
    """Plain description of a graph, as read from or written to a spec file.

    ``edges`` holds ``(id, start, end, N)`` tuples; ``boundary`` maps a
    vertex to ``"control"`` or ``"clamped"``.
    """

    edges: list[tuple[int, int, int, int]] = field(default_factory=list)
    boundary: dict[int, str] = field(default_factory=dict)


def parse_graph_spec(text: str) -> GraphSpec:
    spec = GraphSpec()
    for lineno, raw in enumerate(text.splitlines(), 1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        words = line.split()
        try:
            if words[0] == "edge" and len(words) == 5:
                spec.edges.append(tuple(int(w) for w in words[1:]))
            elif words[0] == "boundary" and len(words) == 3 and words[2] in ROLES:
                v = int(words[1])
                if v in spec.boundary:
                    raise GraphError(f"line {lineno}: vertex {v} declared twice")
                spec.boundary[v] = words[2]
            else:
                raise GraphError(f"line {lineno}: cannot parse {raw.strip()!r}")
        except ValueError as exc:
            if isinstance(exc, GraphError):
                raise
            raise GraphError(f"line {lineno}: expected integers in {raw.strip()!r}") from None
    return spec


def format_graph_spec(spec: GraphSpec) -> str:
    lines = [f"edge {i} {a} {b} {n}" for i, a, b, n in spec.edges]
    lines += [f"boundary {v} {role}" for v, role in sorted(spec.boundary.items())]
    return "\n".join(lines) + "\n"


class DiscreteGraph:
    """Validated, immutable discrete graph.

    Build instances with :func:`build_graph` (or the ``star_graph``,
    ``interval_graph`` and ``path_graph`` shortcuts). Degree-1 vertices form
    the boundary set; their role defaults to clamped unless the graph description flags
    them as controlled. All other vertices are internal.
    """

    def __init__(self, edges: list[DiscreteEdge], roles: dict[int, str]):
        self.edges = {e.id: e for e in sorted(edges, key=lambda e: e.id)}
        verts = sorted({e.start for e in edges} | {e.end for e in edges})
        self.vertices = tuple(verts)
        incidence: dict[int, list[tuple[int, int]]] = {v: [] for v in verts}
        for e in self.edges.values():
            incidence[e.start].append((e.id, 0))
            incidence[e.end].append((e.id, e.n))
        self.incidence = {v: tuple(inc) for v, inc in incidence.items()}
        self.roles = dict(roles)
        self.boundary = tuple(v for v in verts if v in self.roles)
        self.internal = tuple(v for v in verts if v not in self.roles)

        # global site layout
        self._vertex_site = {v: k for k, v in enumerate(verts)}
        offset = len(verts)
        self._edge_sites = {}
        for e in self.edges.values():
            sites = np.empty(e.n + 1, dtype=np.intp)
            sites[0] = self._vertex_site[e.start]
            sites[-1] = self._vertex_site[e.end]
            sites[1:-1] = np.arange(offset, offset + e.n - 1)
            sites.setflags(write=False)
            self._edge_sites[e.id] = sites
            offset += e.n - 1
        self.n_sites = offset

    def __repr__(self) -> str:
        return (
            f"DiscreteGraph(edges={len(self.edges)}, vertices={len(self.vertices)}, "
            f"boundary={list(self.boundary)})"
        )

    def degree(self, v: int) -> int:
        return len(self.incidence[v])

    def role(self, v: int) -> str | None:
        """``"control"``, ``"clamped"`` or ``None`` for internal vertices."""
        return self.roles.get(v)

    @property
    def controlled(self) -> tuple[int, ...]:
        return tuple(v for v in self.boundary if self.roles[v] == CONTROL)

    def _check_incident(self, e: int, v: int) -> DiscreteEdge:
        try:
            edge = self.edges[e]
        except KeyError:
            raise GraphError(f"no edge {e}") from None
        if v not in (edge.start, edge.end):
            raise GraphError(f"edge {e} is not incident to vertex {v}")
        return edge

    def endpoint_index(self, e: int, v: int) -> int:
        """Lattice index of vertex ``v`` on edge ``e``: 0 or ``N_e``."""
        edge = self._check_incident(e, v)
        return 0 if v == edge.start else edge.n

    def neighbor_index(self, e: int, v: int) -> int:
        """Index of the site next to ``v`` on ``e``: 1 or ``N_e - 1``."""
        edge = self._check_incident(e, v)
        return 1 if v == edge.start else edge.n - 1

    def vertex_site(self, v: int) -> int:
        return self._vertex_site[v]

    def edge_sites(self, e: int) -> np.ndarray:
        """Global site indices of lattice points ``0..N_e`` on edge ``e``."""
        return self._edge_sites[e]

    def neighbor_sites(self, v: int) -> list[int]:
        return [int(self._edge_sites[e][self.neighbor_index(e, v)]) for e, _ in self.incidence[v]]

    def to_spec(self) -> GraphSpec:
        return GraphSpec(
            edges=[(e.id, e.start, e.end, e.n) for e in self.edges.values()],
            boundary=dict(self.roles),
        )

    def lattice_distance(self, source: int) -> dict[int, int]:
        """Shortest lattice-step distance from vertex ``source`` to every vertex."""
        import heapq

        dist = {source: 0}
        heap = [(0, source)]
        while heap:
            d, v = heapq.heappop(heap)
            if d > dist[v]:
                continue
            for e, _ in self.incidence[v]:
                edge = self.edges[e]
                w = edge.end if v == edge.start else edge.start
                nd = d + edge.n
                if nd < dist.get(w, nd + 1):
                    dist[w] = nd
                    heapq.heappush(heap, (nd, w))
        return dist


def build_graph(spec: GraphSpec) -> DiscreteGraph:
    if not spec.edges:
        raise GraphError("graph has no edges")
    seen: set[int] = set()
    pairs: set[frozenset[int]] = set()
    edges = []
    for eid, a, b, n in spec.edges:
        if eid in seen:
            raise GraphError(f"duplicate edge id {eid}")
        seen.add(eid)
        if eid < 1 or a < 1 or b < 1:
            raise GraphError(f"edge {eid}: ids are 1-based positive integers")
        if a == b:
            raise GraphError(f"edge {eid} is a self-loop at vertex {a}")
        if n < 2:
            raise GraphError(f"edge {eid} has N={n}; at least 2 is required")
        pair = frozenset((a, b))
        if pair in pairs:
            raise GraphError(f"edge {eid} duplicates another edge between {a} and {b}")
        pairs.add(pair)
        edges.append(DiscreteEdge(eid, a, b, n))

    verts = sorted({e.start for e in edges} | {e.end for e in edges})
    if verts != list(range(1, len(verts) + 1)):
        raise GraphError(f"vertex ids must be exactly 1..M, got {verts}")

    adj: dict[int, set[int]] = {v: set() for v in verts}
    for e in edges:
        adj[e.start].add(e.end)
        adj[e.end].add(e.start)
    reached = {verts[0]}
    queue = deque([verts[0]])
    while queue:
        for w in adj[queue.popleft()]:
            if w not in reached:
                reached.add(w)
                queue.append(w)
    if len(reached) != len(verts):
        raise GraphError("graph is disconnected")

    degree = {v: len(adj[v]) for v in verts}
    roles = {}
    for v, role in spec.boundary.items():
        if v not in degree:
            raise GraphError(f"boundary directive for unknown vertex {v}")
        if degree[v] != 1:
            raise GraphError(f"vertex {v} has degree {degree[v]}; only degree-1 vertices can be boundary")
        roles[v] = role
    for v in verts:
        if degree[v] == 1:
            roles.setdefault(v, CLAMPED)
    return DiscreteGraph(edges, roles)


def star_graph(lengths, controlled=None) -> DiscreteGraph:
    """Star ``S_k``: edge ``i`` runs from ``v_i`` (site 0) to the centre ``v_{k+1}``.

    ``controlled`` lists the outer vertices driven by controls; by default
    only ``v_1`` is, matching the single-pulse experiments.
    """
    k = len(lengths)
    controlled = {1} if controlled is None else set(controlled)
    spec = GraphSpec(
        edges=[(i, i, k + 1, int(n)) for i, n in enumerate(lengths, 1)],
        boundary={i: CONTROL if i in controlled else CLAMPED for i in range(1, k + 1)},
    )
    return build_graph(spec)


def interval_graph(n: int, left=CONTROL, right=CLAMPED) -> DiscreteGraph:
    return build_graph(GraphSpec(edges=[(1, 1, 2, n)], boundary={1: left, 2: right}))


def path_graph(lengths, left=CONTROL, right=CLAMPED) -> DiscreteGraph:
    """Chain ``v_1 - v_2 - ... - v_{k+1}`` with edge ``i`` oriented ``v_i -> v_{i+1}``."""
    k = len(lengths)
    spec = GraphSpec(
        edges=[(i, i, i + 1, int(n)) for i, n in enumerate(lengths, 1)],
        boundary={1: left, k + 1: right},
    )
    return build_graph(spec)

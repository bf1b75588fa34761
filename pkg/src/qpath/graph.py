"""Graph structures, local search subgraphs, coverage bookkeeping and toolpaths.

Node positions are millimeters. Node ids are dense integers assigned at load
time; edges are canonicalized as (min id, max id).
"""

from __future__ import annotations

from collections import deque
from dataclasses import dataclass, field

import numpy as np

from .errors import ArgumentError, CoverageViolation

WIREFRAME = "wireframe"
CCF = "ccf"
METAL = "metal"
MODES = (WIREFRAME, CCF, METAL)

# Relative tolerance used when validating stored edge lengths against the
# Euclidean distance of the endpoint positions.
EDGE_LENGTH_RTOL = 1e-9


def canonical_edge(a: int, b: int) -> tuple[int, int]:
    return (a, b) if a < b else (b, a)


class Graph:
    """An undirected graph with 3D node positions and unit-free integer ids."""

    def __init__(self, positions, edges):
        positions = np.asarray(positions, dtype=float)
        if positions.ndim != 2 or positions.shape[1] != 3:
            raise ArgumentError("positions must be an (N, 3) array")
        if not np.all(np.isfinite(positions)):
            raise ArgumentError("node positions must be finite")
        self.positions = positions
        self.positions.setflags(write=False)
        n = positions.shape[0]

        seen: dict[tuple[int, int], int] = {}
        pairs = []
        for a, b in edges:
            a, b = int(a), int(b)
            if a == b:
                raise ArgumentError(f"self-loop edge at node {a}")
            if not (0 <= a < n and 0 <= b < n):
                raise ArgumentError(f"edge ({a}, {b}) references a missing node")
            key = canonical_edge(a, b)
            if key in seen:
                raise ArgumentError(f"duplicate edge {key}")
            seen[key] = len(pairs)
            pairs.append(key)
        self.edges = np.asarray(pairs, dtype=np.int64).reshape(len(pairs), 2)
        self.edges.setflags(write=False)
        self._edge_index = seen

        if len(pairs):
            delta = positions[self.edges[:, 0]] - positions[self.edges[:, 1]]
            self.edge_lengths = np.linalg.norm(delta, axis=1)
            if np.any(self.edge_lengths <= 0.0):
                bad = int(np.argmin(self.edge_lengths))
                raise ArgumentError(f"zero-length edge {pairs[bad]}")
        else:
            self.edge_lengths = np.zeros(0)
        self.edge_lengths.setflags(write=False)

        adjacency: list[list[int]] = [[] for _ in range(n)]
        for a, b in pairs:
            adjacency[a].append(b)
            adjacency[b].append(a)
        self.adjacency = tuple(tuple(sorted(nbrs)) for nbrs in adjacency)
        self.components = self._find_components()

    # -- basic accessors ---------------------------------------------------

    @property
    def num_nodes(self) -> int:
        return self.positions.shape[0]

    @property
    def num_edges(self) -> int:
        return self.edges.shape[0]

    def neighbors(self, v: int) -> tuple[int, ...]:
        return self.adjacency[v]

    def degree(self, v: int) -> int:
        return len(self.adjacency[v])

    def has_edge(self, a: int, b: int) -> bool:
        return canonical_edge(a, b) in self._edge_index

    def edge_id(self, a: int, b: int) -> int:
        try:
            return self._edge_index[canonical_edge(a, b)]
        except KeyError:
            raise ArgumentError(f"no edge between {a} and {b}") from None

    def edge_length(self, a: int, b: int) -> float:
        return float(self.edge_lengths[self.edge_id(a, b)])

    def max_edge_length(self) -> float:
        return float(self.edge_lengths.max()) if self.num_edges else 0.0

    def mean_edge_length(self) -> float:
        return float(self.edge_lengths.mean()) if self.num_edges else 0.0

    def _find_components(self) -> tuple[tuple[int, ...], ...]:
        unseen = set(range(self.num_nodes))
        comps = []
        while unseen:
            root = min(unseen)
            comp = [root]
            unseen.discard(root)
            queue = deque([root])
            while queue:
                v = queue.popleft()
                for u in self.adjacency[v]:
                    if u in unseen:
                        unseen.discard(u)
                        comp.append(u)
                        queue.append(u)
            comps.append(tuple(sorted(comp)))
        return tuple(comps)

    def validate_edge_lengths(self):
        """Check stored lengths against endpoint distances (load-time guard)."""
        delta = self.positions[self.edges[:, 0]] - self.positions[self.edges[:, 1]]
        fresh = np.linalg.norm(delta, axis=1)
        if not np.allclose(fresh, self.edge_lengths, rtol=EDGE_LENGTH_RTOL, atol=0.0):
            raise ArgumentError("edge lengths inconsistent with node positions")


@dataclass(frozen=True)
class Lsg:
    """The n-ring local search subgraph around a center node.

    ``nodes`` is in deterministic BFS discovery order; ``ring_of`` maps member
    node ids to their BFS hop distance from the center.
    """

    center: int
    n: int
    nodes: tuple[int, ...]
    ring_of: dict[int, int]
    edges: tuple[tuple[int, int], ...]
    graph: Graph = field(repr=False)

    def __contains__(self, v: int) -> bool:
        return v in self.ring_of

    @property
    def num_nodes(self) -> int:
        return len(self.nodes)

    def ring(self, k: int) -> tuple[int, ...]:
        return tuple(v for v in self.nodes if self.ring_of[v] == k)

    def max_edge_length(self) -> float:
        if not self.edges:
            return 0.0
        return max(self.graph.edge_length(a, b) for a, b in self.edges)


def extract_lsg(graph: Graph, v_c: int, n: int) -> Lsg:
    """BFS the n-ring neighborhood of ``v_c`` and collect its interior edges."""
    if not (0 <= v_c < graph.num_nodes):
        raise ArgumentError(f"invalid center node {v_c}")
    if n < 0:
        raise ArgumentError("ring count must be >= 0")
    ring_of = {v_c: 0}
    order = [v_c]
    queue = deque([v_c])
    while queue:
        v = queue.popleft()
        r = ring_of[v]
        if r == n:
            continue
        for u in graph.adjacency[v]:
            if u not in ring_of:
                ring_of[u] = r + 1
                order.append(u)
                queue.append(u)
    members = set(ring_of)
    edges = tuple(
        (a, b)
        for a, b in map(tuple, graph.edges)
        if a in members and b in members
    )
    return Lsg(center=v_c, n=n, nodes=tuple(order), ring_of=ring_of,
               edges=edges, graph=graph)


class CoverageState:
    """Per-mode visit bookkeeping with hard caps.

    wireframe: each edge at most once; ccf: each edge at most twice;
    metal: each node at most once. Cap violations raise instead of clamping.
    """

    _EDGE_CAPS = {WIREFRAME: 1, CCF: 2, METAL: None}

    def __init__(self, graph: Graph, mode: str):
        if mode not in MODES:
            raise ArgumentError(f"unknown coverage mode {mode!r}")
        self.graph = graph
        self.mode = mode
        self.edge_visits = np.zeros(graph.num_edges, dtype=np.int32)
        self.node_visited = np.zeros(graph.num_nodes, dtype=bool)

    def copy(self) -> "CoverageState":
        dup = CoverageState.__new__(CoverageState)
        dup.graph = self.graph
        dup.mode = self.mode
        dup.edge_visits = self.edge_visits.copy()
        dup.node_visited = self.node_visited.copy()
        return dup

    def visit_edge(self, a: int, b: int):
        eid = self.graph.edge_id(a, b)
        cap = self._EDGE_CAPS[self.mode]
        if cap is not None and self.edge_visits[eid] >= cap:
            raise CoverageViolation(
                f"edge visit cap {cap} exceeded in {self.mode} mode",
                canonical_edge(a, b),
            )
        self.edge_visits[eid] += 1
        self.node_visited[a] = True
        self.node_visited[b] = True

    def visit_node(self, v: int):
        if not (0 <= v < self.graph.num_nodes):
            raise ArgumentError(f"invalid node {v}")
        if self.mode == METAL and self.node_visited[v]:
            raise CoverageViolation("node revisited in metal mode", v)
        self.node_visited[v] = True

    def complete(self) -> bool:
        if self.mode == METAL:
            return bool(self.node_visited.all())
        if self.graph.num_edges == 0:
            return True
        return bool((self.edge_visits >= 1).all())

    def uncovered(self):
        """Remaining work: edge pairs for wireframe/ccf, node ids for metal."""
        if self.mode == METAL:
            return [int(v) for v in np.flatnonzero(~self.node_visited)]
        return [tuple(map(int, self.graph.edges[eid]))
                for eid in np.flatnonzero(self.edge_visits == 0)]

    # -- availability used for state masking and legal moves ----------------

    def edge_available(self, a: int, b: int, current: int | None = None) -> bool:
        eid = self.graph.edge_id(a, b)
        if self.mode == WIREFRAME:
            return self.edge_visits[eid] < 1
        if self.mode == CCF:
            return self.edge_visits[eid] < 2
        # Metal: an edge can still appear in a legal continuation iff at least
        # one endpoint is unvisited and the other is unvisited or the node the
        # head currently sits on.
        av = (not self.node_visited[a]) or a == current
        bv = (not self.node_visited[b]) or b == current
        return av and bv and not (self.node_visited[a] and self.node_visited[b])

    def legal_moves(self, v: int) -> list[int]:
        """Graph neighbors reachable by a coverage-legal move from ``v``."""
        if self.mode == METAL:
            return [u for u in self.graph.adjacency[v] if not self.node_visited[u]]
        return [u for u in self.graph.adjacency[v] if self.edge_available(v, u)]


@dataclass
class ToolpathStep:
    node: int
    is_jump: bool
    reward: float
    diagnostics: dict = field(default_factory=dict)


class Toolpath:
    """Ordered node visits with jump markers and per-step diagnostics."""

    def __init__(self, steps: list[ToolpathStep] | None = None):
        self.steps = list(steps) if steps else []

    def __len__(self):
        return len(self.steps)

    def append(self, step: ToolpathStep):
        self.steps.append(step)

    def nodes(self) -> list[int]:
        return [s.node for s in self.steps]

    def jump_count(self) -> int:
        # The leading placement step is a jump by convention; do not count it.
        return sum(1 for s in self.steps[1:] if s.is_jump)

    def total_length(self, graph: Graph) -> float:
        """Deposited length in mm: jump travel is not material."""
        total = 0.0
        for prev, step in zip(self.steps, self.steps[1:]):
            if not step.is_jump:
                total += float(np.linalg.norm(
                    graph.positions[step.node] - graph.positions[prev.node]))
        return total

    def validate(self, graph: Graph):
        if not self.steps:
            return
        if not self.steps[0].is_jump:
            raise ArgumentError("first toolpath step must be a placement jump")
        for prev, step in zip(self.steps, self.steps[1:]):
            if step.is_jump:
                continue
            if not graph.has_edge(prev.node, step.node):
                raise ArgumentError(
                    f"non-jump step {prev.node}->{step.node} is not graph-adjacent")

"""Moving-state construction for local search graphs.

An LSG is flattened by a pinned harmonic embedding (every free node at the
mean of its neighbors, the center pinned at (0,0) and the previous node at
(-1,0)), its nodes are ranked by the embedded coordinates, and the ranked
adjacency is written into a three-channel m x m stack [A, A1, A2] carrying
two steps of short-term history. Similar LSG configurations then produce
similar matrices, which is what makes prior networks reusable.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
import scipy.sparse as sp
import scipy.sparse.linalg as spla

from .errors import ArgumentError, IllegalActionError, StateOverflowError
from .graph import Lsg, canonical_edge

# State matrices are m x m with m = 50 * n, which safely bounds node counts
# on the graphs this planner targets (valence below 7).
M_PER_RING = 50

# Scale coefficient of the similarity metric.
SIMILARITY_LAMBDA = 0.76


def state_dim(n: int) -> int:
    return M_PER_RING * max(n, 1)


@dataclass(frozen=True)
class Embedding2D:
    """Planar coordinates of LSG nodes with the two pins placed exactly."""

    coords: dict[int, tuple[float, float]]
    center: int
    previous: int | None


@dataclass(frozen=True)
class NodeOrdering:
    """Bijection between LSG node ids and a prefix of matrix indices."""

    rank: dict[int, int]
    nodes: tuple[int, ...]
    m: int

    @property
    def occupied(self) -> int:
        return len(self.nodes)

    def node_at(self, index: int) -> int:
        return self.nodes[index]


class MovingState:
    """Immutable (3, m, m) stack [A, A1, A2] of normalized adjacencies."""

    __slots__ = ("channels",)

    def __init__(self, channels: np.ndarray):
        channels = np.ascontiguousarray(channels, dtype=float)
        if channels.ndim != 3 or channels.shape[0] != 3 or \
                channels.shape[1] != channels.shape[2]:
            raise ArgumentError("state must be a (3, m, m) array")
        channels.setflags(write=False)
        self.channels = channels

    @property
    def m(self) -> int:
        return self.channels.shape[1]

    @property
    def current(self) -> np.ndarray:
        return self.channels[0]


def embed_lsg(lsg: Lsg, v_q: int | None = None) -> Embedding2D:
    """Pinned harmonic embedding of an LSG.

    The center is fixed at (0,0); ``v_q`` (or, at a path start, a virtual
    anchor attached to the center) at (-1,0). Every free node solves to the
    mean of its neighbors, so the result is deterministic and repeats
    bit-identically.
    """
    v_c = lsg.center
    if v_q is not None:
        if v_q not in lsg:
            raise ArgumentError(f"previous node {v_q} is not in the LSG")
        if not lsg.graph.has_edge(v_q, v_c):
            raise ArgumentError(f"previous node {v_q} is not adjacent to the center")
    pinned: dict[int, tuple[float, float]] = {v_c: (0.0, 0.0)}
    if v_q is not None:
        pinned[v_q] = (-1.0, 0.0)
    # With v_q absent the anchor is pinned too, so attaching it to the pinned
    # center adds nothing to the free system; it only fixes the (-1,0) slot.

    free = [v for v in lsg.nodes if v not in pinned]
    coords = dict(pinned)
    if free:
        index = {v: i for i, v in enumerate(free)}
        nf = len(free)
        rows, cols, vals = [], [], []
        rhs = np.zeros((nf, 2))
        deg = {v: 0 for v in free}
        for a, b in lsg.edges:
            for u, w in ((a, b), (b, a)):
                if u in index:
                    deg[u] += 1
                    if w in index:
                        rows.append(index[u])
                        cols.append(index[w])
                        vals.append(-1.0)
                    else:
                        rhs[index[u]] += pinned[w]
        for v, i in index.items():
            rows.append(i)
            cols.append(i)
            vals.append(float(deg[v]))
        lap = sp.csc_matrix((vals, (rows, cols)), shape=(nf, nf))
        # spsolve is sequential, keeping the layout independent of BLAS
        # threading.
        sol = spla.spsolve(lap, rhs)
        sol = np.atleast_2d(sol).reshape(nf, 2)
        if not np.all(np.isfinite(sol)):
            raise ArgumentError("embedding solve produced non-finite coordinates")
        for v, i in index.items():
            coords[v] = (float(sol[i, 0]), float(sol[i, 1]))
    return Embedding2D(coords=coords, center=v_c, previous=v_q)


def order_nodes(emb: Embedding2D, m: int) -> NodeOrdering:
    """Rank nodes by ascending x, then y, then node id; reject overflow."""
    if len(emb.coords) > m:
        raise StateOverflowError(
            f"LSG has {len(emb.coords)} nodes but the state holds only {m}")
    ordered = sorted(emb.coords, key=lambda v: (emb.coords[v][0], emb.coords[v][1], v))
    rank = {v: i for i, v in enumerate(ordered)}
    return NodeOrdering(rank=rank, nodes=tuple(ordered), m=m)


def build_state(lsg: Lsg, ordering: NodeOrdering,
                history: tuple[int, ...],
                unavailable_edges=()) -> MovingState:
    """Assemble [A, A1, A2] from an LSG, a node ordering and path history.

    ``history`` is the suffix of the toolpath ending at the LSG center, at
    most three nodes (v_p, v_q, v_c). Channel A holds normalized lengths of
    the still-available LSG edges; A1 re-adds the v_q->v_c step, A2 also the
    v_p->v_q step. History nodes outside the LSG leave their channel equal to
    its predecessor.
    """
    if not history or history[-1] != lsg.center:
        raise ArgumentError("history must end at the LSG center")
    m = ordering.m
    unavailable = {canonical_edge(a, b) for a, b in unavailable_edges}
    l_max = lsg.max_edge_length()
    norm = l_max if l_max > 0.0 else 1.0

    a = np.zeros((m, m))
    for u, w in lsg.edges:
        if (u, w) in unavailable:
            continue
        val = lsg.graph.edge_length(u, w) / norm
        i, j = ordering.rank[u], ordering.rank[w]
        a[i, j] = a[j, i] = val

    def with_step(base, u, w):
        if u is None or u not in ordering.rank or w not in ordering.rank:
            return base
        if not lsg.graph.has_edge(u, w):
            return base
        out = base.copy()
        val = lsg.graph.edge_length(u, w) / norm
        i, j = ordering.rank[u], ordering.rank[w]
        out[i, j] = out[j, i] = val
        return out

    v_c = history[-1]
    v_q = history[-2] if len(history) >= 2 else None
    v_p = history[-3] if len(history) >= 3 else None
    a1 = with_step(a, v_q, v_c)
    a2 = with_step(a1, v_p, v_q) if v_q is not None else a1
    return MovingState(np.stack([a, a1, a2]))


def advance_state(state: MovingState, action: tuple[int, int]) -> MovingState:
    """Shift history one step: [A, A1, A2] becomes [A*, A, A1].

    ``action`` is the matrix index pair of the edge taken; its channel-A
    entry must be nonzero.
    """
    i, j = action
    a = state.channels[0]
    if a[i, j] == 0.0:
        raise IllegalActionError(f"state entry ({i}, {j}) is zero")
    a_star = a.copy()
    a_star[i, j] = a_star[j, i] = 0.0
    return MovingState(np.stack([a_star, a, state.channels[1]]))


def similarity(s: MovingState, s_k: MovingState) -> float:
    """Frobenius-norm state similarity, 1/lambda at identity."""
    if s.m != s_k.m:
        raise ArgumentError(f"state dimensions differ: {s.m} vs {s_k.m}")
    dist = float(np.linalg.norm(s.channels - s_k.channels))
    return (1.0 / SIMILARITY_LAMBDA) / (1.0 + dist)


def similarity_from_distance(dist: float) -> float:
    return (1.0 / SIMILARITY_LAMBDA) / (1.0 + dist)

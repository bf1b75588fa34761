"""Application reward models: wire-frame, continuous-fiber and metal.

Each context owns the mutable world state a rollout needs (printed struts,
traversal counts, the temperature field), exposes ``step(i, u, v)`` returning
the discounted reward of moving u -> v at rollout position i, and supports
cheap cloning so episodes and search branches never touch the committed
state. ``last_diag`` carries the undiscounted terms of the latest step for
the planner's records.
"""

from __future__ import annotations

import math

import numpy as np

from . import collision as coll
from .errors import ArgumentError, ConfigError, IllegalActionError, StructuralError
from .fea import FrameModel, u_max_after
from .graph import Graph

# Gaussian-like discount over rollout positions: full weight on the first
# move, floor of 0.1 far out.
DISCOUNT_SIGMA = 0.865
DISCOUNT_MU = 1.0

HEAT_MAX_DEFAULT = 100.0
DIFFUSION_BETA_DEFAULT = 0.2
DECAY_DELTA_DEFAULT = 0.05

SHARP_TURN_RAD = 2.0 * math.pi / 3.0


def discount(i: int) -> float:
    """Rollout-position weight 0.9*exp(-(i-mu)^2 / (2 sigma^2)) + 0.1."""
    if i < 1:
        raise ArgumentError("step index starts at 1")
    return 0.9 * math.exp(-((i - DISCOUNT_MU) ** 2) / (2.0 * DISCOUNT_SIGMA ** 2)) + 0.1


def sigmoid(x: float) -> float:
    if x >= 0.0:
        return 1.0 / (1.0 + math.exp(-x))
    e = math.exp(x)
    return e / (1.0 + e)


def ccf_turn_reward(alpha: float) -> float:
    """Turning-angle reward: ~1 when straight, ~0 beyond 2pi/3."""
    if not (0.0 <= alpha <= math.pi + 1e-12):
        raise ArgumentError("turning angle must lie in [0, pi]")
    scale = math.pi / 60.0
    return (sigmoid((math.pi / 3.0 - alpha) / scale)
            + 0.9 * (sigmoid((alpha - math.pi / 3.0) / scale)
                     - sigmoid((alpha - 2.0 * math.pi / 3.0) / scale)))


def turning_angle(d_in, d_out) -> float:
    """Angle between consecutive travel directions: 0 straight, pi reversal."""
    dot = float(np.dot(d_in, d_out))
    return math.acos(min(1.0, max(-1.0, dot)))


class WireframeContext:
    """FEA structure, obstacle world and head orientation for wire printing."""

    def __init__(self, graph: Graph, frame: FrameModel,
                 world: coll.WorldObstacles, head: coll.HeadShape,
                 orientation=(0.0, 0.0, 1.0),
                 collision_mode: str = coll.FIXED):
        self.graph = graph
        self.frame = frame
        self.world = world
        self.head = head
        self.orientation = coll.unit_orientation(orientation)
        self.collision_mode = collision_mode
        self.printed: set = set(frame.struts)
        self.rollout_collided = False
        self.last_diag: dict = {}

    @classmethod
    def fresh(cls, graph: Graph, material, grounded, head=None,
              orientation=(0.0, 0.0, 1.0), collision_mode=coll.FIXED):
        frame = FrameModel(graph.positions, grounded, material)
        world = coll.WorldObstacles(material.strut_diameter_mm)
        head = head if head is not None else coll.HeadShape.frustum()
        return cls(graph, frame, world, head, orientation, collision_mode)

    def clone(self) -> "WireframeContext":
        dup = WireframeContext.__new__(WireframeContext)
        dup.graph = self.graph
        dup.frame = self.frame.clone()
        dup.world = self.world.clone()
        dup.head = self.head
        dup.orientation = self.orientation
        dup.collision_mode = self.collision_mode
        dup.printed = set(self.printed)
        dup.rollout_collided = self.rollout_collided
        dup.last_diag = {}
        return dup

    def step(self, i: int, u: int, v: int) -> float:
        gamma = discount(i)
        key = (min(u, v), max(u, v))
        p_u = self.graph.positions[u]
        p_v = self.graph.positions[v]

        if self.rollout_collided or key in self.printed:
            # A doomed branch, or an attempt to re-print: collision by
            # definition, and the expensive terms are skipped.
            c_term, q_b, u_term = coll.COLLISION_PENALTY, self.orientation, 0.0
        else:
            exclude = coll.exclusion_for_move(u, v, self.graph.adjacency)
            c_term, q_b = coll.collision_reward(
                self.world, p_u, p_v, self.orientation, self.head,
                mode=self.collision_mode, exclude=exclude)
            if c_term <= coll.COLLISION_PENALTY:
                self.rollout_collided = True
                u_term = 0.0
            else:
                try:
                    u_term = u_max_after(self.frame, key)
                except StructuralError:
                    # Unsupported strut: physically unprintable, same penalty.
                    c_term, u_term = coll.COLLISION_PENALTY, 0.0
                    self.rollout_collided = True

        self.printed.add(key)
        self.frame.add_strut(u, v)
        self.world.add_strut(key, p_u, p_v)
        self.orientation = q_b if not self.rollout_collided else self.orientation
        self.last_diag = {"collision": c_term, "u_max": u_term,
                          "orientation": tuple(float(x) for x in self.orientation)}
        return gamma * (c_term - u_term)

    def on_jump(self, node: int):
        # Repositioning deposits nothing; orientation is kept.
        self.last_diag = {}


class CcfContext:
    """Edge traversal counts and travel direction for fiber printing."""

    def __init__(self, graph: Graph):
        self.graph = graph
        self.visits = np.zeros(graph.num_edges, dtype=np.int8)
        self.l_max = graph.max_edge_length() or 1.0
        self.prev_dir: np.ndarray | None = None
        self.last_diag: dict = {}

    def clone(self) -> "CcfContext":
        dup = CcfContext.__new__(CcfContext)
        dup.graph = self.graph
        dup.visits = self.visits.copy()
        dup.l_max = self.l_max
        dup.prev_dir = None if self.prev_dir is None else self.prev_dir.copy()
        dup.last_diag = {}
        return dup

    def traversal_reward(self, u: int, v: int) -> float:
        count = int(self.visits[self.graph.edge_id(u, v)])
        if count == 0:
            return 0.0
        if count == 1:
            return -self.graph.edge_length(u, v) / self.l_max
        raise IllegalActionError(f"edge ({u}, {v}) already traversed twice")

    def step(self, i: int, u: int, v: int) -> float:
        direction = self.graph.positions[v] - self.graph.positions[u]
        direction = direction / np.linalg.norm(direction)
        # Turn completed at the junction u being left; a path start counts as
        # a straight continuation.
        alpha = 0.0 if self.prev_dir is None else turning_angle(self.prev_dir, direction)
        a_term = ccf_turn_reward(alpha)
        d_term = self.traversal_reward(u, v)
        eid = self.graph.edge_id(u, v)
        second = self.visits[eid] == 1
        self.visits[eid] += 1
        self.prev_dir = direction
        self.last_diag = {"alpha_rad": alpha, "turn_reward": a_term,
                          "traversal": d_term, "second_pass": bool(second)}
        return discount(i) * (a_term + d_term)

    def on_jump(self, node: int):
        self.prev_dir = None
        self.last_diag = {}


class MetalContext:
    """Per-node temperature field with deposit kernel, diffusion and decay."""

    def __init__(self, graph: Graph, rings: int,
                 h_max: float = HEAT_MAX_DEFAULT,
                 beta: float = DIFFUSION_BETA_DEFAULT,
                 delta: float = DECAY_DELTA_DEFAULT):
        max_degree = max((graph.degree(v) for v in range(graph.num_nodes)),
                         default=0)
        if beta * max_degree >= 1.0:
            raise ConfigError(
                f"diffusion rate {beta} unstable for max degree {max_degree}")
        if rings < 1:
            raise ArgumentError("diffusion support needs rings >= 1")
        self.graph = graph
        self.rings = rings
        self.h_max = h_max
        self.beta = beta
        self.delta = delta
        self.radius = 3.0 * graph.mean_edge_length()
        self.temperature = np.zeros(graph.num_nodes)
        self.visited = np.zeros(graph.num_nodes, dtype=bool)
        self.last_diag: dict = {}

    def clone(self) -> "MetalContext":
        dup = MetalContext.__new__(MetalContext)
        dup.graph = self.graph
        dup.rings = self.rings
        dup.h_max = self.h_max
        dup.beta = self.beta
        dup.delta = self.delta
        dup.radius = self.radius
        dup.temperature = self.temperature.copy()
        dup.visited = self.visited.copy()
        dup.last_diag = {}
        return dup

    def deposit(self, v_c: int):
        """Heat kernel H_max * (1 - (d/R)^0.3) on nodes with d < R."""
        if self.radius <= 0.0:
            self.temperature[v_c] += self.h_max
            return
        d = np.linalg.norm(self.graph.positions - self.graph.positions[v_c],
                           axis=1)
        mask = d < self.radius
        self.temperature[mask] += self.h_max * (1.0 - (d[mask] / self.radius) ** 0.3)

    def diffuse(self, v_c: int):
        """One explicit step T <- (1-delta) (T + beta L T) near v_c.

        The neighborhood spans 2*rings BFS hops; nodes with a neighbor
        outside it are held fixed during the step.
        """
        support = 2 * self.rings
        dist = {v_c: 0}
        frontier = [v_c]
        for hop in range(support):
            nxt = []
            for v in frontier:
                for u in self.graph.adjacency[v]:
                    if u not in dist:
                        dist[u] = hop + 1
                        nxt.append(u)
            frontier = nxt
        interior = [v for v in dist
                    if all(u in dist for u in self.graph.adjacency[v])]
        if not interior:
            return
        t = self.temperature
        lap = np.array([
            sum(t[u] - t[v] for u in self.graph.adjacency[v]) for v in interior
        ])
        idx = np.asarray(interior, dtype=np.int64)
        self.temperature[idx] = (1.0 - self.delta) * (t[idx] + self.beta * lap)

    def arrive(self, v: int):
        """Laser the node: mark visited, deposit heat, diffuse."""
        self.visited[v] = True
        self.deposit(v)
        self.diffuse(v)

    def step(self, i: int, u: int, v: int) -> float:
        # Reward looks at the field before this step's heat lands.
        t_before = float(self.temperature[v])
        if self.visited[v]:
            reward = coll.COLLISION_PENALTY
        else:
            reward = -discount(i) * t_before
        self.arrive(v)
        self.last_diag = {"temperature": t_before}
        return reward

    def on_jump(self, node: int):
        self.arrive(node)
        self.last_diag = {"temperature": float(self.temperature[node])}

    def hot_area(self, threshold: float) -> int:
        return int(np.count_nonzero(self.temperature > threshold))


class IndexedRewards:
    """Adapter handing matrix-indexed rollout steps to a node-based context."""

    def __init__(self, ctx, ordering):
        self.ctx = ctx
        self.ordering = ordering

    def step(self, i: int, cur_index: int, nxt_index: int) -> float:
        return self.ctx.step(i, self.ordering.node_at(cur_index),
                             self.ordering.node_at(nxt_index))

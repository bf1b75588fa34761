"""Convex swept-volume collision tests for the printer head.

The head is a convex polytope (vertex set, tip at the local origin, axis
along local +z). Printed struts become 8-sided prisms circumscribing their
cylinders, so the test errs on the safe side: a reported "free" move is free
for the true cylinders too. Intersection uses a support-function (GJK-style)
search over separating directions.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass

import numpy as np

from .errors import ArgumentError

PENETRATION_TOL = 1e-6
GJK_MAX_ITER = 64
ORIENTATION_SAMPLES = 200
PRISM_SEGMENTS = 8

COLLISION_PENALTY = -1000.0

FIXED = "fixed"
REORIENT = "reorient"


@dataclass(frozen=True)
class HeadShape:
    """Convex head geometry in the local frame (tip at origin, axis +z)."""

    vertices: np.ndarray

    def __post_init__(self):
        verts = np.ascontiguousarray(self.vertices, dtype=float)
        if verts.ndim != 2 or verts.shape[1] != 3 or verts.shape[0] < 4:
            raise ArgumentError("head shape needs at least 4 (x, y, z) vertices")
        verts.setflags(write=False)
        object.__setattr__(self, "vertices", verts)

    @classmethod
    def frustum(cls, tip_radius: float = 0.5, top_radius: float = 15.0,
                height: float = 40.0, segments: int = 8) -> "HeadShape":
        """Default conical-frustum hull; dimensions in mm."""
        angles = 2.0 * math.pi * np.arange(segments) / segments
        ring = np.stack([np.cos(angles), np.sin(angles),
                         np.zeros(segments)], axis=1)
        bottom = ring * tip_radius
        top = ring * top_radius
        top[:, 2] = height
        apex = np.zeros((1, 3))
        return cls(np.vstack([apex, bottom, top]))

    @classmethod
    def from_json(cls, path) -> "HeadShape":
        with open(path) as fh:
            data = json.load(fh)
        return cls(np.asarray(data["vertices"], dtype=float))


def unit_orientation(v) -> np.ndarray:
    v = np.asarray(v, dtype=float)
    norm = float(np.linalg.norm(v))
    if norm == 0.0 or not np.isfinite(norm):
        raise ArgumentError("orientation must be a nonzero finite vector")
    out = v / norm
    out.setflags(write=False)
    return out


def angle_between(a, b) -> float:
    return float(math.acos(min(1.0, max(-1.0, float(np.dot(a, b))))))


def rotation_from_z(q: np.ndarray) -> np.ndarray:
    """Minimal rotation carrying local +z onto the head axis q."""
    z = np.array([0.0, 0.0, 1.0])
    c = float(np.dot(z, q))
    if c > 1.0 - 1e-12:
        return np.eye(3)
    if c < -1.0 + 1e-12:
        return np.diag([1.0, -1.0, -1.0])
    axis = np.cross(z, q)
    s = float(np.linalg.norm(axis))
    axis = axis / s
    kx = np.array([
        [0.0, -axis[2], axis[1]],
        [axis[2], 0.0, -axis[0]],
        [-axis[1], axis[0], 0.0],
    ])
    return np.eye(3) + s * kx + (1.0 - c) * (kx @ kx)


def head_vertices_at(head: HeadShape, position, q) -> np.ndarray:
    rot = rotation_from_z(np.asarray(q, dtype=float))
    return np.asarray(position, dtype=float) + head.vertices @ rot.T


def swept_volume(v_a, v_b, q, head: HeadShape) -> np.ndarray:
    """Hull of the head placed at both move endpoints (as a vertex set)."""
    start = head_vertices_at(head, v_a, q)
    v_a = np.asarray(v_a, dtype=float)
    v_b = np.asarray(v_b, dtype=float)
    if np.array_equal(v_a, v_b):
        return start
    return np.vstack([start, head_vertices_at(head, v_b, q)])


def strut_prism(p_a, p_b, diameter_mm: float,
                segments: int = PRISM_SEGMENTS) -> np.ndarray:
    """8-gon prism circumscribing the strut's cylinder (conservative)."""
    p_a = np.asarray(p_a, dtype=float)
    p_b = np.asarray(p_b, dtype=float)
    axis = p_b - p_a
    length = float(np.linalg.norm(axis))
    if length <= 0.0:
        raise ArgumentError("strut endpoints coincide")
    u = axis / length
    ref = np.array([0.0, 0.0, 1.0])
    if abs(float(np.dot(u, ref))) > 0.999:
        ref = np.array([1.0, 0.0, 0.0])
    e1 = np.cross(ref, u)
    e1 /= np.linalg.norm(e1)
    e2 = np.cross(u, e1)
    radius = (diameter_mm / 2.0) / math.cos(math.pi / segments)
    angles = 2.0 * math.pi * np.arange(segments) / segments
    ring = radius * (np.outer(np.cos(angles), e1) + np.outer(np.sin(angles), e2))
    return np.vstack([p_a + ring, p_b + ring])


# -- support-function intersection test --------------------------------------

def _support(verts_a, verts_b, d):
    i = int(np.argmax(verts_a @ d))
    j = int(np.argmax(verts_b @ (-d)))
    return verts_a[i] - verts_b[j]


def _line_case(simplex, d):
    a, b = simplex[1], simplex[0]
    ab = b - a
    ao = -a
    if float(np.dot(ab, ao)) > 0.0:
        new_d = np.cross(np.cross(ab, ao), ab)
        if float(np.dot(new_d, new_d)) < 1e-24:
            return True, simplex, d  # origin on the segment
        return False, simplex, new_d
    return False, [a], ao


def _triangle_case(simplex, d):
    c, b, a = simplex
    ab = b - a
    ac = c - a
    ao = -a
    abc = np.cross(ab, ac)
    if float(np.dot(np.cross(abc, ac), ao)) > 0.0:
        if float(np.dot(ac, ao)) > 0.0:
            return False, [c, a], np.cross(np.cross(ac, ao), ac)
        return _line_case([b, a], d)
    if float(np.dot(np.cross(ab, abc), ao)) > 0.0:
        return _line_case([b, a], d)
    proj = float(np.dot(abc, ao))
    if proj > 0.0:
        return False, [c, b, a], abc
    if proj < 0.0:
        return False, [b, c, a], -abc
    return True, simplex, d  # origin in the triangle's plane patch


def _tetra_case(simplex, d):
    dd, c, b, a = simplex
    ab = b - a
    ac = c - a
    ad = dd - a
    ao = -a
    abc = np.cross(ab, ac)
    acd = np.cross(ac, ad)
    adb = np.cross(ad, ab)
    if float(np.dot(abc, ao)) > 0.0:
        return _triangle_case([c, b, a], d)
    if float(np.dot(acd, ao)) > 0.0:
        return _triangle_case([dd, c, a], d)
    if float(np.dot(adb, ao)) > 0.0:
        return _triangle_case([b, dd, a], d)
    return True, simplex, d


def gjk_intersects(verts_a, verts_b, tol: float = PENETRATION_TOL) -> bool:
    """True iff the convex hulls of the two vertex sets overlap."""
    verts_a = np.asarray(verts_a, dtype=float)
    verts_b = np.asarray(verts_b, dtype=float)
    d = verts_a.mean(axis=0) - verts_b.mean(axis=0)
    if float(np.dot(d, d)) < 1e-24:
        d = np.array([1.0, 0.0, 0.0])
    point = _support(verts_a, verts_b, d)
    simplex = [point]
    d = -point
    for _ in range(GJK_MAX_ITER):
        if float(np.dot(d, d)) < 1e-24:
            return True  # origin sits on the current simplex
        point = _support(verts_a, verts_b, d)
        if float(np.dot(point, d)) < tol * float(np.linalg.norm(d)):
            return False  # no support past the origin along d: separated
        simplex.append(point)
        if len(simplex) == 2:
            hit, simplex, d = _line_case(simplex, d)
        elif len(simplex) == 3:
            hit, simplex, d = _triangle_case(simplex, d)
        else:
            hit, simplex, d = _tetra_case(simplex, d)
        if hit:
            return True
    return True  # conservative on iteration exhaustion


class WorldObstacles:
    """Printed-strut prisms plus optional environment polytopes."""

    def __init__(self, strut_diameter_mm: float):
        self.strut_diameter_mm = strut_diameter_mm
        self._items: list[tuple] = []  # (key, vertices, aabb_min, aabb_max)

    def __len__(self):
        return len(self._items)

    def clone(self) -> "WorldObstacles":
        dup = WorldObstacles(self.strut_diameter_mm)
        dup._items = list(self._items)
        return dup

    def add_strut(self, edge, p_a, p_b):
        verts = strut_prism(p_a, p_b, self.strut_diameter_mm)
        self._items.append((("strut",) + tuple(sorted(edge)), verts,
                            verts.min(axis=0), verts.max(axis=0)))

    def add_polytope(self, name: str, vertices):
        verts = np.asarray(vertices, dtype=float)
        self._items.append((("env", name), verts,
                            verts.min(axis=0), verts.max(axis=0)))

    def strut_keys(self):
        return [key for key, *_ in self._items if key[0] == "strut"]


def exclusion_for_move(a: int, b: int, adjacency) -> frozenset:
    """Obstacle keys that are contact, not collision, for the move a->b:
    the strut being printed and every strut sharing one of its endpoints."""
    keys = {("strut",) + tuple(sorted((a, b)))}
    for v in (a, b):
        for u in adjacency[v]:
            keys.add(("strut",) + tuple(sorted((v, u))))
    return frozenset(keys)


def intersects(world: WorldObstacles, volume, exclude=frozenset()) -> bool:
    volume = np.asarray(volume, dtype=float)
    vmin = volume.min(axis=0) - PENETRATION_TOL
    vmax = volume.max(axis=0) + PENETRATION_TOL
    for key, verts, amin, amax in world._items:
        if key in exclude:
            continue
        if np.any(amin > vmax) or np.any(amax < vmin):
            continue
        if gjk_intersects(verts, volume):
            return True
    return False


def hemisphere_directions(count: int = ORIENTATION_SAMPLES) -> np.ndarray:
    """Deterministic golden-angle spiral on the upper hemisphere."""
    i = np.arange(count)
    z = (i + 0.5) / count
    r = np.sqrt(1.0 - z * z)
    phi = math.pi * (3.0 - math.sqrt(5.0)) * i
    return np.stack([r * np.cos(phi), r * np.sin(phi), z], axis=1)


def min_rotation_orientation(world: WorldObstacles, v_a, v_b, q_a,
                             head: HeadShape, exclude=frozenset(),
                             samples: int = ORIENTATION_SAMPLES):
    """First collision-free direction by increasing angle from q_a, or None.

    q_a itself is the zero-angle candidate, so an already-free orientation is
    returned unchanged.
    """
    q_a = unit_orientation(q_a)
    dirs = hemisphere_directions(samples)
    angles = np.arccos(np.clip(dirs @ q_a, -1.0, 1.0))
    order = np.argsort(angles, kind="stable")
    candidates = [q_a] + [dirs[k] for k in order]
    for q in candidates:
        vol = swept_volume(v_a, v_b, q, head)
        if not intersects(world, vol, exclude):
            return unit_orientation(q)
    return None


def collision_reward(world: WorldObstacles, v_a, v_b, q_a, head: HeadShape,
                     mode: str = FIXED, exclude=frozenset(),
                     already_collided: bool = False):
    """Collision term C and the orientation the head ends up with.

    Once an earlier move of the rollout collided the branch is doomed, so the
    penalty is returned immediately without further geometric tests.
    """
    if mode not in (FIXED, REORIENT):
        raise ArgumentError(f"unknown collision mode {mode!r}")
    q_a = unit_orientation(q_a)
    if already_collided:
        return COLLISION_PENALTY, q_a
    if mode == FIXED:
        vol = swept_volume(v_a, v_b, q_a, head)
        free = not intersects(world, vol, exclude)
        return (0.0 if free else COLLISION_PENALTY), q_a
    q_b = min_rotation_orientation(world, v_a, v_b, q_a, head, exclude=exclude)
    if q_b is None:
        return COLLISION_PENALTY, q_a
    return -angle_between(q_a, q_b), q_b

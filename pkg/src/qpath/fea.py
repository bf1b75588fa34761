"""Linear-elastic 3D frame analysis of partially printed wire structures.

Struts are Euler-Bernoulli beam elements with a circular cross-section
(axial, two bending planes, torsion; 6 DOFs per node). Gravity enters as
lumped nodal loads, half of each strut's weight per endpoint; grounded nodes
are clamped in all 6 DOFs. Internally forces are newtons and lengths stay in
millimeters, so Young's modulus converts to N/mm^2 and displacements come out
in millimeters directly.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
import scipy.sparse as sp
import scipy.sparse.linalg as spla

from .errors import ArgumentError, StructuralError
from .graph import canonical_edge

GRAVITY_M_S2 = 9.81
RESIDUAL_TOL = 1e-8


@dataclass(frozen=True)
class Material:
    youngs_modulus_pa: float
    poisson_ratio: float
    density_kg_m3: float
    strut_diameter_mm: float

    def __post_init__(self):
        if self.youngs_modulus_pa <= 0.0:
            raise ArgumentError("Young's modulus must be positive")
        if not (0.0 < self.poisson_ratio < 0.5):
            raise ArgumentError("Poisson ratio must lie in (0, 0.5)")
        if self.density_kg_m3 <= 0.0:
            raise ArgumentError("density must be positive")
        if self.strut_diameter_mm <= 0.0:
            raise ArgumentError("strut diameter must be positive")

    @property
    def e_mpa(self) -> float:
        return self.youngs_modulus_pa * 1e-6

    @property
    def g_mpa(self) -> float:
        return self.e_mpa / (2.0 * (1.0 + self.poisson_ratio))

    @property
    def area_mm2(self) -> float:
        return math.pi * self.strut_diameter_mm ** 2 / 4.0

    @property
    def i_mm4(self) -> float:
        return math.pi * self.strut_diameter_mm ** 4 / 64.0

    @property
    def j_mm4(self) -> float:
        return math.pi * self.strut_diameter_mm ** 4 / 32.0


# ABS-like defaults from the wire-printing setup; density is not specified
# there, 1100 kg/m^3 is typical for ABS filament.
DEFAULT_MATERIAL = Material(youngs_modulus_pa=3.84e9, poisson_ratio=0.35,
                            density_kg_m3=1100.0, strut_diameter_mm=1.0)


@dataclass
class FrameModel:
    """The currently printed struts plus supports and optional extra loads."""

    positions: np.ndarray
    grounded: frozenset
    material: Material = DEFAULT_MATERIAL
    struts: list = field(default_factory=list)
    point_loads_n: dict = field(default_factory=dict)
    gravity_m_s2: float = GRAVITY_M_S2
    # u_max memo keyed by the frozen strut set; shared between clones.
    cache: dict = field(default_factory=dict)

    def __post_init__(self):
        self.positions = np.asarray(self.positions, dtype=float)
        self.grounded = frozenset(int(v) for v in self.grounded)
        self.struts = [canonical_edge(int(a), int(b)) for a, b in self.struts]

    def clone(self) -> "FrameModel":
        dup = FrameModel(self.positions, self.grounded, self.material,
                         list(self.struts), dict(self.point_loads_n),
                         self.gravity_m_s2, self.cache)
        return dup

    def add_strut(self, a: int, b: int):
        self.struts.append(canonical_edge(a, b))

    def strut_key(self, extra=None) -> frozenset:
        items = set(self.struts)
        if extra is not None:
            items.add(canonical_edge(*extra))
        return frozenset(items)


@dataclass(frozen=True)
class DisplacementField:
    node_ids: np.ndarray
    displacements_mm: np.ndarray  # (len(node_ids), 3)
    u_max_mm: float

    def displacement_of(self, node: int) -> np.ndarray:
        idx = int(np.searchsorted(self.node_ids, node))
        if idx >= len(self.node_ids) or self.node_ids[idx] != node:
            raise ArgumentError(f"node {node} not part of the solved structure")
        return self.displacements_mm[idx]


def _element_stiffness(material: Material, length: float) -> np.ndarray:
    """Local 12x12 stiffness; DOF order (ux, uy, uz, rx, ry, rz) per node."""
    e = material.e_mpa
    g = material.g_mpa
    a = material.area_mm2
    iy = iz = material.i_mm4
    j = material.j_mm4
    l = length
    k = np.zeros((12, 12))

    ax = e * a / l
    k[np.ix_([0, 6], [0, 6])] += np.array([[ax, -ax], [-ax, ax]])
    tor = g * j / l
    k[np.ix_([3, 9], [3, 9])] += np.array([[tor, -tor], [-tor, tor]])

    # Bending in the local x-y plane (deflection uy, rotation rz).
    c = e * iz / l ** 3
    kb = c * np.array([
        [12.0, 6.0 * l, -12.0, 6.0 * l],
        [6.0 * l, 4.0 * l * l, -6.0 * l, 2.0 * l * l],
        [-12.0, -6.0 * l, 12.0, -6.0 * l],
        [6.0 * l, 2.0 * l * l, -6.0 * l, 4.0 * l * l],
    ])
    k[np.ix_([1, 5, 7, 11], [1, 5, 7, 11])] += kb

    # Bending in the local x-z plane (deflection uz, rotation ry); the sign
    # of the rotation couples flips relative to the x-y plane.
    c = e * iy / l ** 3
    kb = c * np.array([
        [12.0, -6.0 * l, -12.0, -6.0 * l],
        [-6.0 * l, 4.0 * l * l, 6.0 * l, 2.0 * l * l],
        [-12.0, 6.0 * l, 12.0, 6.0 * l],
        [-6.0 * l, 2.0 * l * l, 6.0 * l, 4.0 * l * l],
    ])
    k[np.ix_([2, 4, 8, 10], [2, 4, 8, 10])] += kb
    return k


def _element_rotation(p1: np.ndarray, p2: np.ndarray) -> np.ndarray:
    """3x3 direction-cosine matrix; reference axis picked deterministically."""
    axis = p2 - p1
    length = float(np.linalg.norm(axis))
    x = axis / length
    ref = np.array([0.0, 0.0, 1.0])
    if abs(float(np.dot(x, ref))) > 0.999:
        ref = np.array([1.0, 0.0, 0.0])
    y = np.cross(ref, x)
    y /= np.linalg.norm(y)
    z = np.cross(x, y)
    return np.vstack([x, y, z])


def solve_displacement(model: FrameModel, extra_strut=None) -> DisplacementField:
    """Assemble, clamp grounded DOFs and solve; returns nodal displacements."""
    struts = list(model.struts)
    if extra_strut is not None:
        struts.append(canonical_edge(*extra_strut))
    if not struts:
        return DisplacementField(np.zeros(0, dtype=np.int64),
                                 np.zeros((0, 3)), 0.0)

    nodes = sorted({v for s in struts for v in s})
    node_pos = {v: i for i, v in enumerate(nodes)}
    _check_supported(struts, nodes, model.grounded)

    mat = model.material
    ndof = 6 * len(nodes)
    rows, cols, vals = [], [], []
    f = np.zeros(ndof)

    for a, b in struts:
        pa = model.positions[a]
        pb = model.positions[b]
        length = float(np.linalg.norm(pb - pa))
        if length <= 0.0:
            raise ArgumentError(f"zero-length strut ({a}, {b})")
        r = _element_rotation(pa, pb)
        t = np.zeros((12, 12))
        for blk in range(4):
            t[3 * blk:3 * blk + 3, 3 * blk:3 * blk + 3] = r
        ke = t.T @ _element_stiffness(mat, length) @ t
        dofs = np.concatenate([6 * node_pos[a] + np.arange(6),
                               6 * node_pos[b] + np.arange(6)])
        rows.extend(np.repeat(dofs, 12))
        cols.extend(np.tile(dofs, 12))
        vals.extend(ke.ravel())

        # Half of the strut's weight to each endpoint, acting along -z.
        volume_m3 = mat.area_mm2 * length * 1e-9
        weight_n = mat.density_kg_m3 * volume_m3 * model.gravity_m_s2
        f[6 * node_pos[a] + 2] -= weight_n / 2.0
        f[6 * node_pos[b] + 2] -= weight_n / 2.0

    for node, load in model.point_loads_n.items():
        if node in node_pos:
            f[6 * node_pos[node]:6 * node_pos[node] + 3] += np.asarray(load, dtype=float)

    k = sp.coo_matrix((vals, (rows, cols)), shape=(ndof, ndof)).tocsr()
    free = np.array([i for i, v in enumerate(nodes) if v not in model.grounded])
    disp = np.zeros((len(nodes), 3))
    if free.size:
        free_dofs = (6 * free[:, None] + np.arange(6)[None, :]).ravel()
        kff = k[np.ix_(free_dofs, free_dofs)].tocsc()
        ff = f[free_dofs]
        u = spla.spsolve(kff, ff)
        if not np.all(np.isfinite(u)):
            raise StructuralError("singular stiffness system")
        fnorm = float(np.linalg.norm(ff))
        if fnorm > 0.0:
            residual = float(np.linalg.norm(kff @ u - ff)) / fnorm
            if residual > RESIDUAL_TOL:
                raise StructuralError(
                    f"solver residual {residual:.3e} exceeds {RESIDUAL_TOL:.0e}")
        u = u.reshape(len(free), 6)
        disp[free] = u[:, :3]

    u_max = float(np.linalg.norm(disp, axis=1).max()) if len(nodes) else 0.0
    return DisplacementField(np.asarray(nodes, dtype=np.int64), disp, u_max)


def u_max_after(model: FrameModel, strut) -> float:
    """Peak displacement once ``strut`` is added; memoized, non-mutating."""
    key = model.strut_key(strut)
    hit = model.cache.get(key)
    if hit is None:
        hit = solve_displacement(model, extra_strut=strut).u_max_mm
        model.cache[key] = hit
    return hit


def grounded_nodes(positions: np.ndarray, tol_mm: float = 0.5) -> frozenset:
    """Nodes within ``tol_mm`` of the lowest z are treated as supports."""
    positions = np.asarray(positions, dtype=float)
    if positions.size == 0:
        return frozenset()
    z_min = float(positions[:, 2].min())
    return frozenset(int(v) for v in
                     np.flatnonzero(positions[:, 2] <= z_min + tol_mm))


def _check_supported(struts, nodes, grounded):
    """Every strut must reach a grounded node through the printed structure."""
    adj: dict[int, list[int]] = {v: [] for v in nodes}
    for a, b in struts:
        adj[a].append(b)
        adj[b].append(a)
    supported = set(v for v in nodes if v in grounded)
    stack = list(supported)
    while stack:
        v = stack.pop()
        for u in adj[v]:
            if u not in supported:
                supported.add(u)
                stack.append(u)
    floating = [v for v in nodes if v not in supported]
    if floating:
        raise StructuralError("floating substructure", nodes=floating)

"""Deterministic generators for the bundled test models.

These are the desk-scale graphs the test suite and the example assets are
built from: triangulated and honeycomb grids for fiber printing, a braced
frame tower for wire printing, and pixel grids for metal printing.
"""

from __future__ import annotations

import math

import numpy as np

from .graph import Graph


def triangular_grid(rows: int, cols: int, spacing: float = 10.0) -> Graph:
    """Planar triangulated grid (valence 6 in the interior), z = 0."""
    index = {}
    positions = []
    h = spacing * math.sqrt(3.0) / 2.0
    for r in range(rows):
        for c in range(cols):
            index[(r, c)] = len(positions)
            x = c * spacing + (r % 2) * spacing / 2.0
            positions.append((x, r * h, 0.0))
    edges = []
    for r in range(rows):
        for c in range(cols):
            v = index[(r, c)]
            if c + 1 < cols:
                edges.append((v, index[(r, c + 1)]))
            if r + 1 < rows:
                edges.append((v, index[(r + 1, c)]))
                other = c - 1 if r % 2 == 0 else c + 1
                if 0 <= other < cols:
                    edges.append((v, index[(r + 1, other)]))
    return Graph(positions, edges)


def honeycomb_grid(rows: int, cols: int, spacing: float = 10.0) -> Graph:
    """Hexagonal cells (valence 3), built from shared cell corners, z = 0."""
    corners = {}
    positions = []
    edges = set()

    def corner(x, y):
        key = (round(x, 6), round(y, 6))
        if key not in corners:
            corners[key] = len(positions)
            positions.append((key[0], key[1], 0.0))
        return corners[key]

    r3 = math.sqrt(3.0)
    for row in range(rows):
        for col in range(cols):
            cx = col * 1.5 * spacing
            cy = row * r3 * spacing + (col % 2) * r3 / 2.0 * spacing
            ring = []
            for k in range(6):
                ang = math.pi / 3.0 * k
                ring.append(corner(cx + spacing * math.cos(ang),
                                   cy + spacing * math.sin(ang)))
            for a, b in zip(ring, ring[1:] + ring[:1]):
                edges.add((min(a, b), max(a, b)))
    return Graph(positions, sorted(edges))


def frame_tower(width: int = 3, depth: int = 3, stories: int = 4,
                spacing: float = 12.0, braced: bool = True) -> Graph:
    """Rectangular frame tower with alternating face bracing, grounded at z=0."""
    index = {}
    positions = []
    for k in range(stories + 1):
        for j in range(depth):
            for i in range(width):
                index[(i, j, k)] = len(positions)
                positions.append((i * spacing, j * spacing, k * spacing))
    edges = []
    for (i, j, k), v in index.items():
        if i + 1 < width:
            edges.append((v, index[(i + 1, j, k)]))
        if j + 1 < depth:
            edges.append((v, index[(i, j + 1, k)]))
        if k + 1 <= stories and (i, j, k + 1) in index:
            edges.append((v, index[(i, j, k + 1)]))
        if braced and k + 1 <= stories:
            # One diagonal per vertical face cell, direction alternating so
            # the bracing pattern is balanced.
            if i + 1 < width and (j == 0 or j == depth - 1):
                if (i + k) % 2 == 0:
                    edges.append((v, index[(i + 1, j, k + 1)]))
                else:
                    edges.append((index[(i + 1, j, k)], index[(i, j, k + 1)]))
            if j + 1 < depth and (i == 0 or i == width - 1):
                if (j + k) % 2 == 0:
                    edges.append((v, index[(i, j + 1, k + 1)]))
                else:
                    edges.append((index[(i, j + 1, k)], index[(i, j, k + 1)]))
    return Graph(positions, edges)


def pixel_grid(width: int, height: int, pitch: float = 1.0) -> Graph:
    """Full rectangular 4-neighbor pixel grid (metal layers)."""
    positions = []
    for r in range(height):
        for c in range(width):
            positions.append(((c + 0.5) * pitch, (height - 1 - r + 0.5) * pitch, 0.0))
    edges = []
    for r in range(height):
        for c in range(width):
            v = r * width + c
            if c + 1 < width:
                edges.append((v, v + 1))
            if r + 1 < height:
                edges.append((v, v + width))
    return Graph(positions, edges)


def zigzag_order(width: int, height: int) -> list[int]:
    """Serpentine node order over :func:`pixel_grid`, row by row."""
    order = []
    for r in range(height):
        cols = range(width) if r % 2 == 0 else range(width - 1, -1, -1)
        order.extend(r * width + c for c in cols)
    return order


def shuffle_node_ids(graph: Graph, seed: int = 0) -> Graph:
    """Relabel nodes with a seeded permutation.

    The generators above assign row-major ids, which carry geometric meaning
    that meshes from real models never have; shuffling restores the
    arbitrary-id situation the encoding has to cope with.
    """
    rng = np.random.default_rng(seed)
    perm = rng.permutation(graph.num_nodes)  # old id -> new id
    inverse = np.argsort(perm)
    positions = graph.positions[inverse]
    edges = [(int(perm[a]), int(perm[b])) for a, b in graph.edges]
    return Graph(positions, edges)


def bundled_mesh() -> Graph:
    """The mesh the scaling, encoding and prior-reuse checks run on."""
    return shuffle_node_ids(triangular_grid(14, 16), seed=7)

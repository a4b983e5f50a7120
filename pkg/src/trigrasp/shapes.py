"""Procedural test objects: boxes, extruded prisms, and icospheres.

The two experiment objects are an L-shaped bar with a square cross-section
and a diamond (rhombic) prism; both have 25 mm between their parallel
grasp faces, which fits a 50 mm parallel gripper with wide margin.
"""
from __future__ import annotations

import numpy as np

from .geometry import TriMesh


def make_box(extents, center=(0.0, 0.0, 0.0)) -> TriMesh:
    """Axis-aligned box with the given full extents (meters)."""
    ex, ey, ez = [0.5 * e for e in extents]
    cx, cy, cz = center
    v = np.array([
        [-ex, -ey, -ez], [ex, -ey, -ez], [ex, ey, -ez], [-ex, ey, -ez],
        [-ex, -ey, ez], [ex, -ey, ez], [ex, ey, ez], [-ex, ey, ez],
    ]) + np.array([cx, cy, cz])
    f = np.array([
        [0, 2, 1], [0, 3, 2],  # -z
        [4, 5, 6], [4, 6, 7],  # +z
        [0, 1, 5], [0, 5, 4],  # -y
        [2, 3, 7], [2, 7, 6],  # +y
        [1, 2, 6], [1, 6, 5],  # +x
        [3, 0, 4], [3, 4, 7],  # -x
    ])
    return TriMesh(v, f)


def extrude_polygon(poly_xy, cap_triangles, thickness: float) -> TriMesh:
    """Watertight prism over a CCW polygon, centered on z = 0.

    cap_triangles index into the polygon vertices and triangulate the cap
    with CCW winding (viewed from +z).
    """
    poly = np.asarray(poly_xy, dtype=float).reshape(-1, 2)
    n = len(poly)
    half = 0.5 * thickness
    bottom = np.column_stack([poly, np.full(n, -half)])
    top = np.column_stack([poly, np.full(n, half)])
    verts = np.vstack([bottom, top])
    faces = []
    for (a, b, c) in cap_triangles:
        faces.append([n + a, n + b, n + c])  # top, +z outward
        faces.append([a, c, b])              # bottom, reversed
    for i in range(n):
        j = (i + 1) % n
        # Side quad (bottom_i, bottom_j, top_j, top_i); CCW polygon makes
        # this winding face outward.
        faces.append([i, j, n + j])
        faces.append([i, n + j, n + i])
    return TriMesh(verts, faces)


def make_l_shape(long_arm: float = 0.125, short_arm: float = 0.100,
                 thickness: float = 0.025) -> TriMesh:
    """L-shaped bar with a square cross-section, centroid at the origin.

    The long arm runs along +x, the short arm along +y, and the bar is
    `thickness` deep along z.
    """
    t = thickness
    poly = np.array([
        [0.0, 0.0],
        [long_arm, 0.0],
        [long_arm, t],
        [t, t],
        [t, short_arm],
        [0.0, short_arm],
    ])
    caps = [(0, 1, 2), (0, 2, 3), (0, 3, 4), (0, 4, 5)]  # fan from vertex 0
    area_long = long_arm * t
    area_short = (short_arm - t) * t
    c_long = np.array([long_arm / 2, t / 2])
    c_short = np.array([t / 2, t + (short_arm - t) / 2])
    centroid = (area_long * c_long + area_short * c_short) / (area_long + area_short)
    return extrude_polygon(poly - centroid, caps, t)


def make_diamond_prism(acute_deg: float = 75.0, across: float = 0.025,
                       length: float = 0.040) -> TriMesh:
    """Prism with a rhombic cross-section, centered at the origin.

    `across` is the distance between each pair of parallel side faces;
    the rhombus has the given acute interior angle. Side-face normals of
    adjacent faces are 180 - acute_deg degrees apart; the end faces are
    normal to the prism axis (z).
    """
    a = np.radians(acute_deg)
    side = across / np.sin(a)
    u1 = np.array([1.0, 0.0])
    u2 = np.array([np.cos(a), np.sin(a)])
    poly = side * np.array([[0.0, 0.0], u1, u1 + u2, u2])
    poly -= poly.mean(axis=0)
    caps = [(0, 1, 2), (0, 2, 3)]
    return extrude_polygon(poly, caps, length)


def make_icosphere(radius: float = 0.020, subdivisions: int = 2) -> TriMesh:
    """Geodesic sphere from a subdivided icosahedron."""
    phi = (1.0 + np.sqrt(5.0)) / 2.0
    v = np.array([
        [-1, phi, 0], [1, phi, 0], [-1, -phi, 0], [1, -phi, 0],
        [0, -1, phi], [0, 1, phi], [0, -1, -phi], [0, 1, -phi],
        [phi, 0, -1], [phi, 0, 1], [-phi, 0, -1], [-phi, 0, 1],
    ], dtype=float)
    v /= np.linalg.norm(v, axis=1)[:, None]
    f = [
        [0, 11, 5], [0, 5, 1], [0, 1, 7], [0, 7, 10], [0, 10, 11],
        [1, 5, 9], [5, 11, 4], [11, 10, 2], [10, 7, 6], [7, 1, 8],
        [3, 9, 4], [3, 4, 2], [3, 2, 6], [3, 6, 8], [3, 8, 9],
        [4, 9, 5], [2, 4, 11], [6, 2, 10], [8, 6, 7], [9, 8, 1],
    ]
    verts = [row for row in v]
    cache = {}

    def midpoint(i, j):
        key = (min(i, j), max(i, j))
        if key not in cache:
            m = verts[i] + verts[j]
            m /= np.linalg.norm(m)
            verts.append(m)
            cache[key] = len(verts) - 1
        return cache[key]

    for _ in range(subdivisions):
        new_f = []
        for (a, b, c) in f:
            ab, bc, ca = midpoint(a, b), midpoint(b, c), midpoint(c, a)
            new_f += [[a, ab, ca], [b, bc, ab], [c, ca, bc], [ab, bc, ca]]
        f = new_f
    return TriMesh(radius * np.asarray(verts), f)


PRESETS = {
    "l-shape": make_l_shape,
    "diamond-prism": make_diamond_prism,
    "box-25": lambda: make_box((0.025, 0.025, 0.025)),
}


def resolve_mesh(spec: str, scale: float = 0.001) -> TriMesh:
    """Return a preset mesh by name, or load a mesh file at `spec`."""
    if spec in PRESETS:
        return PRESETS[spec]()
    from .meshio import load_mesh
    return load_mesh(spec, scale=scale)

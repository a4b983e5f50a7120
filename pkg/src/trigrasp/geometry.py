"""Rigid-body transforms, rotation exp/log, and triangle-mesh queries.

All types are immutable after construction and all operations are pure
functions, so everything in this module is safe to share across threads.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import AngleNearPi

# Hits closer than this are the ray's own supporting face.
RAY_MIN_HIT_DIST = 1e-6

_POSE_TOL = 1e-9


def skew(w):
    """Cross-product matrix [w]x such that skew(w) @ v == cross(w, v)."""
    wx, wy, wz = w
    return np.array([[0.0, -wz, wy], [wz, 0.0, -wx], [-wy, wx, 0.0]])


def exp_so3(w):
    """Rodrigues rotation for a rotation vector w (radians times unit axis)."""
    w = np.asarray(w, dtype=float)
    theta = float(np.linalg.norm(w))
    K = skew(w)
    if theta < 1e-8:
        # Second-order series; truncation error O(theta^3) is below 1e-24 here.
        return np.eye(3) + K + 0.5 * (K @ K)
    a = np.sin(theta) / theta
    b = (1.0 - np.cos(theta)) / (theta * theta)
    return np.eye(3) + a * K + b * (K @ K)


def log_so3(R):
    """Rotation vector of a rotation matrix.

    Raises AngleNearPi when the angle is at or too close to pi, where the
    axis is not recoverable from the antisymmetric part.
    """
    R = np.asarray(R, dtype=float)
    tr = float(np.trace(R))
    if tr <= -1.0 + 1e-9:
        raise AngleNearPi(f"rotation angle too close to pi (trace={tr:.12g})")
    c = min(1.0, max(-1.0, 0.5 * (tr - 1.0)))
    theta = float(np.arccos(c))
    v = np.array([R[2, 1] - R[1, 2], R[0, 2] - R[2, 0], R[1, 0] - R[0, 1]])
    if theta < 1e-7:
        return 0.5 * v  # v = 2 sin(theta) axis, and sin(theta) ~ theta
    return (theta / (2.0 * np.sin(theta))) * v


@dataclass(frozen=True, eq=False)
class Pose:
    """Rigid transform: 3x3 rotation matrix R and translation p (meters)."""

    R: np.ndarray
    p: np.ndarray

    def __post_init__(self):
        R = np.array(self.R, dtype=float).reshape(3, 3)
        p = np.array(self.p, dtype=float).reshape(3)
        err = np.max(np.abs(R.T @ R - np.eye(3)))
        if err > _POSE_TOL:
            raise ValueError(f"rotation not orthonormal (max residual {err:.3e})")
        det = float(np.linalg.det(R))
        if abs(det - 1.0) > _POSE_TOL:
            raise ValueError(f"rotation determinant {det:.12f} != +1")
        R.setflags(write=False)
        p.setflags(write=False)
        object.__setattr__(self, "R", R)
        object.__setattr__(self, "p", p)

    @staticmethod
    def identity() -> "Pose":
        return Pose(np.eye(3), np.zeros(3))

    def to_flat(self) -> list:
        """12 floats: row-major R followed by p."""
        return [float(x) for x in self.R.reshape(-1)] + [float(x) for x in self.p]

    @staticmethod
    def from_flat(values) -> "Pose":
        v = np.asarray(values, dtype=float).reshape(12)
        return Pose(v[:9].reshape(3, 3), v[9:])


def compose(a: Pose, b: Pose) -> Pose:
    """a then b: the transform mapping b-frame coordinates through a."""
    return Pose(a.R @ b.R, a.R @ b.p + a.p)


def invert(a: Pose) -> Pose:
    return Pose(a.R.T, -(a.R.T @ a.p))


def relative(a: Pose, b: Pose) -> Pose:
    """Pose of b expressed in frame a: compose(invert(a), b)."""
    return compose(invert(a), b)


def transform_point(pose: Pose, x) -> np.ndarray:
    return pose.R @ np.asarray(x, dtype=float) + pose.p


def transform_points(pose: Pose, xs) -> np.ndarray:
    xs = np.asarray(xs, dtype=float).reshape(-1, 3)
    return xs @ pose.R.T + pose.p


def rotation_angle_between(Ra, Rb) -> float:
    """Geodesic angle between two rotations (radians)."""
    return float(np.linalg.norm(log_so3(np.asarray(Ra) @ np.asarray(Rb).T)))


@dataclass(frozen=True, eq=False)
class Ray:
    origin: np.ndarray
    direction: np.ndarray

    def __post_init__(self):
        o = np.array(self.origin, dtype=float).reshape(3)
        d = np.array(self.direction, dtype=float).reshape(3)
        n = float(np.linalg.norm(d))
        if abs(n - 1.0) > 1e-9:
            raise ValueError(f"ray direction norm {n:.12f} != 1")
        o.setflags(write=False)
        d.setflags(write=False)
        object.__setattr__(self, "origin", o)
        object.__setattr__(self, "direction", d)


@dataclass(frozen=True, eq=False)
class RayHit:
    point: np.ndarray
    normal: np.ndarray
    distance: float
    face_index: int


class TriMesh:
    """Immutable triangle mesh with unit face normals from winding order.

    Vertices are in meters. Precomputes edges, normals and areas once;
    degenerate (zero-area) triangles are rejected.
    """

    def __init__(self, vertices, faces):
        v = np.array(vertices, dtype=float).reshape(-1, 3)
        f = np.array(faces, dtype=np.int64).reshape(-1, 3)
        if f.size and (f.min() < 0 or f.max() >= len(v)):
            raise ValueError("face index out of range")
        tri = v[f]
        e1 = tri[:, 1] - tri[:, 0]
        e2 = tri[:, 2] - tri[:, 0]
        cr = np.cross(e1, e2)
        norms = np.linalg.norm(cr, axis=1)
        if np.any(norms < 1e-14):
            raise ValueError("mesh contains degenerate triangles")
        for arr in (v, f):
            arr.setflags(write=False)
        self.vertices = v
        self.faces = f
        self._tri = tri
        self._e1 = e1
        self._e2 = e2
        self.face_normals = cr / norms[:, None]
        self.face_areas = 0.5 * norms
        self.face_normals.setflags(write=False)
        self._watertight = None
        self._bvh = None

    @property
    def n_faces(self) -> int:
        return len(self.faces)

    @property
    def watertight(self) -> bool:
        """True when every undirected edge is shared by exactly two faces."""
        if self._watertight is None:
            directed = {}
            ok = True
            for (a, b, c) in self.faces:
                for i, j in ((a, b), (b, c), (c, a)):
                    key = (int(i), int(j))
                    if key in directed:
                        ok = False  # duplicated directed edge: bad winding
                        break
                    directed[key] = True
                if not ok:
                    break
            if ok:
                for (i, j) in directed:
                    if (j, i) not in directed:
                        ok = False
                        break
            self._watertight = ok
        return self._watertight

    def aabb(self):
        return self.vertices.min(axis=0), self.vertices.max(axis=0)

    def transformed(self, pose: Pose) -> "TriMesh":
        return TriMesh(transform_points(pose, self.vertices), self.faces)

    def _bvh_nodes(self):
        if self._bvh is None:
            self._bvh = _build_bvh(self._tri)
        return self._bvh


def _ray_tri_batch(origins, direction, tri, e1, e2, min_dist):
    """Moller-Trumbore for N origins sharing one direction against M triangles.

    Returns (t, idx) arrays of shape (N,): distance of nearest hit (inf on
    miss) and the face index (-1 on miss).
    """
    origins = np.asarray(origins, dtype=float).reshape(-1, 3)
    d = np.asarray(direction, dtype=float)
    pvec = np.cross(d, e2)  # (M,3)
    det = np.einsum("ij,ij->i", e1, pvec)  # (M,)
    ok = np.abs(det) > 1e-14
    inv_det = np.where(ok, 1.0 / np.where(ok, det, 1.0), 0.0)
    tvec = origins[:, None, :] - tri[None, :, 0, :]  # (N,M,3)
    u = np.einsum("nmj,mj->nm", tvec, pvec) * inv_det
    qvec = np.cross(tvec, e1[None, :, :])  # (N,M,3)
    vbar = np.einsum("j,nmj->nm", d, qvec) * inv_det
    t = np.einsum("mj,nmj->nm", e2, qvec) * inv_det
    eps = 1e-12
    hit = ok & (u >= -eps) & (vbar >= -eps) & (u + vbar <= 1.0 + eps) & (t > min_dist)
    t = np.where(hit, t, np.inf)
    idx = np.argmin(t, axis=1)
    best = t[np.arange(len(origins)), idx]
    idx = np.where(np.isfinite(best), idx, -1)
    return best, idx


def _build_bvh(tri):
    """Median-split AABB tree, stored as flat node list."""
    lo = tri.min(axis=1)
    hi = tri.max(axis=1)
    nodes = []

    def build(indices):
        node = {
            "lo": lo[indices].min(axis=0),
            "hi": hi[indices].max(axis=0),
            "left": -1,
            "right": -1,
            "tris": None,
        }
        nodes.append(node)
        me = len(nodes) - 1
        if len(indices) <= 16:
            node["tris"] = indices
            return me
        centers = 0.5 * (lo[indices] + hi[indices])
        axis = int(np.argmax(node["hi"] - node["lo"]))
        order = np.argsort(centers[:, axis], kind="stable")
        half = len(indices) // 2
        node["left"] = build(indices[order[:half]])
        node["right"] = build(indices[order[half:]])
        return me

    build(np.arange(len(tri)))
    return nodes


def _ray_aabb(origin, inv_dir, lo, hi, t_best):
    t1 = (lo - origin) * inv_dir
    t2 = (hi - origin) * inv_dir
    tmin = np.minimum(t1, t2).max()
    tmax = np.maximum(t1, t2).min()
    return tmax >= max(tmin, 0.0) and tmin < t_best


def ray_mesh_intersect(ray: Ray, mesh: TriMesh, min_dist: float = RAY_MIN_HIT_DIST):
    """Nearest ray/mesh intersection beyond min_dist, or None.

    Small meshes are tested brute-force (vectorized over all triangles);
    larger ones go through the mesh's AABB tree.
    """
    if mesh.n_faces <= 256:
        t, idx = _ray_tri_batch(ray.origin[None, :], ray.direction,
                                mesh._tri, mesh._e1, mesh._e2, min_dist)
        t, idx = float(t[0]), int(idx[0])
    else:
        t, idx = _ray_mesh_bvh(ray, mesh, min_dist)
    if idx < 0:
        return None
    return RayHit(point=ray.origin + t * ray.direction,
                  normal=mesh.face_normals[idx].copy(),
                  distance=t, face_index=idx)


def _ray_mesh_bvh(ray, mesh, min_dist):
    nodes = mesh._bvh_nodes()
    d = ray.direction
    with np.errstate(divide="ignore"):
        inv_dir = np.where(d != 0.0, 1.0 / np.where(d != 0.0, d, 1.0), np.inf)
    best_t, best_idx = np.inf, -1
    stack = [0]
    while stack:
        node = nodes[stack.pop()]
        if not _ray_aabb(ray.origin, inv_dir, node["lo"], node["hi"], best_t):
            continue
        if node["tris"] is not None:
            ids = node["tris"]
            t, k = _ray_tri_batch(ray.origin[None, :], d, mesh._tri[ids],
                                  mesh._e1[ids], mesh._e2[ids], min_dist)
            if k[0] >= 0 and t[0] < best_t:
                best_t = float(t[0])
                best_idx = int(ids[k[0]])
        else:
            stack.append(node["left"])
            stack.append(node["right"])
    return best_t, best_idx


def ray_mesh_intersect_batch(origins, direction, mesh: TriMesh,
                             min_dist: float = RAY_MIN_HIT_DIST):
    """Vectorized nearest-hit query for many origins sharing one direction.

    Returns (distances, face_indices); misses are (inf, -1).
    """
    return _ray_tri_batch(origins, direction, mesh._tri, mesh._e1, mesh._e2,
                          min_dist)


def sample_surface_point(mesh: TriMesh, cumulative_areas, u):
    """Area-weighted surface sample from three uniform variates u in [0,1)."""
    total = cumulative_areas[-1]
    face = int(np.searchsorted(cumulative_areas, u[0] * total, side="right"))
    face = min(face, mesh.n_faces - 1)
    r1, r2 = u[1], u[2]
    if r1 + r2 > 1.0:  # fold the unit square onto the triangle
        r1, r2 = 1.0 - r1, 1.0 - r2
    a, b, c = mesh._tri[face]
    point = a + r1 * (b - a) + r2 * (c - a)
    return point, face


# ---------------------------------------------------------------------------
# Separating-axis overlap tests used by the collision checks.
# ---------------------------------------------------------------------------

def box_triangles_overlap(center, half_extents, box_R, mesh: TriMesh):
    """True where a triangle of the mesh overlaps the oriented box.

    center/box_R are in mesh coordinates; returns a boolean array (n_faces,).
    """
    c = np.asarray(center, dtype=float)
    h = np.asarray(half_extents, dtype=float)
    R = np.asarray(box_R, dtype=float)
    # Triangle vertices in the box frame.
    v = (mesh._tri - c) @ R  # (M,3,3)
    e = np.stack([v[:, 1] - v[:, 0], v[:, 2] - v[:, 1], v[:, 0] - v[:, 2]], axis=1)

    alive = np.ones(mesh.n_faces, dtype=bool)
    # Box face axes.
    for ax in range(3):
        lo = v[:, :, ax].min(axis=1)
        hi = v[:, :, ax].max(axis=1)
        alive &= (hi >= -h[ax]) & (lo <= h[ax])
    # Triangle plane.
    n = np.cross(e[:, 0], e[:, 1])
    dist = np.abs(np.einsum("mj,mj->m", n, v[:, 0]))
    radius = np.einsum("mj,j->m", np.abs(n), h)
    alive &= dist <= radius + 1e-15
    # Nine edge cross products a = unit_axis x edge.
    for ax in range(3):
        for j in range(3):
            a = np.zeros((mesh.n_faces, 3))
            # cross(e_ax, edge_j) in box coordinates
            a[:, (ax + 1) % 3] = -e[:, j, (ax + 2) % 3]
            a[:, (ax + 2) % 3] = e[:, j, (ax + 1) % 3]
            proj = np.einsum("mij,mj->mi", v, a)
            lo = proj.min(axis=1)
            hi = proj.max(axis=1)
            radius = np.einsum("mj,j->m", np.abs(a), h)
            alive &= (hi >= -radius - 1e-15) & (lo <= radius + 1e-15)
    return alive


def obb_overlap(c1, h1, R1, c2, h2, R2) -> bool:
    """Oriented-box overlap via the 15-axis separating-axis test."""
    c1 = np.asarray(c1, float); h1 = np.asarray(h1, float); R1 = np.asarray(R1, float)
    c2 = np.asarray(c2, float); h2 = np.asarray(h2, float); R2 = np.asarray(R2, float)
    axes = [R1[:, i] for i in range(3)] + [R2[:, i] for i in range(3)]
    for i in range(3):
        for j in range(3):
            cr = np.cross(R1[:, i], R2[:, j])
            n = np.linalg.norm(cr)
            if n > 1e-12:
                axes.append(cr / n)
    d = c2 - c1
    for a in axes:
        r1 = np.sum(h1 * np.abs(a @ R1))
        r2 = np.sum(h2 * np.abs(a @ R2))
        if abs(a @ d) > r1 + r2 + 1e-15:
            return False
    return True

import numpy as np
import pytest

from trigrasp.errors import AngleNearPi
from trigrasp.geometry import (Pose, Ray, compose, exp_so3, invert, log_so3,
                               ray_mesh_intersect, ray_mesh_intersect_batch,
                               relative, skew)
from trigrasp.shapes import make_box, make_icosphere

from conftest import random_pose


def series_exp(w, terms=30):
    """Independent oracle: truncated matrix-exponential power series."""
    K = skew(np.asarray(w, dtype=float))
    out = np.eye(3)
    term = np.eye(3)
    for n in range(1, terms):
        term = term @ K / n
        out = out + term
    return out


class TestExpLog:
    def test_zero_rotation_is_identity(self):
        assert np.allclose(exp_so3([0.0, 0.0, 0.0]), np.eye(3))

    def test_quarter_turn_about_z(self):
        R = exp_so3([0.0, 0.0, np.pi / 2])
        assert np.allclose(R @ [1.0, 0.0, 0.0], [0.0, 1.0, 0.0], atol=1e-12)

    def test_matches_series_oracle(self):
        rng = np.random.default_rng(0)
        for _ in range(1000):
            w = rng.uniform(-1.0, 1.0, 3)
            w *= rng.uniform(0.0, 3.0) / max(np.linalg.norm(w), 1e-12)
            assert np.max(np.abs(exp_so3(w) - series_exp(w))) < 1e-10

    def test_log_identity(self):
        assert np.allclose(log_so3(np.eye(3)), np.zeros(3))

    def test_log_small_rotation_round_trip(self):
        w = np.array([0.1, 0.0, 0.0])
        assert np.linalg.norm(log_so3(exp_so3(w)) - w) < 1e-10

    def test_round_trip_many(self):
        rng = np.random.default_rng(1)
        for _ in range(10000):
            w = rng.normal(size=3)
            w *= rng.uniform(0.0, np.pi - 0.1) / np.linalg.norm(w)
            R = exp_so3(w)
            assert np.linalg.norm(log_so3(R) - w) < 1e-9
            assert np.max(np.abs(exp_so3(log_so3(R)) - R)) < 1e-9

    def test_angle_near_pi_rejected(self):
        with pytest.raises(AngleNearPi):
            log_so3(exp_so3([np.pi, 0.0, 0.0]))


class TestPoseOps:
    def test_relative_of_self_is_identity(self):
        rng = np.random.default_rng(2)
        x = random_pose(rng)
        rel = relative(x, x)
        assert np.allclose(rel.R, np.eye(3), atol=1e-12)
        assert np.allclose(rel.p, 0.0, atol=1e-12)

    def test_pure_translations(self):
        a = Pose(np.eye(3), [1.0, 0.0, 0.0])
        b = Pose(np.eye(3), [1.0, 1.0, 0.0])
        assert np.allclose(relative(a, b).p, [0.0, 1.0, 0.0])

    def test_compose_relative_identity(self):
        rng = np.random.default_rng(3)
        for _ in range(200):
            a, b = random_pose(rng), random_pose(rng)
            c = compose(a, relative(a, b))
            assert np.max(np.abs(c.R - b.R)) < 1e-10
            assert np.max(np.abs(c.p - b.p)) < 1e-10

    def test_compose_with_inverse(self):
        rng = np.random.default_rng(4)
        a = random_pose(rng)
        e = compose(a, invert(a))
        assert np.allclose(e.R, np.eye(3), atol=1e-12)
        assert np.allclose(e.p, 0.0, atol=1e-12)

    def test_group_closure_after_many_compositions(self):
        rng = np.random.default_rng(5)
        x = Pose.identity()
        for _ in range(1000):
            x = compose(x, random_pose(rng))
        assert np.max(np.abs(x.R.T @ x.R - np.eye(3))) < 1e-8
        assert abs(np.linalg.det(x.R) - 1.0) < 1e-8

    def test_invalid_rotation_rejected(self):
        with pytest.raises(ValueError):
            Pose(np.eye(3) * 1.001, np.zeros(3))
        with pytest.raises(ValueError):
            Pose(-np.eye(3), np.zeros(3))  # det -1

    def test_flat_round_trip(self):
        rng = np.random.default_rng(6)
        x = random_pose(rng)
        y = Pose.from_flat(x.to_flat())
        assert np.allclose(x.R, y.R) and np.allclose(x.p, y.p)

    def test_pose_arrays_immutable(self):
        x = Pose.identity()
        with pytest.raises(ValueError):
            x.p[0] = 1.0


class TestRayMesh:
    def test_hit_top_of_unit_cube(self, unit_cube):
        hit = ray_mesh_intersect(Ray([0, 0, 2.0], [0, 0, -1.0]), unit_cube)
        assert hit is not None
        assert np.allclose(hit.point, [0, 0, 0.5], atol=1e-12)
        assert np.allclose(hit.normal, [0, 0, 1.0])
        assert abs(hit.distance - 1.5) < 1e-12

    def test_miss(self, unit_cube):
        assert ray_mesh_intersect(Ray([5, 5, 5.0], [0, 0, 1.0]), unit_cube) is None

    def test_opposite_face_from_surface_point(self, unit_cube):
        hit = ray_mesh_intersect(Ray([0.1, 0.2, 0.5], [0, 0, -1.0]), unit_cube)
        assert hit is not None
        assert abs(hit.distance - 1.0) < 1e-12
        assert np.allclose(hit.normal, [0, 0, -1.0])

    def test_batch_matches_single(self, unit_cube):
        rng = np.random.default_rng(7)
        origins = rng.uniform(-0.4, 0.4, (20, 3))
        origins[:, 2] = 2.0
        d = np.array([0.0, 0.0, -1.0])
        t, idx = ray_mesh_intersect_batch(origins, d, unit_cube)
        for k in range(len(origins)):
            hit = ray_mesh_intersect(Ray(origins[k], d), unit_cube)
            assert abs(t[k] - hit.distance) < 1e-12
            assert idx[k] == hit.face_index

    def test_bvh_matches_brute_force(self):
        # 1280 faces: the single-ray path goes through the AABB tree.
        sphere = make_icosphere(radius=0.5, subdivisions=3)
        assert sphere.n_faces > 256
        rng = np.random.default_rng(8)
        for _ in range(100):
            origin = rng.uniform(-1.5, 1.5, 3)
            d = rng.normal(size=3)
            d /= np.linalg.norm(d)
            hit = ray_mesh_intersect(Ray(origin, d), sphere)
            t, idx = ray_mesh_intersect_batch(origin[None, :], d, sphere)
            if hit is None:
                assert idx[0] == -1
            else:
                assert abs(hit.distance - t[0]) < 1e-12

    def test_ray_reciprocity_on_convex_mesh(self):
        sphere = make_icosphere(radius=0.02, subdivisions=2)
        rng = np.random.default_rng(9)
        areas = np.cumsum(sphere.face_areas)
        from trigrasp.geometry import sample_surface_point
        for _ in range(200):
            point, face = sample_surface_point(sphere, areas, rng.random(3))
            n = sphere.face_normals[face]
            hit = ray_mesh_intersect(Ray(point, -n), sphere)
            assert hit is not None
            assert float(hit.normal @ n) < 0.0


def _segment_hits_triangle(p0, p1, tri):
    """Independent oracle: segment/triangle intersection via plane clip."""
    a, b, c = tri
    n = np.cross(b - a, c - a)
    d = p1 - p0
    denom = float(n @ d)
    if abs(denom) < 1e-15:
        return False
    t = float(n @ (a - p0)) / denom
    if t < -1e-12 or t > 1.0 + 1e-12:
        return False
    x = p0 + t * d
    # barycentric containment
    v0, v1, v2 = b - a, c - a, x - a
    d00, d01, d11 = v0 @ v0, v0 @ v1, v1 @ v1
    d20, d21 = v2 @ v0, v2 @ v1
    det = d00 * d11 - d01 * d01
    u = (d11 * d20 - d01 * d21) / det
    v = (d00 * d21 - d01 * d20) / det
    return u >= -1e-9 and v >= -1e-9 and u + v <= 1.0 + 1e-9


def _segment_hits_unit_box(p0, p1, half):
    """Independent oracle: segment vs axis-aligned box (slab clipping)."""
    d = p1 - p0
    t0, t1 = 0.0, 1.0
    for ax in range(3):
        if abs(d[ax]) < 1e-15:
            if abs(p0[ax]) > half[ax]:
                return False
            continue
        ta = (-half[ax] - p0[ax]) / d[ax]
        tb = (half[ax] - p0[ax]) / d[ax]
        if ta > tb:
            ta, tb = tb, ta
        t0, t1 = max(t0, ta), min(t1, tb)
        if t0 > t1 + 1e-12:
            return False
    return True


_BOX_EDGES = [(0, 1), (1, 2), (2, 3), (3, 0), (4, 5), (5, 6), (6, 7), (7, 4),
              (0, 4), (1, 5), (2, 6), (3, 7)]


def _box_corners(half):
    sx, sy, sz = half
    return np.array([[-sx, -sy, -sz], [sx, -sy, -sz], [sx, sy, -sz],
                     [-sx, sy, -sz], [-sx, -sy, sz], [sx, -sy, sz],
                     [sx, sy, sz], [-sx, sy, sz]])


def _box_triangle_oracle(half, box_R, box_c, tri):
    """Convex intersection oracle: vertex containment plus edge crossings."""
    local = (tri - box_c) @ box_R
    if np.all(np.max(np.abs(local), axis=1) <= half + 1e-12, axis=0).any():
        return True  # a triangle vertex inside the box
    for i in range(3):
        if _segment_hits_unit_box(local[i], local[(i + 1) % 3], half):
            return True
    corners = _box_corners(half)
    for (i, j) in _BOX_EDGES:
        if _segment_hits_triangle(corners[i], corners[j], local):
            return True
    return False


class TestOverlapOracles:
    def test_box_triangle_matches_segment_oracle(self):
        from trigrasp.geometry import TriMesh, box_triangles_overlap
        rng = np.random.default_rng(20)
        hits = 0
        for _ in range(400):
            half = rng.uniform(0.2, 1.0, 3)
            Rb = exp_so3(rng.uniform(-2, 2, 3))
            c = rng.uniform(-1.5, 1.5, 3)
            tri = rng.uniform(-2.0, 2.0, (3, 3))
            mesh = TriMesh(tri, [[0, 1, 2]])
            got = bool(box_triangles_overlap(c, half, Rb, mesh)[0])
            want = _box_triangle_oracle(half, Rb, c, tri)
            assert got == want
            hits += got
        assert 0 < hits < 400  # both outcomes exercised

    def test_obb_overlap_matches_triangle_soup(self):
        from trigrasp.geometry import box_triangles_overlap, obb_overlap
        from trigrasp.shapes import make_box
        rng = np.random.default_rng(21)
        hits = 0
        for _ in range(300):
            h1 = rng.uniform(0.3, 0.8, 3)
            h2 = rng.uniform(0.3, 0.8, 3)
            R1 = exp_so3(rng.uniform(-2, 2, 3))
            R2 = exp_so3(rng.uniform(-2, 2, 3))
            c1 = rng.uniform(-1, 1, 3)
            c2 = rng.uniform(-1, 1, 3)
            got = obb_overlap(c1, h1, R1, c2, h2, R2)
            # Oracle: box 1 against box 2's triangulated surface, plus
            # mutual center containment (covers nested boxes).
            soup = make_box(2.0 * h2).transformed(Pose(R2, c2))
            tri_hit = bool(box_triangles_overlap(c1, h1, R1, soup).any())
            inside = (np.all(np.abs(R2.T @ (c1 - c2)) <= h2) or
                      np.all(np.abs(R1.T @ (c2 - c1)) <= h1))
            want = tri_hit or inside
            assert got == want
            hits += got
        assert 0 < hits < 300


class TestMeshValidity:
    def test_watertight_shapes(self, l_shape, diamond, unit_cube):
        for mesh in (l_shape, diamond, unit_cube):
            assert mesh.watertight

    def test_open_mesh_not_watertight(self):
        from trigrasp.geometry import TriMesh
        square = TriMesh([[0, 0, 0], [1, 0, 0], [1, 1, 0], [0, 1, 0]],
                         [[0, 1, 2], [0, 2, 3]])
        assert not square.watertight

    def test_unit_normals(self, l_shape):
        norms = np.linalg.norm(l_shape.face_normals, axis=1)
        assert np.max(np.abs(norms - 1.0)) < 1e-9

    def test_outward_normals_positive_volume(self, l_shape, diamond):
        for mesh in (l_shape, diamond):
            tri = mesh.vertices[mesh.faces]
            vol = np.einsum("ij,ij->i", tri[:, 0],
                            np.cross(tri[:, 1], tri[:, 2])).sum() / 6.0
            assert vol > 0

    def test_l_shape_dimensions(self, l_shape):
        lo, hi = l_shape.aabb()
        ext = hi - lo
        assert abs(ext[0] - 0.125) < 1e-12
        assert abs(ext[1] - 0.100) < 1e-12
        assert abs(ext[2] - 0.025) < 1e-12

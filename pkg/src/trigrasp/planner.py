"""Antipodal contact sampling and parallel-jaw grasp candidate generation.

Contact points are sampled area-weighted on the mesh surface. Each point
casts a ray against the surface normal; when the opposite surface is
anti-parallel within tolerance and within the jaw range the two points
form a contact pair, which is then expanded into gripper poses by rotating
about the closing axis and keeping the collision-free ones.

Determinism: every sampled point draws from its own rng seeded by
(seed, point_index), so the candidate list for n points is a prefix-stable
subset of the list for more points with the same seed.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import NoPairsFound
from .geometry import (Pose, Ray, TriMesh, box_triangles_overlap, exp_so3,
                       ray_mesh_intersect, sample_surface_point)
from .gripper import GripperModel

PAD_CONTACT_SHRINK = 1e-5  # finger-box clearance from the contact faces


@dataclass(frozen=True, eq=False)
class ContactPair:
    point_a: np.ndarray
    point_b: np.ndarray
    normal_a: np.ndarray
    normal_b: np.ndarray
    width: float

    @property
    def midpoint(self) -> np.ndarray:
        return 0.5 * (self.point_a + self.point_b)

    @property
    def axis(self) -> np.ndarray:
        """Unit closing axis from point_a to point_b."""
        return (self.point_b - self.point_a) / self.width


@dataclass(frozen=True, eq=False)
class GraspCandidate:
    """Gripper pose in the object frame plus the jaw width at contact."""

    pose: Pose
    width: float

    @property
    def closing_axis(self) -> np.ndarray:
        return self.pose.R[:, 1]


def sample_antipodal_pairs(mesh: TriMesh, n_points: int,
                           antipodal_tol: float = 0.01,
                           gripper: GripperModel | None = None,
                           rng_seed: int = 0) -> list:
    """Sample surface points and keep the antipodal pairs that fit the jaws."""
    if n_points < 1:
        raise ValueError("n_points must be >= 1")
    if not mesh.watertight:
        raise ValueError("antipodal sampling requires a watertight mesh")
    gripper = gripper or GripperModel()
    cumulative = np.cumsum(mesh.face_areas)
    pairs = []
    for i in range(n_points):
        rng = np.random.default_rng([rng_seed, i])
        point, face = sample_surface_point(mesh, cumulative, rng.random(3))
        normal = mesh.face_normals[face]
        hit = ray_mesh_intersect(Ray(point, -normal), mesh)
        if hit is None:
            continue
        if float(normal @ hit.normal) >= -(1.0 - antipodal_tol):
            continue
        if hit.distance > gripper.max_opening:
            continue
        pairs.append(ContactPair(point_a=point, point_b=hit.point,
                                 normal_a=normal.copy(), normal_b=hit.normal,
                                 width=float(hit.distance)))
    if not pairs:
        raise NoPairsFound(
            f"no antipodal pairs from {n_points} samples "
            f"(jaw range {gripper.max_opening*1e3:.0f} mm)")
    return pairs


def _reference_tangent(axis: np.ndarray) -> np.ndarray:
    """Deterministic unit vector orthogonal to axis."""
    k = int(np.argmin(np.abs(axis)))
    e = np.zeros(3)
    e[k] = 1.0
    t = e - (e @ axis) * axis
    return t / np.linalg.norm(t)


def expand_pair_to_grasps(pair: ContactPair, mesh: TriMesh,
                          gripper: GripperModel,
                          n_rotations: int = 8) -> list:
    """Gripper poses about the pair's closing axis that are collision-free.

    The grasp origin is placed at the pair midpoint; n_rotations approach
    directions are tried at uniform angles in [0, 2*pi).
    """
    if n_rotations < 1:
        raise ValueError("n_rotations must be >= 1")
    axis = pair.axis
    t0 = _reference_tangent(axis)
    grasps = []
    for k in range(n_rotations):
        angle = 2.0 * np.pi * k / n_rotations
        approach = exp_so3(angle * axis) @ t0
        lateral = np.cross(axis, approach)
        R = np.column_stack([lateral, axis, approach])
        pose = Pose(R, pair.midpoint)
        if not check_gripper_collision(pose, pair.width, gripper, mesh):
            grasps.append(GraspCandidate(pose=pose, width=pair.width))
    return grasps


def check_gripper_collision(pose: Pose, width: float, gripper: GripperModel,
                            mesh: TriMesh) -> bool:
    """True iff any gripper body box intersects the mesh.

    Finger boxes are shrunk away from the pads along the closing axis so
    the faces being grasped do not count as collisions.
    """
    if width > gripper.max_opening + 1e-12:
        raise ValueError("width exceeds the gripper opening")
    for center, half in gripper.body_boxes(width, pad_shrink=PAD_CONTACT_SHRINK):
        world_center = pose.R @ center + pose.p
        if bool(box_triangles_overlap(world_center, half, pose.R, mesh).any()):
            return True
    return False


def plan_grasps(mesh: TriMesh, n_points: int = 100, n_rotations: int = 8,
                antipodal_tol: float = 0.01,
                gripper: GripperModel | None = None,
                rng_seed: int = 0) -> list:
    """Full pipeline: sample pairs, expand each, concatenate candidates."""
    gripper = gripper or GripperModel()
    pairs = sample_antipodal_pairs(mesh, n_points, antipodal_tol, gripper,
                                   rng_seed)
    candidates = []
    for pair in pairs:
        candidates.extend(expand_pair_to_grasps(pair, mesh, gripper,
                                                n_rotations))
    return candidates


def grasps_to_json(candidates) -> list:
    return [{"pose": g.pose.to_flat(), "width": float(g.width),
             "closing_axis": [float(x) for x in g.closing_axis]}
            for g in candidates]


def grasps_from_json(items) -> list:
    out = []
    for item in items:
        g = GraspCandidate(pose=Pose.from_flat(item["pose"]),
                           width=float(item["width"]))
        axis = np.asarray(item.get("closing_axis", g.closing_axis), dtype=float)
        if np.linalg.norm(axis - g.closing_axis) > 1e-6:
            raise ValueError("closing_axis does not match column 1 of the pose")
        out.append(g)
    return out

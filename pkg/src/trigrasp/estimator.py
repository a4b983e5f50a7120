"""Object pose recovery from three conformed parallel grasps.

Flat pad contact leaves three free object DOFs per grasp: rotation about
the closing axis and translation in the pad plane. The second grasp's
conformed rotation reveals the rotation error about the first grasp's
closing axis; its position pins the object along its own closing axis;
the third grasp's displacement measures the last translation component
along the intersection line of the two pad planes.

All rotation differences are taken in the world frame (left differences),
so the difference and the projection axis live in the same frame.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import SingularTriplet
from .geometry import Pose, compose, exp_so3, invert, log_so3, relative

DEFAULT_SINGULARITY_TOL = 0.05


@dataclass(frozen=True, eq=False)
class GraspRecord:
    """Planned ("sim") and conformed ("real") world pose of one grasp."""

    sim_pose: Pose
    real_pose: Pose
    role: str = ""  # "g1" | "g2" | "g3"


@dataclass(frozen=True)
class ErrorParams:
    """Forward-model uncertainty parameters for the first grasp's frame.

    theta rotates about the closing axis; delta_1/delta_3 translate along
    the in-plane axes. epsilon is the residual translation along the
    allowed line and is only ever an output of the estimator.
    """

    theta: float
    delta_1: float
    delta_3: float
    epsilon: float = 0.0

    def __post_init__(self):
        if not abs(self.theta) < np.pi:
            raise ValueError("|theta| must be below pi")


@dataclass(frozen=True, eq=False)
class EstimationResult:
    object_pose: Pose
    theta: float
    epsilon: float
    d_allowed: np.ndarray
    conditioning: float


def ideal_pose_from_grasp(record: GraspRecord, sim_object_pose: Pose) -> Pose:
    """Object pose implied by one grasp if conformance introduced no error."""
    return compose(record.real_pose, relative(record.sim_pose, sim_object_pose))


def identify_rotation_error(g1: GraspRecord, g2: GraspRecord,
                            sim_object_pose: Pose):
    """Rotation about g1's closing axis revealed by g2's conformance.

    Returns (theta, object rotation estimate). The world-frame rotation
    difference of g2 is projected onto g1's real closing axis, then the
    same world-frame rotation is applied to the g1-ideal object rotation.
    """
    r = g1.real_pose.R[:, 1]
    r_diff = log_so3(g2.real_pose.R @ g2.sim_pose.R.T)
    theta = float(r @ r_diff)
    R_ideal = ideal_pose_from_grasp(g1, sim_object_pose).R
    return theta, exp_so3(theta * r) @ R_ideal


def allowed_translation_direction(g1: GraspRecord, g2: GraspRecord,
                                  singularity_tol: float = DEFAULT_SINGULARITY_TOL
                                  ) -> np.ndarray:
    """Unit direction of the intersection of the two pad-plane constraints."""
    n1 = np.cross(g1.real_pose.R[:, 0], g1.real_pose.R[:, 2])
    n2 = np.cross(g2.real_pose.R[:, 0], g2.real_pose.R[:, 2])
    line = np.cross(n1, n2)
    norm = float(np.linalg.norm(line))
    if norm <= singularity_tol:
        raise SingularTriplet(
            f"grasp closing axes nearly parallel (|n1 x n2| = {norm:.3g})")
    return line / norm


def estimate_pose(g1: GraspRecord, g2: GraspRecord, g3: GraspRecord,
                  sim_object_pose: Pose,
                  singularity_tol: float = DEFAULT_SINGULARITY_TOL
                  ) -> EstimationResult:
    """Full three-grasp recovery of the object's world pose."""
    theta, R_obj = identify_rotation_error(g1, g2, sim_object_pose)

    # Object position implied by g2, with the relative position corrected
    # for the recovered object rotation.
    rel2 = relative(g2.sim_pose, sim_object_pose)
    R_rel_real = g2.real_pose.R.T @ R_obj
    p_rel_corrected = R_rel_real @ rel2.R.T @ rel2.p
    p_ideal_g2 = g2.real_pose.p + g2.real_pose.R @ p_rel_corrected

    d = allowed_translation_direction(g1, g2, singularity_tol)
    epsilon = float(d @ (g3.real_pose.p - g3.sim_pose.p))
    p_obj = p_ideal_g2 + epsilon * d

    axes = np.column_stack([g1.real_pose.R[:, 1], g2.real_pose.R[:, 1],
                            g3.real_pose.R[:, 1]])
    conditioning = float(abs(np.linalg.det(axes)))
    return EstimationResult(object_pose=Pose(R_obj, p_obj), theta=theta,
                            epsilon=epsilon, d_allowed=d,
                            conditioning=conditioning)

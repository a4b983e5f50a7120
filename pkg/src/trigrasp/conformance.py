"""Admittance-controlled grasp conformance against a penalty contact model.

The receiving hand is rendered as a virtual mass-damper-spring system in
the error coordinate e = x_p - x_d between the measured pose and the
desired trajectory. Contact forces are synthesized from pad-point
penetration into the (fixed) object mesh; the loop walks the hand until
the reaction wrench vanishes, which leaves the pads centered on the
object faces without ever moving the object.
"""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .geometry import Pose, exp_so3, log_so3, ray_mesh_intersect_batch, invert
from .gripper import GripperModel


def _spd_matrix(value, name):
    m = np.asarray(value, dtype=float)
    if m.shape == ():
        m = float(m) * np.eye(3)
    if m.shape != (3, 3):
        raise ValueError(f"{name} must be a scalar or 3x3 matrix")
    if np.max(np.abs(m - m.T)) > 1e-12:
        raise ValueError(f"{name} must be symmetric")
    if np.min(np.linalg.eigvalsh(m)) <= 0:
        raise ValueError(f"{name} must be positive definite")
    return m


@dataclass(frozen=True, eq=False)
class AdmittanceParams:
    """Virtual inertia/damping/stiffness, target force, and loop settings."""

    M: np.ndarray = 1.0
    B: np.ndarray = 40.0
    K: np.ndarray = 400.0
    M_r: np.ndarray = 0.01
    B_r: np.ndarray = 0.2
    K_r: np.ndarray = 4.0
    f_d: np.ndarray = None
    dt: float = 1e-3
    force_tol: float = 1e-3
    torque_tol: float = 1e-4
    rotational: bool = True
    redirect_tol: float = np.radians(10.0)

    def __post_init__(self):
        for name in ("M", "B", "K", "M_r", "B_r", "K_r"):
            object.__setattr__(self, name, _spd_matrix(getattr(self, name), name))
        f_d = np.zeros(3) if self.f_d is None else np.asarray(self.f_d, float)
        object.__setattr__(self, "f_d", f_d.reshape(3))
        if self.dt <= 0:
            raise ValueError("dt must be positive")


@dataclass(frozen=True)
class ContactModel:
    """Linear penalty contact: force per meter of pad penetration.

    pad_stiffness is the total stiffness of one fully engaged pad; it is
    split evenly over the sample grid. friction=True records the modeling
    assumption that flat contact does not slip; the penalty model itself
    generates no tangential force either way.
    """

    pad_stiffness: float = 2.0e4
    friction: bool = True
    samples_per_side: int = 4

    def __post_init__(self):
        if self.pad_stiffness <= 0:
            raise ValueError("pad_stiffness must be positive")


@dataclass(frozen=True, eq=False)
class ConformanceResult:
    conformed_pose: Pose
    residual_force: np.ndarray
    residual_torque: np.ndarray
    steps_used: int
    converged: bool
    redirected: bool = False
    trace: np.ndarray = None  # optional (steps, 7): t, f(3), tau(3)


def reaction_wrench(gripper_pose: Pose, width: float, true_object_pose: Pose,
                    mesh, gripper: GripperModel, contact: ContactModel):
    """Penalty wrench on the gripper from pad penetration into the object.

    Each pad sample point contributes pad_stiffness/n * depth along the
    pad's inward normal; torque is taken about the grasp-frame origin.
    Returns (force, torque) in world coordinates.
    """
    n = contact.samples_per_side
    pads = gripper.pad_points(width, n=n)
    k_point = contact.pad_stiffness / (n * n)
    closing = gripper_pose.R[:, 1]
    world_to_obj = invert(true_object_pose)
    force = np.zeros(3)
    torque = np.zeros(3)
    for local_points, inward_sign in ((pads[0], -1.0), (pads[1], +1.0)):
        world_points = local_points @ gripper_pose.R.T + gripper_pose.p
        inward = inward_sign * closing
        obj_points = world_points @ world_to_obj.R.T + world_to_obj.p
        obj_outward = world_to_obj.R @ (-inward)
        # A penetrating point exits the solid along the outward normal at a
        # distance equal to its depth; a separated point sees no surface
        # along that ray (guarded by a jaw-range sanity clamp).
        depth, _ = ray_mesh_intersect_batch(obj_points, obj_outward, mesh)
        valid = np.isfinite(depth) & (depth <= gripper.max_opening)
        if not valid.any():
            continue
        d = np.where(valid, depth, 0.0)
        f_points = (k_point * d)[:, None] * inward[None, :]
        force += f_points.sum(axis=0)
        arms = world_points - gripper_pose.p
        torque += np.cross(arms, f_points).sum(axis=0)
    return force, torque


def admittance_step(x_p: Pose, xdot_p, x_d: Pose, xdot_d, wrench,
                    params: AdmittanceParams):
    """One integration step of the admittance equation in error coordinates.

    e = x_p - x_d (translation; rotation-vector of the relative rotation
    for the angular part) evolves under M e'' + B e' + K e = f + f_d, with
    the damping term taken at the step midpoint for a faithful decay rate.
    Returns the updated (x_d, xdot_d).
    """
    xdot_p = np.asarray(xdot_p, dtype=float).reshape(6)
    xdot_d = np.asarray(xdot_d, dtype=float).reshape(6)
    f, tau = wrench
    dt = params.dt

    e_t = x_p.p - x_d.p
    e_r = log_so3(x_p.R @ x_d.R.T)
    edot = xdot_p - xdot_d

    def advance(M, B, K, e, ed, load):
        lhs = M + 0.5 * dt * B
        rhs = (M - 0.5 * dt * B) @ ed + dt * (load - K @ e)
        ed_new = np.linalg.solve(lhs, rhs)
        return e + dt * ed_new, ed_new

    e_t, v_t = advance(params.M, params.B, params.K, e_t, edot[:3],
                       np.asarray(f, float) + params.f_d)
    if params.rotational:
        e_r, v_r = advance(params.M_r, params.B_r, params.K_r, e_r, edot[3:],
                           np.asarray(tau, float))
    else:
        v_r = edot[3:]
    x_d_new = Pose(exp_so3(-e_r) @ x_p.R, x_p.p - e_t)
    xdot_d_new = xdot_p - np.concatenate([v_t, v_r])
    return x_d_new, xdot_d_new


def conform_grasp(planned: Pose, width: float, true_object_pose: Pose, mesh,
                  gripper: GripperModel, contact: ContactModel,
                  params: AdmittanceParams, max_steps: int = 20000,
                  record_trace: bool = False) -> ConformanceResult:
    """Iterate wrench measurement and admittance updates until balance.

    The inner position loop is modeled as perfect: after every admittance
    update the hand is at the desired pose, so the error state re-anchors
    to the measured pose each tick and the hand keeps yielding until the
    wrench is inside tolerance. The object pose is never modified.
    """
    hand = planned
    hand_twist = np.zeros(6)
    zero_twist = np.zeros(6)
    trace = [] if record_trace else None
    force = np.zeros(3)
    torque = np.zeros(3)
    converged = False
    steps = 0
    for steps in range(1, max_steps + 1):
        force, torque = reaction_wrench(hand, width, true_object_pose, mesh,
                                        gripper, contact)
        if record_trace:
            trace.append([steps * params.dt, *force, *torque])
        torque_ok = (not params.rotational) or \
            np.linalg.norm(torque) < params.torque_tol
        if np.linalg.norm(force) < params.force_tol and torque_ok:
            converged = True
            break
        hand, hand_twist = admittance_step(hand, zero_twist, hand, hand_twist,
                                           (force, torque), params)
    redirected = float(planned.R[:, 1] @ hand.R[:, 1]) < np.cos(params.redirect_tol)
    return ConformanceResult(
        conformed_pose=hand,
        residual_force=force,
        residual_torque=torque,
        steps_used=steps,
        converged=converged,
        redirected=redirected,
        trace=np.asarray(trace) if record_trace else None,
    )


def settle_flat_contact(planned: Pose, object_sim: Pose, object_true: Pose) -> Pose:
    """Closed-form single-grasp settle against flat contact.

    The hand co-rotates with the object's world rotation error and takes
    the object's face offset along its own (final) closing axis; the
    in-plane coordinates stay where they were planned. This matches the
    admittance loop's stationary point for orthogonal grasp layouts.
    """
    D = object_true.R @ object_sim.R.T
    R_new = D @ planned.R
    a_final = R_new[:, 1]
    p_full = object_true.p + D @ (planned.p - object_sim.p)
    p_new = planned.p + a_final * float(a_final @ (p_full - planned.p))
    return Pose(R_new, p_new)

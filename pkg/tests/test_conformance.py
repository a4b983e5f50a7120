import numpy as np
import pytest

from trigrasp.conformance import (AdmittanceParams, ContactModel,
                                  admittance_step, conform_grasp,
                                  reaction_wrench, settle_flat_contact)
from trigrasp.geometry import Pose, exp_so3, log_so3
from trigrasp.gripper import GripperModel
from trigrasp.shapes import make_box

GRIPPER = GripperModel()
CUBE = make_box((0.025, 0.025, 0.025))
PLANNED = Pose.identity()  # closing axis = y, through the cube center
WIDTH = 0.025 - 1e-3


def shifted_cube(dy=0.0, rot=None):
    R = np.eye(3) if rot is None else exp_so3(rot)
    return Pose(R, [0.0, dy, 0.0])


class TestReactionWrench:
    def test_symmetric_contact_zero_force(self):
        contact = ContactModel(pad_stiffness=1000.0)
        f, tau = reaction_wrench(PLANNED, WIDTH, shifted_cube(), CUBE,
                                 GRIPPER, contact)
        assert np.linalg.norm(f) < 1e-12
        assert np.linalg.norm(tau) < 1e-12

    def test_one_millimeter_shift_one_newton(self):
        # Jaws at exactly the face distance: a +1 mm object shift gives a
        # single pad penetration of 1 mm and f = k*d along -closing axis.
        contact = ContactModel(pad_stiffness=1000.0)
        f, tau = reaction_wrench(PLANNED, 0.025, shifted_cube(dy=1e-3), CUBE,
                                 GRIPPER, contact)
        assert abs(f[1] - (-1.0)) < 1e-9
        assert abs(f[0]) < 1e-12 and abs(f[2]) < 1e-12

    def test_tilted_object_restoring_torque(self):
        contact = ContactModel()
        err_axis = np.array([1.0, 0.0, 0.0])  # in-plane pad axis
        f, tau = reaction_wrench(PLANNED, WIDTH,
                                 shifted_cube(rot=np.radians(2.0) * err_axis),
                                 CUBE, GRIPPER, contact)
        assert float(tau @ err_axis) < 0.0
        # Finite-difference check: a slightly larger error increases the
        # restoring (negative) torque component.
        f2, tau2 = reaction_wrench(PLANNED, WIDTH,
                                   shifted_cube(rot=np.radians(2.5) * err_axis),
                                   CUBE, GRIPPER, contact)
        assert float(tau2 @ err_axis) < float(tau @ err_axis)


class TestAdmittanceStep:
    def test_no_force_no_motion(self):
        params = AdmittanceParams()
        xd, xdd = admittance_step(PLANNED, np.zeros(6), PLANNED, np.zeros(6),
                                  (np.zeros(3), np.zeros(3)), params)
        assert np.allclose(xd.p, PLANNED.p)
        assert np.allclose(xd.R, PLANNED.R)
        assert np.allclose(xdd, 0.0)

    def test_static_equilibrium(self):
        params = AdmittanceParams()
        f = np.array([0.7, -0.3, 1.1])
        xd, xdd = Pose.identity(), np.zeros(6)
        for _ in range(4000):
            xd, xdd = admittance_step(PLANNED, np.zeros(6), xd, xdd,
                                      (f, np.zeros(3)), params)
        resid = params.K @ (PLANNED.p - xd.p) - f
        assert np.linalg.norm(resid) < 1e-6

    def test_step_response_matches_analytic(self):
        # (M, B, K) = (1, 40, 400): critically damped, wn = 20 rad/s.
        params = AdmittanceParams(M=1.0, B=40.0, K=400.0)
        f = np.array([1.0, 0.0, 0.0])
        xd, xdd = Pose.identity(), np.zeros(6)
        wn, xss = 20.0, 1.0 / 400.0
        worst = 0.0
        for k in range(1, 1500):
            xd, xdd = admittance_step(PLANNED, np.zeros(6), xd, xdd,
                                      (f, np.zeros(3)), params)
            t = k * params.dt
            exact = xss * (1.0 - np.exp(-wn * t) * (1.0 + wn * t))
            worst = max(worst, abs((PLANNED.p - xd.p)[0] - exact))
        assert worst / xss < 0.01

    def test_rotational_static_equilibrium(self):
        params = AdmittanceParams()
        tau = np.array([0.0, 0.0, 0.02])
        xd, xdd = Pose.identity(), np.zeros(6)
        for _ in range(20000):
            xd, xdd = admittance_step(PLANNED, np.zeros(6), xd, xdd,
                                      (np.zeros(3), tau), params)
        e_r = log_so3(PLANNED.R @ xd.R.T)
        assert np.linalg.norm(params.K_r @ e_r - tau) < 1e-6

    def test_lyapunov_energy_free_decay(self):
        # V = 0.5 e' M e' + 0.5 e K e is non-increasing for f = 0.
        params = AdmittanceParams()
        xp = PLANNED
        xd = Pose(np.eye(3), [0.004, -0.002, 0.001])
        xdd = np.zeros(6)
        prev = np.inf
        for _ in range(2000):
            e = xp.p - xd.p
            ed = -xdd[:3]
            V = 0.5 * ed @ params.M @ ed + 0.5 * e @ params.K @ e
            assert V <= prev * (1.0 + 1e-12) + 1e-18
            prev = V
            xd, xdd = admittance_step(xp, np.zeros(6), xd, xdd,
                                      (np.zeros(3), np.zeros(3)), params)

    def test_lyapunov_energy_constant_force(self):
        # With constant f the Lyapunov function is the energy about the
        # shifted equilibrium e* = K^-1 f.
        params = AdmittanceParams()
        f = np.array([0.5, 0.0, -0.2])
        e_star = np.linalg.solve(params.K, f)
        xd, xdd = Pose.identity(), np.zeros(6)
        prev = np.inf
        for _ in range(2000):
            e = (PLANNED.p - xd.p) - e_star
            ed = -xdd[:3]
            V = 0.5 * ed @ params.M @ ed + 0.5 * e @ params.K @ e
            assert V <= prev * (1.0 + 1e-12) + 1e-18
            prev = V
            xd, xdd = admittance_step(PLANNED, np.zeros(6), xd, xdd,
                                      (f, np.zeros(3)), params)


class TestConformGrasp:
    def test_zero_offset_converges_immediately(self):
        res = conform_grasp(PLANNED, WIDTH, shifted_cube(), CUBE, GRIPPER,
                            ContactModel(), AdmittanceParams())
        assert res.converged and res.steps_used == 1
        assert np.allclose(res.conformed_pose.p, PLANNED.p)
        assert np.allclose(res.conformed_pose.R, PLANNED.R)

    def test_three_millimeter_offset(self):
        res = conform_grasp(PLANNED, WIDTH, shifted_cube(dy=3e-3), CUBE,
                            GRIPPER, ContactModel(), AdmittanceParams())
        assert res.converged
        d = res.conformed_pose.p - PLANNED.p
        assert abs(d[1] - 3e-3) < 1e-5
        assert abs(d[0]) < 1e-6 and abs(d[2]) < 1e-6

    def test_spin_about_closing_axis_is_invisible(self):
        # Rotating the object about the closing axis leaves the faces
        # parallel to the pads: no wrench, no correction needed.
        obj = shifted_cube(rot=np.radians(2.0) * np.array([0.0, 1.0, 0.0]))
        res = conform_grasp(PLANNED, WIDTH, obj, CUBE, GRIPPER,
                            ContactModel(), AdmittanceParams())
        assert res.converged and res.steps_used == 1
        pad_normal = res.conformed_pose.R[:, 1]
        face_normal = obj.R[:, 1]
        assert abs(abs(float(pad_normal @ face_normal)) - 1.0) < 1e-12

    def test_two_degree_inplane_rotation_aligns(self):
        obj = shifted_cube(rot=np.radians(2.0) * np.array([1.0, 0.0, 0.0]))
        res = conform_grasp(PLANNED, WIDTH, obj, CUBE, GRIPPER,
                            ContactModel(), AdmittanceParams())
        assert res.converged
        align = float(res.conformed_pose.R[:, 1] @ obj.R[:, 1])
        assert np.degrees(np.arccos(np.clip(align, -1, 1))) < 0.05

    def test_object_pose_untouched(self):
        obj = shifted_cube(dy=4e-3, rot=[0.02, 0.0, 0.0])
        R_before = obj.R.tobytes()
        p_before = obj.p.tobytes()
        conform_grasp(PLANNED, WIDTH, obj, CUBE, GRIPPER, ContactModel(),
                      AdmittanceParams())
        assert obj.R.tobytes() == R_before
        assert obj.p.tobytes() == p_before

    def test_conformance_direction_in_planned_frame(self):
        # Injected closing-axis offsets reappear on column 1 of the planned
        # frame; columns 0/2 stay put when no in-plane force arises. The
        # object keeps the planned orientation so only the closing axis
        # carries error; the mesh stays in the object's local frame.
        rng = np.random.default_rng(0)
        R = exp_so3(rng.uniform(-1, 1, 3))
        planned = Pose(R, rng.uniform(-0.05, 0.05, 3))
        offset = 4e-3
        obj = Pose(planned.R, planned.p + offset * planned.R[:, 1])
        res = conform_grasp(planned, WIDTH, obj, CUBE, GRIPPER,
                            ContactModel(), AdmittanceParams())
        assert res.converged
        d_local = planned.R.T @ (res.conformed_pose.p - planned.p)
        assert abs(d_local[1] - offset) < 1e-5
        assert abs(d_local[0]) < 1e-6 and abs(d_local[2]) < 1e-6

    def test_wrench_norm_decays(self):
        res = conform_grasp(PLANNED, WIDTH, shifted_cube(dy=6e-3), CUBE,
                            GRIPPER, ContactModel(), AdmittanceParams(),
                            record_trace=True)
        assert res.converged
        norms = np.linalg.norm(res.trace[:, 1:4], axis=1)
        k0 = 40
        for k in range(k0, len(norms) // 10):
            assert norms[min(10 * k, len(norms) - 1)] <= norms[k] + 1e-12

    def test_rotational_toggle_off(self):
        # With rotational admittance disabled only the force is balanced;
        # a tilted object leaves the hand orientation at the plan.
        params = AdmittanceParams(rotational=False)
        obj = shifted_cube(dy=2e-3, rot=[0.02, 0.0, 0.0])
        res = conform_grasp(PLANNED, WIDTH, obj, CUBE, GRIPPER,
                            ContactModel(), params)
        assert res.converged
        assert np.allclose(res.conformed_pose.R, PLANNED.R)

    def test_redirect_flag(self):
        # A conformed axis more than 10 degrees off the plan is flagged.
        params = AdmittanceParams(redirect_tol=np.radians(0.5))
        obj = shifted_cube(rot=[0.02, 0.0, 0.0])
        res = conform_grasp(PLANNED, WIDTH, obj, CUBE, GRIPPER,
                            ContactModel(), params)
        assert res.converged and res.redirected
        res2 = conform_grasp(PLANNED, WIDTH, obj, CUBE, GRIPPER,
                             ContactModel(), AdmittanceParams())
        assert not res2.redirected

    def test_spd_validation(self):
        with pytest.raises(ValueError):
            AdmittanceParams(M=-1.0)
        with pytest.raises(ValueError):
            AdmittanceParams(B=np.array([[1, 2, 0], [0, 1, 0], [0, 0, 1.0]]))
        with pytest.raises(ValueError):
            ContactModel(pad_stiffness=0.0)

    def test_not_converged_flagged(self):
        params = AdmittanceParams(force_tol=1e-12, torque_tol=1e-12)
        res = conform_grasp(PLANNED, WIDTH, shifted_cube(dy=3e-3), CUBE,
                            GRIPPER, ContactModel(), params, max_steps=50)
        assert not res.converged
        assert res.steps_used == 50

    def test_matches_flat_contact_settle_pure_cases(self):
        # Pure translation and pure rotation errors: the ODE walk and the
        # closed-form settle agree to the wrench-tolerance residuals.
        for obj in (shifted_cube(dy=2e-3), shifted_cube(rot=[0.02, 0, 0])):
            res = conform_grasp(PLANNED, WIDTH, obj, CUBE, GRIPPER,
                                ContactModel(), AdmittanceParams())
            ref = settle_flat_contact(PLANNED, Pose.identity(), obj)
            assert res.converged
            assert np.linalg.norm(res.conformed_pose.p - ref.p) < 1e-5
            ang = np.linalg.norm(log_so3(res.conformed_pose.R @ ref.R.T))
            assert ang < 5e-4

    def test_matches_flat_contact_settle_combined(self):
        # Combined rotation + translation: the contact cannot observe
        # in-plane motion, so the simulated path may differ from the
        # closed-form settle by up to the rotation-sweep drift
        # O(theta * travel); assert agreement within that bound.
        theta, dy = 0.02, 2e-3
        obj = shifted_cube(dy=dy, rot=[theta, 0.0, 0.0])
        res = conform_grasp(PLANNED, WIDTH, obj, CUBE, GRIPPER,
                            ContactModel(), AdmittanceParams())
        ref = settle_flat_contact(PLANNED, Pose.identity(), obj)
        assert res.converged
        assert np.linalg.norm(res.conformed_pose.p - ref.p) < \
            abs(theta) * abs(dy) + 1e-5
        ang = np.linalg.norm(log_so3(res.conformed_pose.R @ ref.R.T))
        assert ang < 5e-4
        # The closing-axis pin itself is shared exactly by both models.
        a = ref.R[:, 1]
        assert abs(float(a @ res.conformed_pose.p) - float(a @ ref.p)) < 1e-6

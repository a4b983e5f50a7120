"""Randomized end-to-end trials: plan, inject truth, conform, estimate.

Ground truth is injected consistently with the first grasp's flat-contact
constraint (g1 is position controlled, so its planned and executed poses
coincide and the object's true pose differs from the assumed one only by
a rotation about g1's closing axis plus an in-plane translation). The
second and third grasps are conformed either by the closed-form
flat-contact model (default, exact) or by the admittance simulator, then
optionally perturbed with Gaussian noise before estimation.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .conformance import (AdmittanceParams, ContactModel, conform_grasp)
from .errors import NotConverged, SingularTriplet, TrigraspError
from .estimator import (ErrorParams, GraspRecord, estimate_pose)
from .geometry import Pose, compose, exp_so3, log_so3
from .gripper import GripperModel
from .planner import plan_grasps
from .sequencer import ArmModel, plan_sequence
from .shapes import resolve_mesh
from .triplets import enumerate_triplets, group_by_axis

CLOSURE_MARGIN = 1e-3  # jaws commanded this much narrower than the faces

CSV_COLUMNS = (
    ["placement", "repeat"]
    + [f"g2_dp_{ax}_mm" for ax in "xyz"] + [f"g2_dw_{ax}_deg" for ax in "xyz"]
    + [f"g3_dp_{ax}_mm" for ax in "xyz"] + [f"g3_dw_{ax}_deg" for ax in "xyz"]
    + [f"obj_dp_{ax}_mm" for ax in "xyz"] + [f"obj_dw_{ax}_deg" for ax in "xyz"]
)


@dataclass(frozen=True, eq=False)
class Placement:
    name: str
    pose: Pose


@dataclass(frozen=True, eq=False)
class TrialConfig:
    mesh: str = "l-shape"
    placements: tuple = ()
    max_theta: float = np.radians(5.0)
    max_delta: float = 0.010
    sigma_p: float = 0.0
    sigma_r: float = 0.0
    n_repeats: int = 1
    seed: int = 0
    conformance: str = "geometric"  # or "admittance"
    n_points: int = 120
    n_rotations: int = 8
    handover_pose: Pose = None
    goal_pose: Pose = None
    gripper: GripperModel = None
    admittance: AdmittanceParams = None
    contact: ContactModel = None
    save_traces: bool = False

    def __post_init__(self):
        gripper = self.gripper or GripperModel()
        if self.max_delta > gripper.max_opening / 2.0:
            raise ValueError("max_delta must stay within half the jaw range")
        if self.n_repeats < 1:
            raise ValueError("n_repeats must be >= 1")
        if self.conformance not in ("geometric", "admittance"):
            raise ValueError("conformance must be 'geometric' or 'admittance'")
        object.__setattr__(self, "gripper", gripper)
        if not self.placements:
            object.__setattr__(self, "placements", default_placements())
        if self.handover_pose is None:
            object.__setattr__(self, "handover_pose", default_handover_pose())
        if self.goal_pose is None:
            object.__setattr__(self, "goal_pose", default_goal_pose())
        if self.admittance is None:
            object.__setattr__(self, "admittance", AdmittanceParams())
        if self.contact is None:
            object.__setattr__(self, "contact", ContactModel())


@dataclass(frozen=True, eq=False)
class TrialRow:
    placement: str
    repeat: int
    g2_dp_mm: np.ndarray
    g2_dw_deg: np.ndarray
    g3_dp_mm: np.ndarray
    g3_dw_deg: np.ndarray
    obj_dp_mm: np.ndarray
    obj_dw_deg: np.ndarray

    def values(self):
        out = []
        for arr in (self.g2_dp_mm, self.g2_dw_deg, self.g3_dp_mm,
                    self.g3_dw_deg, self.obj_dp_mm, self.obj_dw_deg):
            out.extend(float(x) for x in arr)
        return out


@dataclass(frozen=True, eq=False)
class TrialReport:
    rows: list
    summary: dict


def default_placements() -> tuple:
    """Three table placements analogous to randomized initial poses."""
    return (
        Placement("P1", Pose(np.eye(3), [0.15, -0.18, 0.02])),
        Placement("P2", Pose(exp_so3([0.0, 0.0, np.pi / 2]), [0.25, -0.12, 0.02])),
        Placement("P3", Pose(exp_so3([0.0, 0.0, -2.0]), [0.10, -0.25, 0.02])),
    )


def default_handover_pose() -> Pose:
    return Pose(exp_so3([0.0, 0.3, 0.4]), [0.20, 0.00, 0.30])


def default_goal_pose() -> Pose:
    return Pose(exp_so3([0.0, 0.0, 1.0]), [0.32, 0.15, 0.02])


def default_arms() -> tuple:
    home_a = Pose(np.eye(3), [0.0, -0.35, 0.4])
    home_b = Pose(np.eye(3), [0.0, 0.35, 0.4])
    lo = np.array([-0.6, -0.8, -0.3])
    hi = np.array([0.8, 0.8, 0.9])
    return (ArmModel("A", lo, hi, home_a), ArmModel("B", lo, hi, home_b))


def apply_pose_error(ideal_pose: Pose, g1_real: Pose, params: ErrorParams) -> Pose:
    """Perturb an object pose within the first grasp's flat-contact family."""
    r = g1_real.R[:, 1]
    shift = params.delta_1 * g1_real.R[:, 0] + params.delta_3 * g1_real.R[:, 2]
    return Pose(exp_so3(params.theta * r) @ ideal_pose.R, ideal_pose.p + shift)


def recover_pose_error(ideal_pose: Pose, g1_real: Pose, true_pose: Pose) -> ErrorParams:
    """Invert apply_pose_error; used to cross-check injected scenes."""
    r = g1_real.R[:, 1]
    w = log_so3(true_pose.R @ ideal_pose.R.T)
    shift = true_pose.p - ideal_pose.p
    return ErrorParams(theta=float(r @ w),
                       delta_1=float(g1_real.R[:, 0] @ shift),
                       delta_3=float(g1_real.R[:, 2] @ shift))


def inject_truth(sim_object_pose: Pose, g1_real: Pose, max_theta: float,
                 max_delta: float, rng: np.random.Generator) -> Pose:
    """Sample a true object pose consistent with g1's contact constraint."""
    params = ErrorParams(
        theta=float(rng.uniform(-max_theta, max_theta)),
        delta_1=float(rng.uniform(-max_delta, max_delta)),
        delta_3=float(rng.uniform(-max_delta, max_delta)),
    )
    return apply_pose_error(sim_object_pose, g1_real, params)


def synthesize_conformed_grasps(object_sim: Pose, object_true: Pose,
                                g1_sim: Pose, g2_sim: Pose, g3_sim: Pose):
    """Closed-form conformed poses for a grasp triplet (flat contact).

    Contact cannot observe rotation about a pad normal or in-plane pad
    translation. Those free parameters are fixed to the values the
    constraint-intersection estimate assumes: every hand co-rotates with
    the object's world rotation error, the third hand seats fully on its
    designed contact patch, and the second hand carries the object's
    remaining offset along the allowed translation line.
    """
    D = object_true.R @ object_sim.R.T
    a1 = g1_sim.R[:, 1]
    a2_final = D @ g2_sim.R[:, 1]
    line = np.cross(a1, a2_final)
    norm = float(np.linalg.norm(line))
    if norm <= 1e-9:
        raise SingularTriplet("g1/g2 closing axes parallel in synthesis")
    d = line / norm

    def full_pose(g_sim: Pose) -> Pose:
        return Pose(D @ g_sim.R,
                    object_true.p + D @ (g_sim.p - object_sim.p))

    g3_real = full_pose(g3_sim)
    epsilon = float(d @ (g3_real.p - g3_sim.p))
    g2_full = full_pose(g2_sim)
    g2_real = Pose(g2_full.R, g2_full.p - epsilon * d)
    return (GraspRecord(g1_sim, g1_sim, "g1"),
            GraspRecord(g2_sim, g2_real, "g2"),
            GraspRecord(g3_sim, g3_real, "g3"))


def _noisy_pose(pose: Pose, sigma_p: float, sigma_r: float,
                rng: np.random.Generator) -> Pose:
    if sigma_p == 0.0 and sigma_r == 0.0:
        return pose
    dp = rng.normal(0.0, sigma_p, 3) if sigma_p > 0 else np.zeros(3)
    dw = rng.normal(0.0, sigma_r, 3) if sigma_r > 0 else np.zeros(3)
    return Pose(exp_so3(dw) @ pose.R, pose.p + dp)


def _pose_delta(real: Pose, sim: Pose):
    """Per-axis position (mm) and rotation-vector (deg) differences."""
    dp_mm = (real.p - sim.p) * 1e3
    dw_deg = np.degrees(log_so3(real.R @ sim.R.T))
    return dp_mm, dw_deg


@dataclass(frozen=True, eq=False)
class _PlacementPlan:
    grasps_world: tuple       # g1/g2/g3 sim poses at the handover snapshot
    widths: tuple
    plan: object


def _plan_placement(config: TrialConfig, mesh, placement: Placement,
                    candidates, groups, triplets) -> _PlacementPlan:
    arms = default_arms()
    plan = plan_sequence(triplets, candidates, placement.pose,
                         config.goal_pose, arms, config.handover_pose,
                         config.gripper, mesh, groups=groups)
    world = tuple(compose(config.handover_pose, candidates[i].pose)
                  for i in plan.grasp_indices)
    widths = tuple(candidates[i].width for i in plan.grasp_indices)
    return _PlacementPlan(grasps_world=world, widths=widths, plan=plan)


def run_experiment(config: TrialConfig, out_dir=None, mesh=None) -> TrialReport:
    """Run all placements and repeats; optionally write the report files."""
    if mesh is None:
        mesh = resolve_mesh(config.mesh)
    candidates = plan_grasps(mesh, n_points=config.n_points,
                             n_rotations=config.n_rotations,
                             gripper=config.gripper, rng_seed=config.seed)
    groups = group_by_axis(candidates)
    triplets = enumerate_triplets(groups)

    rows = []
    traces = []
    for p_idx, placement in enumerate(config.placements):
        try:
            pp = _plan_placement(config, mesh, placement, candidates, groups,
                                 triplets)
        except TrigraspError as exc:
            raise type(exc)(f"placement {placement.name}: {exc}") from exc
        g1_sim, g2_sim, g3_sim = pp.grasps_world
        for rep in range(config.n_repeats):
            rng = np.random.default_rng([config.seed, p_idx, rep])
            true_pose = inject_truth(config.handover_pose, g1_sim,
                                     config.max_theta, config.max_delta, rng)
            try:
                rec1, rec2, rec3 = _conform(config, mesh, pp, true_pose,
                                            g1_sim, g2_sim, g3_sim, traces,
                                            placement.name, rep)
                rec2 = GraspRecord(rec2.sim_pose,
                                   _noisy_pose(rec2.real_pose, config.sigma_p,
                                               config.sigma_r, rng), "g2")
                rec3 = GraspRecord(rec3.sim_pose,
                                   _noisy_pose(rec3.real_pose, config.sigma_p,
                                               config.sigma_r, rng), "g3")
                est = estimate_pose(rec1, rec2, rec3, config.handover_pose)
            except TrigraspError as exc:
                raise type(exc)(
                    f"placement {placement.name} repeat {rep}: {exc}") from exc
            g2_dp, g2_dw = _pose_delta(rec2.real_pose, rec2.sim_pose)
            g3_dp, g3_dw = _pose_delta(rec3.real_pose, rec3.sim_pose)
            obj_dp, obj_dw = _pose_delta(est.object_pose, true_pose)
            rows.append(TrialRow(placement.name, rep, g2_dp, g2_dw,
                                 g3_dp, g3_dw, obj_dp, obj_dw))
    report = TrialReport(rows=rows, summary=_summarize(rows, config))
    if out_dir is not None:
        write_report(report, out_dir, traces=traces)
    return report


def _conform(config, mesh, pp, true_pose, g1_sim, g2_sim, g3_sim, traces,
             placement_name, rep):
    if config.conformance == "geometric":
        return synthesize_conformed_grasps(config.handover_pose, true_pose,
                                           g1_sim, g2_sim, g3_sim)
    reals = []
    for role, g_sim, width in (("g2", g2_sim, pp.widths[1]),
                               ("g3", g3_sim, pp.widths[2])):
        res = conform_grasp(g_sim, width - CLOSURE_MARGIN, true_pose, mesh,
                            config.gripper, config.contact, config.admittance,
                            record_trace=config.save_traces)
        if not res.converged:
            raise NotConverged(
                f"{role} residual force {np.linalg.norm(res.residual_force):.3g} N "
                f"after {res.steps_used} steps")
        if config.save_traces:
            traces.append((f"{placement_name}_r{rep}_{role}", res.trace))
        reals.append(res.conformed_pose)
    return (GraspRecord(g1_sim, g1_sim, "g1"),
            GraspRecord(g2_sim, reals[0], "g2"),
            GraspRecord(g3_sim, reals[1], "g3"))


def _axis_stats(values) -> dict:
    arr = np.asarray(values, dtype=float)
    mean = arr.mean(axis=0)
    std = arr.std(axis=0, ddof=1) if len(arr) > 1 else np.zeros(3)
    return {"mean": [float(x) for x in mean], "std": [float(x) for x in std]}


def _summarize(rows, config: TrialConfig) -> dict:
    fields = ("g2_dp_mm", "g2_dw_deg", "g3_dp_mm", "g3_dw_deg",
              "obj_dp_mm", "obj_dw_deg")
    summary = {
        "n_trials": len(rows),
        "config": {
            "mesh": config.mesh,
            "seed": config.seed,
            "n_repeats": config.n_repeats,
            "max_theta_deg": float(np.degrees(config.max_theta)),
            "max_delta_mm": float(config.max_delta * 1e3),
            "sigma_p_mm": float(config.sigma_p * 1e3),
            "sigma_r_deg": float(np.degrees(config.sigma_r)),
            "conformance": config.conformance,
        },
        "overall": {},
        "placements": {},
    }
    for f in fields:
        summary["overall"][f] = _axis_stats([getattr(r, f) for r in rows])
    for name in dict.fromkeys(r.placement for r in rows):
        sub = [r for r in rows if r.placement == name]
        summary["placements"][name] = {
            f: _axis_stats([getattr(r, f) for r in sub]) for f in fields}
    return summary


def rows_to_csv(rows) -> str:
    lines = [",".join(CSV_COLUMNS)]
    for r in rows:
        cells = [r.placement, str(r.repeat)]
        cells += [repr(v) for v in r.values()]
        lines.append(",".join(cells))
    return "\n".join(lines) + "\n"


def write_report(report: TrialReport, out_dir, traces=()) -> None:
    from .serialize import dump_json
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    (out / "trials.csv").write_text(rows_to_csv(report.rows))
    dump_json(report.summary, out / "summary.json")
    if traces:
        trace_dir = out / "traces"
        trace_dir.mkdir(exist_ok=True)
        for name, trace in traces:
            lines = ["t_s,fx_N,fy_N,fz_N,tx_Nm,ty_Nm,tz_Nm"]
            lines += [",".join(repr(float(v)) for v in row) for row in trace]
            (trace_dir / f"{name}.csv").write_text("\n".join(lines) + "\n")
    from .plots import render_report_figures
    render_report_figures(report, out)

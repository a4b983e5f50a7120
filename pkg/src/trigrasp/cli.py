"""Command-line interface.

Subcommands follow the pipeline: plan-grasps -> triplets -> sequence ->
simulate -> estimate, plus an end-to-end randomized experiment runner.
All commands are deterministic for fixed inputs and seeds.
"""
from __future__ import annotations

import argparse
import sys
from pathlib import Path

import numpy as np

from . import __version__
from .conformance import (AdmittanceParams, ContactModel, conform_grasp)
from .errors import TrigraspError
from .estimator import GraspRecord, estimate_pose
from .experiment import (CLOSURE_MARGIN, Placement, TrialConfig, default_arms,
                         run_experiment, synthesize_conformed_grasps)
from .geometry import Pose, compose
from .gripper import GripperModel
from .planner import grasps_from_json, grasps_to_json, plan_grasps
from .sequencer import plan_sequence, plan_to_json, validate_plan
from .serialize import dump_json, load_json
from .shapes import resolve_mesh
from .triplets import (GraspGroup, Triplet, enumerate_triplets, group_by_axis,
                       groups_to_json, triplets_to_json)


def _load_grasp_file(path):
    data = load_json(path)
    return grasps_from_json(data["grasps"]), data


def cmd_plan_grasps(args) -> int:
    mesh = resolve_mesh(args.mesh, scale=args.scale)
    gripper = GripperModel()
    candidates = plan_grasps(mesh, n_points=args.n_points,
                             n_rotations=args.n_rotations,
                             antipodal_tol=args.antipodal_tol,
                             gripper=gripper, rng_seed=args.seed)
    dump_json({
        "mesh": args.mesh,
        "scale": args.scale,
        "seed": args.seed,
        "n_points": args.n_points,
        "n_rotations": args.n_rotations,
        "grasps": grasps_to_json(candidates),
    }, args.out)
    print(f"{len(candidates)} grasp candidates -> {args.out}")
    return 0


def cmd_triplets(args) -> int:
    candidates, _ = _load_grasp_file(args.grasps)
    groups = group_by_axis(candidates)
    triplets = enumerate_triplets(groups)
    dump_json({
        "groups": groups_to_json(groups),
        "triplets": triplets_to_json(triplets),
    }, args.out)
    print(f"{len(groups)} groups, {len(triplets)} triplets "
          f"(best score {triplets[0].score:.6f}) -> {args.out}")
    return 0


def _scene_from_json(data):
    poses = {k: Pose.from_flat(data[k])
             for k in ("object_start", "object_goal", "handover")}
    arms = []
    from .sequencer import ArmModel
    for a in data["arms"]:
        arms.append(ArmModel(a["id"], np.asarray(a["workspace_min"]),
                             np.asarray(a["workspace_max"]),
                             Pose.from_flat(a["home"])))
    return poses, tuple(arms)


def cmd_scene_template(args) -> int:
    from .experiment import (default_goal_pose, default_handover_pose,
                             default_placements)
    arms = default_arms()
    dump_json({
        "mesh": args.mesh,
        "object_start": default_placements()[0].pose.to_flat(),
        "object_goal": default_goal_pose().to_flat(),
        "handover": default_handover_pose().to_flat(),
        "arms": [{
            "id": a.id,
            "workspace_min": [float(x) for x in a.workspace_min],
            "workspace_max": [float(x) for x in a.workspace_max],
            "home": a.home.to_flat(),
        } for a in arms],
    }, args.out)
    print(f"scene template -> {args.out}")
    return 0


def cmd_sequence(args) -> int:
    candidates, grasp_data = _load_grasp_file(args.grasps)
    tri_data = load_json(args.triplets)
    groups = [GraspGroup(axis=np.asarray(g["axis"], dtype=float),
                         members=list(g["members"]))
              for g in tri_data["groups"]]
    triplets = [Triplet(groups=tuple(t["groups"]), score=float(t["score"]),
                        det=float(t["det"]))
                for t in tri_data["triplets"]]
    scene = load_json(args.scene)
    poses, arms = _scene_from_json(scene)
    mesh = resolve_mesh(scene.get("mesh", grasp_data.get("mesh")),
                        scale=grasp_data.get("scale", 0.001))
    gripper = GripperModel()
    plan = plan_sequence(triplets, candidates, poses["object_start"],
                         poses["object_goal"], arms, poses["handover"],
                         gripper, mesh, groups=groups)
    problems = validate_plan(plan, candidates, groups, gripper, arms)
    if problems:
        raise TrigraspError("plan failed validation: " + "; ".join(problems))
    out = plan_to_json(plan)
    out["mesh"] = scene.get("mesh", grasp_data.get("mesh"))
    out["scale"] = grasp_data.get("scale", 0.001)
    out["object_sim_pose"] = poses["handover"].to_flat()
    out["grasps_world"] = [
        compose(poses["handover"], candidates[i].pose).to_flat()
        for i in plan.grasp_indices]
    dump_json(out, args.out)
    print(f"plan with triplet score {plan.triplet_score:.6f}, "
          f"grasps {plan.grasp_indices} -> {args.out}")
    return 0


def cmd_simulate(args) -> int:
    plan = load_json(args.plan)
    object_sim = Pose.from_flat(plan["object_sim_pose"])
    g_sims = [Pose.from_flat(v) for v in plan["grasps_world"]]
    widths = [float(w) for w in plan["widths"]]
    if args.truth:
        truth = load_json(args.truth)
        object_true = Pose.from_flat(truth["object_pose"])
    else:
        from .estimator import ErrorParams
        from .experiment import apply_pose_error
        params = ErrorParams(theta=np.radians(args.theta_deg),
                             delta_1=args.delta1_mm * 1e-3,
                             delta_3=args.delta3_mm * 1e-3)
        object_true = apply_pose_error(object_sim, g_sims[0], params)

    gripper = GripperModel()
    if args.params:
        raw = load_json(args.params)
        adm = AdmittanceParams(**{k: raw[k] for k in
                                  ("M", "B", "K", "M_r", "B_r", "K_r", "dt",
                                   "force_tol", "torque_tol", "rotational")
                                  if k in raw})
        contact = ContactModel(**{k: raw[k] for k in
                                  ("pad_stiffness", "samples_per_side")
                                  if k in raw})
    else:
        adm, contact = AdmittanceParams(), ContactModel()

    mesh = resolve_mesh(plan["mesh"], scale=plan.get("scale", 0.001))
    records = []
    out_dir = Path(args.out).parent
    out_dir.mkdir(parents=True, exist_ok=True)
    if args.mode == "geometric":
        recs = synthesize_conformed_grasps(object_sim, object_true,
                                           *g_sims[:3])
        for rec in recs:
            records.append({"role": rec.role,
                            "sim_pose": rec.sim_pose.to_flat(),
                            "real_pose": rec.real_pose.to_flat()})
    else:
        records.append({"role": "g1", "sim_pose": g_sims[0].to_flat(),
                        "real_pose": g_sims[0].to_flat()})
        for role, g_sim, width in (("g2", g_sims[1], widths[1]),
                                   ("g3", g_sims[2], widths[2])):
            res = conform_grasp(g_sim, width - CLOSURE_MARGIN, object_true,
                                mesh, gripper, contact, adm,
                                record_trace=True)
            records.append({
                "role": role,
                "sim_pose": g_sim.to_flat(),
                "real_pose": res.conformed_pose.to_flat(),
                "converged": bool(res.converged),
                "steps": int(res.steps_used),
                "redirected": bool(res.redirected),
            })
            stem = out_dir / f"trace_{role}"
            lines = ["t_s,fx_N,fy_N,fz_N,tx_Nm,ty_Nm,tz_Nm"]
            lines += [",".join(repr(float(v)) for v in row)
                      for row in res.trace]
            Path(f"{stem}.csv").write_text("\n".join(lines) + "\n")
            from .plots import render_trace_figure
            render_trace_figure(res.trace, f"{stem}.png",
                                title=f"{role} reaction wrench")
    dump_json({
        "object_sim_pose": object_sim.to_flat(),
        "object_true_pose": object_true.to_flat(),
        "records": records,
    }, args.out)
    print(f"conformed {len(records)} grasps ({args.mode}) -> {args.out}")
    return 0


def cmd_estimate(args) -> int:
    data = load_json(args.conformed)
    sim_obj = Pose.from_flat(load_json(args.sim_object)["pose"]) \
        if args.sim_object else Pose.from_flat(data["object_sim_pose"])
    by_role = {r["role"]: r for r in data["records"]}
    recs = [GraspRecord(Pose.from_flat(by_role[role]["sim_pose"]),
                        Pose.from_flat(by_role[role]["real_pose"]), role)
            for role in ("g1", "g2", "g3")]
    est = estimate_pose(*recs, sim_obj)
    dump_json({
        "object_pose": est.object_pose.to_flat(),
        "theta_deg": float(np.degrees(est.theta)),
        "epsilon_mm": float(est.epsilon * 1e3),
        "d_allowed": [float(x) for x in est.d_allowed],
        "conditioning": float(est.conditioning),
    }, args.out)
    print(f"theta {np.degrees(est.theta):.4f} deg, "
          f"epsilon {est.epsilon * 1e3:.4f} mm, "
          f"conditioning {est.conditioning:.4f} -> {args.out}")
    return 0


def cmd_experiment(args) -> int:
    raw = load_json(args.config)
    placements = tuple(
        Placement(p["name"], Pose.from_flat(p["pose"]))
        for p in raw.get("placements", []))
    config = TrialConfig(
        mesh=raw.get("mesh", "l-shape"),
        placements=placements,
        max_theta=np.radians(raw.get("max_theta_deg", 5.0)),
        max_delta=raw.get("max_delta_mm", 10.0) * 1e-3,
        sigma_p=raw.get("sigma_p_mm", 0.0) * 1e-3,
        sigma_r=np.radians(raw.get("sigma_r_deg", 0.0)),
        n_repeats=raw.get("n_repeats", 1),
        seed=raw.get("seed", 0),
        conformance=raw.get("conformance", "geometric"),
        n_points=raw.get("n_points", 120),
        n_rotations=raw.get("n_rotations", 8),
        save_traces=raw.get("save_traces", False),
    )
    report = run_experiment(config, out_dir=args.out)
    obj = report.summary["overall"]["obj_dp_mm"]
    print(f"{report.summary['n_trials']} trials -> {args.out}")
    print(f"object dp std per axis (mm): "
          + ", ".join(f"{s:.4f}" for s in obj["std"]))
    return 0


def cmd_write_default_config(args) -> int:
    dump_json({
        "mesh": "l-shape",
        "max_theta_deg": 5.0,
        "max_delta_mm": 10.0,
        "sigma_p_mm": 0.1,
        "sigma_r_deg": 0.05,
        "n_repeats": 100,
        "seed": 0,
        "conformance": "geometric",
        "n_points": 120,
        "n_rotations": 8,
    }, args.out)
    print(f"default experiment config -> {args.out}")
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="trigrasp",
        description="Grasp planning, conformance simulation, and "
                    "three-grasp object pose estimation.")
    parser.add_argument("--version", action="version", version=__version__)
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("plan-grasps", help="sample antipodal grasp candidates")
    p.add_argument("--mesh", required=True,
                   help="mesh file (.stl/.obj) or preset name "
                        "(l-shape, diamond-prism, box-25)")
    p.add_argument("--scale", type=float, default=0.001,
                   help="unit scale for mesh files (default mm -> m)")
    p.add_argument("--n-points", type=int, default=100)
    p.add_argument("--n-rotations", type=int, default=8)
    p.add_argument("--antipodal-tol", type=float, default=0.01)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_plan_grasps)

    p = sub.add_parser("triplets", help="group grasps and score triplets")
    p.add_argument("--grasps", required=True)
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_triplets)

    p = sub.add_parser("scene-template", help="write a default scene file")
    p.add_argument("--mesh", default="l-shape")
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_scene_template)

    p = sub.add_parser("sequence", help="plan the bimanual regrasp sequence")
    p.add_argument("--grasps", required=True)
    p.add_argument("--triplets", required=True)
    p.add_argument("--scene", required=True)
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_sequence)

    p = sub.add_parser("simulate", help="conform grasps to a true object pose")
    p.add_argument("--plan", required=True)
    p.add_argument("--truth", default=None,
                   help="JSON file with the true object pose")
    p.add_argument("--theta-deg", type=float, default=0.0,
                   help="rotation error about g1's closing axis")
    p.add_argument("--delta1-mm", type=float, default=0.0)
    p.add_argument("--delta3-mm", type=float, default=0.0)
    p.add_argument("--params", default=None, help="admittance parameter JSON")
    p.add_argument("--mode", choices=("admittance", "geometric"),
                   default="admittance")
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_simulate)

    p = sub.add_parser("estimate", help="recover the object pose from records")
    p.add_argument("--conformed", required=True)
    p.add_argument("--sim-object", default=None,
                   help="JSON {'pose': [12 floats]}; defaults to the "
                        "pose stored in the conformed file")
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_estimate)

    p = sub.add_parser("experiment", help="run randomized trials and report")
    p.add_argument("--config", required=True)
    p.add_argument("--out", required=True, help="report output directory")
    p.set_defaults(func=cmd_experiment)

    p = sub.add_parser("write-default-config",
                       help="write a default experiment config")
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_write_default_config)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except TrigraspError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())

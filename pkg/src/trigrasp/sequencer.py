"""Incremental bimanual regrasp sequencing with free-flying grippers.

Arms are modeled as boxes of reachable gripper positions rather than full
kinematic chains; the search walks triplets in score order and member
combinations in lexicographic order, returning the first combination that
passes workspace, gripper-gripper, and approach-segment checks. Both
handovers happen at a single configurable handover pose, so all three
grasps engage the object at the same world pose.
"""
from __future__ import annotations

import itertools
from dataclasses import dataclass, field

import numpy as np

from .errors import PlanNotFound
from .geometry import Pose, compose, obb_overlap
from .gripper import GripperModel
from .planner import check_gripper_collision

APPROACH_SAMPLES = 10

PHASES = ("pick", "handover-give", "handover-receive", "release", "place")


@dataclass(frozen=True, eq=False)
class ArmModel:
    """Reachable gripper-position box and a parked pose for one arm."""

    id: str
    workspace_min: np.ndarray
    workspace_max: np.ndarray
    home: Pose

    def __post_init__(self):
        lo = np.asarray(self.workspace_min, dtype=float).reshape(3)
        hi = np.asarray(self.workspace_max, dtype=float).reshape(3)
        if np.any(hi <= lo):
            raise ValueError("workspace box is empty")
        object.__setattr__(self, "workspace_min", lo)
        object.__setattr__(self, "workspace_max", hi)

    def contains(self, position) -> bool:
        p = np.asarray(position, dtype=float)
        return bool(np.all(p >= self.workspace_min) and
                    np.all(p <= self.workspace_max))


@dataclass(frozen=True, eq=False)
class PlanStep:
    phase: str
    arm: str
    grasp_index: int
    gripper_pose: Pose
    object_pose: Pose
    # Present while a second gripper is attached to the object.
    other_arm: str = ""
    other_grasp_index: int = -1
    other_gripper_pose: Pose = None


@dataclass(frozen=True, eq=False)
class RegraspPlan:
    steps: list
    grasp_indices: tuple      # (g1, g2, g3) candidate indices
    triplet_groups: tuple     # group indices of the chosen triplet
    triplet_score: float
    widths: tuple


def _gripper_world_boxes(pose: Pose, width: float, gripper: GripperModel):
    return [(pose.R @ c + pose.p, h, pose.R)
            for c, h in gripper.body_boxes(width)]


def check_handover_compatibility(g_give, g_receive, object_pose: Pose,
                                 gripper: GripperModel, mesh) -> bool:
    """True iff the two gripper bodies do not intersect each other."""
    pa = compose(object_pose, g_give.pose)
    pb = compose(object_pose, g_receive.pose)
    boxes_a = _gripper_world_boxes(pa, g_give.width, gripper)
    boxes_b = _gripper_world_boxes(pb, g_receive.width, gripper)
    for ca, ha, Ra in boxes_a:
        for cb, hb, Rb in boxes_b:
            if obb_overlap(ca, ha, Ra, cb, hb, Rb):
                return False
    return True


def _approach_clear(grasp_world: Pose, gripper: GripperModel,
                    mesh, object_pose: Pose, other_boxes) -> bool:
    """Check a straight retreat/approach segment along -approach axis.

    The segment is 2 x finger_depth long, sampled at APPROACH_SAMPLES
    poses with the jaws open, against the object and any other gripper.
    """
    approach = grasp_world.R[:, 2]
    for s in np.linspace(0.0, 2.0 * gripper.finger_depth, APPROACH_SAMPLES):
        pose = Pose(grasp_world.R, grasp_world.p - s * approach)
        if s > 0.0:
            local = Pose(object_pose.R.T @ pose.R,
                         object_pose.R.T @ (pose.p - object_pose.p))
            if check_gripper_collision(local, gripper.max_opening, gripper, mesh):
                return False
        for c, h, R in _gripper_world_boxes(pose, gripper.max_opening, gripper):
            for co, ho, Ro in other_boxes:
                if obb_overlap(c, h, R, co, ho, Ro):
                    return False
    return True


def plan_sequence(triplets, candidates, object_start: Pose, object_goal: Pose,
                  arms, handover_pose: Pose, gripper: GripperModel,
                  mesh, groups=None) -> RegraspPlan:
    """First feasible pick - handover - handover - place sequence.

    Triplets are traversed in the given (score-sorted) order and the
    members of each triplet's groups in lexicographic index order, so the
    result is deterministic and first-feasible. Checks are staged so a
    failed g1 or (g1, g2) test skips the whole inner loop, and pairwise
    results are cached; neither changes the visit order.
    """
    if not triplets:
        raise PlanNotFound("no triplets to search")
    if groups is None:
        raise ValueError("plan_sequence requires the grasp groups")
    search = _SequenceSearch(candidates, object_start, object_goal, arms,
                             handover_pose, gripper, mesh)
    for trip in triplets:
        m1, m2, m3 = (groups[g].members for g in trip.groups)
        # Per-grasp prefilters (workspace containment, free approach) do
        # not depend on the partner grasps, so applying them up front
        # leaves the lexicographic visit order of feasible combinations
        # unchanged while skipping hopeless triplets outright.
        m1 = [i for i in m1 if search.g1_ok(i)]
        m3 = [i for i in m3 if search.g3_ok(i)]
        if not m1 or not m3:
            continue
        for i1 in m1:
            for i2 in m2:
                if not search.pair12_ok(i1, i2):
                    continue
                for i3 in m3:
                    if not search.pair23_ok(i2, i3):
                        continue
                    return search.build_plan(trip, (i1, i2, i3))
    raise PlanNotFound("exhausted all triplets and member combinations")


class _SequenceSearch:
    """Staged feasibility checks with per-grasp and per-pair caches."""

    def __init__(self, candidates, object_start, object_goal, arms,
                 handover_pose, gripper, mesh):
        self.candidates = candidates
        self.object_start = object_start
        self.object_goal = object_goal
        self.arm_a, self.arm_b = arms
        self.handover = handover_pose
        self.gripper = gripper
        self.mesh = mesh
        self._world = {}
        self._boxes = {}
        self._cache = {}

    def world_pose(self, idx, base_name):
        key = (idx, base_name)
        if key not in self._world:
            base = {"start": self.object_start, "handover": self.handover,
                    "goal": self.object_goal}[base_name]
            self._world[key] = compose(base, self.candidates[idx].pose)
        return self._world[key]

    def handover_boxes(self, idx):
        if idx not in self._boxes:
            pose = self.world_pose(idx, "handover")
            self._boxes[idx] = _gripper_world_boxes(
                pose, self.candidates[idx].width, self.gripper)
        return self._boxes[idx]

    def _memo(self, key, fn):
        if key not in self._cache:
            self._cache[key] = fn()
        return self._cache[key]

    def g1_ok(self, i1):
        def check():
            pick = self.world_pose(i1, "start")
            give = self.world_pose(i1, "handover")
            if not (self.arm_a.contains(pick.p) and self.arm_a.contains(give.p)):
                return False
            return _approach_clear(pick, self.gripper, self.mesh,
                                   self.object_start, [])
        return self._memo(("g1", i1), check)

    def pair12_ok(self, i1, i2):
        def check():
            recv = self.world_pose(i2, "handover")
            if not self.arm_b.contains(recv.p):
                return False
            if not check_handover_compatibility(
                    self.candidates[i1], self.candidates[i2], self.handover,
                    self.gripper, self.mesh):
                return False
            boxes1 = self.handover_boxes(i1)
            if not _approach_clear(recv, self.gripper, self.mesh,
                                   self.handover, boxes1):
                return False
            # g1 retreats past the newly attached g2 after releasing.
            give = self.world_pose(i1, "handover")
            return _approach_clear(give, self.gripper, self.mesh,
                                   self.handover, self.handover_boxes(i2))
        return self._memo(("p12", i1, i2), check)

    def g3_ok(self, i3):
        def check():
            recv = self.world_pose(i3, "handover")
            place = self.world_pose(i3, "goal")
            if not (self.arm_a.contains(recv.p) and self.arm_a.contains(place.p)):
                return False
            return _approach_clear(place, self.gripper, self.mesh,
                                   self.object_goal, [])
        return self._memo(("g3", i3), check)

    def pair23_ok(self, i2, i3):
        def check():
            if not check_handover_compatibility(
                    self.candidates[i2], self.candidates[i3], self.handover,
                    self.gripper, self.mesh):
                return False
            recv3 = self.world_pose(i3, "handover")
            if not _approach_clear(recv3, self.gripper, self.mesh,
                                   self.handover, self.handover_boxes(i2)):
                return False
            recv2 = self.world_pose(i2, "handover")
            return _approach_clear(recv2, self.gripper, self.mesh,
                                   self.handover, self.handover_boxes(i3))
        return self._memo(("p23", i2, i3), check)

    def build_plan(self, trip, indices):
        return _build_plan(trip, indices, self.candidates, self.object_start,
                           self.object_goal, self.arm_a, self.arm_b,
                           self.handover)


def _build_plan(trip, indices, candidates, object_start, object_goal,
                arm_a, arm_b, handover_pose):
    i1, i2, i3 = indices
    g1, g2, g3 = candidates[i1], candidates[i2], candidates[i3]
    pick = compose(object_start, g1.pose)
    give1 = compose(handover_pose, g1.pose)
    recv2 = compose(handover_pose, g2.pose)
    recv3 = compose(handover_pose, g3.pose)
    place = compose(object_goal, g3.pose)
    steps = [
        PlanStep("pick", arm_a.id, i1, pick, object_start),
        PlanStep("handover-give", arm_a.id, i1, give1, handover_pose),
        PlanStep("handover-receive", arm_b.id, i2, recv2, handover_pose,
                 other_arm=arm_a.id, other_grasp_index=i1,
                 other_gripper_pose=give1),
        PlanStep("release", arm_a.id, i1, give1, handover_pose,
                 other_arm=arm_b.id, other_grasp_index=i2,
                 other_gripper_pose=recv2),
        PlanStep("handover-give", arm_b.id, i2, recv2, handover_pose),
        PlanStep("handover-receive", arm_a.id, i3, recv3, handover_pose,
                 other_arm=arm_b.id, other_grasp_index=i2,
                 other_gripper_pose=recv2),
        PlanStep("release", arm_b.id, i2, recv2, handover_pose,
                 other_arm=arm_a.id, other_grasp_index=i3,
                 other_gripper_pose=recv3),
        PlanStep("place", arm_a.id, i3, place, object_goal),
    ]
    return RegraspPlan(steps=steps, grasp_indices=(i1, i2, i3),
                       triplet_groups=trip.groups, triplet_score=trip.score,
                       widths=(g1.width, g2.width, g3.width))


def validate_plan(plan: RegraspPlan, candidates, groups, gripper: GripperModel,
                  arms) -> list:
    """Re-check every plan invariant from scratch; returns a list of problems."""
    problems = []
    if len(set(plan.grasp_indices)) != 3:
        problems.append("grasps are not three distinct candidates")
    used_groups = []
    for idx in plan.grasp_indices:
        holders = [gi for gi, g in enumerate(groups) if idx in g.members]
        used_groups.extend(holders)
    if sorted(used_groups) != sorted(plan.triplet_groups):
        problems.append("grasps do not cover the triplet's groups one-to-one")

    arm_by_id = {a.id: a for a in arms}
    for n, step in enumerate(plan.steps):
        if step.phase not in PHASES:
            problems.append(f"step {n}: unknown phase {step.phase!r}")
        arm = arm_by_id.get(step.arm)
        if arm is None or not arm.contains(step.gripper_pose.p):
            problems.append(f"step {n}: gripper outside workspace of arm {step.arm}")
        if step.other_gripper_pose is not None:
            w1 = candidates[step.grasp_index].width
            w2 = candidates[step.other_grasp_index].width
            boxes1 = _gripper_world_boxes(step.gripper_pose, w1, gripper)
            boxes2 = _gripper_world_boxes(step.other_gripper_pose, w2, gripper)
            for c1, h1, R1 in boxes1:
                for c2, h2, R2 in boxes2:
                    if obb_overlap(c1, h1, R1, c2, h2, R2):
                        problems.append(f"step {n}: gripper bodies intersect")
                        break
    handover_steps = [(n, s) for n, s in enumerate(plan.steps)
                      if s.phase.startswith("handover")]
    for (na, sa), (nb, sb) in zip(handover_steps, handover_steps[1:]):
        if nb == na + 1 and sa.arm == sb.arm:
            problems.append(f"steps {na},{nb}: consecutive handover steps on one arm")
    return problems


def plan_to_json(plan: RegraspPlan) -> dict:
    return {
        "grasp_indices": list(plan.grasp_indices),
        "triplet_groups": list(plan.triplet_groups),
        "triplet_score": float(plan.triplet_score),
        "widths": [float(w) for w in plan.widths],
        "steps": [
            {
                "phase": s.phase,
                "arm": s.arm,
                "grasp_index": int(s.grasp_index),
                "gripper_pose": s.gripper_pose.to_flat(),
                "object_pose": s.object_pose.to_flat(),
                **({"other_arm": s.other_arm,
                    "other_grasp_index": int(s.other_grasp_index),
                    "other_gripper_pose": s.other_gripper_pose.to_flat()}
                   if s.other_gripper_pose is not None else {}),
            }
            for s in plan.steps
        ],
    }

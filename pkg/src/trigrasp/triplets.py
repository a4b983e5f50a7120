"""Grouping of grasps by undirected closing axis and triplet scoring.

A triplet of groups is scored by the sum of absolute pairwise dot products
of the group axes: 0 means mutually orthogonal, 3 means parallel. Triplets
whose axis matrix is (near-)singular cannot determine an object pose and
are dropped.
"""
from __future__ import annotations

import itertools
from dataclasses import dataclass, field

import numpy as np

from .errors import NoValidTriplet

# Axes within 2 degrees count as the same opening/closing direction.
DEFAULT_GROUP_TOL = 1.0 - np.cos(np.radians(2.0))
DEFAULT_SINGULARITY_TOL = 0.05


def canonical_axis(v) -> np.ndarray:
    """Unit axis with its sign fixed: first non-negligible component > 0."""
    v = np.asarray(v, dtype=float)
    v = v / np.linalg.norm(v)
    for x in v:
        if abs(x) > 1e-9:
            return v if x > 0 else -v
    raise ValueError("zero axis")


@dataclass(frozen=True, eq=False)
class GraspGroup:
    axis: np.ndarray          # canonicalized undirected closing axis
    members: list = field(default_factory=list)  # candidate indices


@dataclass(frozen=True, eq=False)
class Triplet:
    groups: tuple             # indices into the group list
    score: float
    det: float


def group_by_axis(candidates, group_tol: float = DEFAULT_GROUP_TOL) -> list:
    """Greedy assignment of candidates to undirected closing-axis groups."""
    if not candidates:
        raise ValueError("no candidates to group")
    groups = []
    for idx, cand in enumerate(candidates):
        axis = cand.closing_axis
        for g in groups:
            if abs(float(axis @ g.axis)) > 1.0 - group_tol:
                g.members.append(idx)
                break
        else:
            groups.append(GraspGroup(axis=canonical_axis(axis), members=[idx]))
    return groups


def score_triplet(v_i, v_j, v_k) -> float:
    """Orthogonality score: |vi . vj| + |vi . vk| + |vj . vk| in [0, 3]."""
    v_i = np.asarray(v_i, dtype=float)
    v_j = np.asarray(v_j, dtype=float)
    v_k = np.asarray(v_k, dtype=float)
    return float(abs(v_i @ v_j) + abs(v_i @ v_k) + abs(v_j @ v_k))


def enumerate_triplets(groups, singularity_tol: float = DEFAULT_SINGULARITY_TOL) -> list:
    """All non-singular group triplets, sorted ascending by score.

    Ties break on lexicographic group-index order, so the output is
    deterministic for a given group list.
    """
    if len(groups) < 3:
        raise NoValidTriplet(f"need at least 3 axis groups, got {len(groups)}")
    out = []
    for (i, j, k) in itertools.combinations(range(len(groups)), 3):
        vi, vj, vk = groups[i].axis, groups[j].axis, groups[k].axis
        det = float(np.linalg.det(np.column_stack([vi, vj, vk])))
        if abs(det) <= singularity_tol:
            continue
        out.append(Triplet(groups=(i, j, k),
                           score=score_triplet(vi, vj, vk), det=det))
    if not out:
        raise NoValidTriplet("all group triplets are singular")
    out.sort(key=lambda t: (t.score, t.groups))
    return out


def groups_to_json(groups) -> list:
    return [{"axis": [float(x) for x in g.axis], "members": list(g.members)}
            for g in groups]


def triplets_to_json(triplets) -> list:
    return [{"groups": list(t.groups), "score": float(t.score),
             "det": float(t.det)} for t in triplets]

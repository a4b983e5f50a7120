"""JSON helpers with deterministic formatting."""
from __future__ import annotations

import json
from pathlib import Path

import numpy as np

from .geometry import Pose


def _to_plain(obj):
    if isinstance(obj, dict):
        return {k: _to_plain(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_to_plain(v) for v in obj]
    if isinstance(obj, Pose):
        return obj.to_flat()
    if isinstance(obj, np.ndarray):
        return [_to_plain(v) for v in obj.tolist()]
    if isinstance(obj, (np.floating,)):
        return float(obj)
    if isinstance(obj, (np.integer,)):
        return int(obj)
    return obj


def dump_json(obj, path) -> None:
    Path(path).write_text(json.dumps(_to_plain(obj), indent=2) + "\n")


def load_json(path):
    return json.loads(Path(path).read_text())


def pose_to_json(pose: Pose) -> list:
    return pose.to_flat()


def pose_from_json(values) -> Pose:
    return Pose.from_flat(values)

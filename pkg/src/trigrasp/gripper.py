"""Parallel-jaw gripper geometry.

Grasp frame convention (used everywhere): column 0 of the grasp rotation
is the pad lateral axis, column 1 the closing axis, and column 2 the
approach axis pointing from the palm toward the contact midpoint. The
frame origin sits at the midpoint between the two pad faces, centered on
the pads.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np


@dataclass(frozen=True)
class GripperModel:
    """Jaw range plus the collision boxes of fingers and palm (meters)."""

    max_opening: float = 0.050
    pad_width: float = 0.020
    pad_height: float = 0.020
    finger_depth: float = 0.040
    finger_thickness: float = 0.010
    palm_half_extents: tuple = (0.020, 0.040, 0.012)

    def __post_init__(self):
        if self.max_opening <= 0:
            raise ValueError("max_opening must be positive")
        for name in ("pad_width", "pad_height", "finger_depth", "finger_thickness"):
            if getattr(self, name) <= 0:
                raise ValueError(f"{name} must be positive")
        if any(h <= 0 for h in self.palm_half_extents):
            raise ValueError("palm extents must be positive")

    def body_boxes(self, width: float, pad_shrink: float = 0.0):
        """Finger and palm boxes as (center, half_extents) in the grasp frame.

        pad_shrink pulls the finger faces back from the pads along the
        closing axis so that boxes do not register contact with the faces
        they are meant to touch.
        """
        hw = self.pad_width / 2.0
        ft = self.finger_thickness
        z_tip = self.pad_height / 2.0
        z_finger = z_tip - self.finger_depth / 2.0
        boxes = []
        for sign in (1.0, -1.0):
            cy = sign * (width / 2.0 + pad_shrink + ft / 2.0)
            boxes.append((np.array([0.0, cy, z_finger]),
                          np.array([hw, ft / 2.0, self.finger_depth / 2.0])))
        pz = z_tip - self.finger_depth - self.palm_half_extents[2]
        boxes.append((np.array([0.0, 0.0, pz]),
                      np.array(self.palm_half_extents, dtype=float)))
        return boxes

    def pad_points(self, width: float, n: int = 4):
        """Sample grids on both pad inner faces, in the grasp frame.

        Returns (points_plus, points_minus), each (n*n, 3); the plus pad
        sits at +width/2 along the closing axis.
        """
        xs = (np.arange(n) + 0.5) / n - 0.5
        gx = xs * self.pad_width
        gz = xs * self.pad_height
        X, Z = np.meshgrid(gx, gz, indexing="ij")
        flat = np.column_stack([X.ravel(), np.zeros(n * n), Z.ravel()])
        plus = flat.copy()
        plus[:, 1] = width / 2.0
        minus = flat.copy()
        minus[:, 1] = -width / 2.0
        return plus, minus

"""Force-feedback cable length and servo angle from the finger pose.

The dorsal cable runs through seven guide points, each fixed in one joint
frame. Frame n is reached from frame n-1 by a translation of ``-l_{n-1}``
along x followed by a rotation of ``theta_n`` about z. The cable length is the
polyline length through the guides (in base coordinates) plus a slack
allowance, and the servo angle is that length over the flange radius.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .model import Finger, GloveGeometry


@dataclass(frozen=True)
class FingerPose:
    """Flexion angles ``(theta1, theta2, theta3)`` along one finger, radians."""

    theta: tuple[float, float, float]

    def __post_init__(self):
        if len(self.theta) != 3 or not all(math.isfinite(t) for t in self.theta):
            raise ValueError(f"FingerPose needs three finite angles, got {self.theta!r}")

    @classmethod
    def zero(cls) -> FingerPose:
        return cls((0.0, 0.0, 0.0))


@dataclass(frozen=True)
class CablePath:
    global_points: np.ndarray  # (7, 3), mm
    total_length: float  # mm, slack included
    servo_angle: float  # rad


def frame_transform(n: int, theta_n: float, l_prev: float) -> np.ndarray:
    """Homogeneous transform from frame ``n-1`` to frame ``n``."""
    if n not in (1, 2, 3):
        raise ValueError(f"joint index must be 1..3, got {n}")
    c, s = math.cos(theta_n), math.sin(theta_n)
    return np.array(
        [
            [c, -s, 0.0, -l_prev],
            [s, c, 0.0, 0.0],
            [0.0, 0.0, 1.0, 0.0],
            [0.0, 0.0, 0.0, 1.0],
        ]
    )


def chain_transforms(pose: FingerPose, geometry: GloveGeometry) -> list[np.ndarray]:
    """Base-to-frame transforms ``[I, T01, T01 T12, T01 T12 T23]``."""
    lengths = geometry.segment_lengths
    out = [np.eye(4)]
    for n in (1, 2, 3):
        out.append(out[-1] @ frame_transform(n, pose.theta[n - 1], lengths[n - 1]))
    return out


def cable_length(
    pose: FingerPose, geometry: GloveGeometry, finger: Finger = Finger.INDEX
) -> CablePath:
    table = geometry.routing_points[finger] if geometry.routing_points else None
    if not table:
        raise ValueError(f"no routing points for {finger.name.lower()}")
    frames = chain_transforms(pose, geometry)
    pts = np.array(
        [(frames[p.frame] @ np.array([*p.xyz, 1.0]))[:3] for p in table]
    )
    length = float(np.linalg.norm(np.diff(pts, axis=0), axis=1).sum()) + geometry.sigma
    return CablePath(pts, length, length / geometry.rs)


def servo_target(
    pose: FingerPose,
    geometry: GloveGeometry,
    finger: Finger = Finger.INDEX,
    delta: bool = False,
) -> float:
    """Servo angle for ``pose``; with ``delta`` it is the payout relative to zero pose."""
    theta = cable_length(pose, geometry, finger).servo_angle
    if delta:
        theta -= cable_length(FingerPose.zero(), geometry, finger).servo_angle
    return theta


def pose_of(chain: Sequence[float]) -> FingerPose:
    return FingerPose(tuple(float(t) for t in chain))

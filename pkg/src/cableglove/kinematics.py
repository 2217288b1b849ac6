"""Finger joint angles from the two measurement cables, and the exact inverse.

Each long finger carries an MCP cable (one encoder) and a DIP cable (a second
encoder) that crosses MCP, PIP and DIP. The MCP cable gives the MCP bend
directly; the DIP cable displacement is split across the three joints, with
the PIP angle tied to the DIP angle by the affine coupling

    theta2 = (theta3 + b) / a,   a = 0.989, b = 0.230.

Because the coupling is affine, the DIP angle has a closed form and no
iterative solve is needed.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Sequence

from .model import (
    N_ENCODERS,
    N_JOINTS,
    TWO_PI,
    EncoderFrame,
    Finger,
    GloveGeometry,
    JointState,
    LONG_FINGERS,
    EncoderSettings,
    encoder_channels,
    joint_channels,
)


@dataclass(frozen=True)
class FingerSolveInput:
    theta_em: float
    theta_ed: float
    geometry: GloveGeometry
    calibration_offset: tuple[float, float] = (0.0, 0.0)


@dataclass(frozen=True)
class FingerSolveOutput:
    theta1: float
    theta2: float
    theta3: float
    clamped: bool
    # unclamped solution
    raw_theta1: float
    raw_theta2: float
    raw_theta3: float
    # cable displacements and elongations, mm
    dp1: float
    dp3: float
    dl1: float
    dl2: float
    dl3: float


def _clamp(x: float, lo: float, hi: float) -> float:
    return lo if x < lo else hi if x > hi else x


def pip_from_dip(theta3: float, a: float = 0.989, b: float = 0.230) -> float:
    """PIP bend implied by the DIP bend through the fixed coupling."""
    return (theta3 + b) / a


def solve_finger(inp: FingerSolveInput) -> FingerSolveOutput:
    geo = inp.geometry
    em = inp.theta_em - inp.calibration_offset[0]
    ed = inp.theta_ed - inp.calibration_offset[1]
    if not (math.isfinite(em) and math.isfinite(ed)):
        raise ValueError(f"non-finite encoder input ({inp.theta_em!r}, {inp.theta_ed!r})")
    a, b = geo.pip_coupling_a, geo.pip_coupling_b

    dp1 = geo.rg * em
    theta1 = dp1 / geo.r1
    dl1 = theta1 * geo.r1p
    dp3 = geo.rg * ed
    theta3 = (dp3 - dl1 - (b / a) * geo.r2p) / (geo.r2p / a + geo.r3p)
    theta2 = pip_from_dip(theta3, a, b)
    dl2 = theta2 * geo.r2p
    dl3 = theta3 * geo.r3p

    lim1, lim2, lim3 = geo.limits("mcp"), geo.limits("pip"), geo.limits("dip")
    c1 = _clamp(theta1, *lim1)
    c3 = _clamp(theta3, *lim3)
    # keep the reported PIP on the coupling line of the reported DIP
    c2 = _clamp(pip_from_dip(c3, a, b), *lim2)
    clamped = c1 != theta1 or c3 != theta3 or c2 != theta2
    return FingerSolveOutput(
        c1, c2, c3, clamped, theta1, theta2, theta3, dp1, dp3, dl1, dl2, dl3
    )


def encoders_from_angles(
    theta1: float, theta3: float, geometry: GloveGeometry
) -> tuple[float, float]:
    """Encoder angles (MCP cable, DIP cable) that produce the given bends."""
    g = geometry
    theta2 = pip_from_dip(theta3, g.pip_coupling_a, g.pip_coupling_b)
    em = theta1 * g.r1 / g.rg
    ed = (theta1 * g.r1p + theta2 * g.r2p + theta3 * g.r3p) / g.rg
    return em, ed


def solve_thumb_ip(mcp: float, theta_ed: float, geometry: GloveGeometry) -> float:
    """IP bend from the thumb's two-joint cable; the thumb has no coupled joint."""
    return (geometry.rg * theta_ed - mcp * geometry.thumb_r_mcp) / geometry.thumb_r_ip


@dataclass(frozen=True)
class Calibration:
    """Per-channel encoder readings captured at the model-zero (flat) pose."""

    offsets: tuple[float, ...] = (0.0,) * N_ENCODERS

    def __post_init__(self):
        if len(self.offsets) != N_ENCODERS:
            raise ValueError(f"calibration needs {N_ENCODERS} offsets")
        if not all(math.isfinite(o) for o in self.offsets):
            raise ValueError("calibration offsets must be finite")


def calibrate(frame: EncoderFrame) -> Calibration:
    return Calibration(tuple(frame.readings))


def encoder_angles(
    state: JointState, geometry: GloveGeometry, splay_ratio: float = 1.0
) -> tuple[float, ...]:
    """Model encoder angles (before calibration offset) for a glove pose.

    The PIP entries of ``state`` are ignored: the measurement cables only see
    MCP and DIP, and PIP follows from DIP.
    """
    out = [0.0] * N_ENCODERS
    for f in LONG_FINGERS:
        mcp, _pip, dip, splay = state.finger(f)
        em, ed = encoders_from_angles(mcp, dip, geometry)
        ch = encoder_channels(f)
        out[ch[0]], out[ch[1]], out[ch[2]] = em, ed, splay / splay_ratio
    tm_bend, tm_splay, mcp, ip = state.finger(Finger.THUMB)
    out[12] = tm_bend
    out[13] = tm_splay / splay_ratio
    out[14] = mcp
    out[15] = (mcp * geometry.thumb_r_mcp + ip * geometry.thumb_r_ip) / geometry.rg
    return tuple(out)


def solve_hand(
    frame: EncoderFrame | Sequence[float],
    geometry: GloveGeometry,
    calibration: Calibration | None = None,
    splay_ratio: float = 1.0,
) -> JointState:
    """Full 20-DoF pose from one encoder frame (or a bare list of 16 readings)."""
    readings = frame.readings if isinstance(frame, EncoderFrame) else tuple(frame)
    if len(readings) != N_ENCODERS:
        raise ValueError(f"expected {N_ENCODERS} encoder readings")
    offsets = (calibration or Calibration()).offsets
    enc = [r - o for r, o in zip(readings, offsets)]
    if not all(math.isfinite(e) for e in enc):
        raise ValueError("non-finite encoder reading")

    limits = geometry.joint_limits()
    angles = [0.0] * N_JOINTS
    clamped = [False] * N_JOINTS
    for f in LONG_FINGERS:
        ch = encoder_channels(f)
        out = solve_finger(FingerSolveInput(enc[ch[0]], enc[ch[1]], geometry))
        j = joint_channels(f)
        angles[j[0]], angles[j[1]], angles[j[2]] = out.theta1, out.theta2, out.theta3
        clamped[j[0]] = out.theta1 != out.raw_theta1
        clamped[j[1]] = out.theta2 != out.raw_theta2
        clamped[j[2]] = out.theta3 != out.raw_theta3
        angles[j[3]] = enc[ch[2]] * splay_ratio

    raw_thumb = [enc[12], enc[13] * splay_ratio, enc[14]]
    raw_thumb.append(solve_thumb_ip(enc[14], enc[15], geometry))
    for i, value in zip(joint_channels(Finger.THUMB), raw_thumb):
        angles[i] = value
    for f in LONG_FINGERS:
        i = joint_channels(f)[3]
        lo, hi = limits[i]
        c = _clamp(angles[i], lo, hi)
        clamped[i] = c != angles[i]
        angles[i] = c
    for i in joint_channels(Finger.THUMB):
        lo, hi = limits[i]
        c = _clamp(angles[i], lo, hi)
        clamped[i] = c != angles[i]
        angles[i] = c
    return JointState(tuple(angles), tuple(clamped))


def frame_for_state(
    state: JointState,
    geometry: GloveGeometry,
    settings: EncoderSettings,
    timestamp: int = 0,
    quantize: bool = False,
) -> EncoderFrame:
    """Encoder frame a glove would report for ``state`` (mount offset included)."""
    base = settings.mount_offset_counts * TWO_PI / settings.counts_per_rev
    angles = [a + base for a in encoder_angles(state, geometry, settings.splay_ratio)]
    return EncoderFrame.from_angles(timestamp, angles, settings, quantize=quantize)


def zero_calibration(settings: EncoderSettings) -> Calibration:
    """Calibration captured from a frame at model zero (all encoders at mount offset)."""
    zero = EncoderFrame.from_counts(0, [settings.mount_offset_counts] * N_ENCODERS, settings)
    return calibrate(zero)

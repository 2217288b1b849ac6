"""Haptic feedback policy: force thresholds to LRA waveform or cable tension.

Force bands (N), with t0 < t1 < t2 = 0.1, 0.5, 1.0 by default:

    f <  t0          no feedback
    t0 <= f <  t1    vibration, waveform 1
    t1 <= f <= t2    vibration, waveform 2
    f >  t2          kinesthetic force feedback (cable tension), no vibration

A mode is entered at its threshold and left only once the force drops a
hysteresis band below it.
"""

from __future__ import annotations

from dataclasses import dataclass, replace

from .cable_follow import FingerPose, servo_target
from .model import (
    FeedbackCommand,
    FeedbackMode,
    FeedbackSettings,
    Finger,
    ForceSample,
    GloveGeometry,
    Waveform,
)


@dataclass(frozen=True)
class FeedbackPolicy:
    thresholds: tuple[float, float, float] = (0.1, 0.5, 1.0)
    hysteresis: float = 0.02
    current_per_newton: float = 65.0  # mA per N
    tension_offset_mm: float = 1.5
    waveform_hz: tuple[float, float] = (160.0, 240.0)

    def __post_init__(self):
        t0, t1, t2 = self.thresholds
        if not 0 < t0 < t1 < t2:
            raise ValueError("thresholds must satisfy 0 < t0 < t1 < t2")
        if not 0 <= self.hysteresis < (t1 - t0) / 2:
            raise ValueError("hysteresis must be in [0, (t1 - t0)/2)")
        if self.current_per_newton <= 0:
            raise ValueError("current_per_newton must be > 0")

    @classmethod
    def from_settings(cls, s: FeedbackSettings) -> FeedbackPolicy:
        return cls(
            tuple(s.thresholds), s.hysteresis, s.current_per_newton,
            s.tension_offset_mm, tuple(s.waveform_hz),
        )


def current_to_force(current: float, policy: FeedbackPolicy) -> float:
    if current < 0:
        raise ValueError(f"current must be >= 0, got {current}")
    return current / policy.current_per_newton


def force_to_current(force: float, policy: FeedbackPolicy) -> float:
    if force < 0:
        raise ValueError(f"force must be >= 0, got {force}")
    return force * policy.current_per_newton


def classify_force(force: float, policy: FeedbackPolicy) -> FeedbackMode:
    """Memoryless band lookup."""
    t0, t1, t2 = policy.thresholds
    if force < t0:
        return FeedbackMode.NONE
    if force < t1:
        return FeedbackMode.WAVEFORM1
    if force <= t2:
        return FeedbackMode.WAVEFORM2
    return FeedbackMode.FORCE_FEEDBACK


def next_mode(current: FeedbackMode, force: float, policy: FeedbackPolicy) -> FeedbackMode:
    """Band lookup with hysteresis relative to the mode currently held."""
    raw = classify_force(force, policy)
    if raw >= current:
        return raw
    # still inside the release band of the held mode?
    held = classify_force(force + policy.hysteresis, policy)
    return FeedbackMode(max(raw, min(current, held)))


_WAVEFORM = {
    FeedbackMode.NONE: Waveform.OFF,
    FeedbackMode.WAVEFORM1: Waveform.WAVEFORM1,
    FeedbackMode.WAVEFORM2: Waveform.WAVEFORM2,
    FeedbackMode.FORCE_FEEDBACK: Waveform.OFF,
}


@dataclass(frozen=True)
class FeedbackState:
    modes: tuple[FeedbackMode, ...] = (FeedbackMode.NONE,) * len(Finger)
    last_transition: tuple[int, ...] = (0,) * len(Finger)
    # servo angle latched when force feedback engaged, per finger
    hold_target: tuple[float, ...] = (0.0,) * len(Finger)

    def mode(self, finger: Finger) -> FeedbackMode:
        return self.modes[finger]


def _set(t: tuple, i: int, value) -> tuple:
    return t[:i] + (value,) + t[i + 1:]


def step_feedback(
    state: FeedbackState,
    sample: ForceSample,
    policy: FeedbackPolicy,
    pose: FingerPose,
    geometry: GloveGeometry,
) -> tuple[FeedbackState, FeedbackCommand]:
    """Advance one finger's mode on a new force sample and emit its command.

    Outside force feedback the servo follows the finger (payout relative to
    the zero pose). On entering force feedback the current follow target is
    latched and the cable is retracted by ``tension_offset_mm`` from there.
    """
    f = Finger(sample.finger)
    prev = state.modes[f]
    mode = next_mode(prev, sample.force, policy)
    follow = servo_target(pose, geometry, f, delta=True)

    new = state
    if mode != prev:
        new = replace(
            new,
            modes=_set(new.modes, f, mode),
            last_transition=_set(new.last_transition, f, sample.timestamp),
        )
        if mode == FeedbackMode.FORCE_FEEDBACK:
            new = replace(new, hold_target=_set(new.hold_target, f, follow))

    active = mode == FeedbackMode.FORCE_FEEDBACK
    if active:
        target = new.hold_target[f] - policy.tension_offset_mm / geometry.rs
    else:
        target = follow
    return new, FeedbackCommand(f, _WAVEFORM[mode], target, active)


def run_stream(
    samples, policy: FeedbackPolicy, pose: FingerPose | None = None,
    geometry: GloveGeometry | None = None,
) -> list[tuple[FeedbackMode, FeedbackCommand]]:
    """Feed a sequence of samples through a fresh state; handy for CLI and tests."""
    geometry = geometry or GloveGeometry()
    pose = pose or FingerPose.zero()
    state = FeedbackState()
    out = []
    for s in samples:
        state, cmd = step_feedback(state, s, policy, pose, geometry)
        out.append((state.modes[s.finger], cmd))
    return out

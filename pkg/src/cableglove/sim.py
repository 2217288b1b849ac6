"""Deterministic discrete-time teleoperation loop.

Each tick the true operator pose is turned into encoder readings (with
optional quantization, Gaussian noise and linear drift), solved back into a
glove pose, retargeted onto a hand model, and pressed against a virtual
contact: a linear angular spring on every finger's distal joint. The contact
force then travels back through the feedback chain

    force sample -> sensor -> bus_up -> compute (policy) -> bus_down -> servo_mech

whose stage latencies are applied through an ordered delay queue. Time is
integer microseconds; nothing reads the wall clock, so a run is a pure
function of (config, seed, trajectory).
"""

from __future__ import annotations

import csv
import hashlib
import heapq
import io
import math
from dataclasses import dataclass, field
from pathlib import Path
from typing import Protocol, TextIO

import numpy as np

from .feedback import FeedbackPolicy, FeedbackState, next_mode, step_feedback
from .cable_follow import FingerPose
from .kinematics import encoder_angles, solve_hand, zero_calibration
from .model import (
    LATENCY_STAGES,
    N_ENCODERS,
    N_JOINTS,
    TWO_PI,
    Config,
    ConfigError,
    EncoderFrame,
    FeedbackMode,
    Finger,
    ForceSample,
    JointState,
    FINGER_NAMES,
    JOINT_INDEX,
)
from .retarget import HandModel, resolve_model, retarget

N_FINGERS = len(Finger)


class TrajectoryError(ValueError):
    pass


# ---------------------------------------------------------------------------
# Trajectories
# ---------------------------------------------------------------------------

class Trajectory(Protocol):
    duration_us: int | None  # None means unbounded

    def pose(self, k: int, tick_us: int) -> JointState: ...


def _flat_pose() -> JointState:
    return JointState.from_measured([(0.0, 0.0, 0.0)] * 4, (0.0, 0.0, 0.0, 0.0))


def _with_finger(base: JointState, finger: Finger, mcp: float, dip: float) -> JointState:
    fingers = []
    for f in range(4):
        m, _, d, s = base.finger(Finger(f))
        fingers.append((mcp, dip, s) if f == finger else (m, d, s))
    thumb = list(base.finger(Finger.THUMB))
    if finger == Finger.THUMB:
        thumb[2], thumb[3] = mcp, dip
    return JointState.from_measured(fingers, thumb)


@dataclass(frozen=True)
class StaticTrajectory:
    state: JointState = field(default_factory=_flat_pose)
    duration_us: int | None = None

    def pose(self, k: int, tick_us: int) -> JointState:
        return self.state


@dataclass(frozen=True)
class ReachTrajectory:
    """Repeated reach-and-return of one finger.

    The DIP bend follows ``peak * (1 - cos(2 pi phase)) / 2``; the MCP bend
    moves at ``mcp_ratio`` times the DIP bend. The phase is taken from the
    integer tick index, so every cycle is bit-identical.
    """

    finger: Finger = Finger.INDEX
    period_ticks: int = 200
    peak: float = math.radians(80.0)
    mcp_ratio: float = 0.0
    duration_us: int | None = None

    def pose(self, k: int, tick_us: int) -> JointState:
        phase = (k % self.period_ticks) / self.period_ticks
        dip = self.peak * (1.0 - math.cos(TWO_PI * phase)) / 2.0
        return _with_finger(_flat_pose(), self.finger, self.mcp_ratio * dip, dip)


@dataclass(frozen=True)
class SinusoidTrajectory:
    """DIP bend ``mean + amplitude * sin(2 pi t / period)`` on one finger."""

    finger: Finger = Finger.INDEX
    mean: float = math.radians(45.0)
    amplitude: float = math.radians(30.0)
    period_us: int = 1_000_000
    duration_us: int | None = None

    def pose(self, k: int, tick_us: int) -> JointState:
        t = k * tick_us
        dip = self.mean + self.amplitude * math.sin(TWO_PI * t / self.period_us)
        return _with_finger(_flat_pose(), self.finger, 0.0, dip)


@dataclass(frozen=True)
class RecordedTrajectory:
    """Sample-and-hold playback of timestamped poses."""

    timestamps: tuple[int, ...]
    states: tuple[JointState, ...]

    @property
    def duration_us(self) -> int:
        return self.timestamps[-1] if self.timestamps else 0

    def pose(self, k: int, tick_us: int) -> JointState:
        t = k * tick_us
        i = int(np.searchsorted(self.timestamps, t, side="right")) - 1
        return self.states[max(i, 0)]

    @classmethod
    def from_csv(cls, path: str | Path) -> RecordedTrajectory:
        """Read ``timestamp_us, q_00..q_19`` (radians) rows; comment lines skipped."""
        ts, states = [], []
        with open(path, newline="", encoding="utf-8") as fh:
            reader = csv.DictReader(line for line in fh if not line.startswith("#"))
            for row in reader:
                ts.append(int(row["timestamp_us"]))
                states.append(JointState(tuple(float(row[f"q_{i:02d}"]) for i in range(N_JOINTS))))
        return cls(tuple(ts), tuple(states))


def trajectory_from_settings(spec: dict, tick_us: int) -> Trajectory:
    kind = spec.get("kind")
    finger = spec.get("finger", "index")
    if finger not in FINGER_NAMES:
        raise ConfigError("sim.trajectory.finger", f"unknown finger {finger!r}")
    f = Finger(FINGER_NAMES.index(finger))
    if kind == "static":
        return StaticTrajectory()
    if kind == "reach":
        period_ticks = round(float(spec.get("period_s", 2.0)) * 1e6 / tick_us)
        if period_ticks <= 0:
            raise ConfigError("sim.trajectory.period_s", "period shorter than one tick")
        return ReachTrajectory(
            f, period_ticks, math.radians(float(spec.get("peak_deg", 80.0))),
            float(spec.get("mcp_ratio", 0.0)),
        )
    if kind == "sinusoid":
        return SinusoidTrajectory(
            f,
            math.radians(float(spec.get("mean_deg", 45.0))),
            math.radians(float(spec.get("amplitude_deg", 30.0))),
            int(float(spec.get("period_s", 1.0)) * 1e6),
        )
    if kind == "recorded":
        return RecordedTrajectory.from_csv(spec["path"])
    raise ConfigError("sim.trajectory.kind", f"unknown trajectory kind {kind!r}")


# ---------------------------------------------------------------------------
# Trace
# ---------------------------------------------------------------------------

UNITS_HEADER = (
    "# units: timestamp_us=microseconds enc=raw counts q=rad cmd=rad "
    "force=N mode=0 none/1 waveform1/2 waveform2/3 force-feedback servo=rad"
)


@dataclass(frozen=True)
class TraceRow:
    timestamp: int
    counts: tuple[int, ...]
    q: tuple[float, ...]
    cmd: tuple[float, ...]
    force: tuple[float, ...]
    mode: tuple[int, ...]
    servo: tuple[float, ...]

    def flat(self) -> list:
        return [self.timestamp, *self.counts, *self.q, *self.cmd, *self.force, *self.mode, *self.servo]


def trace_header(n_cmd: int) -> list[str]:
    return (
        ["timestamp_us"]
        + [f"enc_{i:02d}" for i in range(N_ENCODERS)]
        + [f"q_{i:02d}" for i in range(N_JOINTS)]
        + [f"cmd_{i:02d}" for i in range(n_cmd)]
        + [f"force_{i}" for i in range(N_FINGERS)]
        + [f"mode_{i}" for i in range(N_FINGERS)]
        + [f"servo_{i}" for i in range(N_FINGERS)]
    )


@dataclass
class Trace:
    rows: list[TraceRow]
    n_cmd: int

    def __len__(self) -> int:
        return len(self.rows)

    @property
    def header(self) -> list[str]:
        return trace_header(self.n_cmd)

    def column(self, name: str) -> list:
        idx = self.header.index(name)
        return [r.flat()[idx] for r in self.rows]

    def decimate(self, divider: int) -> Trace:
        return Trace(self.rows[::divider], self.n_cmd)

    def write_csv(self, out: TextIO) -> None:
        out.write(UNITS_HEADER + "\n")
        writer = csv.writer(out, lineterminator="\n")
        writer.writerow(self.header)
        for r in self.rows:
            writer.writerow([repr(v) if isinstance(v, float) else v for v in r.flat()])

    def to_csv_text(self) -> str:
        buf = io.StringIO()
        self.write_csv(buf)
        return buf.getvalue()

    def save(self, path: str | Path) -> None:
        Path(path).write_text(self.to_csv_text(), encoding="utf-8")

    def sha256(self) -> str:
        return hashlib.sha256(self.to_csv_text().encode("utf-8")).hexdigest()

    @classmethod
    def load(cls, path: str | Path) -> Trace:
        return cls.from_csv_text(Path(path).read_text(encoding="utf-8"))

    @classmethod
    def from_csv_text(cls, text: str) -> Trace:
        lines = [ln for ln in text.splitlines() if ln and not ln.startswith("#")]
        reader = csv.reader(lines)
        try:
            header = next(reader)
        except StopIteration:
            raise TrajectoryError("empty trace file") from None
        n_cmd = sum(1 for h in header if h.startswith("cmd_"))
        if header != trace_header(n_cmd):
            raise TrajectoryError("trace header does not match the fixed column layout")
        rows = []
        for line_no, rec in enumerate(reader, start=2):
            if len(rec) != len(header):
                raise TrajectoryError(f"trace row {line_no}: expected {len(header)} fields")
            try:
                vals = iter(rec)
                ts = int(next(vals))
                counts = tuple(int(next(vals)) for _ in range(N_ENCODERS))
                q = tuple(float(next(vals)) for _ in range(N_JOINTS))
                cmd = tuple(float(next(vals)) for _ in range(n_cmd))
                force = tuple(float(next(vals)) for _ in range(N_FINGERS))
                mode = tuple(int(next(vals)) for _ in range(N_FINGERS))
                servo = tuple(float(next(vals)) for _ in range(N_FINGERS))
            except ValueError as exc:
                raise TrajectoryError(f"trace row {line_no}: {exc}") from None
            rows.append(TraceRow(ts, counts, q, cmd, force, mode, servo))
        return cls(rows, n_cmd)


# ---------------------------------------------------------------------------
# Episode
# ---------------------------------------------------------------------------

def contact_force(dip: float, stiffness: float, engage: float) -> float:
    return stiffness * max(0.0, dip - engage)


def _stage_us(config: Config) -> dict[str, int]:
    return {s: int(round(config.sim.latencies_ms[s] * 1000)) for s in LATENCY_STAGES}


def run_episode(
    config: Config,
    trajectory: Trajectory | None = None,
    model: HandModel | None = None,
    seed: int | np.random.SeedSequence | None = None,
    n_ticks: int | None = None,
) -> Trace:
    """Run one closed-loop episode and return the full-rate trace."""
    sim, geo, enc = config.sim, config.geometry, config.encoders
    tick = sim.tick_us
    if trajectory is None:
        trajectory = trajectory_from_settings(dict(sim.trajectory), tick)
    if model is None:
        model = resolve_model(sim.hand_model)
    if n_ticks is None:
        n_ticks = int(round(sim.duration_s * 1e6 / tick))
    if trajectory.duration_us is not None and (n_ticks - 1) * tick > trajectory.duration_us:
        raise TrajectoryError(
            f"trajectory covers {trajectory.duration_us} us, episode needs {(n_ticks - 1) * tick} us"
        )
    rng = np.random.default_rng(sim.seed if seed is None else seed)
    policy = FeedbackPolicy.from_settings(config.feedback)
    calib = zero_calibration(enc)
    base = enc.mount_offset_counts * TWO_PI / enc.counts_per_rev
    noise_std = math.radians(sim.encoder_noise_deg)
    drift = math.radians(sim.drift_deg_per_s)
    stiffness, engage = sim.stiffness_n_per_rad, math.radians(sim.engage_deg)
    stages = _stage_us(config)
    uplink = stages["sensor"] + stages["bus_up"] + stages["compute"]
    downlink = stages["bus_down"] + stages["servo_mech"]

    fb_state = FeedbackState()
    applied_mode = [int(FeedbackMode.NONE)] * N_FINGERS
    applied_servo = [0.0] * N_FINGERS
    decisions: list = []  # (due_us, seq, ForceSample)
    actions: list = []  # (due_us, seq, FeedbackCommand)
    seq = 0
    rows = []

    for k in range(n_ticks):
        t = k * tick
        true = trajectory.pose(k, tick)
        angles = np.array(encoder_angles(true, geo, enc.splay_ratio)) + base
        if drift:
            angles = angles + drift * (t * 1e-6)
        if noise_std > 0:
            angles = angles + rng.normal(0.0, noise_std, N_ENCODERS)
        frame = EncoderFrame.from_angles(t, angles.tolist(), enc, quantize=sim.quantize)
        solved = solve_hand(frame, geo, calib, enc.splay_ratio)
        command = retarget(solved, model)

        forces = tuple(contact_force(solved.dip(Finger(f)), stiffness, engage) for f in range(N_FINGERS))
        for f, force in enumerate(forces):
            current = force * policy.current_per_newton
            heapq.heappush(decisions, (t + uplink, seq, ForceSample(Finger(f), current, force, t)))
            seq += 1

        while decisions and decisions[0][0] <= t:
            _, _, sample = heapq.heappop(decisions)
            pose = FingerPose(solved.bend_chain(sample.finger))
            fb_state, fb_cmd = step_feedback(fb_state, sample, policy, pose, geo)
            heapq.heappush(actions, (t + downlink, seq, fb_cmd))
            seq += 1

        while actions and actions[0][0] <= t:
            _, _, fb_cmd = heapq.heappop(actions)
            f = int(fb_cmd.finger)
            applied_mode[f] = (
                int(FeedbackMode.FORCE_FEEDBACK) if fb_cmd.force_feedback_active else int(fb_cmd.waveform)
            )
            applied_servo[f] = fb_cmd.servo_target

        rows.append(
            TraceRow(
                t, frame.raw_counts, solved.angles, command.targets, forces,
                tuple(applied_mode), tuple(applied_servo),
            )
        )
    return Trace(rows, model.dof)


def run_episodes(config: Config, n: int, **kwargs) -> list[Trace]:
    """``n`` independent episodes with seeds spawned from the configured seed."""
    children = np.random.SeedSequence(config.sim.seed).spawn(n)
    return [run_episode(config, seed=child, **kwargs) for child in children]


# ---------------------------------------------------------------------------
# Reports
# ---------------------------------------------------------------------------

class ReportError(ValueError):
    pass


@dataclass(frozen=True)
class RepeatabilityReport:
    contact_angles_deg: tuple[float, ...]
    mean_deg: float
    std_deg: float

    def summary(self) -> str:
        return (
            f"contacts={len(self.contact_angles_deg)} "
            f"mean_contact_deg={self.mean_deg:.3f} std_deg={self.std_deg:.3f}"
        )


def repeatability_report(
    trace: Trace, finger: Finger = Finger.INDEX, threshold: float = 0.1
) -> RepeatabilityReport:
    """Contact angle statistics over repeated reach cycles.

    A contact event is an upward crossing of ``threshold`` by the finger's
    force; its angle is the solved distal bend on that row.
    """
    dip_col = JOINT_INDEX["thumb.ip"] if finger == Finger.THUMB else 4 * finger + 2
    angles = []
    prev = None
    for row in trace.rows:
        f = row.force[finger]
        if prev is not None and prev < threshold <= f:
            angles.append(math.degrees(row.q[dip_col]))
        prev = f
    if len(angles) < 3:
        raise ReportError(f"need at least 3 contact events, found {len(angles)}")
    n = len(angles)
    mean = sum(angles) / n
    std = math.sqrt(sum((a - mean) ** 2 for a in angles) / (n - 1))
    return RepeatabilityReport(tuple(angles), mean, std)


@dataclass(frozen=True)
class LatencyReport:
    latencies_us: tuple[int, ...]
    mean_ms: float
    max_ms: float
    tick_us: int | None = None

    def summary(self) -> str:
        tick = f"±{self.tick_us / 1000:g}" if self.tick_us else ""
        return (
            f"events={len(self.latencies_us)} mean_latency_ms={self.mean_ms:.1f}{tick} "
            f"max_latency_ms={self.max_ms:.1f}"
        )


def latency_report(trace: Trace, policy: FeedbackPolicy | None = None) -> LatencyReport:
    """Force-event to servo-action latency for every force-feedback activation.

    Activations are found by replaying the mode automaton on the logged force
    columns; the matching action is the next row where the applied mode turns
    to force feedback.
    """
    policy = policy or FeedbackPolicy()
    ff = int(FeedbackMode.FORCE_FEEDBACK)
    latencies = []
    for f in range(N_FINGERS):
        mode = FeedbackMode.NONE
        triggers, onsets = [], []
        prev_applied = None
        for row in trace.rows:
            new = next_mode(mode, row.force[f], policy)
            if new == FeedbackMode.FORCE_FEEDBACK and mode != FeedbackMode.FORCE_FEEDBACK:
                triggers.append(row.timestamp)
            mode = new
            applied = row.mode[f]
            if applied == ff and prev_applied != ff:
                onsets.append(row.timestamp)
            prev_applied = applied
        j = 0
        for trig in triggers:
            while j < len(onsets) and onsets[j] < trig:
                j += 1
            if j == len(onsets):
                break
            latencies.append(onsets[j] - trig)
            j += 1
    if not latencies:
        raise ReportError("no force-feedback activation with a matching servo action")
    tick = trace.rows[1].timestamp - trace.rows[0].timestamp if len(trace.rows) > 1 else None
    mean = sum(latencies) / len(latencies) / 1000.0
    return LatencyReport(tuple(latencies), mean, max(latencies) / 1000.0, tick)

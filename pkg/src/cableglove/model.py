"""Domain types, physical constants and the configuration schema.

Everything here is an immutable value. Lengths are millimetres, angles are
radians internally; the configuration file stores angles in degrees and the
dataclasses that mirror the file keep those degree values verbatim so that a
load/serialize round trip is bit-exact.
"""

from __future__ import annotations

import enum
import math
from dataclasses import asdict, dataclass, field, fields, replace
from pathlib import Path
from typing import Any, Mapping, Sequence

import yaml

TWO_PI = 2.0 * math.pi

N_ENCODERS = 16
N_JOINTS = 20


class Finger(enum.IntEnum):
    INDEX = 0
    MIDDLE = 1
    RING = 2
    PINKY = 3
    THUMB = 4


LONG_FINGERS = (Finger.INDEX, Finger.MIDDLE, Finger.RING, Finger.PINKY)
FINGER_NAMES = tuple(f.name.lower() for f in Finger)

# Encoder channel layout: three channels per long finger (MCP cable, DIP cable,
# MCP splay), then the four thumb channels.
ENCODER_NAMES: tuple[str, ...] = tuple(
    f"{name}.{ch}"
    for name in FINGER_NAMES[:4]
    for ch in ("mcp_cable", "dip_cable", "splay")
) + ("thumb.tm_bend", "thumb.tm_splay", "thumb.mcp", "thumb.ip_cable")

# Joint layout of the 20-DoF glove pose.
JOINT_NAMES: tuple[str, ...] = tuple(
    f"{name}.{j}" for name in FINGER_NAMES[:4] for j in ("mcp", "pip", "dip", "splay")
) + ("thumb.tm_bend", "thumb.tm_splay", "thumb.mcp", "thumb.ip")

JOINT_INDEX = {name: i for i, name in enumerate(JOINT_NAMES)}


def encoder_channels(finger: Finger) -> tuple[int, ...]:
    """Encoder channel indices belonging to ``finger``."""
    if finger == Finger.THUMB:
        return (12, 13, 14, 15)
    return (3 * finger, 3 * finger + 1, 3 * finger + 2)


def joint_channels(finger: Finger) -> tuple[int, ...]:
    if finger == Finger.THUMB:
        return (16, 17, 18, 19)
    return (4 * finger, 4 * finger + 1, 4 * finger + 2, 4 * finger + 3)


class ConfigError(ValueError):
    """Raised for malformed or invalid configuration; ``key`` names the culprit."""

    def __init__(self, key: str, message: str):
        super().__init__(f"{key}: {message}")
        self.key = key


# ---------------------------------------------------------------------------
# Geometry
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class RoutingPoint:
    """A cable guide point expressed in local joint frame ``frame`` (0 = base)."""

    frame: int
    xyz: tuple[float, float, float]


ROUTING_LABELS = ("O1", "A1", "A2", "B1", "B2", "C1", "C2")
ROUTING_FRAMES = (0, 1, 1, 2, 2, 3, 3)

# Joint limits in degrees, keyed by joint kind.
DEFAULT_LIMITS_DEG: dict[str, tuple[float, float]] = {
    "mcp": (0.0, 90.0),
    "pip": (0.0, 110.0),
    "dip": (0.0, 90.0),
    "splay": (-20.0, 20.0),
    "thumb_tm_bend": (0.0, 90.0),
    "thumb_tm_splay": (-30.0, 60.0),
    "thumb_mcp": (0.0, 90.0),
    "thumb_ip": (0.0, 90.0),
}

_JOINT_KIND = ("mcp", "pip", "dip", "splay") * 4 + (
    "thumb_tm_bend",
    "thumb_tm_splay",
    "thumb_mcp",
    "thumb_ip",
)


def default_routing_points(
    l1: float, l2: float, l3: float, height: float
) -> tuple[RoutingPoint, ...]:
    """Dorsal routing table: O1 above the base origin, two guides per phalanx.

    The guides on phalanx n sit at 30 % and 70 % of its length, offset
    ``height`` mm to the dorsal side, so the path is collinear at zero pose.
    """
    pts = [RoutingPoint(0, (0.0, height, 0.0))]
    for n, length in zip((1, 2, 3), (l1, l2, l3)):
        pts.append(RoutingPoint(n, (-0.3 * length, height, 0.0)))
        pts.append(RoutingPoint(n, (-0.7 * length, height, 0.0)))
    return tuple(pts)


@dataclass(frozen=True)
class GloveGeometry:
    r1: float = 16.25
    r1p: float = 23.25
    r2p: float = 19.31
    r3p: float = 17.42
    rg: float = 6.0
    rs: float = 10.0
    l0: float = 35.71
    l1: float = 44.33
    l2: float = 24.21
    l3: float = 23.51
    sigma: float = 2.0
    pip_coupling_a: float = 0.989
    pip_coupling_b: float = 0.230
    routing_height: float = 8.0
    # thumb cable radii: the IP cable crosses the thumb MCP and IP joints
    thumb_r_mcp: float = 20.0
    thumb_r_ip: float = 15.0
    limits_deg: Mapping[str, tuple[float, float]] = field(
        default_factory=lambda: dict(DEFAULT_LIMITS_DEG)
    )
    # one 7-point table per finger, in Finger order; None -> defaults
    routing_points: tuple[tuple[RoutingPoint, ...], ...] | None = None

    def __post_init__(self):
        if self.routing_points is None:
            table = default_routing_points(self.l1, self.l2, self.l3, self.routing_height)
            object.__setattr__(self, "routing_points", (table,) * len(Finger))
        self.validate()

    def validate(self) -> None:
        for key in ("r1", "r1p", "r2p", "r3p", "rg", "rs", "l0", "l1", "l2", "l3",
                    "pip_coupling_a", "thumb_r_mcp", "thumb_r_ip"):
            value = getattr(self, key)
            if not (math.isfinite(value) and value > 0):
                raise ConfigError(key, f"must be a finite positive number, got {value!r}")
        if not (math.isfinite(self.sigma) and self.sigma >= 0):
            raise ConfigError("sigma", f"must be >= 0, got {self.sigma!r}")
        if not math.isfinite(self.pip_coupling_b):
            raise ConfigError("pip_coupling_b", "must be finite")
        for kind, (lo, hi) in self.limits_deg.items():
            if kind not in DEFAULT_LIMITS_DEG:
                raise ConfigError(f"limits_deg.{kind}", "unknown joint kind")
            if not lo < hi:
                raise ConfigError(f"limits_deg.{kind}", f"lower {lo} must be < upper {hi}")
        if len(self.routing_points) != len(Finger):
            raise ConfigError("routing_points", "need one table per finger")
        for finger, table in zip(FINGER_NAMES, self.routing_points):
            if len(table) != 7:
                raise ConfigError(
                    f"routing_points.{finger}", f"expected 7 points, got {len(table)}"
                )
            for p in table:
                if p.frame not in (0, 1, 2, 3):
                    raise ConfigError(f"routing_points.{finger}", f"bad frame {p.frame}")
                if len(p.xyz) != 3 or not all(math.isfinite(c) for c in p.xyz):
                    raise ConfigError(f"routing_points.{finger}", "points need 3 finite coords")

    @property
    def segment_lengths(self) -> tuple[float, float, float, float]:
        return (self.l0, self.l1, self.l2, self.l3)

    def limits(self, kind: str) -> tuple[float, float]:
        lo, hi = self.limits_deg.get(kind, DEFAULT_LIMITS_DEG[kind])
        return math.radians(lo), math.radians(hi)

    def joint_limits(self) -> tuple[tuple[float, float], ...]:
        """Radian limits for each of the 20 glove joints."""
        return tuple(self.limits(kind) for kind in _JOINT_KIND)


# ---------------------------------------------------------------------------
# Encoders
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class EncoderSettings:
    counts_per_rev: int = 4096
    # counts are accumulated over several turns; 4096 * 16 fills a 16-bit register
    turns: int = 16
    # raw count read at model zero, identical for every channel
    mount_offset_counts: int = 2048
    # splay/TM channels: joint angle = ratio * encoder angle
    splay_ratio: float = 1.0

    def __post_init__(self):
        if self.counts_per_rev <= 0:
            raise ConfigError("counts_per_rev", "must be > 0")
        if self.turns <= 0:
            raise ConfigError("turns", "must be > 0")
        if not 0 <= self.mount_offset_counts < self.max_count:
            raise ConfigError("mount_offset_counts", "outside the count range")
        if not (math.isfinite(self.splay_ratio) and self.splay_ratio != 0):
            raise ConfigError("splay_ratio", "must be finite and non-zero")

    @property
    def max_count(self) -> int:
        return self.counts_per_rev * self.turns

    @property
    def resolution(self) -> float:
        """Radians per count."""
        return TWO_PI / self.counts_per_rev


def decode_counts(
    raw_counts: Sequence[int], counts_per_rev: int = 4096, turns: int = 1
) -> tuple[float, ...]:
    """Convert raw encoder counts to angles, ``count * 2*pi / counts_per_rev``.

    Counts must lie in ``[0, counts_per_rev * turns)``; with the default single
    turn that is one revolution.
    """
    if counts_per_rev <= 0:
        raise ValueError("counts_per_rev must be > 0")
    limit = counts_per_rev * turns
    out = []
    for i, c in enumerate(raw_counts):
        if int(c) != c or not 0 <= c < limit:
            raise ValueError(f"count {c!r} on channel {i} outside [0, {limit})")
        out.append(int(c) * TWO_PI / counts_per_rev)
    return tuple(out)


def encode_angles(angles: Sequence[float], settings: EncoderSettings) -> tuple[int, ...]:
    """Nearest raw count for each angle, saturating at the register range."""
    res = settings.resolution
    return tuple(
        min(max(int(round(a / res)), 0), settings.max_count - 1) for a in angles
    )


@dataclass(frozen=True)
class EncoderFrame:
    timestamp: int
    readings: tuple[float, ...]
    raw_counts: tuple[int, ...]

    def __post_init__(self):
        if len(self.readings) != N_ENCODERS or len(self.raw_counts) != N_ENCODERS:
            raise ValueError(
                f"encoder frame needs {N_ENCODERS} readings and counts, got "
                f"{len(self.readings)}/{len(self.raw_counts)}"
            )

    @classmethod
    def from_counts(
        cls, timestamp: int, counts: Sequence[int], settings: EncoderSettings
    ) -> EncoderFrame:
        readings = decode_counts(counts, settings.counts_per_rev, settings.turns)
        return cls(int(timestamp), readings, tuple(int(c) for c in counts))

    @classmethod
    def from_angles(
        cls,
        timestamp: int,
        angles: Sequence[float],
        settings: EncoderSettings,
        quantize: bool = True,
    ) -> EncoderFrame:
        """Build a frame from continuous encoder angles.

        With ``quantize`` the angles are snapped to counts and the readings are
        decoded from those counts; otherwise the readings keep the continuous
        value and ``raw_counts`` carries the nearest count for logging only.
        """
        counts = encode_angles(angles, settings)
        if quantize:
            return cls.from_counts(timestamp, counts, settings)
        return cls(int(timestamp), tuple(float(a) for a in angles), counts)


# ---------------------------------------------------------------------------
# Poses, forces, commands
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class JointState:
    """The 20-DoF glove pose, ordered as :data:`JOINT_NAMES`."""

    angles: tuple[float, ...]
    clamped: tuple[bool, ...] = (False,) * N_JOINTS

    def __post_init__(self):
        if len(self.angles) != N_JOINTS or len(self.clamped) != N_JOINTS:
            raise ValueError(f"JointState needs {N_JOINTS} angles")

    def __getitem__(self, key: str | int) -> float:
        if isinstance(key, str):
            return self.angles[JOINT_INDEX[key]]
        return self.angles[key]

    def finger(self, finger: Finger) -> tuple[float, ...]:
        return tuple(self.angles[i] for i in joint_channels(finger))

    def bend_chain(self, finger: Finger) -> tuple[float, float, float]:
        """The three flexion angles along a finger, proximal to distal."""
        a = self.finger(finger)
        if finger == Finger.THUMB:
            return (a[0], a[2], a[3])
        return (a[0], a[1], a[2])

    def dip(self, finger: Finger) -> float:
        if finger == Finger.THUMB:
            return self.angles[19]
        return self.angles[4 * finger + 2]

    @property
    def any_clamped(self) -> bool:
        return any(self.clamped)

    @classmethod
    def from_measured(
        cls,
        fingers: Sequence[Sequence[float]],
        thumb: Sequence[float],
        geometry: GloveGeometry | None = None,
    ) -> JointState:
        """Assemble a pose from the measured DoF, deriving PIP from DIP.

        ``fingers`` holds ``(mcp, dip, splay)`` for index..pinky, ``thumb``
        holds ``(tm_bend, tm_splay, mcp, ip)``.
        """
        geometry = geometry or GloveGeometry()
        a, b = geometry.pip_coupling_a, geometry.pip_coupling_b
        angles: list[float] = []
        for mcp, dip, splay in fingers:
            angles += [mcp, (dip + b) / a, dip, splay]
        angles += list(thumb)
        return cls(tuple(float(x) for x in angles))


class FeedbackMode(enum.IntEnum):
    NONE = 0
    WAVEFORM1 = 1
    WAVEFORM2 = 2
    FORCE_FEEDBACK = 3


class Waveform(enum.IntEnum):
    OFF = 0
    WAVEFORM1 = 1
    WAVEFORM2 = 2


@dataclass(frozen=True)
class ForceSample:
    finger: Finger
    current: float  # mA
    force: float  # N
    timestamp: int  # us

    def __post_init__(self):
        if self.current < 0 or self.force < 0:
            raise ValueError("force and current must be non-negative")


@dataclass(frozen=True)
class FeedbackCommand:
    finger: Finger
    waveform: Waveform
    servo_target: float  # rad
    force_feedback_active: bool

    def __post_init__(self):
        if self.force_feedback_active and self.waveform != Waveform.OFF:
            raise ValueError("force feedback and vibration are mutually exclusive")


# ---------------------------------------------------------------------------
# Runtime settings
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class FeedbackSettings:
    thresholds: tuple[float, float, float] = (0.1, 0.5, 1.0)
    hysteresis: float = 0.02
    current_per_newton: float = 65.0
    tension_offset_mm: float = 1.5
    waveform_hz: tuple[float, float] = (160.0, 240.0)


@dataclass(frozen=True)
class BusSettings:
    address: int = 1
    bitrate: int = 500_000

    def __post_init__(self):
        if not 1 <= self.address <= 247:
            raise ConfigError("address", "Modbus slave address must be 1..247")
        if self.bitrate <= 0:
            raise ConfigError("bitrate", "must be > 0")


@dataclass(frozen=True)
class SimSettings:
    tick_us: int = 10_000
    record_divider: int = 3
    duration_s: float = 6.0
    latencies_ms: Mapping[str, float] = field(
        default_factory=lambda: {
            "sensor": 5.0,
            "bus_up": 2.0,
            "compute": 3.0,
            "bus_down": 2.0,
            "servo_mech": 188.0,
        }
    )
    quantize: bool = True
    encoder_noise_deg: float = 0.0
    drift_deg_per_s: float = 0.0
    stiffness_n_per_rad: float = 5.0
    engage_deg: float = 60.0
    seed: int = 0
    hand_model: str = "ry-h2"
    trajectory: Mapping[str, Any] = field(
        default_factory=lambda: {
            "kind": "reach",
            "finger": "index",
            "period_s": 2.0,
            "peak_deg": 80.0,
        }
    )


LATENCY_STAGES = ("sensor", "bus_up", "compute", "bus_down", "servo_mech")


@dataclass(frozen=True)
class Config:
    geometry: GloveGeometry = field(default_factory=GloveGeometry)
    encoders: EncoderSettings = field(default_factory=EncoderSettings)
    feedback: FeedbackSettings = field(default_factory=FeedbackSettings)
    bus: BusSettings = field(default_factory=BusSettings)
    sim: SimSettings = field(default_factory=SimSettings)

    def with_overrides(self, overrides: Mapping[str, Any]) -> Config:
        """Apply dotted ``section.key=value`` overrides and re-validate."""
        data = serialize_config(self)
        for dotted, value in overrides.items():
            parts = dotted.split(".")
            node = data
            for p in parts[:-1]:
                if not isinstance(node, dict) or p not in node:
                    raise ConfigError(dotted, "unknown key")
                node = node[p]
            if not isinstance(node, dict) or parts[-1] not in node:
                raise ConfigError(dotted, "unknown key")
            node[parts[-1]] = value
        return config_from_dict(data)


# ---------------------------------------------------------------------------
# Config file IO
# ---------------------------------------------------------------------------

_SECTIONS = ("geometry", "encoders", "feedback", "bus", "sim")


def _check_number(key: str, value: Any, integer: bool = False) -> Any:
    if isinstance(value, bool) or not isinstance(value, (int, float)):
        raise ConfigError(key, f"expected a number, got {value!r}")
    if integer:
        if int(value) != value:
            raise ConfigError(key, f"expected an integer, got {value!r}")
        return int(value)
    return float(value)


def _build(cls, section: str, data: Mapping[str, Any], converters=None):
    if data is None:
        data = {}
    if not isinstance(data, Mapping):
        raise ConfigError(section, "section must be a mapping")
    converters = converters or {}
    known = {f.name: f for f in fields(cls)}
    kwargs = {}
    for key, value in data.items():
        if key not in known:
            raise ConfigError(f"{section}.{key}", "unknown key")
        conv = converters.get(key)
        if conv is not None:
            kwargs[key] = conv(f"{section}.{key}", value)
        elif isinstance(known[key].default, bool):
            if not isinstance(value, bool):
                raise ConfigError(f"{section}.{key}", "expected true/false")
            kwargs[key] = value
        else:
            default = known[key].default
            kwargs[key] = _check_number(
                f"{section}.{key}", value, integer=isinstance(default, int)
            )
    try:
        return cls(**kwargs)
    except ConfigError as exc:
        raise ConfigError(f"{section}.{exc.key}", str(exc).split(": ", 1)[-1]) from None


def _pair(key: str, value: Any) -> tuple[float, float]:
    if not isinstance(value, (list, tuple)) or len(value) != 2:
        raise ConfigError(key, "expected [lower, upper]")
    return (_check_number(key, value[0]), _check_number(key, value[1]))


def _limits(key: str, value: Any) -> dict[str, tuple[float, float]]:
    if not isinstance(value, Mapping):
        raise ConfigError(key, "expected a mapping of joint kind -> [lower, upper]")
    out = dict(DEFAULT_LIMITS_DEG)
    for kind, pair in value.items():
        if kind not in DEFAULT_LIMITS_DEG:
            raise ConfigError(f"{key}.{kind}", "unknown joint kind")
        out[kind] = _pair(f"{key}.{kind}", pair)
    return out


def _routing(key: str, value: Any):
    if not isinstance(value, Mapping):
        raise ConfigError(key, "expected a mapping of finger -> point list")
    return value  # resolved after the scalar geometry is known


def _routing_tables(key: str, value: Mapping, base: GloveGeometry):
    tables = list(base.routing_points)
    for finger, pts in value.items():
        if finger not in FINGER_NAMES:
            raise ConfigError(f"{key}.{finger}", "unknown finger")
        if not isinstance(pts, (list, tuple)) or len(pts) != 7:
            n = len(pts) if isinstance(pts, (list, tuple)) else "?"
            raise ConfigError(f"{key}.{finger}", f"expected 7 points, got {n}")
        table = []
        for p in pts:
            if not isinstance(p, (list, tuple)) or len(p) != 4:
                raise ConfigError(f"{key}.{finger}", "each point is [frame, x, y, z]")
            frame = _check_number(f"{key}.{finger}", p[0], integer=True)
            xyz = tuple(_check_number(f"{key}.{finger}", c) for c in p[1:])
            table.append(RoutingPoint(frame, xyz))
        tables[FINGER_NAMES.index(finger)] = tuple(table)
    return tuple(tables)


def _float_tuple(n: int):
    def conv(key: str, value: Any):
        if not isinstance(value, (list, tuple)) or len(value) != n:
            raise ConfigError(key, f"expected a list of {n} numbers")
        return tuple(_check_number(key, v) for v in value)

    return conv


def _latencies(key: str, value: Any):
    if not isinstance(value, Mapping):
        raise ConfigError(key, "expected a mapping of stage -> milliseconds")
    out = dict(SimSettings().latencies_ms)
    for stage, ms in value.items():
        if stage not in LATENCY_STAGES:
            raise ConfigError(f"{key}.{stage}", "unknown latency stage")
        ms = _check_number(f"{key}.{stage}", ms)
        if ms < 0:
            raise ConfigError(f"{key}.{stage}", "latency must be >= 0")
        out[stage] = ms
    return out


def _string(key: str, value: Any) -> str:
    if not isinstance(value, str):
        raise ConfigError(key, f"expected a string, got {value!r}")
    return value


def _trajectory(key: str, value: Any):
    if not isinstance(value, Mapping) or "kind" not in value:
        raise ConfigError(key, "expected a mapping with a 'kind'")
    return dict(value)


def config_from_dict(data: Mapping[str, Any] | None) -> Config:
    data = data or {}
    if not isinstance(data, Mapping):
        raise ConfigError("<root>", "top level must be a mapping")
    for key in data:
        if key not in _SECTIONS:
            raise ConfigError(key, "unknown section")

    geo_data = dict(data.get("geometry") or {})
    routing = geo_data.pop("routing_points", None)
    geometry = _build(GloveGeometry, "geometry", geo_data, {"limits_deg": _limits})
    if routing is not None:
        tables = _routing_tables("geometry.routing_points", _routing("geometry.routing_points", routing), geometry)
        try:
            geometry = replace(geometry, routing_points=tables)
        except ConfigError as exc:
            raise ConfigError(f"geometry.{exc.key}", str(exc).split(": ", 1)[-1]) from None

    encoders = _build(EncoderSettings, "encoders", data.get("encoders"))
    feedback = _build(
        FeedbackSettings,
        "feedback",
        data.get("feedback"),
        {"thresholds": _float_tuple(3), "waveform_hz": _float_tuple(2)},
    )
    t0, t1, t2 = feedback.thresholds
    if not 0 < t0 < t1 < t2:
        raise ConfigError("feedback.thresholds", "need 0 < t0 < t1 < t2")
    if not 0 <= feedback.hysteresis < (t1 - t0) / 2:
        raise ConfigError("feedback.hysteresis", "need 0 <= hysteresis < (t1 - t0)/2")
    if feedback.current_per_newton <= 0:
        raise ConfigError("feedback.current_per_newton", "must be > 0")
    if feedback.tension_offset_mm < 0:
        raise ConfigError("feedback.tension_offset_mm", "must be >= 0")
    bus = _build(BusSettings, "bus", data.get("bus"))
    sim = _build(
        SimSettings,
        "sim",
        data.get("sim"),
        {"latencies_ms": _latencies, "trajectory": _trajectory, "hand_model": _string},
    )
    if sim.tick_us <= 0:
        raise ConfigError("sim.tick_us", "must be > 0")
    if sim.record_divider <= 0:
        raise ConfigError("sim.record_divider", "must be > 0")
    if sim.encoder_noise_deg < 0:
        raise ConfigError("sim.encoder_noise_deg", "must be >= 0")
    return Config(geometry, encoders, feedback, bus, sim)


def load_config(path: str | Path | None = None) -> Config:
    """Read a YAML config file; omitted keys take the built-in defaults."""
    if path is None:
        return Config()
    text = Path(path).read_text(encoding="utf-8")
    try:
        data = yaml.safe_load(text)
    except yaml.YAMLError as exc:
        raise ConfigError("<file>", f"parse error: {exc}") from None
    return config_from_dict(data)


def serialize_config(config: Config) -> dict[str, Any]:
    """Plain-data form of ``config``, suitable for ``yaml.safe_dump``."""
    geo = config.geometry
    g = {}
    for f in fields(GloveGeometry):
        value = getattr(geo, f.name)
        if f.name == "limits_deg":
            g[f.name] = {k: [lo, hi] for k, (lo, hi) in value.items()}
        elif f.name == "routing_points":
            derived = default_routing_points(geo.l1, geo.l2, geo.l3, geo.routing_height)
            custom = {
                name: [[p.frame, *p.xyz] for p in table]
                for name, table in zip(FINGER_NAMES, value)
                if table != derived
            }
            # default tables are re-derived from the lengths on load
            if custom:
                g[f.name] = custom
        else:
            g[f.name] = value
    feedback = asdict(config.feedback)
    feedback = {k: list(v) if isinstance(v, tuple) else v for k, v in feedback.items()}
    sim = asdict(config.sim)
    sim["latencies_ms"] = dict(sim["latencies_ms"])
    sim["trajectory"] = dict(sim["trajectory"])
    return {
        "geometry": g,
        "encoders": asdict(config.encoders),
        "feedback": feedback,
        "bus": asdict(config.bus),
        "sim": sim,
    }


def dump_config(config: Config) -> str:
    return yaml.safe_dump(serialize_config(config), sort_keys=False)

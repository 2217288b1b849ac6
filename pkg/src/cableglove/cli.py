"""``cableglove`` command line.

Angles are degrees on the command line and in human-facing files; everything
inside the library is radians. Exit codes: 0 ok, 2 usage, 3 config error,
4 input/parse error, 5 bus protocol error, 6 report precondition not met.
"""

from __future__ import annotations

import csv
import math
import sys
from importlib import resources
from pathlib import Path

import click
import yaml

from . import bus as busmod
from .cable_follow import cable_length, pose_of, servo_target
from .feedback import FeedbackPolicy, classify_force, current_to_force, next_mode
from .kinematics import (
    FingerSolveInput,
    calibrate,
    encoders_from_angles,
    solve_finger,
    solve_hand,
    zero_calibration,
)
from .model import (
    FINGER_NAMES,
    JOINT_NAMES,
    N_ENCODERS,
    Config,
    ConfigError,
    EncoderFrame,
    FeedbackMode,
    Finger,
    JointState,
    load_config,
)
from .retarget import resolve_model, retarget
from .sim import ReportError, Trace, TrajectoryError, latency_report, repeatability_report, run_episodes

EXIT_CONFIG = 3
EXIT_INPUT = 4
EXIT_PROTOCOL = 5
EXIT_REPORT = 6

ENV_CONFIG = "CABLEGLOVE_CONFIG"
DEMO = "demo"


class CliError(click.ClickException):
    def __init__(self, message: str, code: int):
        super().__init__(message)
        self.exit_code = code


def demo_config_text() -> str:
    return resources.files("cableglove.data").joinpath("demo.yaml").read_text(encoding="utf-8")


def _parse_overrides(pairs) -> dict:
    out = {}
    for item in pairs:
        if "=" not in item:
            raise CliError(f"override {item!r} is not key=value", EXIT_CONFIG)
        key, raw = item.split("=", 1)
        out[key.strip()] = yaml.safe_load(raw)
    return out


def _load(ctx: click.Context) -> Config:
    obj = ctx.find_root().obj or {}
    path = obj.get("config")
    try:
        if path == DEMO:
            from .model import config_from_dict

            config = config_from_dict(yaml.safe_load(demo_config_text()))
        else:
            config = load_config(path)
        return config.with_overrides(obj.get("overrides", {}))
    except ConfigError as exc:
        raise CliError(f"config error: {exc}", EXIT_CONFIG) from None
    except OSError as exc:
        raise CliError(f"cannot read config: {exc}", EXIT_CONFIG) from None


def _angle_in(value: float, rad: bool) -> float:
    return value if rad else math.radians(value)


def _angle_out(value: float, rad: bool) -> float:
    return value if rad else math.degrees(value)


@click.group()
@click.option(
    "--config", "config_path", envvar=ENV_CONFIG, default=None,
    help=f"YAML config file (lengths mm, angles degrees), or '{DEMO}' for the "
    f"bundled demo. Defaults to ${ENV_CONFIG}, then built-in defaults.",
)
@click.option("--set", "overrides", multiple=True, metavar="SECTION.KEY=VALUE",
              help="Override one config key; repeatable.")
@click.pass_context
def main(ctx, config_path, overrides):
    """Glove kinematics, cable following, haptic policy, retargeting, bus and simulator."""
    ctx.obj = {"config": config_path, "overrides": _parse_overrides(overrides)}


# ---------------------------------------------------------------------------
# solve / inverse
# ---------------------------------------------------------------------------

def _read_frames(path: str, config: Config) -> list[EncoderFrame]:
    frames = []
    try:
        with open(path, newline="", encoding="utf-8") as fh:
            reader = csv.DictReader(line for line in fh if not line.startswith("#"))
            cols = [f"enc_{i:02d}" for i in range(N_ENCODERS)]
            missing = [c for c in cols if c not in (reader.fieldnames or [])]
            if missing:
                raise CliError(f"{path}: missing columns {missing[:3]}...", EXIT_INPUT)
            for n, row in enumerate(reader):
                counts = [int(row[c]) for c in cols]
                ts = int(row.get("timestamp_us") or n)
                frames.append(
                    EncoderFrame.from_counts(ts, counts, config.encoders)
                )
    except OSError as exc:
        raise CliError(f"cannot read {path}: {exc}", EXIT_INPUT) from None
    except (ValueError, TypeError) as exc:
        raise CliError(f"{path}: malformed frame CSV ({exc})", EXIT_INPUT) from None
    if not frames:
        raise CliError(f"{path}: no frames", EXIT_INPUT)
    return frames


def _write_states(out, rows: list[tuple[int, JointState]]) -> None:
    out.write("# units: angles in degrees\n")
    w = csv.writer(out, lineterminator="\n")
    w.writerow(["timestamp_us", *JOINT_NAMES])
    for ts, st in rows:
        w.writerow([ts, *(f"{math.degrees(a):.6f}" for a in st.angles)])


@main.command()
@click.option("--theta-em", type=float, help="MCP-cable encoder angle (degrees; radians with --rad).")
@click.option("--theta-ed", type=float, help="DIP-cable encoder angle (degrees; radians with --rad).")
@click.option("--rad", is_flag=True, help="Inline angles in and out in radians instead of degrees.")
@click.option("--frames", type=click.Path(), help="CSV of raw counts (enc_00..enc_15 columns).")
@click.option("--calibration", type=click.Path(),
              help="CSV whose first row of counts is the model-zero reference frame "
              "(default: every channel at encoders.mount_offset_counts).")
@click.option("-o", "--out", type=click.File("w"), default="-", help="Output CSV (degrees).")
@click.pass_context
def solve(ctx, theta_em, theta_ed, rad, frames, calibration, out):
    """Solve joint angles (degrees) from encoder readings.

    Inline mode solves one finger from two encoder angles; frame mode solves
    full 20-DoF poses from raw count frames.
    """
    config = _load(ctx)
    geo = config.geometry
    if frames is None:
        if theta_em is None or theta_ed is None:
            raise CliError("give --theta-em and --theta-ed, or --frames", EXIT_INPUT)
        res = solve_finger(FingerSolveInput(_angle_in(theta_em, rad), _angle_in(theta_ed, rad), geo))
        unit = "rad" if rad else "deg"
        for name, v in (("theta1", res.theta1), ("theta2", res.theta2), ("theta3", res.theta3)):
            click.echo(f"{name}_{unit}={_angle_out(v, rad):.6f}", file=out)
        if res.clamped:
            click.echo("warning: solution clamped to joint limits", err=True)
        return

    calib = zero_calibration(config.encoders)
    if calibration:
        calib = calibrate(_read_frames(calibration, config)[0])
    rows = []
    n_clamped = 0
    for frame in _read_frames(frames, config):
        state = solve_hand(frame, geo, calib, config.encoders.splay_ratio)
        n_clamped += state.any_clamped
        rows.append((frame.timestamp, state))
    _write_states(out, rows)
    if n_clamped:
        click.echo(f"warning: {n_clamped} frame(s) clamped to joint limits", err=True)


@main.command()
@click.option("--theta1", type=float, required=True, help="MCP bend, degrees.")
@click.option("--theta3", type=float, required=True, help="DIP bend, degrees.")
@click.option("--rad", is_flag=True, help="Angles in and out in radians.")
@click.pass_context
def inverse(ctx, theta1, theta3, rad):
    """Encoder angles that produce the given MCP/DIP bends (degrees)."""
    config = _load(ctx)
    em, ed = encoders_from_angles(_angle_in(theta1, rad), _angle_in(theta3, rad), config.geometry)
    unit = "rad" if rad else "deg"
    click.echo(f"theta_em_{unit}={_angle_out(em, rad):.6f}")
    click.echo(f"theta_ed_{unit}={_angle_out(ed, rad):.6f}")


# ---------------------------------------------------------------------------
# follow / feedback / retarget
# ---------------------------------------------------------------------------

@main.command()
@click.option("--theta1", type=float, default=0.0, help="MCP bend, degrees.")
@click.option("--theta2", type=float, default=0.0, help="PIP bend, degrees.")
@click.option("--theta3", type=float, default=0.0, help="DIP bend, degrees.")
@click.option("--finger", type=click.Choice(FINGER_NAMES), default="index")
@click.option("--delta", is_flag=True, help="Report servo payout relative to the zero pose.")
@click.pass_context
def follow(ctx, theta1, theta2, theta3, finger, delta):
    """Force-feedback cable length (mm) and servo angle (rad) for a finger pose in degrees."""
    config = _load(ctx)
    f = Finger(FINGER_NAMES.index(finger))
    pose = pose_of([math.radians(theta1), math.radians(theta2), math.radians(theta3)])
    path = cable_length(pose, config.geometry, f)
    theta_s = servo_target(pose, config.geometry, f, delta=delta)
    click.echo(f"cable_length_mm={path.total_length:.6f}")
    click.echo(f"servo_angle_rad={theta_s:.6f}")
    click.echo(f"servo_angle_deg={math.degrees(theta_s):.6f}")


@main.command()
@click.option("--force", "forces", type=float, multiple=True, help="Force sample in N; repeatable.")
@click.option("--current", "currents", type=float, multiple=True, help="Motor current in mA; repeatable.")
@click.option("--no-hysteresis", is_flag=True, help="Classify each sample independently.")
@click.pass_context
def feedback(ctx, forces, currents, no_hysteresis):
    """Feedback mode for a stream of force (N) or current (mA) samples."""
    config = _load(ctx)
    policy = FeedbackPolicy.from_settings(config.feedback)
    try:
        samples = list(forces) + [current_to_force(c, policy) for c in currents]
    except ValueError as exc:
        raise CliError(str(exc), EXIT_INPUT) from None
    if not samples:
        raise CliError("give at least one --force or --current", EXIT_INPUT)
    mode = FeedbackMode.NONE
    for force in samples:
        if force < 0:
            raise CliError("force must be >= 0", EXIT_INPUT)
        mode = classify_force(force, policy) if no_hysteresis else next_mode(mode, force, policy)
        click.echo(f"force_n={force:.4f} mode={mode.name.lower()}")


@main.command("retarget")
@click.option("--model", "model_spec", required=True,
              help="Preset name (ry-h2, ry-h1, shadow) or hand-model YAML file.")
@click.option("--input", "input_path", type=click.Path(), required=True,
              help="Joint-state CSV in degrees, as written by 'solve --frames'.")
@click.option("-o", "--out", type=click.File("w"), default="-")
@click.pass_context
def retarget_cmd(ctx, model_spec, input_path, out):
    """Map glove joint states (degrees) onto a hand model; targets in degrees."""
    try:
        model = resolve_model(model_spec)
    except ConfigError as exc:
        raise CliError(f"hand model error: {exc}", EXIT_CONFIG) from None
    except OSError as exc:
        raise CliError(f"cannot read hand model: {exc}", EXIT_CONFIG) from None
    try:
        with open(input_path, newline="", encoding="utf-8") as fh:
            reader = csv.DictReader(line for line in fh if not line.startswith("#"))
            rows = [
                (int(r["timestamp_us"]),
                 JointState(tuple(math.radians(float(r[n])) for n in JOINT_NAMES)))
                for r in reader
            ]
    except (OSError, KeyError, ValueError, TypeError) as exc:
        raise CliError(f"{input_path}: malformed joint-state CSV ({exc})", EXIT_INPUT) from None
    out.write("# units: targets in degrees\n")
    w = csv.writer(out, lineterminator="\n")
    w.writerow(["timestamp_us", *model.joint_names, "clamped"])
    for ts, state in rows:
        cmd = retarget(state, model)
        mask = "".join("1" if c else "0" for c in cmd.clamp_mask)
        w.writerow([ts, *(f"{math.degrees(t):.6f}" for t in cmd.targets), mask])


# ---------------------------------------------------------------------------
# bus
# ---------------------------------------------------------------------------

def _hex(text: str) -> bytes:
    try:
        return bytes.fromhex(text.replace(":", " "))
    except ValueError:
        raise CliError(f"not a hex string: {text!r}", EXIT_INPUT) from None


@main.group("bus")
def bus_group():
    """Modbus-RTU codec and glove emulator (hex on stdin/stdout)."""


@bus_group.command("encode")
@click.option("--address", type=int, default=1)
@click.option("--function", type=str, required=True, help="Function code, e.g. 3 or 0x03.")
@click.option("--payload", default="", help="Payload bytes as hex.")
def bus_encode(address, function, payload):
    """Print the wire image (hex) of a frame, CRC appended."""
    try:
        frame = busmod.BusFrame(address, int(function, 0), _hex(payload))
    except (ValueError, busmod.FrameError) as exc:
        raise CliError(str(exc), EXIT_INPUT) from None
    click.echo(busmod.encode_frame(frame).hex())


@bus_group.command("decode")
@click.argument("wire")
def bus_decode(wire):
    """Decode a hex wire image; exits 5 on a short frame or bad CRC."""
    try:
        frame = busmod.decode_frame(_hex(wire))
    except busmod.FrameError as exc:
        raise CliError(str(exc), EXIT_PROTOCOL) from None
    click.echo(f"address=0x{frame.address:02X} function=0x{frame.function:02X} "
               f"payload={frame.payload.hex()} crc={frame.crc.hex()}")


@bus_group.command("serve")
@click.option("--tcp", "port", type=int, default=None,
              help="Serve on 127.0.0.1:PORT instead of stdin/stdout.")
@click.pass_context
def bus_serve(ctx, port):
    """Run the glove emulator.

    Without --tcp, each stdin line is a hex request and each reply is printed
    as hex (an empty line for broadcasts and CRC failures).
    """
    config = _load(ctx)
    device = busmod.GloveDevice(address=config.bus.address)
    if port is not None:
        server = busmod.LoopbackServer(device, port)
        click.echo(f"serving on 127.0.0.1:{server.port}", err=True)
        try:
            server.serve_forever()
        finally:
            server.server_close()
        return
    for line in sys.stdin:
        line = line.strip()
        if not line:
            continue
        try:
            reply = busmod.serve_bytes(device, _hex(line))
        except busmod.FrameError as exc:
            click.echo(f"error: {exc}", err=True)
            reply = b""
        click.echo(reply.hex())


@bus_group.command("delay")
@click.option("--length", type=int, required=True, help="Frame length in bytes.")
@click.pass_context
def bus_delay(ctx, length):
    """Wire time of a frame at the configured bitrate, microseconds."""
    config = _load(ctx)
    try:
        tx, gap = busmod.wire_delay(length, config.bus.bitrate)
    except ValueError as exc:
        raise CliError(str(exc), EXIT_INPUT) from None
    click.echo(f"transmission_us={tx:g} gap_us={gap:g} total_us={tx + gap:g}")


# ---------------------------------------------------------------------------
# simulate / report
# ---------------------------------------------------------------------------

def _print_reports(trace: Trace, config: Config, kinds, finger: Finger) -> None:
    policy = FeedbackPolicy.from_settings(config.feedback)
    for kind in kinds:
        try:
            if kind == "latency":
                click.echo(latency_report(trace, policy).summary())
            else:
                rep = repeatability_report(trace, finger, policy.thresholds[0])
                click.echo(rep.summary())
        except ReportError as exc:
            raise CliError(f"{kind} report: {exc}", EXIT_REPORT) from None


@main.command()
@click.option("-o", "--out", type=click.Path(), default="trace.csv", show_default=True,
              help="Full-rate trace CSV (angles in radians, see units header).")
@click.option("--record", type=click.Path(), default=None,
              help="Also write the trace decimated by sim.record_divider (about 30 Hz).")
@click.option("--seed", type=int, default=None, help="Override sim.seed.")
@click.option("--episodes", type=int, default=1, show_default=True,
              help="Independent episodes with seeds spawned from the base seed.")
@click.option("--report", "reports", type=click.Choice(["latency", "repeatability"]), multiple=True)
@click.option("--finger", type=click.Choice(FINGER_NAMES), default="index",
              help="Finger for the repeatability report.")
@click.pass_context
def simulate(ctx, out, record, seed, episodes, reports, finger):
    """Run the closed-loop simulator and write trace CSV(s)."""
    config = _load(ctx)
    if seed is not None:
        config = config.with_overrides({"sim.seed": seed})
    try:
        if episodes == 1:
            from .sim import run_episode

            traces = [run_episode(config)]
        else:
            traces = run_episodes(config, episodes)
    except ConfigError as exc:
        raise CliError(f"config error: {exc}", EXIT_CONFIG) from None
    except (TrajectoryError, OSError) as exc:
        raise CliError(str(exc), EXIT_INPUT) from None
    out_path = Path(out)
    for i, trace in enumerate(traces):
        path = out_path if episodes == 1 else out_path.with_name(f"{out_path.stem}_ep{i}{out_path.suffix}")
        trace.save(path)
        click.echo(f"wrote {path} rows={len(trace)} sha256={trace.sha256()}")
        if record:
            rec = Path(record) if episodes == 1 else Path(record).with_name(
                f"{Path(record).stem}_ep{i}{Path(record).suffix}")
            trace.decimate(config.sim.record_divider).save(rec)
        _print_reports(trace, config, reports, Finger(FINGER_NAMES.index(finger)))


@main.command()
@click.argument("kind", type=click.Choice(["latency", "repeatability"]))
@click.option("--trace", "trace_path", type=click.Path(), required=True)
@click.option("--finger", type=click.Choice(FINGER_NAMES), default="index")
@click.pass_context
def report(ctx, kind, trace_path, finger):
    """Latency (ms) or contact-angle repeatability (degrees) from a trace file."""
    config = _load(ctx)
    try:
        trace = Trace.load(trace_path)
    except (OSError, TrajectoryError) as exc:
        raise CliError(f"{trace_path}: {exc}", EXIT_INPUT) from None
    _print_reports(trace, config, [kind], Finger(FINGER_NAMES.index(finger)))


if __name__ == "__main__":
    main()

import math
import random

import pytest
from hypothesis import given, settings, strategies as st

from cableglove.kinematics import (
    Calibration,
    FingerSolveInput,
    calibrate,
    encoders_from_angles,
    frame_for_state,
    pip_from_dip,
    solve_finger,
    solve_hand,
    zero_calibration,
)
from cableglove.model import EncoderFrame, EncoderSettings, GloveGeometry, JointState, N_ENCODERS

from oracles import bisect_dip

A, B = 0.989, 0.230


def test_pip_from_dip_examples():
    assert pip_from_dip(-0.230) == 0.0
    assert pip_from_dip(0.759) == pytest.approx(1.0, abs=1e-9)
    assert pip_from_dip(0.087077) == pytest.approx(0.320604, abs=1e-6)


def test_solve_at_theta3_zero(geometry):
    ed = (B / A) * geometry.r2p / geometry.rg
    # exact value is 0.7484496; the commonly quoted 0.748448 is 1.6e-6 off
    assert ed == pytest.approx(0.748448, abs=2e-6)
    out = solve_finger(FingerSolveInput(0.0, ed, geometry))
    assert out.theta1 == 0.0
    assert out.theta3 == pytest.approx(0.0, abs=1e-12)
    assert out.theta2 == pytest.approx(0.232558, abs=1e-6)


def test_solve_matches_bisection_example(geometry):
    out = solve_finger(FingerSolveInput(0.5, 2.0, geometry))
    t1, t3 = bisect_dip(0.5, 2.0)
    assert out.theta1 == pytest.approx(0.184615, abs=1e-4)
    assert out.theta3 == pytest.approx(0.087077, abs=1e-4)
    assert out.theta2 == pytest.approx(0.320604, abs=1e-4)
    assert out.theta1 == pytest.approx(t1, abs=1e-12)
    assert out.theta3 == pytest.approx(t3, abs=1e-10)
    assert not out.clamped


def test_zero_pose_clamps_dip(geometry):
    out = solve_finger(FingerSolveInput(0.0, 0.0, geometry))
    raw = -B * geometry.r2p / (A * (geometry.r2p / A + geometry.r3p))
    assert out.raw_theta3 == pytest.approx(raw, abs=1e-12)
    assert out.raw_theta3 == pytest.approx(-0.1216, abs=1e-4)
    assert out.theta1 == 0.0 and out.theta3 == 0.0
    assert out.clamped


def test_calibration_offset_subtracted(geometry):
    plain = solve_finger(FingerSolveInput(0.5, 2.0, geometry))
    shifted = solve_finger(FingerSolveInput(1.5, 5.0, geometry, (1.0, 3.0)))
    assert shifted.theta3 == pytest.approx(plain.theta3, abs=1e-12)


def test_non_finite_rejected(geometry):
    with pytest.raises(ValueError):
        solve_finger(FingerSolveInput(float("nan"), 0.0, geometry))


def test_inverse_examples(geometry):
    em, ed = encoders_from_angles(0.0, 0.0, geometry)
    assert em == 0.0 and ed == pytest.approx(0.7484496124031007, abs=1e-12)
    em, ed = encoders_from_angles(0.184615, 0.087077, geometry)
    assert em == pytest.approx(0.5, abs=1e-5) and ed == pytest.approx(2.0, abs=1e-5)
    t1, t3 = bisect_dip(0.5, 2.0)
    em, ed = encoders_from_angles(t1, t3, geometry)
    assert em == pytest.approx(0.5, abs=1e-9) and ed == pytest.approx(2.0, abs=1e-9)


angle = st.floats(-5.0, 20.0, allow_nan=False)


@given(angle, angle, st.floats(3.0, 12.0))
def test_closure_and_coupling(em, ed, rg):
    geo = GloveGeometry(rg=rg)
    out = solve_finger(FingerSolveInput(em, ed, geo))
    assert abs(out.dp3 - (out.dl1 + out.dl2 + out.dl3)) <= 1e-9
    assert out.raw_theta2 == (out.raw_theta3 + B) / A


@given(st.floats(0.0, math.pi / 2), st.floats(0.0, math.pi / 2), st.floats(3.0, 12.0))
def test_inverse_round_trip(t1, t3, rg):
    geo = GloveGeometry(rg=rg)
    out = solve_finger(FingerSolveInput(*encoders_from_angles(t1, t3, geo), geo))
    assert out.theta1 == pytest.approx(t1, abs=1e-9)
    assert out.theta3 == pytest.approx(t3, abs=1e-9)


@given(st.floats(-2.0, 5.0), st.floats(-2.0, 20.0), st.floats(1e-3, 1.0))
def test_dip_strictly_increasing_in_dip_cable(em, ed, step):
    geo = GloveGeometry()
    lo = solve_finger(FingerSolveInput(em, ed, geo)).raw_theta3
    hi = solve_finger(FingerSolveInput(em, ed + step, geo)).raw_theta3
    slope = geo.rg / (geo.r2p / A + geo.r3p)
    assert hi > lo
    assert (hi - lo) == pytest.approx(slope * step, rel=1e-6)


@settings(max_examples=300)
@given(st.floats(-3.0, 8.0), st.floats(-3.0, 20.0))
def test_closed_form_equals_bisection(em, ed):
    geo = GloveGeometry()
    out = solve_finger(FingerSolveInput(em, ed, geo))
    _, t3 = bisect_dip(em, ed)
    assert abs(out.raw_theta3 - t3) <= 1e-10


# -- full hand --------------------------------------------------------------

def _random_state(rng):
    fingers = [
        (rng.uniform(0, math.pi / 2), rng.uniform(0, math.pi / 2), rng.uniform(-0.34, 0.34))
        for _ in range(4)
    ]
    thumb = (rng.uniform(0, 1.5), rng.uniform(-0.5, 1.0), rng.uniform(0, 1.5), rng.uniform(0, 1.5))
    return JointState.from_measured(fingers, thumb)


def test_zero_frame_clamps_bends(geometry):
    state = solve_hand([0.0] * N_ENCODERS, geometry)
    for f in range(4):
        mcp, pip, dip, splay = state.finger(f)
        assert mcp == 0.0 and dip == 0.0 and splay == 0.0
        assert pip == pytest.approx(pip_from_dip(0.0))
    assert state.any_clamped


def test_solve_hand_round_trip(geometry):
    rng = random.Random(3)
    settings_ = EncoderSettings()
    calib = zero_calibration(settings_)
    for _ in range(200):
        truth = _random_state(rng)
        frame = frame_for_state(truth, geometry, settings_)
        got = solve_hand(frame, geometry, calib)
        assert max(abs(a - b) for a, b in zip(got.angles, truth.angles)) <= 1e-9


def test_solve_hand_against_bisection_oracle(geometry):
    rng = random.Random(11)
    for _ in range(1000):
        readings = [rng.uniform(-1.0, 18.0) for _ in range(N_ENCODERS)]
        state = solve_hand(readings, geometry)
        for f in range(4):
            t1, t3 = bisect_dip(readings[3 * f], readings[3 * f + 1])
            lo1, hi1 = geometry.limits("mcp")
            lo3, hi3 = geometry.limits("dip")
            e1 = min(max(t1, lo1), hi1)
            e3 = min(max(t3, lo3), hi3)
            e2 = min(max((e3 + B) / A, 0.0), math.radians(110))
            got = state.finger(f)
            assert got[0] == pytest.approx(e1, abs=1e-7)
            assert got[1] == pytest.approx(e2, abs=1e-7)
            assert got[2] == pytest.approx(e3, abs=1e-7)
            assert got[3] == pytest.approx(min(max(readings[3 * f + 2], -math.radians(20)), math.radians(20)), abs=1e-12)
        ip = (geometry.rg * readings[15] - readings[14] * geometry.thumb_r_mcp) / geometry.thumb_r_ip
        lo, hi = geometry.limits("thumb_ip")
        assert state["thumb.ip"] == pytest.approx(min(max(ip, lo), hi), abs=1e-7)


def test_calibrate_captures_offsets(geometry):
    s = EncoderSettings()
    ref = EncoderFrame.from_counts(0, [100 + i for i in range(16)], s)
    cal = calibrate(ref)
    assert cal.offsets == ref.readings
    state = solve_hand(ref, geometry, cal)
    assert state["index.mcp"] == 0.0 and state["index.dip"] == 0.0
    with pytest.raises(ValueError):
        Calibration((0.0,) * 3)

import random
import struct
import threading

import pytest
from hypothesis import given, strategies as st

from cableglove.bus import (
    CURRENT_BASE,
    SERVO_BASE,
    WAVEFORM_BASE,
    BusFrame,
    CrcError,
    FrameError,
    GloveDevice,
    LoopbackServer,
    ShortFrameError,
    command_registers,
    crc16,
    crc16_value,
    decode_frame,
    emulator_step,
    encode_frame,
    from_centirad,
    loopback_transact,
    parse_read_response,
    read_request,
    serve_bytes,
    to_centirad,
    transaction_time_us,
    wire_delay,
    write_multiple_request,
    write_single_request,
)
from cableglove.model import FeedbackCommand, Finger, Waveform

from oracles import crc16_bitwise


def test_crc_check_values():
    assert crc16_value(b"123456789") == 0x4B37 == crc16_bitwise(b"123456789")
    assert crc16_value(b"\x00") == 0x40BF == crc16_bitwise(b"\x00")
    assert crc16(b"123456789") == bytes([0x37, 0x4B])
    with pytest.raises(ValueError):
        crc16(b"")


def test_crc_matches_bitwise_oracle():
    rng = random.Random(2024)
    for _ in range(10_000):
        data = rng.randbytes(rng.randint(1, 64))
        assert crc16_value(data) == crc16_bitwise(data)


@given(st.binary(min_size=1, max_size=200))
def test_crc_self_check(data):
    assert crc16_value(data + crc16(data)) == 0


def test_read_request_wire_image():
    body = bytes([0x01, 0x03, 0x00, 0x00, 0x00, 0x10])
    expected = body + struct.pack("<H", crc16_bitwise(body))
    wire = encode_frame(read_request(1, 0x0000, 16))
    assert wire == expected
    assert wire.hex() == "0103000000104406"


frames = st.builds(
    BusFrame,
    st.integers(0, 255),
    st.integers(0, 255),
    st.binary(max_size=252),
)


@given(frames)
def test_round_trip(frame):
    assert decode_frame(encode_frame(frame)) == frame


def test_empty_payload_round_trip():
    f = BusFrame(7, 0x2B)
    assert len(encode_frame(f)) == 4
    assert decode_frame(encode_frame(f)) == f


def test_short_and_bad_crc_are_distinct():
    with pytest.raises(ShortFrameError):
        decode_frame(b"\x01\x03\x00")
    wire = bytearray(encode_frame(read_request(1, 0, 16)))
    wire[-1] ^= 0xFF
    with pytest.raises(CrcError, match="bad CRC"):
        decode_frame(bytes(wire))
    assert not issubclass(ShortFrameError, CrcError)
    with pytest.raises(FrameError):
        BusFrame(1, 3, bytes(253))


def test_single_bit_flips_detected(capsys):
    rng = random.Random(99)
    silent = 0
    for _ in range(10_000):
        frame = BusFrame(rng.randint(1, 247), rng.randint(0, 255), rng.randbytes(rng.randint(0, 30)))
        wire = bytearray(encode_frame(frame))
        bit = rng.randrange(len(wire) * 8)
        wire[bit // 8] ^= 1 << (bit % 8)
        try:
            decode_frame(bytes(wire))
            silent += 1
        except CrcError:
            pass
    with capsys.disabled():
        print(f"\nsingle-bit flips: 10000 trials, {silent} silent passes")
    assert silent == 0


def test_wire_delay():
    assert wire_delay(8) == (160.0, 70.0)
    assert wire_delay(1)[0] == 20.0
    assert wire_delay(16)[0] == 2 * wire_delay(8)[0]
    assert transaction_time_us(8, 37) == 160 + 70 + 740 + 70
    with pytest.raises(ValueError):
        wire_delay(0)


# -- emulator ---------------------------------------------------------------

def test_read_injected_counts():
    dev = GloveDevice()
    counts = [i * 4000 + 17 for i in range(16)]
    dev.inject_counts(counts)
    for fn in (0x03, 0x04):
        resp = emulator_step(dev, read_request(1, 0, 16, fn))
        assert resp.payload[0] == 32
        assert resp.payload[1:] == struct.pack(">16H", *counts)
        assert parse_read_response(resp) == counts


def test_write_then_read_back():
    dev = GloveDevice()
    resp = emulator_step(dev, write_single_request(1, SERVO_BASE, 1234))
    assert resp.payload == struct.pack(">HH", SERVO_BASE, 1234)
    assert parse_read_response(emulator_step(dev, read_request(1, SERVO_BASE, 1))) == [1234]
    resp = emulator_step(dev, write_multiple_request(1, WAVEFORM_BASE, [1, 2, 0, 1, 2]))
    assert resp.payload == struct.pack(">HH", WAVEFORM_BASE, 5)
    assert parse_read_response(emulator_step(dev, read_request(1, WAVEFORM_BASE, 5))) == [1, 2, 0, 1, 2]


@pytest.mark.parametrize(
    "request_, code",
    [
        (read_request(1, 0x0500, 1), 0x02),
        (read_request(1, 0x000F, 2), 0x02),  # runs off the encoder block
        (write_single_request(1, 0x0003, 5), 0x02),  # encoders are read-only
        (read_request(1, 0, 0), 0x03),
        (BusFrame(1, 0x2B, b"\x00\x00\x00\x00"), 0x01),
    ],
)
def test_exception_responses(request_, code):
    dev = GloveDevice()
    before = dev.snapshot()
    resp = emulator_step(dev, request_)
    assert resp.is_exception and resp.function == request_.function | 0x80
    assert resp.payload == bytes([code])
    assert dev.snapshot() == before
    with pytest.raises(FrameError):
        parse_read_response(resp)


def test_other_address_and_broadcast():
    dev = GloveDevice(address=5)
    assert emulator_step(dev, read_request(1, 0, 1)) is None
    assert emulator_step(dev, write_single_request(0, CURRENT_BASE, 65)) is None
    assert dev.registers[CURRENT_BASE] == 65


def _script(rng):
    reqs = []
    for _ in range(200):
        kind = rng.randrange(3)
        if kind == 0:
            reqs.append(read_request(1, rng.choice([0, 0x100, 0x200, 0x300, 0x500]), rng.randint(1, 5)))
        elif kind == 1:
            reqs.append(write_single_request(1, rng.choice([0x100, 0x203, 0x300, 0x7]), rng.randint(0, 65535)))
        else:
            reqs.append(write_multiple_request(1, 0x100, [rng.randint(0, 65535) for _ in range(5)]))
    return reqs


def test_emulator_determinism():
    reqs = _script(random.Random(5))
    runs = []
    for _ in range(2):
        dev = GloveDevice()
        responses = [encode_frame(emulator_step(dev, r)) for r in reqs]
        runs.append((responses, dev.snapshot()))
    assert runs[0] == runs[1]


def test_serve_bytes_and_loopback():
    dev = GloveDevice()
    dev.inject_counts(range(100, 116))
    assert serve_bytes(dev, encode_frame(read_request(1, 0, 2))).hex().startswith("010304")
    server = LoopbackServer(dev)
    thread = threading.Thread(target=server.serve_forever, daemon=True)
    thread.start()
    try:
        resp = loopback_transact(server.port, read_request(1, 0, 16))
        assert parse_read_response(resp) == list(range(100, 116))
        loopback_transact(server.port, write_multiple_request(1, SERVO_BASE, [1, 2, 3, 4, 5]))
        assert [dev.registers[SERVO_BASE + i] for i in range(5)] == [1, 2, 3, 4, 5]
        exc = loopback_transact(server.port, read_request(1, 0x0500, 1))
        assert exc.payload == b"\x02"
    finally:
        server.shutdown()
        server.server_close()


def test_centirad_helpers():
    assert to_centirad(1.234) == 123
    assert to_centirad(-0.15) == 0x10000 - 15
    assert from_centirad(to_centirad(-0.15)) == -0.15
    with pytest.raises(ValueError):
        to_centirad(400.0)
    cmd = FeedbackCommand(Finger.RING, Waveform.WAVEFORM2, 0.5, False)
    assert command_registers(cmd) == {SERVO_BASE + 2: 50, WAVEFORM_BASE + 2: 2}

"""Modbus-RTU framing, the glove register map and an in-process device emulator.

Register map (16-bit registers, big-endian on the wire):

    ========  ===============  =====  =========================================
    address   content          count  access / units
    ========  ===============  =====  =========================================
    0x0000    encoder counts   16     read-only, raw multi-turn counts
    0x0100    servo targets    5      read/write, centi-radians (int16)
    0x0200    LRA waveform     5      read/write, 0 off, 1 waveform 1, 2 waveform 2
    0x0300    finger current   5      read/write, mA (uint16)
    ========  ===============  =====  =========================================

Finger order in the 5-register blocks is index, middle, ring, pinky, thumb.
Supported functions: 0x03/0x04 read, 0x06 write single, 0x10 write multiple.
Errors come back as exception frames (function | 0x80) with code 0x01
(illegal function), 0x02 (illegal data address) or 0x03 (illegal data value).
"""

from __future__ import annotations

import socket
import socketserver
import struct
import threading
from dataclasses import dataclass, field
from typing import Iterable, Sequence

from .model import N_ENCODERS, FeedbackCommand, Finger

READ_HOLDING = 0x03
READ_INPUT = 0x04
WRITE_SINGLE = 0x06
WRITE_MULTIPLE = 0x10

ILLEGAL_FUNCTION = 0x01
ILLEGAL_ADDRESS = 0x02
ILLEGAL_VALUE = 0x03

ENCODER_BASE = 0x0000
SERVO_BASE = 0x0100
WAVEFORM_BASE = 0x0200
CURRENT_BASE = 0x0300

MAX_FRAME = 256
BITS_PER_CHAR = 10  # 8N1


class FrameError(ValueError):
    pass


class ShortFrameError(FrameError):
    pass


class CrcError(FrameError):
    pass


def _make_table() -> tuple[int, ...]:
    table = []
    for byte in range(256):
        crc = byte
        for _ in range(8):
            crc = (crc >> 1) ^ 0xA001 if crc & 1 else crc >> 1
        table.append(crc)
    return tuple(table)


_CRC_TABLE = _make_table()


def crc16_value(data: bytes) -> int:
    """CRC-16/MODBUS of ``data`` as an integer."""
    crc = 0xFFFF
    for b in data:
        crc = (crc >> 8) ^ _CRC_TABLE[(crc ^ b) & 0xFF]
    return crc


def crc16(data: bytes) -> bytes:
    """CRC-16/MODBUS, low byte first as it goes on the wire."""
    if not data:
        raise ValueError("CRC of empty input")
    return struct.pack("<H", crc16_value(data))


@dataclass(frozen=True)
class BusFrame:
    address: int
    function: int
    payload: bytes = b""

    def __post_init__(self):
        if not (0 <= self.address <= 0xFF and 0 <= self.function <= 0xFF):
            raise FrameError("address and function must be single bytes")
        if len(self.payload) + 4 > MAX_FRAME:
            raise FrameError(f"frame longer than {MAX_FRAME} bytes")

    @property
    def crc(self) -> bytes:
        return crc16(bytes([self.address, self.function]) + self.payload)

    @property
    def is_exception(self) -> bool:
        return bool(self.function & 0x80)


def encode_frame(frame: BusFrame) -> bytes:
    body = bytes([frame.address, frame.function]) + bytes(frame.payload)
    return body + crc16(body)


def decode_frame(wire: bytes) -> BusFrame:
    wire = bytes(wire)
    if len(wire) < 4:
        raise ShortFrameError(f"short frame: {len(wire)} bytes, need at least 4")
    if len(wire) > MAX_FRAME:
        raise FrameError(f"frame longer than {MAX_FRAME} bytes")
    body, received = wire[:-2], wire[-2:]
    if crc16(body) != received:
        raise CrcError(
            f"bad CRC: received {received.hex()}, computed {crc16(body).hex()}"
        )
    return BusFrame(body[0], body[1], body[2:])


# ---------------------------------------------------------------------------
# Request / response builders
# ---------------------------------------------------------------------------

def read_request(address: int, start: int, count: int, function: int = READ_HOLDING) -> BusFrame:
    return BusFrame(address, function, struct.pack(">HH", start, count))


def write_single_request(address: int, register: int, value: int) -> BusFrame:
    return BusFrame(address, WRITE_SINGLE, struct.pack(">HH", register, value & 0xFFFF))


def write_multiple_request(address: int, start: int, values: Sequence[int]) -> BusFrame:
    regs = b"".join(struct.pack(">H", v & 0xFFFF) for v in values)
    return BusFrame(
        address, WRITE_MULTIPLE, struct.pack(">HHB", start, len(values), len(regs)) + regs
    )


def parse_read_response(frame: BusFrame) -> list[int]:
    if frame.is_exception:
        raise FrameError(f"device exception code 0x{frame.payload[0]:02X}")
    n = frame.payload[0]
    data = frame.payload[1:1 + n]
    if len(data) != n or n % 2:
        raise FrameError("inconsistent byte count in read response")
    return list(struct.unpack(f">{n // 2}H", data))


def request_length(prefix: bytes) -> int | None:
    """Total length of a request given its leading bytes, None if more are needed."""
    if len(prefix) < 2:
        return None
    func = prefix[1]
    if func in (READ_HOLDING, READ_INPUT, WRITE_SINGLE):
        return 8
    if func == WRITE_MULTIPLE:
        return None if len(prefix) < 7 else 9 + prefix[6]
    # unknown function: assume the fixed 8-byte shape so an exception can be returned
    return 8


def wire_delay(length: int, bitrate: int = 500_000) -> tuple[float, float]:
    """Transmission time and trailing 3.5-character gap, in microseconds."""
    if length <= 0:
        raise ValueError("frame length must be > 0")
    char_us = BITS_PER_CHAR * 1e6 / bitrate
    return length * char_us, 3.5 * char_us


def transaction_time_us(request_len: int, response_len: int, bitrate: int = 500_000) -> float:
    tx, gap = wire_delay(request_len, bitrate)
    rx, gap2 = wire_delay(response_len, bitrate)
    return tx + gap + rx + gap2


# ---------------------------------------------------------------------------
# Register map and emulator
# ---------------------------------------------------------------------------

_BLOCKS = (
    # base, size, writable
    (ENCODER_BASE, N_ENCODERS, False),
    (SERVO_BASE, len(Finger), True),
    (WAVEFORM_BASE, len(Finger), True),
    (CURRENT_BASE, len(Finger), True),
)


def _block_of(register: int):
    for base, size, writable in _BLOCKS:
        if base <= register < base + size:
            return base, size, writable
    return None


def span_mapped(start: int, count: int, write: bool = False) -> bool:
    """True when the whole span lies inside one block (and that block is writable)."""
    block = _block_of(start)
    if block is None:
        return False
    base, size, writable = block
    if start + count > base + size:
        return False
    return writable or not write


def to_centirad(theta: float) -> int:
    """Servo angle to the signed centi-radian register value (two's complement)."""
    value = int(round(theta * 100.0))
    if not -0x8000 <= value <= 0x7FFF:
        raise ValueError(f"servo angle {theta} rad outside the int16 centi-radian range")
    return value & 0xFFFF


def from_centirad(register: int) -> float:
    value = register - 0x10000 if register & 0x8000 else register
    return value / 100.0


def command_registers(cmd: FeedbackCommand) -> dict[int, int]:
    """Register writes that deliver ``cmd`` to the glove."""
    f = int(cmd.finger)
    return {SERVO_BASE + f: to_centirad(cmd.servo_target), WAVEFORM_BASE + f: int(cmd.waveform)}


@dataclass
class GloveDevice:
    """Register file of the emulated glove controller.

    Owned by a single task; every mutation goes through :meth:`step` or the
    explicit injection helpers used by the simulator.
    """

    address: int = 1
    registers: dict[int, int] = field(default_factory=dict)

    def __post_init__(self):
        for base, size, _ in _BLOCKS:
            for r in range(base, base + size):
                self.registers.setdefault(r, 0)

    def inject_counts(self, counts: Iterable[int]) -> None:
        counts = list(counts)
        if len(counts) != N_ENCODERS:
            raise ValueError(f"need {N_ENCODERS} counts")
        for i, c in enumerate(counts):
            if not 0 <= c <= 0xFFFF:
                raise ValueError(f"count {c} does not fit a register")
            self.registers[ENCODER_BASE + i] = int(c)

    def snapshot(self) -> dict[int, int]:
        return dict(self.registers)

    def step(self, request: BusFrame) -> BusFrame | None:
        """Serve one request; None for broadcasts or requests for other devices."""
        if request.address not in (0, self.address):
            return None
        response = self._handle(request)
        return None if request.address == 0 else response

    def _exception(self, request: BusFrame, code: int) -> BusFrame:
        return BusFrame(self.address, request.function | 0x80, bytes([code]))

    def _handle(self, req: BusFrame) -> BusFrame:
        p = req.payload
        if req.function in (READ_HOLDING, READ_INPUT):
            if len(p) != 4:
                return self._exception(req, ILLEGAL_VALUE)
            start, count = struct.unpack(">HH", p)
            if not 1 <= count <= 125:
                return self._exception(req, ILLEGAL_VALUE)
            if not span_mapped(start, count):
                return self._exception(req, ILLEGAL_ADDRESS)
            values = [self.registers[start + i] for i in range(count)]
            data = struct.pack(f">{count}H", *values)
            return BusFrame(self.address, req.function, bytes([len(data)]) + data)
        if req.function == WRITE_SINGLE:
            if len(p) != 4:
                return self._exception(req, ILLEGAL_VALUE)
            register, value = struct.unpack(">HH", p)
            if not span_mapped(register, 1, write=True):
                return self._exception(req, ILLEGAL_ADDRESS)
            self.registers[register] = value
            return BusFrame(self.address, req.function, p)
        if req.function == WRITE_MULTIPLE:
            if len(p) < 5:
                return self._exception(req, ILLEGAL_VALUE)
            start, count, nbytes = struct.unpack(">HHB", p[:5])
            if not 1 <= count <= 123 or nbytes != 2 * count or len(p) != 5 + nbytes:
                return self._exception(req, ILLEGAL_VALUE)
            if not span_mapped(start, count, write=True):
                return self._exception(req, ILLEGAL_ADDRESS)
            values = struct.unpack(f">{count}H", p[5:])
            for i, v in enumerate(values):
                self.registers[start + i] = v
            return BusFrame(self.address, req.function, p[:4])
        return self._exception(req, ILLEGAL_FUNCTION)


def emulator_step(device: GloveDevice, request: BusFrame) -> BusFrame | None:
    return device.step(request)


def serve_bytes(device: GloveDevice, wire: bytes) -> bytes:
    """Decode a wire request, run it, encode the reply (empty when silent)."""
    response = device.step(decode_frame(wire))
    return b"" if response is None else encode_frame(response)


# ---------------------------------------------------------------------------
# Local socket loopback
# ---------------------------------------------------------------------------

class _Handler(socketserver.BaseRequestHandler):
    def handle(self):
        buf = b""
        while True:
            chunk = self.request.recv(512)
            if not chunk:
                return
            buf += chunk
            while True:
                need = request_length(buf)
                if need is None or len(buf) < need:
                    break
                wire, buf = buf[:need], buf[need:]
                with self.server.lock:
                    try:
                        reply = serve_bytes(self.server.device, wire)
                    except FrameError:
                        # a corrupted request gets no reply, as on a real line
                        reply = b""
                if reply:
                    self.request.sendall(reply)


class LoopbackServer(socketserver.ThreadingTCPServer):
    """Serves one :class:`GloveDevice` on localhost.

    Requests from all connections are serialised through one lock so the
    register file is never mutated concurrently.
    """

    allow_reuse_address = True
    daemon_threads = True

    def __init__(self, device: GloveDevice, port: int = 0):
        super().__init__(("127.0.0.1", port), _Handler)
        self.device = device
        self.lock = threading.Lock()

    @property
    def port(self) -> int:
        return self.server_address[1]


def loopback_transact(port: int, request: BusFrame, timeout: float = 2.0) -> BusFrame:
    """Send one request to a :class:`LoopbackServer` and wait for the reply."""
    with socket.create_connection(("127.0.0.1", port), timeout=timeout) as sock:
        sock.sendall(encode_frame(request))
        buf = b""
        while True:
            chunk = sock.recv(512)
            if not chunk:
                raise FrameError("connection closed before a full response")
            buf += chunk
            n = response_length(buf)
            if n is not None and len(buf) >= n:
                return decode_frame(buf[:n])


def response_length(prefix: bytes) -> int | None:
    if len(prefix) < 2:
        return None
    func = prefix[1]
    if func & 0x80:
        return 5
    if func in (READ_HOLDING, READ_INPUT):
        return None if len(prefix) < 3 else 5 + prefix[2]
    return 8

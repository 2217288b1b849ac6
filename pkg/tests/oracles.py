"""Independent reference computations used as test oracles.

None of these import the code they check; they re-derive each quantity from
the governing relations by a different route (bisection, explicit trig,
bit-by-bit CRC, textbook statistics).
"""

import math

R1, R1P, R2P, R3P = 16.25, 23.25, 19.31, 17.42
COUPLE_A, COUPLE_B = 0.989, 0.230
SEGMENTS = (35.71, 44.33, 24.21, 23.51)
DORSAL_H = 8.0


def bisect_dip(theta_em, theta_ed, rg=6.0, r1=R1, r1p=R1P, r2p=R2P, r3p=R3P,
               a=COUPLE_A, b=COUPLE_B, lo=-50.0, hi=50.0, iters=200):
    """MCP bend and raw DIP bend by bisection on the cable-closure residual.

    residual(theta3) = rg*theta_ed - theta1*r1' - ((theta3+b)/a)*r2' - theta3*r3'
    is strictly decreasing in theta3.
    """
    theta1 = rg * theta_em / r1

    def residual(t3):
        return rg * theta_ed - theta1 * r1p - ((t3 + b) / a) * r2p - t3 * r3p

    for _ in range(iters):
        mid = 0.5 * (lo + hi)
        if residual(mid) > 0:
            lo = mid
        else:
            hi = mid
    return theta1, 0.5 * (lo + hi)


def _rot_translate(theta, l_prev, p):
    c, s = math.cos(theta), math.sin(theta)
    x, y = p
    return (c * x - s * y - l_prev, s * x + c * y)


def cable_length_chain(t1, t2, t3, sigma=2.0, h=DORSAL_H, segments=SEGMENTS):
    """Planar cable length through the default guide table, explicit trig."""
    thetas = (t1, t2, t3)
    pts = [(0.0, h)]
    for frame in (1, 2, 3):
        length = segments[frame]
        for frac in (0.3, 0.7):
            p = (-frac * length, h)
            for k in range(frame, 0, -1):
                p = _rot_translate(thetas[k - 1], segments[k - 1], p)
            pts.append(p)
    return sum(math.dist(a, b) for a, b in zip(pts, pts[1:])) + sigma


def crc16_bitwise(data: bytes) -> int:
    """CRC-16/MODBUS, one bit at a time, polynomial 0x8005 reflected."""
    crc = 0xFFFF
    for byte in data:
        for bit in range(8):
            inbit = (byte >> bit) & 1
            lsb = (crc ^ inbit) & 1
            crc >>= 1
            if lsb:
                crc ^= 0xA001
    return crc


def mean_std(values):
    n = len(values)
    mean = math.fsum(values) / n
    var = math.fsum((v - mean) ** 2 for v in values) / (n - 1)
    return mean, math.sqrt(var)

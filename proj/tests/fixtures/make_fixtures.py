"""Writes the golden fixture files with an encoder that shares no code with the library.

Run from this directory: python3 make_fixtures.py
"""
import struct

import mpmath

mpmath.mp.dps = 40

# 2x2x4 volume; element (i, j, t) sits at (i * H + j) * T + t.
VOLUME = [
    0.0, 0.0, 1.5, 2.25,
    0.5, 0.0, 0.0, 0.0,
    0.0, 0.0, 0.0, 0.0,
    3.0, 2.5, 1.0, 0.125,
]
with open("volume_2x2x4.triv", "wb") as f:
    f.write(b"TRIV" + struct.pack("<IIII", 1, 2, 2, 4) + struct.pack("<16f", *VOLUME))

# One pixel, K = 2, T = 8, clipped at bin 2.
T, T_START = 8, 2
H = [1.0, 0.5]
MU = [0.25, 0.625]
SIGMA = [0.0625, 0.125]
TAU = [0.125, 0.25]
record = struct.pack("<II", T_START, T - T_START) + struct.pack("<8f", *(H + MU + SIGMA + TAU)) + bytes([1])
header = b"EMGC" + struct.pack("<IIIIII", 1, 1, 1, T, 2, 1) + bytes([0, 0]) + struct.pack("<H", 0)
with open("pixel_k2.emgc", "wb") as f:
    f.write(header + record)


def emg(t, h, mu, sigma, tau):
    t, h, mu, sigma, tau = map(mpmath.mpf, (t, h, mu, sigma, tau))
    lam = sigma / tau
    return (h * lam * mpmath.sqrt(mpmath.pi / 2) * mpmath.exp(lam * lam / 2 - (t - mu) / tau)
            * mpmath.erfc((lam - (t - mu) / sigma) / mpmath.sqrt(2)))


t_len = T - T_START
recon = [0.0] * T
for b in range(t_len):
    t = (b + mpmath.mpf("0.5")) / t_len
    recon[T_START + b] = float(sum(emg(t, *c) for c in zip(H, MU, SIGMA, TAU)))
with open("pixel_k2_recon.triv", "wb") as f:
    f.write(b"TRIV" + struct.pack("<IIII", 1, 1, 1, T) + struct.pack("<8f", *recon))
print("recon", recon)

"""Aaronson-Gottesman stabilizer simulator with numpy bit arrays.

Rows 0..n-1 hold destabilizers, rows n..2n-1 stabilizers; ``r`` is the sign
bit of each row.
"""
from __future__ import annotations

import math

import numpy as np

from .circuits import Circuit, Gate


def _g(x1, z1, x2, z2):
    """Exponent of i when multiplying single-qubit Paulis (x1,z1)*(x2,z2)."""
    x1 = x1.astype(np.int8)
    z1 = z1.astype(np.int8)
    x2 = x2.astype(np.int8)
    z2 = z2.astype(np.int8)
    return np.where(
        x1 & z1, z2 - x2,
        np.where(x1 == 1, z2 * (2 * x2 - 1), np.where(z1 == 1, x2 * (1 - 2 * z2), 0)),
    )


class StabilizerSimulator:
    def __init__(self, n: int):
        self.n = n
        self.x = np.zeros((2 * n, n), dtype=np.uint8)
        self.z = np.zeros((2 * n, n), dtype=np.uint8)
        self.r = np.zeros(2 * n, dtype=np.uint8)
        idx = np.arange(n)
        self.x[idx, idx] = 1
        self.z[n + idx, idx] = 1

    def copy(self) -> "StabilizerSimulator":
        out = StabilizerSimulator.__new__(StabilizerSimulator)
        out.n = self.n
        out.x, out.z, out.r = self.x.copy(), self.z.copy(), self.r.copy()
        return out

    # gates
    def h(self, a: int) -> None:
        xa, za = self.x[:, a].copy(), self.z[:, a].copy()
        self.r ^= xa & za
        self.x[:, a], self.z[:, a] = za, xa

    def s(self, a: int) -> None:
        self.r ^= self.x[:, a] & self.z[:, a]
        self.z[:, a] ^= self.x[:, a]

    def sdg(self, a: int) -> None:
        self.r ^= self.x[:, a] & (self.z[:, a] ^ 1)
        self.z[:, a] ^= self.x[:, a]

    def px(self, a: int) -> None:
        self.r ^= self.z[:, a]

    def pz(self, a: int) -> None:
        self.r ^= self.x[:, a]

    def py(self, a: int) -> None:
        self.r ^= self.x[:, a] ^ self.z[:, a]

    def cnot(self, a: int, b: int) -> None:
        xa, zb = self.x[:, a], self.z[:, b]
        self.r ^= xa & zb & (self.x[:, b] ^ self.z[:, a] ^ 1)
        self.x[:, b] ^= xa
        self.z[:, a] ^= zb

    def swap(self, a: int, b: int) -> None:
        self.x[:, [a, b]] = self.x[:, [b, a]]
        self.z[:, [a, b]] = self.z[:, [b, a]]

    def rotation(self, gate: Gate) -> None:
        """Pauli rotation with an angle that is a multiple of pi/2."""
        quarter = round(gate.theta / (math.pi / 2)) % 4
        if quarter == 0:
            return
        px = np.zeros(self.n, dtype=np.uint8)
        pz = np.zeros(self.n, dtype=np.uint8)
        for k, w in enumerate(gate.wires):
            px[w] = (gate.pauli.x >> k) & 1
            pz[w] = (gate.pauli.z >> k) & 1
        anti = ((self.x @ pz + self.z @ px) & 1).astype(bool)
        if not anti.any():
            return
        if quarter == 2:
            self.r[anti] ^= 1
            return
        # rows g -> -i sin(theta) P g; product P g carries i^e
        xs, zs = self.x[anti], self.z[anti]
        e = np.sum(_g(np.broadcast_to(px, xs.shape), np.broadcast_to(pz, zs.shape), xs, zs), axis=1)
        e += 2 * (1 if gate.pauli.sign < 0 else 0) + 2 * self.r[anti].astype(np.int64)
        e += 3 if quarter == 1 else 1
        self.r[anti] = ((e % 4) // 2).astype(np.uint8)
        self.x[anti] = xs ^ px
        self.z[anti] = zs ^ pz

    def apply(self, gate: Gate) -> None:
        k, w = gate.kind, gate.wires
        if k == "h":
            self.h(w[0])
        elif k == "s":
            self.s(w[0])
        elif k == "sdg":
            self.sdg(w[0])
        elif k == "x":
            self.px(w[0])
        elif k == "y":
            self.py(w[0])
        elif k == "z":
            self.pz(w[0])
        elif k == "cnot":
            self.cnot(w[0], w[1])
        elif k == "swap":
            self.swap(w[0], w[1])
        elif k == "rot":
            if not gate.is_clifford:
                raise ValueError("non-Clifford rotation")
            self.rotation(gate)
        else:
            raise ValueError(f"unknown gate {k}")

    def run(self, c: Circuit) -> None:
        for g in c.gates:
            self.apply(g)

    # measurement
    def _rowsum_into(self, hs: np.ndarray, i: int) -> None:
        """Rows ``hs`` <- row i times row h (vectorised over hs)."""
        xi, zi = self.x[i], self.z[i]
        xh, zh = self.x[hs], self.z[hs]
        g = np.sum(_g(np.broadcast_to(xi, xh.shape), np.broadcast_to(zi, zh.shape), xh, zh), axis=1)
        tot = 2 * self.r[hs].astype(np.int64) + 2 * int(self.r[i]) + g
        self.r[hs] = ((tot % 4) // 2).astype(np.uint8)
        self.x[hs] = xh ^ xi
        self.z[hs] = zh ^ zi

    def measure(self, a: int, rng: np.random.Generator) -> int:
        n = self.n
        col = self.x[n:, a]
        hits = np.flatnonzero(col)
        if hits.size:
            p = n + int(hits[0])
            others = np.flatnonzero(self.x[:, a])
            others = others[others != p]
            if others.size:
                self._rowsum_into(others, p)
            self.x[p - n], self.z[p - n], self.r[p - n] = self.x[p], self.z[p], self.r[p]
            self.x[p] = 0
            self.z[p] = 0
            self.z[p, a] = 1
            outcome = int(rng.random() < 0.5)
            self.r[p] = outcome
            return outcome
        # deterministic: accumulate stabilizers selected by destabilizer X bits
        sx = np.zeros(n, dtype=np.uint8)
        sz = np.zeros(n, dtype=np.uint8)
        e = 0
        for i in np.flatnonzero(self.x[:n, a]):
            row = n + int(i)
            e += 2 * int(self.r[row]) + int(np.sum(_g(self.x[row], self.z[row], sx, sz)))
            sx ^= self.x[row]
            sz ^= self.z[row]
        return (e % 4) // 2

    def is_deterministic(self, a: int) -> bool:
        return not self.x[self.n:, a].any()

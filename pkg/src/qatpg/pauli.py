"""Signed Pauli operators in the binary symplectic representation.

An n-qubit Pauli is stored as two Python integers used as bit masks, ``x`` and
``z``, where bit ``q`` belongs to qubit ``q`` (0-based internally, 1-based in
text).  Per qubit the pair (x, z) encodes

    (0, 0) = I,  (0, 1) = Z,  (1, 0) = X,  (1, 1) = Y.

The operator represented is ``sign * P(x_{n-1}, z_{n-1}) (x) ... (x) P(x_0, z_0)``,
i.e. qubit 1 is the least significant bit of a computational basis index.
"""
from __future__ import annotations

import re
from functools import reduce
from typing import Iterable, Sequence

import numpy as np

_PHASES = (1, 1j, -1, -1j)
_LETTER = {(0, 0): "I", (0, 1): "Z", (1, 0): "X", (1, 1): "Y"}
_BITS = {"I": (0, 0), "Z": (0, 1), "X": (1, 0), "Y": (1, 1)}
_FACTOR_RE = re.compile(r"^([IXYZ])(\d+)$")

_MATS = {
    "I": np.eye(2, dtype=complex),
    "X": np.array([[0, 1], [1, 0]], dtype=complex),
    "Y": np.array([[0, -1j], [1j, 0]], dtype=complex),
    "Z": np.array([[1, 0], [0, -1]], dtype=complex),
}


def mul_exponent(x1: int, z1: int, x2: int, z2: int) -> int:
    """Power of i picked up by P(x1,z1) P(x2,z2) = i^e P(x1^x2, z1^z2).

    Uses P(x, z) = i^{|x&z|} X^x Z^z and Z^z1 X^x2 = (-1)^{|z1&x2|} X^x2 Z^z1.
    """
    x3, z3 = x1 ^ x2, z1 ^ z2
    e = (x1 & z1).bit_count() + (x2 & z2).bit_count() + 2 * (z1 & x2).bit_count()
    e -= (x3 & z3).bit_count()
    return e % 4


class SignedPauli:
    """Hermitian Pauli operator with a sign of +1 or -1."""

    __slots__ = ("n", "x", "z", "sign")

    def __init__(self, n: int, x: int = 0, z: int = 0, sign: int = 1):
        if n < 0:
            raise ValueError("qubit count must be non-negative")
        full = (1 << n) - 1
        if x & ~full or z & ~full:
            raise ValueError("bit mask exceeds qubit count")
        if sign not in (1, -1):
            raise ValueError(f"sign must be +1 or -1, got {sign!r}")
        object.__setattr__(self, "n", n)
        object.__setattr__(self, "x", x)
        object.__setattr__(self, "z", z)
        object.__setattr__(self, "sign", sign)

    def __setattr__(self, name, value):
        raise AttributeError("SignedPauli is immutable")

    # construction helpers
    @classmethod
    def identity(cls, n: int) -> "SignedPauli":
        return cls(n)

    @classmethod
    def single(cls, n: int, qubit: int, letter: str, sign: int = 1) -> "SignedPauli":
        """Single-qubit Pauli ``letter`` on 0-based ``qubit``."""
        bx, bz = _BITS[letter.upper()]
        return cls(n, bx << qubit, bz << qubit, sign)

    @classmethod
    def from_label(cls, label: str) -> "SignedPauli":
        """Dense label such as ``"-XIZ"``; the first letter is qubit 1."""
        sign = 1
        if label[:1] in "+-":
            sign = -1 if label[0] == "-" else 1
            label = label[1:]
        x = z = 0
        for q, ch in enumerate(label):
            if ch not in _BITS:
                raise ValueError(f"bad Pauli letter {ch!r} in {label!r}")
            bx, bz = _BITS[ch]
            x |= bx << q
            z |= bz << q
        return cls(len(label), x, z, sign)

    @classmethod
    def from_str(cls, text: str, n: int) -> "SignedPauli":
        """Parse the sparse form ``"-X1*Z3"`` (1-based qubits) or ``"I"``."""
        s = text.strip()
        sign = 1
        if s[:1] in "+-":
            sign = -1 if s[0] == "-" else 1
            s = s[1:].strip()
        if not s:
            raise ValueError(f"empty Pauli string {text!r}")
        x = z = 0
        if s == "I":
            return cls(n, 0, 0, sign)
        seen = set()
        for factor in s.split("*"):
            m = _FACTOR_RE.match(factor.strip())
            if not m:
                raise ValueError(f"bad Pauli factor {factor!r} in {text!r}")
            letter, idx = m.group(1), int(m.group(2))
            if idx < 1 or idx > n:
                raise ValueError(f"qubit index {idx} out of range for n={n}")
            if idx in seen:
                raise ValueError(f"qubit {idx} repeated in {text!r}")
            seen.add(idx)
            bx, bz = _BITS[letter]
            x |= bx << (idx - 1)
            z |= bz << (idx - 1)
        return cls(n, x, z, sign)

    @classmethod
    def from_bits(cls, bits: Sequence[int], sign: int = 1) -> "SignedPauli":
        """Inverse of :meth:`bits` (interleaved per-qubit pairs)."""
        bits = [int(b) for b in bits]
        if len(bits) % 2:
            raise ValueError("bit vector must have even length")
        n = len(bits) // 2
        x = z = 0
        for q in range(n):
            x |= (bits[2 * q] & 1) << q
            z |= (bits[2 * q + 1] & 1) << q
        return cls(n, x, z, sign)

    # views
    def bits(self) -> np.ndarray:
        """Length-2n GF(2) vector, pair ``(x_q, z_q)`` for each qubit in order."""
        out = np.zeros(2 * self.n, dtype=np.uint8)
        for q in range(self.n):
            out[2 * q] = (self.x >> q) & 1
            out[2 * q + 1] = (self.z >> q) & 1
        return out

    def letter(self, qubit: int) -> str:
        return _LETTER[((self.x >> qubit) & 1, (self.z >> qubit) & 1)]

    @property
    def support(self) -> int:
        """Bit mask of qubits acted on non-trivially."""
        return self.x | self.z

    def support_list(self) -> list[int]:
        s = self.support
        return [q for q in range(self.n) if (s >> q) & 1]

    @property
    def weight(self) -> int:
        return self.support.bit_count()

    def is_identity(self) -> bool:
        return self.x == 0 and self.z == 0

    def unsigned(self) -> "SignedPauli":
        return self if self.sign == 1 else SignedPauli(self.n, self.x, self.z, 1)

    def key(self) -> tuple[int, int]:
        return (self.x, self.z)

    # algebra
    def __neg__(self) -> "SignedPauli":
        return SignedPauli(self.n, self.x, self.z, -self.sign)

    def __mul__(self, other: "SignedPauli") -> "SignedPauli":
        phase, r = pauli_mul(self, other)
        if phase == 1:
            return r
        if phase == -1:
            return -r
        raise ValueError(f"product {self} * {other} has imaginary phase")

    def __eq__(self, other) -> bool:
        if not isinstance(other, SignedPauli):
            return NotImplemented
        return (self.n, self.x, self.z, self.sign) == (other.n, other.x, other.z, other.sign)

    def __hash__(self) -> int:
        return hash((self.n, self.x, self.z, self.sign))

    def __str__(self) -> str:
        factors = [f"{self.letter(q)}{q + 1}" for q in range(self.n) if (self.support >> q) & 1]
        body = "*".join(factors) if factors else "I"
        return ("-" if self.sign < 0 else "") + body

    def __repr__(self) -> str:
        return f"SignedPauli({self.n}, '{self}')"

    def label(self) -> str:
        body = "".join(self.letter(q) for q in range(self.n))
        return ("-" if self.sign < 0 else "+") + body

    # embedding
    def embed(self, wires: Sequence[int], n: int) -> "SignedPauli":
        """Place this ``len(wires)``-qubit Pauli onto the given wires of n qubits."""
        if len(wires) != self.n:
            raise ValueError("wire count does not match Pauli size")
        x = z = 0
        for k, w in enumerate(wires):
            x |= ((self.x >> k) & 1) << w
            z |= ((self.z >> k) & 1) << w
        return SignedPauli(n, x, z, self.sign)

    def restrict(self, wires: Sequence[int]) -> "SignedPauli":
        """Inverse of :meth:`embed`; raises if support leaves ``wires``."""
        mask = 0
        for w in wires:
            mask |= 1 << w
        if self.support & ~mask:
            raise ValueError(f"{self} has support outside {list(wires)}")
        x = z = 0
        for k, w in enumerate(wires):
            x |= ((self.x >> w) & 1) << k
            z |= ((self.z >> w) & 1) << k
        return SignedPauli(len(wires), x, z, self.sign)

    def shifted(self, offset: int, n: int) -> "SignedPauli":
        """Move qubit q to q + offset (offset may be negative) inside n qubits."""
        if offset >= 0:
            return SignedPauli(n, self.x << offset, self.z << offset, self.sign)
        return SignedPauli(n, self.x >> -offset, self.z >> -offset, self.sign)

    def matrix(self) -> np.ndarray:
        return pauli_matrix(self)


def _check_same_n(p: SignedPauli, q: SignedPauli) -> None:
    if p.n != q.n:
        raise ValueError(f"qubit counts differ: {p.n} vs {q.n}")


def pauli_mul(p: SignedPauli, q: SignedPauli) -> tuple[complex, SignedPauli]:
    """Return ``(phase, R)`` with ``p @ q == phase * R`` and ``R.sign == +1``."""
    _check_same_n(p, q)
    e = mul_exponent(p.x, p.z, q.x, q.z)
    if p.sign * q.sign < 0:
        e = (e + 2) % 4
    return _PHASES[e], SignedPauli(p.n, p.x ^ q.x, p.z ^ q.z, 1)


def symplectic(p: SignedPauli, q: SignedPauli) -> int:
    """Symplectic inner product: 0 if p, q commute, 1 otherwise."""
    _check_same_n(p, q)
    return ((p.x & q.z).bit_count() + (p.z & q.x).bit_count()) & 1


def commutes(p: SignedPauli, q: SignedPauli) -> bool:
    return symplectic(p, q) == 0


def gf2_rank(vectors: Iterable[int]) -> int:
    """Rank over GF(2) of integers viewed as bit vectors."""
    pivots: dict[int, int] = {}
    rank = 0
    for v in vectors:
        while v:
            top = v.bit_length() - 1
            if top in pivots:
                v ^= pivots[top]
            else:
                pivots[top] = v
                rank += 1
                break
    return rank


def vector(p: SignedPauli) -> int:
    """Pauli as a single 2n-bit integer, x-block in the high half."""
    return (p.x << p.n) | p.z


def independent(paulis: Sequence[SignedPauli]) -> bool:
    """True iff the bit vectors are linearly independent over GF(2)."""
    paulis = list(paulis)
    if not paulis:
        return True
    n = paulis[0].n
    if any(p.n != n for p in paulis):
        raise ValueError("all Paulis must have the same qubit count")
    return gf2_rank(vector(p) for p in paulis) == len(paulis)


def pauli_matrix(p: SignedPauli) -> np.ndarray:
    """Dense 2^n x 2^n matrix (qubit 1 is the least significant index bit)."""
    mats = [_MATS[p.letter(q)] for q in reversed(range(p.n))]
    if not mats:
        return np.array([[p.sign]], dtype=complex)
    return p.sign * reduce(np.kron, mats)


def all_paulis(n: int) -> list[SignedPauli]:
    """All 4^n unsigned Paulis, indexed by ``(x << n) | z``."""
    return [SignedPauli(n, i >> n, i & ((1 << n) - 1)) for i in range(4 ** n)]

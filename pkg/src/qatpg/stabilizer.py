"""Stabilizer groups and the projectors they define.

A projector is kept as the canonical generator list of its signed group: the
reduced row echelon form over GF(2) of the generator vectors, pivoting on the
highest bit of ``(x << n) | z`` (so X-bits lead), with signs carried through
the row operations.  Two generator lists of the same signed group therefore
produce identical objects, which makes projectors hashable and comparable.
"""
from __future__ import annotations

from typing import Callable, Iterable, Iterator, Sequence

import numpy as np

from .numeric import POLICY
from .pauli import SignedPauli, commutes, pauli_matrix, vector


class SignContradiction(ValueError):
    """Raised when -I lies in the group generated by a list of Paulis."""


def _reduce_rows(
    paulis: Iterable[SignedPauli], key: Callable[[SignedPauli], int]
) -> list[tuple[int, SignedPauli]]:
    """Fully reduced echelon form of commuting Paulis under the bit order ``key``.

    Dependent inputs reducing to +I are dropped; -I raises SignContradiction.
    Returns (pivot, pauli) pairs sorted by ascending pivot.
    """
    rows: list[tuple[int, SignedPauli]] = []
    for p in paulis:
        cur, v = p, key(p)
        for piv, r in rows:
            if (v >> piv) & 1:
                cur = cur * r
                v = key(cur)
        if v == 0:
            if cur.sign < 0:
                raise SignContradiction("generators imply -I")
            continue
        piv = v.bit_length() - 1
        rows = [(rp, r * cur) if (key(r) >> piv) & 1 else (rp, r) for rp, r in rows]
        rows.append((piv, cur))
    rows.sort(key=lambda t: t[0])
    return rows


class StabilizerProjector:
    """Projector onto the joint +1 eigenspace of a signed stabilizer group."""

    __slots__ = ("n", "gens", "_hash")

    def __init__(self, n: int, gens: Sequence[SignedPauli] = (), _canonical: bool = False):
        gens = tuple(gens)
        if not _canonical:
            gens = _canonical_gens(n, gens)
        object.__setattr__(self, "n", n)
        object.__setattr__(self, "gens", gens)
        object.__setattr__(self, "_hash", hash((n, tuple((g.x, g.z, g.sign) for g in gens))))

    def __setattr__(self, name, value):
        raise AttributeError("StabilizerProjector is immutable")

    @classmethod
    def identity(cls, n: int) -> "StabilizerProjector":
        return cls(n, (), _canonical=True)

    @classmethod
    def from_str(cls, text: str, n: int) -> "StabilizerProjector":
        """Parse ``"<-X3,Z1*Z2>"``; ``"<>"`` is the identity."""
        s = text.strip()
        if s.startswith("<") and s.endswith(">"):
            s = s[1:-1]
        parts = [t for t in (u.strip() for u in s.split(",")) if t]
        return canonicalize([SignedPauli.from_str(t, n) for t in parts], n)

    @property
    def k(self) -> int:
        return len(self.gens)

    @property
    def trace(self) -> int:
        """Rank of the projector, 2^(n-k)."""
        return 1 << (self.n - self.k)

    def __eq__(self, other) -> bool:
        if not isinstance(other, StabilizerProjector):
            return NotImplemented
        return self.n == other.n and self.gens == other.gens

    def __hash__(self) -> int:
        return self._hash

    def __str__(self) -> str:
        return "<" + ",".join(str(g) for g in self.gens) + ">"

    def __repr__(self) -> str:
        return f"StabilizerProjector({self.n}, '{self}')"

    def elements(self) -> Iterator[SignedPauli]:
        """All 2^k signed group elements."""
        elems = [SignedPauli.identity(self.n)]
        for g in self.gens:
            elems += [e * g for e in elems]
        return iter(elems)

    def sign_of(self, p: SignedPauli) -> int:
        """Sign with which the unsigned Pauli ``p`` occurs in the group, or 0."""
        acc = SignedPauli.identity(self.n)
        v = vector(p)
        for g in self.gens:
            piv = vector(g).bit_length() - 1
            if (v >> piv) & 1:
                acc = acc * g
                v ^= vector(g)
        if v:
            return 0
        return acc.sign

    def contains(self, p: SignedPauli) -> bool:
        return self.sign_of(p) == p.sign

    def conjugated(self, fn: Callable[[SignedPauli], SignedPauli]) -> "StabilizerProjector":
        """Apply a Clifford action generator-wise and re-canonicalize."""
        return StabilizerProjector(self.n, [fn(g) for g in self.gens])

    def embed(self, wires: Sequence[int], n: int) -> "StabilizerProjector":
        """This projector on ``wires`` tensored with identity elsewhere."""
        return StabilizerProjector(n, [g.embed(wires, n) for g in self.gens])

    def matrix(self, cap: int | None = None) -> np.ndarray:
        return dense_projector(self, cap)


def _canonical_gens(n: int, gens: Sequence[SignedPauli]) -> tuple[SignedPauli, ...]:
    for g in gens:
        if g.n != n:
            raise ValueError("generator qubit count mismatch")
    for i, a in enumerate(gens):
        for b in gens[i + 1:]:
            if not commutes(a, b):
                raise ValueError(f"generators {a} and {b} anti-commute")
    return tuple(p for _, p in _reduce_rows(gens, vector))


def canonicalize(gens: Sequence[SignedPauli], n: int | None = None) -> StabilizerProjector:
    """Canonical projector of the group generated by ``gens``."""
    gens = list(gens)
    if n is None:
        if not gens:
            raise ValueError("qubit count needed for an empty generator list")
        n = gens[0].n
    return StabilizerProjector(n, gens)


def _row_space_basis(vectors: Iterable[int]) -> list[int]:
    basis: list[int] = []
    for v in vectors:
        for b in basis:
            if v ^ b < v:
                v ^= b
        if v:
            basis.append(v)
            basis.sort(reverse=True)
    return basis


def unsigned_intersection(a: StabilizerProjector, b: StabilizerProjector) -> list[SignedPauli]:
    """Basis of the intersection of the unsigned groups (Zassenhaus)."""
    n = a.n
    w = 2 * n
    rows = [(vector(g) << w) | vector(g) for g in a.gens]
    rows += [vector(g) << w for g in b.gens]
    basis = _row_space_basis(rows)
    out = []
    low = (1 << w) - 1
    for r in basis:
        if r >> w == 0:
            v = r & low
            out.append(SignedPauli(n, v >> n, v & ((1 << n) - 1)))
    return out


def intersect(a: StabilizerProjector, b: StabilizerProjector) -> StabilizerProjector:
    """Signed intersection of two stabilizer groups."""
    if a.n != b.n:
        raise ValueError("qubit counts differ")
    basis = unsigned_intersection(a, b)
    signed, clash = [], []
    for y in basis:
        sa, sb = a.sign_of(y), b.sign_of(y)
        signed.append(y if sa > 0 else -y)
        clash.append(sa != sb)
    # elements whose signs agree form the kernel of the clash character
    if any(clash):
        first = clash.index(True)
        pivot = signed[first]
        kept = []
        for i, (p, c) in enumerate(zip(signed, clash)):
            if i == first:
                continue
            kept.append(p * pivot if c else p)
        signed = kept
    return StabilizerProjector(a.n, signed)


def _clear_qubit_z(gens: Sequence[SignedPauli], q: int) -> list[SignedPauli]:
    zq = SignedPauli.single(gens[0].n, q, "Z") if gens else None
    return [g * zq if (g.z >> q) & 1 else g for g in gens]


def project_zero(a: StabilizerProjector, m: int) -> tuple[float, StabilizerProjector]:
    """``<0..0| A |0..0>`` on the leading m qubits as ``c * B``.

    c is 2^-(number of generators removed) and is 0 when -Z_q lies in the
    group for some projected qubit (then B is returned as the identity).
    """
    if m < 0 or m > a.n:
        raise ValueError("block size out of range")
    n = a.n
    gens = list(a.gens)
    c = 1.0
    for q in range(m):
        zq = SignedPauli.single(n, q, "Z")
        anti = [i for i, g in enumerate(gens) if not commutes(g, zq)]
        if anti:
            piv = gens[anti[0]]
            for i in anti[1:]:
                gens[i] = gens[i] * piv
            del gens[anti[0]]
            c *= 0.5
        cur = StabilizerProjector(n, gens)
        if cur.sign_of(zq) < 0:
            return 0.0, StabilizerProjector.identity(n - m)
        gens = [g for g in _clear_qubit_z(list(cur.gens), q) if not g.is_identity()]
    rest = [g.shifted(-m, n - m) for g in gens]
    return c, StabilizerProjector(n - m, rest)


def partial_trace_stab(a: StabilizerProjector, m: int) -> tuple[float, StabilizerProjector]:
    """Partial trace over the leading m qubits as ``c * B``."""
    if m < 0 or m > a.n:
        raise ValueError("block size out of range")
    n = a.n
    low = (1 << m) - 1
    r = n - m

    def key(p: SignedPauli) -> int:
        block = ((p.x & low) << m) | (p.z & low)
        rest = ((p.x >> m) << r) | (p.z >> m)
        return (block << (2 * r)) | rest

    rows = _reduce_rows(a.gens, key)
    trivial = [p for piv, p in rows if piv < 2 * r]
    c = float(2 ** m) * 2.0 ** len(trivial) / 2.0 ** a.k
    b = StabilizerProjector(r, [p.shifted(-m, r) for p in trivial])
    return c, b


def dense_projector(a: StabilizerProjector, cap: int | None = None) -> np.ndarray:
    """Dense matrix of prod_i (I + P_i)/2."""
    cap = POLICY.dense_cap if cap is None else cap
    if a.n > cap:
        raise ValueError(f"{a.n} qubits exceeds dense cap {cap}")
    dim = 1 << a.n
    out = np.eye(dim, dtype=complex)
    for g in a.gens:
        out = out @ (np.eye(dim) + pauli_matrix(g)) / 2
    return out

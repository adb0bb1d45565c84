"""Clifford tableaus, Pauli-map completion and circuit synthesis.

A tableau stores the signed images of X_j and Z_j under ``P -> U P U^dag``.
Global phases are never tracked.
"""
from __future__ import annotations

import math
from typing import Sequence

import numpy as np

from .circuits import Circuit, Gate
from .pauli import SignedPauli, independent, mul_exponent, pauli_mul, symplectic
from .stabilizer import StabilizerProjector


# single-gate conjugation
def conjugate_by_gate(p: SignedPauli, gate: Gate) -> SignedPauli:
    """Return ``G p G^dag`` for a Clifford gate G acting on p's qubits."""
    x, z, s = p.x, p.z, p.sign
    k = gate.kind
    if k == "rot":
        return _conjugate_by_rotation(p, gate)
    a = gate.wires[0]
    xa, za = (x >> a) & 1, (z >> a) & 1
    if k == "h":
        if xa and za:
            s = -s
        if xa != za:
            x ^= 1 << a
            z ^= 1 << a
    elif k == "s":
        if xa and za:
            s = -s
        z ^= xa << a
    elif k == "sdg":
        if xa and not za:
            s = -s
        z ^= xa << a
    elif k == "x":
        if za:
            s = -s
    elif k == "z":
        if xa:
            s = -s
    elif k == "y":
        if xa ^ za:
            s = -s
    elif k == "cnot":
        t = gate.wires[1]
        xt, zt = (x >> t) & 1, (z >> t) & 1
        if xa and zt and not (xt ^ za):
            s = -s
        x ^= xa << t
        z ^= zt << a
    elif k == "swap":
        t = gate.wires[1]
        xt, zt = (x >> t) & 1, (z >> t) & 1
        if xa != xt:
            x ^= (1 << a) | (1 << t)
        if za != zt:
            z ^= (1 << a) | (1 << t)
    else:
        raise ValueError(f"unknown gate {k}")
    return SignedPauli(p.n, x, z, s)


def _conjugate_by_rotation(p: SignedPauli, gate: Gate) -> SignedPauli:
    if not gate.is_clifford:
        raise ValueError("rotation angle is not a multiple of pi/2")
    axis = gate.global_pauli(p.n)
    if symplectic(axis, p) == 0:
        return p
    quarter = round(gate.theta / (math.pi / 2)) % 4
    if quarter == 0:
        return p
    if quarter == 2:
        return -p
    # exp(-i t/2 P) g exp(i t/2 P) = -i sin(t) P g for anti-commuting g
    phase, r = pauli_mul(axis, p)
    val = (-1j if quarter == 1 else 1j) * phase
    return r if val.real > 0 else -r


def _prod_exponent(paulis: Sequence[SignedPauli], n: int) -> tuple[int, int, int]:
    """Ordered product of signed Paulis as ``i^e P(x, z)``."""
    e, x, z = 0, 0, 0
    for p in paulis:
        e += mul_exponent(x, z, p.x, p.z) + (2 if p.sign < 0 else 0)
        x ^= p.x
        z ^= p.z
    return e % 4, x, z


class CliffordTableau:
    """Images of X_j and Z_j under conjugation by a Clifford unitary."""

    __slots__ = ("n", "xs", "zs")

    def __init__(self, n: int, xs: Sequence[SignedPauli], zs: Sequence[SignedPauli]):
        self.n = n
        self.xs = tuple(xs)
        self.zs = tuple(zs)
        if len(self.xs) != n or len(self.zs) != n:
            raise ValueError("need n X-images and n Z-images")

    @classmethod
    def identity(cls, n: int) -> "CliffordTableau":
        return cls(n, [SignedPauli.single(n, j, "X") for j in range(n)],
                   [SignedPauli.single(n, j, "Z") for j in range(n)])

    @classmethod
    def from_gate(cls, gate: Gate, n: int) -> "CliffordTableau":
        return cls.identity(n).then_gate(gate)

    @classmethod
    def from_circuit(cls, c: Circuit) -> "CliffordTableau":
        t = cls.identity(c.n)
        for g in c.gates:
            t = t.then_gate(g)
        return t

    @property
    def x_images(self) -> tuple[SignedPauli, ...]:
        return self.xs

    @property
    def z_images(self) -> tuple[SignedPauli, ...]:
        return self.zs

    def conjugate(self, p: SignedPauli) -> SignedPauli:
        """``U p U^dag``."""
        if p.n != self.n:
            raise ValueError("qubit counts differ")
        factors = [self.xs[j] for j in range(self.n) if (p.x >> j) & 1]
        factors += [self.zs[j] for j in range(self.n) if (p.z >> j) & 1]
        e, x, z = _prod_exponent(factors, self.n)
        e = (e + (p.x & p.z).bit_count() + (2 if p.sign < 0 else 0)) % 4
        if e % 2:
            raise ArithmeticError("tableau is not symplectic")
        return SignedPauli(self.n, x, z, 1 if e == 0 else -1)

    def then_gate(self, gate: Gate) -> "CliffordTableau":
        """Tableau of ``G U`` (this unitary followed by ``gate``)."""
        return CliffordTableau(self.n, [conjugate_by_gate(p, gate) for p in self.xs],
                               [conjugate_by_gate(p, gate) for p in self.zs])

    def then(self, other: "CliffordTableau") -> "CliffordTableau":
        """Tableau of ``V U`` where V is ``other``."""
        return CliffordTableau(self.n, [other.conjugate(p) for p in self.xs],
                               [other.conjugate(p) for p in self.zs])

    def inverse(self) -> "CliffordTableau":
        src = [(self.zs[j], self.xs[j]) for j in range(self.n)]
        dst = [(SignedPauli.single(self.n, j, "Z"), SignedPauli.single(self.n, j, "X"))
               for j in range(self.n)]
        return _tableau_from_basis(src, dst, self.n)

    def embed(self, qubits: Sequence[int], n: int) -> "CliffordTableau":
        """Act on ``qubits`` of an n-qubit register, identity elsewhere."""
        base = CliffordTableau.identity(n)
        xs, zs = list(base.xs), list(base.zs)
        for j, q in enumerate(qubits):
            xs[q] = self.xs[j].embed(qubits, n)
            zs[q] = self.zs[j].embed(qubits, n)
        return CliffordTableau(n, xs, zs)

    def is_valid(self) -> bool:
        imgs = list(self.xs) + list(self.zs)
        if not independent(imgs):
            return False
        for i in range(self.n):
            for j in range(self.n):
                want = 1 if i == j else 0
                if symplectic(self.xs[i], self.zs[j]) != want:
                    return False
                if i < j and (symplectic(self.xs[i], self.xs[j]) or symplectic(self.zs[i], self.zs[j])):
                    return False
        return True

    def __eq__(self, other) -> bool:
        return isinstance(other, CliffordTableau) and (self.n, self.xs, self.zs) == (other.n, other.xs, other.zs)

    def __repr__(self) -> str:
        body = ", ".join(f"X{j + 1}->{self.xs[j]}, Z{j + 1}->{self.zs[j]}" for j in range(self.n))
        return f"CliffordTableau({body})"


# basis machinery
def _xor(a: SignedPauli, b: SignedPauli) -> SignedPauli:
    return SignedPauli(a.n, a.x ^ b.x, a.z ^ b.z)


def _project_out(v: SignedPauli, pairs: Sequence[tuple[SignedPauli, SignedPauli]]) -> SignedPauli:
    """Component of v symplectically orthogonal to the span of ``pairs``."""
    for a, b in pairs:
        sa, sb = symplectic(v, a), symplectic(v, b)
        if sb:
            v = _xor(v, a)
        if sa:
            v = _xor(v, b)
    return v


def _gram_schmidt(vecs: Sequence[SignedPauli]):
    """Split a span into symplectic pairs and leftover isotropic vectors.

    Every decision depends only on symplectic products among the inputs, so
    two input lists with the same commutation matrix are processed by the
    same sequence of row operations.
    """
    rem = [v.unsigned() for v in vecs]
    pairs, iso = [], []
    while rem:
        a = rem.pop(0)
        idx = next((j for j, c in enumerate(rem) if symplectic(a, c)), None)
        if idx is None:
            iso.append(a)
            continue
        b = rem.pop(idx)
        out = []
        for c in rem:
            sa, sb = symplectic(c, a), symplectic(c, b)
            if sb:
                c = _xor(c, a)
            if sa:
                c = _xor(c, b)
            out.append(c)
        rem = out
        pairs.append((a, b))
    return pairs, iso


def _standard_vectors(n: int) -> list[SignedPauli]:
    out = []
    for j in range(n):
        out.append(SignedPauli.single(n, j, "Z"))
        out.append(SignedPauli.single(n, j, "X"))
    return out


def _complete_basis(pairs, iso, n):
    """Extend to a full symplectic basis of n pairs, keeping given pairs first
    and pairing each isotropic vector with a new partner (in order)."""
    pairs = list(pairs)
    cands = [_project_out(e, pairs) for e in _standard_vectors(n)]
    if iso:
        r = len(iso)
        # eliminate on signatures against the isotropic vectors
        rows: list[tuple[int, SignedPauli]] = []
        for v in cands:
            sig = sum(symplectic(v, c) << i for i, c in enumerate(iso))
            for rs, rv in rows:
                if sig & (1 << (rs.bit_length() - 1)):
                    sig ^= rs
                    v = _xor(v, rv)
            if sig:
                top = sig.bit_length() - 1
                rows = [((s2 ^ sig, _xor(v2, v)) if (s2 >> top) & 1 else (s2, v2)) for s2, v2 in rows]
                rows.append((sig, v))
        by_top = {s.bit_length() - 1: v for s, v in rows}
        if len(by_top) != r:
            raise ArithmeticError("could not find partners for isotropic vectors")
        partners = [by_top[i] for i in range(r)]
        # make the partners mutually orthogonal without changing signatures
        for j in range(r):
            for i in range(j):
                if symplectic(partners[j], partners[i]):
                    partners[j] = _xor(partners[j], iso[i])
        new_pairs = list(zip(iso, partners))
        cands = [_project_out(v, new_pairs) for v in cands]
        pairs += new_pairs
    while len(pairs) < n:
        a = next(v for v in cands if not v.is_identity())
        b = next(v for v in cands if symplectic(a, v))
        pairs.append((a, b))
        cands = [_project_out(v, [(a, b)]) for v in cands]
    return pairs


def _tableau_from_basis(src, dst, n) -> CliffordTableau:
    """Tableau mapping each src pair (a_k, b_k) onto dst pair (a'_k, b'_k)."""
    xs, zs = [], []
    for j in range(n):
        for letter, out in (("X", xs), ("Z", zs)):
            e_vec = SignedPauli.single(n, j, letter)
            fs, fd = [], []
            for (a, b), (a2, b2) in zip(src, dst):
                if symplectic(e_vec, b):
                    fs.append(a)
                    fd.append(a2)
                if symplectic(e_vec, a):
                    fs.append(b)
                    fd.append(b2)
            es, xx, zz = _prod_exponent(fs, n)
            if (xx, zz) != (e_vec.x, e_vec.z):
                raise ArithmeticError("source vectors do not form a symplectic basis")
            ed, xd, zd = _prod_exponent(fd, n)
            e = (ed - es) % 4
            if e % 2:
                raise ArithmeticError("target vectors do not form a symplectic basis")
            out.append(SignedPauli(n, xd, zd, 1 if e == 0 else -1))
    return CliffordTableau(n, xs, zs)


def _solve_gf2(rows: Sequence[int], rhs: Sequence[int]) -> int | None:
    """Find v with popcount(row_i & v) = rhs_i (mod 2)."""
    piv: list[tuple[int, int, int]] = []  # (pivot bit, row, rhs)
    for r, b in zip(rows, rhs):
        for p, pr, pb in piv:
            if (r >> p) & 1:
                r ^= pr
                b ^= pb
        if r == 0:
            if b:
                return None
            continue
        top = r.bit_length() - 1
        piv = [((p, pr ^ r, pb ^ b) if (pr >> top) & 1 else (p, pr, pb)) for p, pr, pb in piv]
        piv.append((top, r, b))
    v = 0
    for p, _, b in piv:
        if b:
            v |= 1 << p
    return v


def from_pauli_map(pairs: Sequence[tuple[SignedPauli, SignedPauli]], n: int | None = None) -> CliffordTableau:
    """A Clifford U with ``U P_i U^dag = Q_i`` for each pair (P_i, Q_i)."""
    pairs = list(pairs)
    if n is None:
        if not pairs:
            raise ValueError("qubit count needed for an empty map")
        n = pairs[0][0].n
    ps = [p for p, _ in pairs]
    qs = [q for _, q in pairs]
    if any(p.n != n for p in ps + qs):
        raise ValueError("qubit count mismatch")
    if not independent(ps) or not independent(qs):
        raise ValueError("Paulis on each side must be independent")
    for i in range(len(ps)):
        for j in range(i + 1, len(ps)):
            if symplectic(ps[i], ps[j]) != symplectic(qs[i], qs[j]):
                raise ValueError("commutation patterns differ")
    sp, ip = _gram_schmidt(ps)
    sq, iq = _gram_schmidt(qs)
    src = _complete_basis(sp, ip, n)
    dst = _complete_basis(sq, iq, n)
    tab = _tableau_from_basis(src, dst, n)
    # Pauli frame correction for the signs
    wrong = [int(tab.conjugate(p).sign != q.sign) for p, q in pairs]
    if any(wrong):
        rows = [(q.z << n) | q.x for q in qs]
        v = _solve_gf2(rows, wrong)
        if v is None:
            raise ArithmeticError("sign correction system is inconsistent")
        corr = SignedPauli(n, v >> n, v & ((1 << n) - 1))
        flip = lambda p: -p if symplectic(p, corr) else p  # noqa: E731
        tab = CliffordTableau(n, [flip(p) for p in tab.xs], [flip(p) for p in tab.zs])
    return tab


# synthesis
def tableau_to_circuit(t: CliffordTableau) -> Circuit:
    """Gate sequence over {H, S, S^dag, CNOT, X, Z} implementing the tableau.

    Per-qubit sweep: reduce the images of X_j and Z_j to X_j and Z_j with
    gates on qubits >= j, then invert the recorded sequence.
    """
    n = t.n
    xs, zs = list(t.xs), list(t.zs)
    record: list[Gate] = []

    def apply(g: Gate, lo: int) -> None:
        record.append(g)
        for i in range(lo, n):
            xs[i] = conjugate_by_gate(xs[i], g)
            zs[i] = conjugate_by_gate(zs[i], g)

    for j in range(n):
        a = xs[j]
        for q in range(j, n):
            letter = a.letter(q)
            if letter == "Z":
                apply(Gate.named("h", q), j)
            elif letter == "Y":
                apply(Gate.named("sdg", q), j)
        a = xs[j]
        qx = [q for q in range(j, n) if (a.x >> q) & 1]
        p = j if j in qx else qx[0]
        for q in qx:
            if q != p:
                apply(Gate.named("cnot", p, q), j)
        if p != j:
            apply(Gate.named("cnot", p, j), j)
            apply(Gate.named("cnot", j, p), j)
            apply(Gate.named("cnot", p, j), j)
        b = zs[j]
        for q in range(j + 1, n):
            letter = b.letter(q)
            if letter == "X":
                apply(Gate.named("h", q), j)
            elif letter == "Y":
                apply(Gate.named("sdg", q), j)
                apply(Gate.named("h", q), j)
        b = zs[j]
        for q in range(j + 1, n):
            if (b.z >> q) & 1:
                apply(Gate.named("cnot", q, j), j)
        if zs[j].letter(j) == "Y":
            apply(Gate.named("h", j), j)
            apply(Gate.named("s", j), j)
            apply(Gate.named("h", j), j)
        if xs[j].sign < 0:
            apply(Gate.named("z", j), j)
        if zs[j].sign < 0:
            apply(Gate.named("x", j), j)
    return Circuit(n, tuple(g.inverse() for g in reversed(record)))


def _lower_sdg(c: Circuit) -> Circuit:
    gates = []
    for g in c.gates:
        if g.kind == "sdg":
            gates += [Gate.named("s", g.wires[0]), Gate.named("z", g.wires[0])]
        else:
            gates.append(g)
    return Circuit(c.n, gates)


def projector_prep_circuit(a: StabilizerProjector) -> Circuit:
    """Clifford circuit U_A with U_A (|0><0|^k (x) I) U_A^dag = A.

    The |0> factor sits on the first k = a.k qubits; the trailing qubits
    carry the rank.  Synthesis is restricted to the qubits that matter.
    """
    n, k = a.n, a.k
    touched = set(range(k))
    for g in a.gens:
        touched.update(g.support_list())
    qubits = sorted(touched)
    m = len(qubits)
    pos = {q: i for i, q in enumerate(qubits)}
    pairs = [(SignedPauli.single(m, pos[i], "Z"), g.restrict(qubits)) for i, g in enumerate(a.gens)]
    local = from_pauli_map(pairs, m) if pairs else CliffordTableau.identity(m)
    circ = _lower_sdg(tableau_to_circuit(local))
    return Circuit(n, tuple(g.shifted(qubits) for g in circ.gates))


def random_clifford(n: int, rng: np.random.Generator, layers: int | None = None) -> CliffordTableau:
    """Tableau of a random layered Clifford circuit (not Haar-uniform)."""
    layers = 4 * n + 2 if layers is None else layers
    t = CliffordTableau.identity(n)
    for _ in range(layers):
        for q in range(n):
            g = ("h", "s", "x", "z", "sdg", "y")[int(rng.integers(6))]
            t = t.then_gate(Gate.named(g, q))
        if n > 1:
            c, tq = rng.choice(n, 2, replace=False)
            t = t.then_gate(Gate.named("cnot", int(c), int(tq)))
    return t


def clifford_simulate(circuit: Circuit, shots: int, rng: np.random.Generator,
                      qubits: Sequence[int] | None = None) -> list[str]:
    """Sample terminal computational-basis measurements of a Clifford circuit."""
    from .chp import StabilizerSimulator

    if not circuit.is_clifford:
        raise ValueError("circuit contains a non-Clifford gate")
    qubits = list(range(circuit.n)) if qubits is None else list(qubits)
    base = StabilizerSimulator(circuit.n)
    base.run(circuit)
    out = []
    for _ in range(shots):
        sim = base.copy()
        out.append("".join(str(sim.measure(q, rng)) for q in qubits))
    return out

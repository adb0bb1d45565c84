"""Circuit IR over named Clifford gates and Pauli rotations.

Wires are 0-based in the API and 1-based in the text format.  Gate sites
(fault locations) are 1-based positions in the gate list, so site ``i`` is
the gate U_i applied i-th.

A rotation ``Gate.rot(P, theta)`` is the unitary ``Pi_+ + e^{i theta} Pi_-``
with ``Pi_pm = (I pm P)/2``; for P = Z this is diag(1, e^{i theta}).  Up to a
global phase it equals ``exp(-i theta/2 P)``.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Iterable, Sequence

import numpy as np

from .pauli import SignedPauli, pauli_matrix

CLIFFORD_KINDS = ("h", "s", "sdg", "x", "y", "z", "cnot", "swap")
_ARITY = {"h": 1, "s": 1, "sdg": 1, "x": 1, "y": 1, "z": 1, "cnot": 2, "swap": 2}
_INVERSE = {"s": "sdg", "sdg": "s"}

_SQ = 1 / math.sqrt(2)
_MATRICES = {
    "h": np.array([[_SQ, _SQ], [_SQ, -_SQ]], dtype=complex),
    "s": np.diag([1, 1j]).astype(complex),
    "sdg": np.diag([1, -1j]).astype(complex),
    "x": np.array([[0, 1], [1, 0]], dtype=complex),
    "y": np.array([[0, -1j], [1j, 0]], dtype=complex),
    "z": np.diag([1, -1]).astype(complex),
    # local index = b_first + 2 b_second
    "cnot": np.array([[1, 0, 0, 0], [0, 0, 0, 1], [0, 0, 1, 0], [0, 1, 0, 0]], dtype=complex),
    "swap": np.array([[1, 0, 0, 0], [0, 0, 1, 0], [0, 1, 0, 0], [0, 0, 0, 1]], dtype=complex),
}


def normalize_angle(theta: float) -> float:
    """Map an angle into (-pi, pi]."""
    t = math.remainder(theta, 2 * math.pi)
    if t <= -math.pi:
        t += 2 * math.pi
    return t


def _clifford_angle(theta: float, tol: float = 1e-12) -> bool:
    q = theta / (math.pi / 2)
    return abs(q - round(q)) < tol


@dataclass(frozen=True)
class Gate:
    """A gate acting on ``wires``.

    For rotations ``pauli`` is a Pauli on ``len(wires)`` qubits (wire k is its
    qubit k) and ``theta`` is the angle in (-pi, pi].
    """

    kind: str
    wires: tuple[int, ...]
    pauli: SignedPauli | None = None
    theta: float | None = None

    def __post_init__(self):
        if self.kind == "rot":
            if self.pauli is None or self.theta is None:
                raise ValueError("rotation needs a Pauli and an angle")
            if self.pauli.n != len(self.wires) or self.pauli.is_identity():
                raise ValueError("rotation Pauli must be non-identity on its wires")
            if not (-math.pi < self.theta <= math.pi):
                raise ValueError("rotation angle must lie in (-pi, pi]")
        elif self.kind in _ARITY:
            if len(self.wires) != _ARITY[self.kind]:
                raise ValueError(f"{self.kind} takes {_ARITY[self.kind]} wires")
        else:
            raise ValueError(f"unknown gate kind {self.kind!r}")
        if len(set(self.wires)) != len(self.wires) or any(w < 0 for w in self.wires):
            raise ValueError(f"bad wires {self.wires}")

    # constructors
    @staticmethod
    def named(kind: str, *wires: int) -> "Gate":
        return Gate(kind, tuple(wires))

    @staticmethod
    def rz(wire: int, phi: float) -> "Gate":
        return Gate("rot", (wire,), SignedPauli(1, 0, 1), normalize_angle(phi))

    @staticmethod
    def rot(p: SignedPauli, theta: float) -> "Gate":
        """Rotation about an n-qubit Pauli; wires are its sorted support."""
        wires = tuple(p.support_list())
        return Gate("rot", wires, p.restrict(wires), normalize_angle(theta))

    # properties
    @property
    def is_clifford(self) -> bool:
        return self.kind != "rot" or _clifford_angle(self.theta)

    def global_pauli(self, n: int) -> SignedPauli:
        """Rotation axis as an n-qubit Pauli."""
        if self.kind != "rot":
            raise ValueError("not a rotation")
        return self.pauli.embed(self.wires, n)

    def inverse(self) -> "Gate":
        if self.kind == "rot":
            return Gate("rot", self.wires, self.pauli, normalize_angle(-self.theta))
        return Gate(_INVERSE.get(self.kind, self.kind), self.wires)

    def matrix(self) -> np.ndarray:
        """Local matrix; wire k is bit k of the local index."""
        if self.kind == "rot":
            p = pauli_matrix(self.pauli)
            eye = np.eye(p.shape[0])
            return (eye + p) / 2 + np.exp(1j * self.theta) * (eye - p) / 2
        return _MATRICES[self.kind]

    def shifted(self, mapping: Sequence[int]) -> "Gate":
        """Relabel wires through ``mapping[old] -> new``."""
        return Gate(self.kind, tuple(mapping[w] for w in self.wires), self.pauli, self.theta)

    def to_text(self) -> str:
        w = [str(q + 1) for q in self.wires]
        if self.kind != "rot":
            return f"{self.kind} {' '.join(w)}"
        if self.pauli.n == 1 and self.pauli.sign == 1 and self.pauli.letter(0) == "Z":
            return f"rz {w[0]} {self.theta!r}"
        n = max(self.wires) + 1
        return f"rot {self.pauli.embed(self.wires, n)} {self.theta!r}"


@dataclass(frozen=True)
class Circuit:
    n: int
    gates: tuple[Gate, ...] = ()

    def __post_init__(self):
        object.__setattr__(self, "gates", tuple(self.gates))
        for g in self.gates:
            if max(g.wires) >= self.n:
                raise ValueError(f"gate {g.to_text()} exceeds {self.n} qubits")

    def __len__(self) -> int:
        return len(self.gates)

    @property
    def size(self) -> int:
        return len(self.gates)

    @property
    def depth(self) -> int:
        """Number of layers in the as-soon-as-possible schedule."""
        level = [0] * self.n
        for g in self.gates:
            t = 1 + max(level[w] for w in g.wires)
            for w in g.wires:
                level[w] = t
        return max(level, default=0)

    @property
    def non_clifford_count(self) -> int:
        return sum(not g.is_clifford for g in self.gates)

    @property
    def is_clifford(self) -> bool:
        return all(g.is_clifford for g in self.gates)

    def gate(self, site: int) -> Gate:
        """Gate at 1-based ``site``."""
        if not 1 <= site <= len(self.gates):
            raise IndexError(f"site {site} out of range 1..{len(self.gates)}")
        return self.gates[site - 1]

    def then(self, other: "Circuit") -> "Circuit":
        if other.n != self.n:
            raise ValueError("qubit counts differ")
        return Circuit(self.n, self.gates + other.gates)

    def inverse(self) -> "Circuit":
        return Circuit(self.n, tuple(g.inverse() for g in reversed(self.gates)))

    def stats(self) -> dict:
        return {"qubits": self.n, "size": self.size, "depth": self.depth,
                "non_clifford": self.non_clifford_count}


# fault models
@dataclass(frozen=True)
class MissingGate:
    kind: str = field(default="missing", init=False)


@dataclass(frozen=True)
class ReplacedBy:
    gates: tuple[Gate, ...]
    kind: str = field(default="replace", init=False)

    def __post_init__(self):
        object.__setattr__(self, "gates", tuple(self.gates))


FaultModel = MissingGate | ReplacedBy


def fault_matrix(gate: Gate, fm: FaultModel) -> np.ndarray:
    """Local matrix of the faulty gate on ``gate.wires``."""
    dim = 1 << len(gate.wires)
    if isinstance(fm, MissingGate):
        return np.eye(dim, dtype=complex)
    pos = {w: k for k, w in enumerate(gate.wires)}
    from .densesim import embed_operator  # local import avoids a cycle

    out = np.eye(dim, dtype=complex)
    for g in fm.gates:
        if any(w not in pos for w in g.wires):
            raise ValueError("replacement must act on the faulty gate's wires")
        out = embed_operator(g.matrix(), [pos[w] for w in g.wires], len(gate.wires)) @ out
    return out


def inject_fault(c: Circuit, site: int, fm: FaultModel) -> Circuit:
    gate = c.gate(site)
    if isinstance(fm, MissingGate):
        repl: tuple[Gate, ...] = ()
    else:
        if any(set(g.wires) - set(gate.wires) for g in fm.gates):
            raise ValueError("replacement must act on the faulty gate's wires")
        repl = fm.gates
    gates = c.gates[: site - 1] + repl + c.gates[site:]
    return Circuit(c.n, gates)


# generators
def _controlled_phase(c: int, t: int, phi: float) -> list[Gate]:
    return [Gate.rz(c, phi / 2), Gate.rz(t, phi / 2), Gate.named("cnot", c, t),
            Gate.rz(t, -phi / 2), Gate.named("cnot", c, t)]


def qft_circuit(n: int) -> Circuit:
    """QFT over {H, CNOT, Rz} without the final qubit reversal.

    Each controlled phase uses Rz on both wires, then CNOT, Rz(-), CNOT.
    """
    if n < 1:
        raise ValueError("n must be positive")
    gates: list[Gate] = []
    for j in range(n):
        gates.append(Gate.named("h", j))
        for k in range(j + 1, n):
            gates += _controlled_phase(j, k, math.pi / 2 ** (k - j))
    return Circuit(n, gates)


def bv_circuit(n: int, secret: str | Sequence[int]) -> Circuit:
    """Bernstein-Vazirani over n-1 data qubits and one ancilla (the last wire)."""
    bits = [int(b) for b in secret]
    if len(bits) != n - 1 or any(b not in (0, 1) for b in bits):
        raise ValueError("secret must be a bit string of length n-1")
    anc = n - 1
    gates = [Gate.named("x", anc)]
    gates += [Gate.named("h", q) for q in range(n)]
    gates += [Gate.named("cnot", q, anc) for q in range(n - 1) if bits[q]]
    gates += [Gate.named("h", q) for q in range(n - 1)]
    return Circuit(n, gates)


def random_circuit(n: int, depth: int, seed: int, non_clifford_density: float = 0.3) -> Circuit:
    """Seeded layered circuit mixing Clifford gates and Z rotations.

    Each layer pairs up a random subset of wires with CNOTs and fills the rest
    with single-qubit gates; a single-qubit slot becomes a non-Clifford Rz
    with probability ``non_clifford_density``.
    """
    if n < 2:
        raise ValueError("n must be at least 2")
    rng = np.random.default_rng(seed)
    singles = ("h", "s", "sdg", "x", "z")
    gates: list[Gate] = []
    for _ in range(depth):
        perm = [int(q) for q in rng.permutation(n)]
        npairs = int(rng.integers(0, n // 2 + 1))
        for i in range(npairs):
            gates.append(Gate.named("cnot", perm[2 * i], perm[2 * i + 1]))
        for q in perm[2 * npairs:]:
            if rng.random() < non_clifford_density:
                k = int(rng.integers(1, 4))
                sign = 1 if rng.random() < 0.5 else -1
                gates.append(Gate.rz(q, sign * math.pi / 2 ** (k + 1)))
            else:
                gates.append(Gate.named(str(rng.choice(singles)), q))
    return Circuit(n, gates)


# text format
class CircuitSyntaxError(ValueError):
    def __init__(self, line: int, col: int, msg: str):
        super().__init__(f"line {line}, column {col}: {msg}")
        self.line, self.col = line, col


def serialize_circuit(c: Circuit) -> str:
    lines = [f"qubits {c.n}"]
    lines += [g.to_text() for g in c.gates]
    return "\n".join(lines) + "\n"


def parse_circuit(text: str) -> Circuit:
    n = None
    gates: list[Gate] = []
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0]
        toks = line.split()
        if not toks:
            continue
        col = raw.index(toks[0]) + 1
        op = toks[0].lower()

        def fail(msg: str, tok: int = 0):
            c = raw.find(toks[tok]) + 1 if tok < len(toks) else len(raw) + 1
            raise CircuitSyntaxError(lineno, c, msg)

        if n is None:
            if op != "qubits" or len(toks) != 2 or not toks[1].isdigit():
                raise CircuitSyntaxError(lineno, col, "expected header 'qubits N'")
            n = int(toks[1])
            continue

        def wire(tok: int) -> int:
            if tok >= len(toks):
                fail("missing wire index", tok)
            s = toks[tok]
            if not s.isdigit() or not 1 <= int(s) <= n:
                fail(f"bad wire {s!r}", tok)
            return int(s) - 1

        def angle(tok: int) -> float:
            if tok >= len(toks):
                fail("missing angle", tok)
            try:
                return float(toks[tok])
            except ValueError:
                fail(f"bad angle {toks[tok]!r}", tok)

        try:
            if op in _ARITY:
                ar = _ARITY[op]
                if len(toks) != 1 + ar:
                    fail(f"{op} takes {ar} wire(s)")
                gates.append(Gate(op, tuple(wire(1 + i) for i in range(ar))))
            elif op == "rz":
                if len(toks) != 3:
                    fail("rz takes a wire and an angle")
                gates.append(Gate.rz(wire(1), angle(2)))
            elif op == "rot":
                if len(toks) != 3:
                    fail("rot takes a Pauli and an angle")
                try:
                    p = SignedPauli.from_str(toks[1], n)
                except ValueError as exc:
                    fail(str(exc), 1)
                if p.is_identity():
                    fail("rotation Pauli must be non-identity", 1)
                gates.append(Gate.rot(p, angle(2)))
            else:
                fail(f"unknown gate {op!r}")
        except CircuitSyntaxError:
            raise
        except ValueError as exc:
            raise CircuitSyntaxError(lineno, col, str(exc)) from None
    if n is None:
        raise CircuitSyntaxError(1, 1, "missing 'qubits N' header")
    return Circuit(n, gates)


BENCHMARKS = ("qft", "bv", "rand")


def benchmark(name: str) -> Circuit:
    """Named benchmark such as ``QFT_5``, ``BV_10`` or ``RAND_5``.

    BV circuits use the all-ones secret; ``RAND_n`` is the seeded random
    surrogate with depth n.
    """
    base, _, num = name.lower().partition("_")
    if not num.isdigit():
        raise ValueError(f"unknown benchmark {name!r}")
    n = int(num)
    if base == "qft":
        return qft_circuit(n)
    if base == "bv":
        return bv_circuit(n, "1" * (n - 1))
    if base in ("rand", "qv"):
        return random_circuit(n, n, seed=n)
    raise ValueError(f"unknown benchmark {name!r}")


def iter_sites(c: Circuit) -> Iterable[int]:
    return range(1, len(c.gates) + 1)

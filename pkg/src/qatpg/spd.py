"""Stabilizer projector decompositions (SPDs) and their L1-optimal construction.

An SPD of an operator A is a list of ``(a_i, A_i)`` with ``A = sum a_i A_i`` and
every ``A_i`` a stabilizer projector.  Two norms matter: ``nu = sum |a_i|`` and
``nu_star = sum |a_i| tr(A_i)``.
"""
from __future__ import annotations

import json
import math
from dataclasses import dataclass
from functools import lru_cache
from typing import Callable, Iterable, Iterator, Sequence

import numpy as np

from .circuits import Gate
from .clifford import conjugate_by_gate
from .lp import ColumnGenerationL1, independent_rows, solve_l1
from .numeric import POLICY
from .pauli import SignedPauli, all_paulis, commutes, mul_exponent, pauli_matrix, vector
from .stabilizer import StabilizerProjector, dense_projector

OBJECTIVES = ("nu", "nu_star", "lex_nu_nu_star", "lex_nu_star_nu")

# LP backend used by optimal_spd / sparsify; "highs" is the cross-check route.
DEFAULT_LP_METHOD = "simplex"
MAX_EXACT_QUBITS = 4  # largest operator optimal_spd accepts


class SPD:
    """Immutable list of (coefficient, projector) terms on n qubits.

    Terms with the same projector are merged; merged coefficients at or below
    ``drop`` times the largest input magnitude are removed.  The threshold is
    relative because normalised states on many qubits have tiny coefficients.
    """

    __slots__ = ("n", "terms")

    def __init__(self, n: int, terms: Iterable[tuple[float, StabilizerProjector]] = (),
                 drop: float | None = None):
        drop = POLICY.coeff_drop if drop is None else drop
        acc: dict[StabilizerProjector, float] = {}
        scale = 0.0
        for c, p in terms:
            if p.n != n:
                raise ValueError("projector qubit count mismatch")
            acc[p] = acc.get(p, 0.0) + float(c)
            scale = max(scale, abs(float(c)))
        kept = tuple((c, p) for p, c in acc.items() if abs(c) > drop * scale)
        object.__setattr__(self, "n", n)
        object.__setattr__(self, "terms", kept)

    def __setattr__(self, name, value):
        raise AttributeError("SPD is immutable")

    def __len__(self) -> int:
        return len(self.terms)

    def __iter__(self) -> Iterator[tuple[float, StabilizerProjector]]:
        return iter(self.terms)

    def __repr__(self) -> str:
        body = ", ".join(f"({c:.5g}, {p})" for c, p in self.terms)
        return f"SPD(n={self.n}, [{body}])"

    @property
    def nu(self) -> float:
        return float(sum(abs(c) for c, _ in self.terms))

    @property
    def nu_star(self) -> float:
        return float(sum(abs(c) * p.trace for c, p in self.terms))

    @property
    def trace(self) -> float:
        return float(sum(c * p.trace for c, p in self.terms))

    def scaled(self, f: float) -> "SPD":
        return SPD(self.n, [(c * f, p) for c, p in self.terms])

    def conjugated(self, fn: Callable[[SignedPauli], SignedPauli]) -> "SPD":
        """Apply a Clifford action (given on Paulis) to every projector."""
        return SPD(self.n, [(c, p.conjugated(fn)) for c, p in self.terms])

    def embed(self, wires: Sequence[int], n: int) -> "SPD":
        return SPD(n, [(c, p.embed(wires, n)) for c, p in self.terms])

    def map_projectors(self, fn: Callable[[StabilizerProjector], StabilizerProjector], n: int) -> "SPD":
        return SPD(n, [(c, fn(p)) for c, p in self.terms])

    def to_dict(self) -> dict:
        return {
            "n": self.n,
            "terms": [
                {"coeff": float(format(c, ".17g")), "generators": [str(g) for g in p.gens]}
                for c, p in self.terms
            ],
        }

    @classmethod
    def from_dict(cls, d: dict) -> "SPD":
        n = int(d["n"])
        terms = []
        for t in d["terms"]:
            gens = [SignedPauli.from_str(g, n) for g in t["generators"]]
            terms.append((float(t["coeff"]), StabilizerProjector(n, gens)))
        return cls(n, terms)

    def to_json(self) -> str:
        return json.dumps(self.to_dict())

    @classmethod
    def from_json(cls, text: str) -> "SPD":
        return cls.from_dict(json.loads(text))


@dataclass(frozen=True)
class SpdNorms:
    nu: float
    nu_star: float


def spd_norms(s: SPD) -> SpdNorms:
    return SpdNorms(s.nu, s.nu_star)


def reconstruct(s: SPD, cap: int | None = None) -> np.ndarray:
    cap = POLICY.dense_cap if cap is None else cap
    if s.n > cap:
        raise ValueError(f"{s.n} qubits exceeds dense cap {cap}")
    out = np.zeros((1 << s.n, 1 << s.n), dtype=complex)
    for c, p in s.terms:
        out += c * dense_projector(p, cap)
    return out


# ---------------------------------------------------------------- enumeration

def _rref_insert(basis: tuple[int, ...], v: int) -> tuple[int, ...] | None:
    """Reduced echelon basis of span(basis + v), or None if v is in the span."""
    rows = list(basis)
    for r in rows:
        if (v >> (r.bit_length() - 1)) & 1:
            v ^= r
    if v == 0:
        return None
    piv = v.bit_length() - 1
    rows = [r ^ v if (r >> piv) & 1 else r for r in rows]
    rows.append(v)
    return tuple(sorted(rows))


def _symplectic_vec(u: int, v: int, n: int) -> int:
    mask = (1 << n) - 1
    ux, uz, vx, vz = u >> n, u & mask, v >> n, v & mask
    return (bin(ux & vz).count("1") + bin(uz & vx).count("1")) & 1


@lru_cache(maxsize=None)
def enumerate_projectors(n: int) -> tuple[StabilizerProjector, ...]:
    """Every stabilizer projector on n <= 3 qubits, identity first."""
    if n < 0 or n > 3:
        raise ValueError("enumeration is limited to n <= 3")
    level = {()}
    subspaces: list[tuple[int, ...]] = [()]
    for _ in range(n):
        nxt = set()
        for basis in level:
            for v in range(1, 1 << (2 * n)):
                if any(_symplectic_vec(v, b, n) for b in basis):
                    continue
                new = _rref_insert(basis, v)
                if new is not None:
                    nxt.add(new)
        subspaces += sorted(nxt)
        level = nxt
    mask = (1 << n) - 1
    out = []
    for basis in subspaces:
        k = len(basis)
        for signs in range(1 << k):
            gens = [
                SignedPauli(n, v >> n, v & mask, -1 if (signs >> i) & 1 else 1)
                for i, v in enumerate(basis)
            ]
            out.append(StabilizerProjector(n, gens))
    return tuple(out)


@lru_cache(maxsize=None)
def _full_basis_matrix(n: int) -> np.ndarray:
    """Rows: Paulis indexed by (x<<n)|z; columns: enumerated projectors.

    Entry is tr(P_i S_j) / 2^n = sign / 2^k when P_i is in the group of S_j.
    """
    projs = enumerate_projectors(n)
    m = np.zeros((1 << (2 * n), len(projs)))
    for j, p in enumerate(projs):
        scale = 2.0 ** -p.k
        for e in p.elements():
            m[vector(e), j] = e.sign * scale
    return m


class ProjectorTable:
    """Every stabilizer projector on n <= 4 qubits as numpy arrays, grouped by rank.

    Column j of the implicit constraint matrix holds the Pauli coefficients
    ``tr(P_i S_j) / 2^n``.  Within a block of groups with k generators, column
    ``offset + g 2^k + s`` is group g with generator signs given by the bits of s.
    Group element e (a subset mask of the generators) then has coefficient
    ``phase[g, e] (-1)^{|s & e|} / 2^k``.
    """

    def __init__(self, n: int):
        if n < 0 or n > 4:
            raise ValueError("projector table is limited to n <= 4")
        self.n = n
        dim = 1 << (2 * n)
        vec = np.arange(dim)
        x, z = vec >> n, vec & ((1 << n) - 1)
        popcount = np.vectorize(lambda v: bin(int(v)).count("1"))
        anti = ((popcount(x[:, None] & z[None, :]) + popcount(z[:, None] & x[None, :])) & 1) == 1
        levels: list[list[tuple[np.ndarray, tuple[int, ...]]]] = [[(np.array([0]), ())]]
        for _ in range(n):
            found: dict[bytes, tuple[np.ndarray, tuple[int, ...]]] = {}
            for span, basis in levels[-1]:
                ok = np.ones(dim, dtype=bool)
                ok[span] = False
                for g in basis:
                    ok &= ~anti[g]
                cand = np.flatnonzero(ok)
                if cand.size == 0:
                    continue
                # one representative per coset of the span gives each superspace once
                for r in np.unique((cand[:, None] ^ span[None, :]).min(axis=1)):
                    new = np.sort(np.concatenate([span, span ^ r]))
                    found.setdefault(new.tobytes(), (new, basis + (int(r),)))
            levels.append(list(found.values()))
        self.blocks = []
        self._group_of: dict[bytes, tuple[int, int]] = {}
        offset = 0
        traces = []
        for k, level in enumerate(levels):
            size = 1 << k
            bases = np.array([b for _, b in level], dtype=np.int64).reshape(len(level), k)
            elems = np.zeros((len(level), size), dtype=np.int64)
            phase = np.ones((len(level), size))
            for g, (_, basis) in enumerate(level):
                acc = [(0, 0)]
                for v in basis:
                    acc += [(e ^ v, (ph + mul_exponent(e >> n, e & ((1 << n) - 1), v >> n,
                                                        v & ((1 << n) - 1))) % 4) for e, ph in acc]
                elems[g] = [e for e, _ in acc]
                phase[g] = [1.0 if ph == 0 else -1.0 for _, ph in acc]
                self._group_of[np.sort(elems[g]).tobytes()] = (k, g)
            idx = np.arange(size)
            hadamard = 1.0 - 2.0 * (popcount(idx[:, None] & idx[None, :]) & 1)
            self.blocks.append((offset, bases, elems, phase, hadamard / size))
            traces.append(np.full(len(level) * size, 2.0 ** (n - k)))
            offset += len(level) * size
        self.size = offset
        self.traces = np.concatenate(traces)

    def weights(self, name: str) -> np.ndarray:
        if name == "nu":
            return np.ones(self.size)
        if name == "nu_star":
            return self.traces.copy()
        raise ValueError(name)

    def _locate(self, j: int) -> tuple[int, int, int]:
        for k in range(len(self.blocks) - 1, -1, -1):
            offset = self.blocks[k][0]
            if j >= offset:
                g, s = divmod(j - offset, 1 << k)
                return k, g, s
        raise IndexError(j)

    def products(self, y: np.ndarray, first_block: int = 0) -> np.ndarray:
        """``m_j . y`` for every column j from block ``first_block`` on."""
        base = self.blocks[first_block][0]
        out = np.empty(self.size - base)
        for offset, _, elems, phase, had in self.blocks[first_block:]:
            block = (y[elems] * phase) @ had.T
            out[offset - base: offset - base + block.size] = block.ravel()
        return out

    def column(self, j: int) -> np.ndarray:
        k, g, s = self._locate(j)
        _, _, elems, phase, had = self.blocks[k]
        out = np.zeros(1 << (2 * self.n))
        out[elems[g]] = phase[g] * had[s]
        return out

    def projector(self, j: int) -> StabilizerProjector:
        k, g, s = self._locate(j)
        n, mask = self.n, (1 << self.n) - 1
        gens = [SignedPauli(n, int(v) >> n, int(v) & mask, -1 if (s >> i) & 1 else 1)
                for i, v in enumerate(self.blocks[k][1][g])]
        return StabilizerProjector(n, gens)

    def index(self, p: StabilizerProjector) -> int:
        elems = np.sort(np.array([vector(e) for e in p.elements()], dtype=np.int64))
        k, g = self._group_of[elems.tobytes()]
        bases = self.blocks[k][1][g]
        s = 0
        for i, v in enumerate(bases):
            if p.sign_of(SignedPauli(self.n, int(v) >> self.n, int(v) & ((1 << self.n) - 1))) < 0:
                s |= 1 << i
        return self.blocks[k][0] + (g << k) + s

    def entries(self) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
        """Nonzeros ``(row, col, value)`` of the constraint matrix."""
        rows, cols, vals = [], [], []
        for offset, _, elems, phase, had in self.blocks:
            groups, size = elems.shape
            col = offset + np.arange(groups)[:, None, None] * size + np.arange(size)[None, :, None]
            rows.append(np.broadcast_to(elems[:, None, :], (groups, size, size)).ravel())
            cols.append(np.broadcast_to(col, (groups, size, size)).ravel())
            vals.append((phase[:, None, :] * had[None, :, :]).ravel())
        return np.concatenate(rows), np.concatenate(cols), np.concatenate(vals)


@lru_cache(maxsize=None)
def projector_table(n: int) -> ProjectorTable:
    return ProjectorTable(n)


def pauli_coefficients(a: np.ndarray) -> np.ndarray:
    """b_i = tr(P_i A) / 2^n for every Pauli, indexed by (x<<n)|z."""
    dim = a.shape[0]
    n = int(round(math.log2(dim)))
    return np.array([np.real(np.trace(pauli_matrix(p) @ a)) / dim for p in all_paulis(n)])


def _check_operator(a: np.ndarray, atol: float = 1e-7) -> None:
    if a.ndim != 2 or a.shape[0] != a.shape[1]:
        raise ValueError("operator must be square")
    if not np.allclose(a, a.conj().T, atol=atol):
        raise ValueError("operator is not Hermitian")
    w = np.linalg.eigvalsh((a + a.conj().T) / 2)
    if w.min() < -atol or w.max() > 1 + atol:
        raise ValueError("operator is not between 0 and I")


def _weights(projs: Sequence[StabilizerProjector], name: str) -> np.ndarray:
    if name == "nu":
        return np.ones(len(projs))
    if name == "nu_star":
        return np.array([float(p.trace) for p in projs])
    raise ValueError(name)


def _objective_pair(objective: str) -> tuple[str, str | None]:
    if objective in ("nu", "nu_star"):
        return objective, None
    if objective == "lex_nu_nu_star":
        return "nu", "nu_star"
    if objective == "lex_nu_star_nu":
        return "nu_star", "nu"
    raise ValueError(f"unknown objective {objective!r}")


def lex_solve(m: np.ndarray, b: np.ndarray, w1: np.ndarray, w2: np.ndarray | None,
              method: str | None = None) -> np.ndarray:
    """Minimise w1.|x|, breaking ties by w2.|x|, via a small perturbation.

    The perturbed solve is accepted only when its primary objective matches the
    unperturbed optimum; otherwise the perturbation is halved and retried.
    """
    method = method or DEFAULT_LP_METHOD
    x0, f0 = solve_l1(m, b, w1, method)
    if w2 is None:
        return x0
    eps = POLICY.lex_eps
    for _ in range(POLICY.lex_halvings + 1):
        x, _ = solve_l1(m, b, w1 + eps * w2, method)
        if w1 @ np.abs(x) <= f0 + POLICY.opt_tol:
            return x
        eps /= 2
    return x0


def _table_l1(table: ProjectorTable, b: np.ndarray, objective: str,
              start: SPD | None) -> list[tuple[float, StabilizerProjector]]:
    """L1 solve over every projector of ``table`` by column generation."""
    if objective == "nu_star":
        # a mixed projector is a sum of pure states with the same trace weight,
        # so pure states alone reach the optimum and avoid massive ties
        off = table.blocks[-1][0]
        cg = ColumnGenerationL1(b, lambda y: table.products(y, len(table.blocks) - 1),
                                lambda j: table.column(off + j))
        ids, x = cg.solve(table.traces[off:])
        ids = [off + j for j in ids]
    else:
        seed = [table.index(p) for _, p in start] if start is not None else []
        cg = ColumnGenerationL1(b, table.products, table.column, start=seed)
        ids, x = cg.solve(table.weights(objective))
    return [(float(c), table.projector(j)) for j, c in zip(ids, x) if abs(c) > 0]


def optimal_spd(a: np.ndarray, objective: str = "nu", method: str | None = None,
                check: bool = True, start: SPD | None = None) -> SPD:
    """L1-optimal SPD of a dense operator on at most 4 qubits.

    Up to 3 qubits every projector is a column of one LP.  On 4 qubits the
    150451 projectors are priced by column generation on the built-in simplex
    (``method`` is ignored), only the primary objective is optimised, and
    ``start`` seeds the column pool with the projectors of a known
    decomposition.
    """
    a = np.asarray(a, dtype=complex)
    n = int(round(math.log2(a.shape[0])))
    if n > MAX_EXACT_QUBITS:
        raise ValueError(f"optimal_spd is limited to {MAX_EXACT_QUBITS} qubits")
    if check:
        _check_operator(a)
    b = pauli_coefficients(a)
    first, second = _objective_pair(objective)
    if n == 4:
        terms = _table_l1(projector_table(4), b, first, start)
        cut = POLICY.coeff_drop * max((abs(c) for c, _ in terms), default=0.0)
        return SPD(n, [(c, p) for c, p in terms if abs(c) > cut])
    projs = enumerate_projectors(n)
    m = _full_basis_matrix(n)
    w1 = _weights(projs, first)
    w2 = _weights(projs, second) if second else None
    x = lex_solve(m, b, w1, w2, method)
    return SPD(n, [(float(c), p) for c, p in zip(x, projs) if abs(c) > POLICY.coeff_drop])


# ---------------------------------------------------------------- sparsify

def _restricted_system(projs: Sequence[StabilizerProjector]) -> np.ndarray:
    """Constraint matrix over the Paulis present in any of ``projs``."""
    rows: dict[int, int] = {}
    entries = []
    for j, p in enumerate(projs):
        scale = 2.0 ** -p.k
        for e in p.elements():
            i = rows.setdefault(vector(e), len(rows))
            entries.append((i, j, e.sign * scale))
    m = np.zeros((len(rows), len(projs)))
    for i, j, v in entries:
        m[i, j] = v
    return m


def sparsify(s: SPD, objective: str = "nu", method: str | None = None,
             basic_only: bool = False) -> SPD:
    """Reduce the term count of ``s`` by log-reweighted L1 solves.

    Only projectors already in ``s`` are used; the result represents the same
    operator, has a primary objective no worse than ``s`` (within tolerance)
    and never more terms.  With ``basic_only`` an SPD with no more terms than
    independent constraints (a basic LP solution) is returned unchanged.
    """
    if len(s) <= 1:
        return s
    method = method or DEFAULT_LP_METHOD
    projs = [p for _, p in s.terms]
    coeffs = np.array([c for c, _ in s.terms])
    m = _restricted_system(projs)
    rows = independent_rows(m)
    if basic_only and len(projs) <= rows.size:
        return s
    m = m[rows]
    b = m @ coeffs
    first, second = _objective_pair(objective)
    w1 = _weights(projs, first)
    w2 = _weights(projs, second) if second else np.zeros(len(projs))
    eps = POLICY.lex_eps
    base = w1 @ np.abs(coeffs)
    cut = POLICY.coeff_drop * float(np.abs(coeffs).max())
    best, best_len = coeffs, int(np.sum(np.abs(coeffs) > cut))
    x = coeffs
    # the simplex route warm-starts every reweighted solve from the previous basis
    warm = (ColumnGenerationL1(b, lambda y: m.T @ y, lambda j: m[:, j], start=range(len(projs)))
            if method == "simplex" else None)
    for _ in range(POLICY.sparsify_iters):
        rew = 1.0 / (POLICY.sparsify_gamma + np.abs(x))
        rew = rew / rew.max()
        weights = w1 + eps * w2 + eps * eps * rew
        try:
            if warm is None:
                x, _ = solve_l1(m, b, weights, method, drop_dependent=False)
            else:
                ids, xs = warm.solve(weights)
                x = np.zeros(len(projs))
                x[ids] = xs
        except ArithmeticError:
            break
        x = np.where(np.abs(x) > cut, x, 0.0)
        count = int(np.count_nonzero(x))
        if w1 @ np.abs(x) <= base + POLICY.opt_tol and count <= best_len:
            if count < best_len or w1 @ np.abs(x) < w1 @ np.abs(best) - POLICY.opt_tol:
                best, best_len = x, count
    return SPD(s.n, [(float(c), p) for c, p in zip(best, projs)])


# ---------------------------------------------------------------- channels

def rotation_channel_terms(theta: float) -> tuple[float, float, float]:
    """(c_I, c_Z, c_S) with Z(theta) = c_I id + c_Z Z-conj + c_S S-conj."""
    c, s = math.cos(theta), math.sin(theta)
    return (1 + c - s) / 2, (1 - c - s) / 2, s


def apply_rotation_via_channels(s: SPD, p: SignedPauli, theta: float) -> SPD:
    """Conjugate an SPD by exp(-i theta/2 P) using three Clifford channels.

    A negative angle is handled as the rotation about -P by |theta|.
    """
    theta = math.remainder(theta, 2 * math.pi)
    if theta < 0:
        p, theta = -p, -theta
    if abs(theta) <= POLICY.atol:
        return s
    c_i, c_z, c_s = rotation_channel_terms(theta)
    s_gate = Gate.rot(p, math.pi / 2)

    def flip(g: SignedPauli) -> SignedPauli:
        return g if commutes(g, p) else -g

    def quarter(g: SignedPauli) -> SignedPauli:
        return conjugate_by_gate(g, s_gate)

    terms = []
    for c, proj in s.terms:
        if abs(c_i) > POLICY.coeff_drop:
            terms.append((c * c_i, proj))
        if abs(c_z) > POLICY.coeff_drop:
            terms.append((c * c_z, proj.conjugated(flip)))
        if abs(c_s) > POLICY.coeff_drop:
            terms.append((c * c_s, proj.conjugated(quarter)))
    return SPD(s.n, terms)

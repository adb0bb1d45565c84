"""Test-pattern generation: propagate local SPDs through a circuit.

The input SPD is propagated backwards to the circuit input and the
measurement SPD forwards to the output.  Clifford gates act by conjugating
generators.  A non-Clifford rotation is handled by first finding a Clifford
frame in which every projector and the rotation axis live on a small active
block (``loc_expl``), then re-optimising the SPD on that block.

Rotations passed to ``loc_expl`` use the exponential form ``exp(i theta P)``;
circuit gates use ``rot(P, phi) ~ exp(-i phi/2 P)``.  ``to_exponential_form``
is the single conversion point between the two.
"""
from __future__ import annotations

import hashlib
import math
import time
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from .circuits import (Circuit, FaultModel, Gate, MissingGate, ReplacedBy, parse_circuit,
                       serialize_circuit)
from .clifford import CliffordTableau, conjugate_by_gate, from_pauli_map
from .discrim import UndetectableFault, site_pattern
from .numeric import POLICY
from .pauli import SignedPauli, commutes, gf2_rank, pauli_matrix, symplectic, vector
from .spd import (MAX_EXACT_QUBITS, SPD, apply_rotation_via_channels, optimal_spd,
                  reconstruct, sparsify)
from .stabilizer import StabilizerProjector, intersect


# ---------------------------------------------------------------- conventions

def to_exponential_form(gate: Gate, n: int) -> tuple[SignedPauli, float]:
    """(P_U, theta) with the gate equal to exp(i theta P_U) up to global phase."""
    if gate.kind != "rot":
        raise ValueError("only rotations have an exponential form")
    theta = math.remainder(gate.theta / 2, 2 * math.pi)
    p = -gate.global_pauli(n)
    if theta > math.pi / 2:
        theta -= math.pi
    elif theta < -math.pi / 2:
        theta += math.pi
    return p, theta


def from_exponential_form(p: SignedPauli, theta: float) -> Gate:
    return Gate.rot(-p, 2 * theta)


def exp_rotation_matrix(p: SignedPauli, theta: float) -> np.ndarray:
    """Dense exp(i theta P)."""
    m = pauli_matrix(p)
    return math.cos(theta) * np.eye(m.shape[0]) + 1j * math.sin(theta) * m


# ---------------------------------------------------------------- normal sets

def _unsigned_product(a: SignedPauli, b: SignedPauli) -> SignedPauli:
    return SignedPauli(a.n, a.x ^ b.x, a.z ^ b.z)


def _independent_subset(paulis: Sequence[SignedPauli]) -> list[SignedPauli]:
    out: list[SignedPauli] = []
    for p in paulis:
        if gf2_rank(vector(q) for q in out + [p]) == len(out) + 1:
            out.append(p.unsigned())
    return out


def normal_set(paulis: Sequence[SignedPauli]) -> tuple[list[SignedPauli], int]:
    """Maximal independent t-normal set spanning the same space as ``paulis``.

    The first t elements commute with every element; the rest come in
    consecutive pairs that anti-commute with each other and commute with
    everything else.  Signs are dropped.
    """
    q = _independent_subset(paulis)
    s = len(q)
    for i in range(s):
        for j in range(i + 1, s):
            if symplectic(q[i], q[j]):
                for k in range(s):
                    if k in (i, j):
                        continue
                    ai, aj = symplectic(q[k], q[i]), symplectic(q[k], q[j])
                    if ai:
                        q[k] = _unsigned_product(q[k], q[j])
                    if aj:
                        q[k] = _unsigned_product(q[k], q[i])
    central_idx = [i for i, p in enumerate(q) if all(commutes(p, r) for r in q)]
    central = [q[i] for i in central_idx]
    paired: list[SignedPauli] = []
    used = set(central_idx)
    for i, p in enumerate(q):
        if i in used:
            continue
        for j in range(i + 1, len(q)):
            if j not in used and symplectic(p, q[j]):
                paired += [p, q[j]]
                used.update((i, j))
                break
    return central + paired, len(central)


# ---------------------------------------------------------------- localization

@dataclass(frozen=True)
class LocalizationResult:
    """Clifford frame isolating the non-trivial part of an SPD and a rotation.

    After conjugation by ``u_c`` each term is |0><0| on qubits [0, l), an
    SPD term on the active block [l, l + active) and identity after it.
    """

    u_c: CliffordTableau
    trivial_rank_block: int
    active_block: int
    identity_block: int
    local_spd: SPD
    local_rotation: tuple[SignedPauli, float]
    t: int = 0
    s: int = 0


def _strip_trivial(gens: Sequence[SignedPauli], l: int, n: int) -> list[SignedPauli]:
    """Remove Z components on qubits [0, l) and shift the rest down by l."""
    out = []
    for g in gens:
        if g.x & ((1 << l) - 1):
            raise ArithmeticError("generator does not commute with the trivial block")
        zmask = g.z & ((1 << l) - 1)
        h = SignedPauli(n, g.x, g.z ^ zmask, g.sign)
        if h.is_identity():
            if h.sign < 0:
                raise ArithmeticError("trivial block contradicts a projector")
            continue
        out.append(h.shifted(-l, n - l))
    return out


def loc_expl(rotation: tuple[SignedPauli, float], s: SPD) -> LocalizationResult:
    """Find a Clifford frame in which ``s`` and the rotation act on few qubits."""
    p_u, theta = rotation
    n = s.n
    if p_u.is_identity():
        raise ValueError("rotation axis is the identity")
    if len(s) == 0:
        raise ValueError("empty SPD")
    projs = [p for _, p in s.terms]
    common = projs[0]
    for p in projs[1:]:
        common = intersect(common, p)
    hats = list(common.gens)
    if common.sign_of(p_u) != 0:
        # the axis lies in the common group: swap it in for a dependent generator
        keep = [p_u]
        for h in hats:
            if gf2_rank(vector(q) for q in keep + [h]) == len(keep) + 1:
                keep.append(h)
        hats = keep[1:]
    anti = [i for i, h in enumerate(hats) if not commutes(h, p_u)]
    if anti:
        last = anti[-1]
        for i in anti[:-1]:
            hats[i] = hats[i] * hats[last]
        del hats[last]
    l = len(hats)
    zs = [SignedPauli.single(n, j, "Z") for j in range(l + 1)]
    v1 = from_pauli_map(list(zip(hats + [p_u], zs)), n)

    n_sub = n - l
    sub_terms = []
    for c, p in s.terms:
        gens = [v1.conjugate(g) for g in p.gens]
        conj = StabilizerProjector(n, gens + zs[:l])
        sub_terms.append((c, _strip_trivial(conj.gens, l, n)))
    z0 = SignedPauli.single(n_sub, 0, "Z")
    pool = [z0] + [g for _, gens in sub_terms for g in gens]
    qs, t = normal_set(pool)
    ssize = len(qs)
    active = (ssize + t) // 2
    targets = [SignedPauli.single(n_sub, j, "Z") for j in range(t)]
    for i in range((ssize - t) // 2):
        q = t + i
        targets += [SignedPauli.single(n_sub, q, "Z"), SignedPauli.single(n_sub, q, "X")]
    v2 = from_pauli_map(list(zip(qs, targets)), n_sub)
    act = list(range(active))
    local = []
    for c, gens in sub_terms:
        img = [v2.conjugate(g).restrict(act) for g in gens]
        local.append((c, StabilizerProjector(active, img)))
    rot_local = v2.conjugate(z0).restrict(act)
    v2_full = v2.embed(list(range(l, n)), n)
    u_c = v1.then(v2_full)
    return LocalizationResult(
        u_c=u_c,
        trivial_rank_block=l,
        active_block=active,
        identity_block=n - l - active,
        local_spd=SPD(active, local),
        local_rotation=(rot_local, theta),
        t=t,
        s=ssize,
    )


def lift_local(spd_local: SPD, loc: LocalizationResult, n: int) -> SPD:
    """Map an active-block SPD back to the original frame."""
    l = loc.trivial_rank_block
    inv = loc.u_c.inverse()
    wires = list(range(l, l + loc.active_block))
    zs = [SignedPauli.single(n, j, "Z") for j in range(l)]
    terms = []
    for c, p in spd_local.terms:
        gens = zs + [g.embed(wires, n) for g in p.gens]
        terms.append((c, StabilizerProjector(n, [inv.conjugate(g) for g in gens])))
    return SPD(n, terms)


# ---------------------------------------------------------------- propagation

@dataclass
class GenerationConfig:
    local_cap: int = POLICY.local_cap
    sparsify: bool = True
    sparsify_clifford: bool = False
    lp_method: str | None = None


@dataclass(frozen=True)
class StepRecord:
    site: int
    direction: str
    method: str
    active_block: int
    terms: int


def conjugate_spd_by_gate(s: SPD, gate: Gate) -> SPD:
    """G A G^dag for a Clifford gate G."""
    return s.conjugated(lambda p: conjugate_by_gate(p, gate))


def propagate_nonclifford(s: SPD, gate: Gate, direction: str = "forward",
                          config: GenerationConfig | None = None) -> tuple[SPD, StepRecord]:
    """Conjugate ``s`` by a rotation gate (or its inverse when backward).

    Returns the new SPD and a record of how the step was computed:
    ``commute`` (rotation fixes every term), ``exact`` (LP on the active
    block) or ``channel`` (Clifford channel decomposition fallback).
    """
    cfg = config or GenerationConfig()
    if direction not in ("forward", "backward"):
        raise ValueError("direction must be forward or backward")
    g = gate if direction == "forward" else gate.inverse()
    n = s.n
    axis = g.global_pauli(n)
    if all(commutes(axis, h) for _, p in s.terms for h in p.gens):
        return s, StepRecord(0, direction, "commute", 0, len(s))
    p_u, theta = to_exponential_form(g, n)
    loc = loc_expl((p_u, theta), s)
    primary = "lex_nu_star_nu" if direction == "backward" else "lex_nu_nu_star"
    if loc.active_block <= min(cfg.local_cap, MAX_EXACT_QUBITS):
        r_loc = exp_rotation_matrix(*loc.local_rotation)
        a_loc = reconstruct(loc.local_spd)
        target = r_loc @ a_loc @ r_loc.conj().T
        p_loc, theta_loc = loc.local_rotation
        start = apply_rotation_via_channels(loc.local_spd, -p_loc, 2 * theta_loc)
        new_local = optimal_spd(target, primary, cfg.lp_method, check=False, start=start)
        if cfg.sparsify:
            new_local = sparsify(new_local, primary, cfg.lp_method, basic_only=True)
        out = lift_local(new_local, loc, n)
        method = "exact"
    else:
        out = apply_rotation_via_channels(s, -p_u, 2 * theta)
        if cfg.sparsify:
            out = sparsify(out, primary, cfg.lp_method)
        method = "channel"
    return out, StepRecord(0, direction, method, loc.active_block, len(out))


def _propagate(s: SPD, gate: Gate, site: int, direction: str,
               cfg: GenerationConfig) -> tuple[SPD, StepRecord]:
    if gate.is_clifford:
        g = gate if direction == "forward" else gate.inverse()
        out = conjugate_spd_by_gate(s, g)
        if cfg.sparsify_clifford:
            out = sparsify(out, "lex_nu_star_nu" if direction == "backward" else "lex_nu_nu_star",
                           cfg.lp_method)
        return out, StepRecord(site, direction, "clifford", 0, len(out))
    out, rec = propagate_nonclifford(s, gate, direction, cfg)
    return out, StepRecord(site, direction, rec.method, rec.active_block, rec.terms)


# ---------------------------------------------------------------- patterns

def circuit_hash(c: Circuit) -> str:
    return hashlib.sha256(serialize_circuit(c).encode()).hexdigest()[:16]


def fault_to_dict(fm: FaultModel) -> dict:
    if isinstance(fm, MissingGate):
        return {"kind": "missing"}
    return {"kind": "replace", "gates": [g.to_text() for g in fm.gates]}


def fault_from_dict(d: dict, n: int) -> FaultModel:
    if d["kind"] == "missing":
        return MissingGate()
    body = "\n".join([f"qubits {n}", *d["gates"]])
    return ReplacedBy(parse_circuit(body).gates)


@dataclass
class TestPattern:
    circuit_hash: str
    site: int
    fault: FaultModel
    spd_rho: SPD
    spd_m: SPD
    r: float
    p_success: float
    trace: list[StepRecord] = field(default_factory=list)
    seconds: float = 0.0

    __test__ = False  # not a pytest class

    @property
    def nu_star_rho(self) -> float:
        return self.spd_rho.nu_star

    @property
    def nu_m(self) -> float:
        return self.spd_m.nu

    def to_dict(self) -> dict:
        return {
            "circuit_hash": self.circuit_hash,
            "site": self.site,
            "fault": fault_to_dict(self.fault),
            "spd_rho": self.spd_rho.to_dict(),
            "spd_M": self.spd_m.to_dict(),
            "metrics": {
                "nu_star_rho": self.spd_rho.nu_star,
                "nu_rho": self.spd_rho.nu,
                "nu_M": self.spd_m.nu,
                "nu_star_M": self.spd_m.nu_star,
                "terms_rho": len(self.spd_rho),
                "terms_M": len(self.spd_m),
                "r": self.r,
                "p_success": self.p_success,
                "seconds": self.seconds,
            },
            "trace": [vars(rec) for rec in self.trace],
        }

    @classmethod
    def from_dict(cls, d: dict) -> "TestPattern":
        rho = SPD.from_dict(d["spd_rho"])
        met = d.get("metrics", {})
        trace = [StepRecord(**rec) for rec in d.get("trace", [])]
        return cls(d["circuit_hash"], int(d["site"]), fault_from_dict(d["fault"], rho.n), rho,
                   SPD.from_dict(d["spd_M"]), float(met.get("r", float("nan"))),
                   float(met.get("p_success", float("nan"))), trace, float(met.get("seconds", 0.0)))


def generate_test_patterns(c: Circuit, site: int, fm: FaultModel,
                           config: GenerationConfig | None = None) -> TestPattern:
    """SPDs of the optimal input state and measurement for one fault site."""
    cfg = config or GenerationConfig()
    if not 1 <= site <= len(c.gates):
        raise IndexError(f"fault site {site} out of range 1..{len(c.gates)}")
    start = time.perf_counter()
    gate = c.gate(site)
    if len(gate.wires) > 2:
        raise ValueError("fault gate acts on more than two qubits")
    pat = site_pattern(c, site, fm)
    psi_op = np.outer(pat.psi_in, pat.psi_in.conj())
    om_op = np.outer(pat.omega, pat.omega.conj())
    a = optimal_spd(psi_op, "lex_nu_star_nu", cfg.lp_method).embed(gate.wires, c.n)
    b = optimal_spd(om_op, "lex_nu_nu_star", cfg.lp_method).embed(gate.wires, c.n)
    trace: list[StepRecord] = []
    for j in range(site - 1, 0, -1):
        a, rec = _propagate(a, c.gate(j), j, "backward", cfg)
        trace.append(rec)
    a = a.scaled(1.0 / a.trace)
    for j in range(site + 1, len(c.gates) + 1):
        b, rec = _propagate(b, c.gate(j), j, "forward", cfg)
        trace.append(rec)
    return TestPattern(circuit_hash(c), site, fm, a, b, pat.r, pat.p_success, trace,
                       time.perf_counter() - start)


__all__ = [
    "GenerationConfig",
    "LocalizationResult",
    "ReplacedBy",
    "StepRecord",
    "TestPattern",
    "UndetectableFault",
    "circuit_hash",
    "from_exponential_form",
    "generate_test_patterns",
    "lift_local",
    "loc_expl",
    "normal_set",
    "propagate_nonclifford",
    "to_exponential_form",
]

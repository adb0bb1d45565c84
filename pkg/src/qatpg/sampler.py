"""Quasiprobability sampling of tr(M C rho C^dag) with Clifford-only test circuits.

Each trial draws an input term i with probability |a_i| tr(A_i) / nu*(A), a
measurement term j with probability |b_j| / nu(B), and a uniform rank index
l.  The trial circuit prepares |0..0>|l>, applies U_{A_i}, the circuit under
test and U_{B_j}^dag, then measures the leading k_j qubits.  An all-zero
outcome contributes sign(a_i b_j) nu* nu to the running estimate.
"""
from __future__ import annotations

import math
import time
from dataclasses import dataclass, field
from typing import Protocol

import numpy as np

from .chp import StabilizerSimulator
from .circuits import Circuit
from .clifford import projector_prep_circuit
from .densesim import apply_circuit, circuit_unitary, expectation, zero_block_probability
from .numeric import POLICY
from .spd import SPD, reconstruct


def required_trials(delta: float, epsilon: float, nu_star_a: float, nu_b: float) -> int:
    """Hoeffding trial count ceil((2/delta^2) ln(2/epsilon) (nu* nu)^2)."""
    if delta <= 0 or not 0 < epsilon < 1:
        raise ValueError("need delta > 0 and 0 < epsilon < 1")
    return math.ceil(2.0 / delta ** 2 * math.log(2.0 / epsilon) * (nu_star_a * nu_b) ** 2)


@dataclass
class SamplingPlan:
    spd_rho: SPD
    spd_m: SPD
    trials: int
    p_input: np.ndarray
    p_meas: np.ndarray
    correction: float

    @classmethod
    def build(cls, spd_rho: SPD, spd_m: SPD, delta: float, epsilon: float) -> "SamplingPlan":
        if len(spd_rho) == 0 or len(spd_m) == 0:
            raise ValueError("SPDs must be non-empty")
        if spd_rho.n != spd_m.n:
            raise ValueError("SPDs act on different qubit counts")
        ns, nu = spd_rho.nu_star, spd_m.nu
        p_in = np.array([abs(c) * p.trace for c, p in spd_rho.terms]) / ns
        p_me = np.array([abs(c) for c, _ in spd_m.terms]) / nu
        return cls(spd_rho, spd_m, required_trials(delta, epsilon, ns, nu), p_in, p_me, ns * nu)


@dataclass(frozen=True)
class Draws:
    """Per-trial choices: input term, measurement term and rank index bits."""

    i: np.ndarray
    j: np.ndarray
    l_bits: list[np.ndarray]

    def l_value(self, t: int) -> int:
        return int(sum(int(b) << q for q, b in enumerate(self.l_bits[t])))


class Executor(Protocol):
    def run(self, plan: SamplingPlan, draws: Draws, rng: np.random.Generator) -> np.ndarray:
        """Boolean success flag per trial."""
        ...


class _PrepCache:
    def __init__(self):
        self._cache: dict = {}

    def get(self, proj) -> Circuit:
        c = self._cache.get(proj)
        if c is None:
            c = projector_prep_circuit(proj)
            self._cache[proj] = c
        return c


class DenseExecutor:
    """Statevector execution, batched over trials sharing the same (i, l)."""

    def __init__(self, cut: Circuit, cap: int | None = None):
        cap = POLICY.dense_cap if cap is None else cap
        if cut.n > cap:
            raise ValueError(f"{cut.n} qubits exceeds dense cap {cap}")
        self.cut = cut
        self.preps = _PrepCache()

    def run(self, plan: SamplingPlan, draws: Draws, rng: np.random.Generator) -> np.ndarray:
        n = self.cut.n
        ntr = len(draws.i)
        probs = np.empty(ntr)
        groups: dict[int, list[int]] = {}
        for t in range(ntr):
            groups.setdefault(int(draws.i[t]), []).append(t)
        for i, trials in groups.items():
            proj_a = plan.spd_rho.terms[i][1]
            ls = sorted({draws.l_value(t) for t in trials})
            col = {l: c for c, l in enumerate(ls)}
            states = np.zeros((1 << n, len(ls)), dtype=complex)
            for c, l in enumerate(ls):
                states[l << proj_a.k, c] = 1.0
            states = apply_circuit(states, self.preps.get(proj_a))
            states = apply_circuit(states, self.cut)
            js = sorted({int(draws.j[t]) for t in trials})
            table = {}
            for j in js:
                proj_b = plan.spd_m.terms[j][1]
                out = apply_circuit(states, self.preps.get(proj_b).inverse())
                table[j] = zero_block_probability(out, proj_b.k)
            for t in trials:
                probs[t] = table[int(draws.j[t])][col[draws.l_value(t)]]
        return rng.random(ntr) < np.clip(probs, 0.0, 1.0)


class TableauExecutor:
    """Stabilizer-simulator execution for Clifford circuits under test."""

    def __init__(self, cut: Circuit):
        if not cut.is_clifford:
            raise ValueError("tableau executor needs a Clifford circuit")
        self.cut = cut
        self.preps = _PrepCache()

    def run(self, plan: SamplingPlan, draws: Draws, rng: np.random.Generator) -> np.ndarray:
        n = self.cut.n
        out = np.zeros(len(draws.i), dtype=bool)
        for t in range(len(draws.i)):
            proj_a = plan.spd_rho.terms[int(draws.i[t])][1]
            proj_b = plan.spd_m.terms[int(draws.j[t])][1]
            sim = StabilizerSimulator(n)
            for q, bit in enumerate(draws.l_bits[t]):
                if bit:
                    sim.px(proj_a.k + q)
            sim.run(self.preps.get(proj_a))
            sim.run(self.cut)
            sim.run(self.preps.get(proj_b).inverse())
            ok = True
            for q in range(proj_b.k):
                if sim.measure(q, rng):
                    ok = False
                    break
            out[t] = ok
        return out


def make_executor(cut: Circuit, kind: str = "auto", cap: int | None = None) -> Executor:
    """``dense``, ``tableau`` or ``auto`` (tableau when the circuit is Clifford)."""
    if kind == "dense":
        return DenseExecutor(cut, cap)
    if kind == "tableau":
        return TableauExecutor(cut)
    if kind == "auto":
        return TableauExecutor(cut) if cut.is_clifford else DenseExecutor(cut, cap)
    raise ValueError(f"unknown executor {kind!r}")


@dataclass
class SamplingResult:
    estimate: float
    trials: int
    delta: float
    epsilon: float
    nu_star: float
    nu: float
    seconds: float
    seed: int | np.random.SeedSequence | None
    records: np.ndarray = field(repr=False, default_factory=lambda: np.zeros(0))

    def to_dict(self) -> dict:
        return {"estimate": self.estimate, "T": self.trials, "delta": self.delta,
                "epsilon": self.epsilon, "nu_star": self.nu_star, "nu": self.nu,
                "wall_time": self.seconds, "seed": _seed_record(self.seed)}


def _seed_record(seed) -> int | dict | None:
    if isinstance(seed, np.random.SeedSequence):
        return {"entropy": seed.entropy, "spawn_key": list(seed.spawn_key)}
    return seed


def draw_trials(plan: SamplingPlan, trials: int, rng: np.random.Generator) -> Draws:
    n = plan.spd_rho.n
    i = rng.choice(len(plan.p_input), size=trials, p=plan.p_input)
    j = rng.choice(len(plan.p_meas), size=trials, p=plan.p_meas)
    ranks = [n - plan.spd_rho.terms[int(a)][1].k for a in i]
    l_bits = [rng.integers(0, 2, size=r, dtype=np.uint8) for r in ranks]
    return Draws(i, j, l_bits)


def run_test_application(spd_rho: SPD, spd_m: SPD, executor: Executor, delta: float,
                         epsilon: float, seed: int | np.random.SeedSequence | None = None,
                         trials: int | None = None) -> SamplingResult:
    """Estimate tr(M C rho C^dag) to within delta with probability 1 - epsilon."""
    start = time.perf_counter()
    plan = SamplingPlan.build(spd_rho, spd_m, delta, epsilon)
    total = plan.trials if trials is None else trials
    root = seed if isinstance(seed, np.random.SeedSequence) else np.random.SeedSequence(seed)
    draw_seq, outcome_seq = root.spawn(2)
    draws = draw_trials(plan, total, np.random.default_rng(draw_seq))
    success = executor.run(plan, draws, np.random.default_rng(outcome_seq))
    sign_a = np.array([np.sign(c) for c, _ in spd_rho.terms])
    sign_b = np.array([np.sign(c) for c, _ in spd_m.terms])
    records = success * sign_a[draws.i] * sign_b[draws.j] * plan.correction
    estimate = math.fsum(records) / total if total else 0.0
    return SamplingResult(estimate, total, delta, epsilon, spd_rho.nu_star, spd_m.nu,
                          time.perf_counter() - start, seed, records)


def exact_expectation(spd_rho: SPD, spd_m: SPD, c: Circuit, cap: int | None = None) -> float:
    """tr(M C rho C^dag) from dense reconstructions."""
    u = circuit_unitary(c, cap)
    return expectation(reconstruct(spd_m, cap), u @ reconstruct(spd_rho, cap) @ u.conj().T)

"""Optimal discrimination of a gate from its faulty version.

The optimal local input minimises ``|<psi| U^dag U' |psi>|``.  Writing psi in
the eigenbasis of ``W = U^dag U'`` turns this into minimising the modulus of a
convex combination of W's eigenvalues, i.e. the distance from the origin to
their convex hull, which is solved exactly from pairs and triples of points.
The weight of a degenerate eigenvalue is spread evenly over an echelon basis
of its eigenspace, which picks the centre of the optimal face.
"""
from __future__ import annotations

import itertools
import math
from dataclasses import dataclass

import numpy as np

from .circuits import Circuit, FaultModel, fault_matrix
from .densesim import embed_operator, eig_unitary, is_unitary, slice_unitary


class UndetectableFault(ValueError):
    """The faulty gate is indistinguishable from the fault-free one."""


@dataclass(frozen=True)
class GatePattern:
    psi_in: np.ndarray
    omega: np.ndarray
    omega_prime: np.ndarray
    r: float
    p_success: float


def _echelon_basis(vecs: np.ndarray) -> list[np.ndarray]:
    """Orthonormal basis of span(vecs) built by projecting e_0, e_1, ... onto it."""
    proj = vecs @ vecs.conj().T
    basis: list[np.ndarray] = []
    for j in range(proj.shape[0]):
        v = proj[:, j].copy()
        for b in basis:
            v -= np.vdot(b, v) * b
        nrm = np.linalg.norm(v)
        if nrm > 1e-8:
            basis.append(v / nrm)
        if len(basis) == vecs.shape[1]:
            break
    return basis


def _segment_weights(a: complex, b: complex) -> float:
    """Weight t on ``a`` minimising |t a + (1-t) b| over t in [0, 1]."""
    d = a - b
    if abs(d) < 1e-15:
        return 1.0
    t = -np.real(np.conj(d) * b) / abs(d) ** 2
    return float(min(max(t, 0.0), 1.0))


def _hull_min(points: list[complex]) -> tuple[float, dict[int, float]]:
    """Minimum modulus over the convex hull of ``points`` and the weights."""
    best = (abs(points[0]), {0: 1.0})
    for i, p in enumerate(points):
        if abs(p) < best[0]:
            best = (abs(p), {i: 1.0})
    for i, j in itertools.combinations(range(len(points)), 2):
        t = _segment_weights(points[i], points[j])
        val = abs(t * points[i] + (1 - t) * points[j])
        if val < best[0] - 1e-15:
            best = (val, {i: t, j: 1 - t})
    if best[0] < 1e-12:
        return 0.0, best[1]
    for i, j, k in itertools.combinations(range(len(points)), 3):
        a, b, c = points[i], points[j], points[k]
        # barycentric coordinates of the origin
        mat = np.array([[a.real, b.real, c.real], [a.imag, b.imag, c.imag], [1, 1, 1]])
        if abs(np.linalg.det(mat)) < 1e-14:
            continue
        w = np.linalg.solve(mat, np.array([0.0, 0.0, 1.0]))
        if np.all(w >= -1e-12):
            w = np.clip(w, 0, None)
            w /= w.sum()
            return 0.0, {i: float(w[0]), j: float(w[1]), k: float(w[2])}
    return float(best[0]), best[1]


def optimal_input(u: np.ndarray, u_prime: np.ndarray) -> tuple[np.ndarray, float]:
    """Input state minimising |<psi|U^dag U'|psi>| and the minimum value r."""
    u = np.asarray(u, dtype=complex)
    u_prime = np.asarray(u_prime, dtype=complex)
    if u.shape != u_prime.shape or not is_unitary(u, 1e-8) or not is_unitary(u_prime, 1e-8):
        raise ValueError("inputs must be unitaries of equal dimension")
    w = u.conj().T @ u_prime
    # group eigenvectors by eigenvalue
    groups: list[tuple[complex, list[np.ndarray]]] = []
    for lam, v in eig_unitary(w):
        for g in groups:
            if abs(lam - g[0]) < 1e-8:
                g[1].append(v)
                break
        else:
            groups.append((lam, [v]))
    _, weights = _hull_min([lam for lam, _ in groups])
    psi = np.zeros(u.shape[0], dtype=complex)
    for i, p in weights.items():
        basis = _echelon_basis(np.stack(groups[i][1], axis=1))
        for b in basis:
            psi += math.sqrt(p / len(basis)) * b
    psi /= np.linalg.norm(psi)
    r = float(abs(np.vdot(psi, w @ psi)))
    return psi, r


def helstrom_basis(psi: np.ndarray, psi_prime: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """Measurement basis (omega, omega') optimally separating two pure states."""
    psi = np.asarray(psi, dtype=complex)
    psi_prime = np.asarray(psi_prime, dtype=complex)
    ov = np.vdot(psi, psi_prime)
    if abs(ov) >= 1 - 1e-12:
        raise UndetectableFault("states are parallel")
    aligned = psi_prime * np.exp(-1j * np.angle(ov)) if abs(ov) > 0 else psi_prime
    plus = psi + aligned
    minus = psi - aligned
    plus /= np.linalg.norm(plus)
    minus /= np.linalg.norm(minus)
    omega = (plus + minus) / math.sqrt(2)
    omega_prime = (plus - minus) / math.sqrt(2)
    return omega, omega_prime


def success_probability(r: float) -> float:
    return 0.5 * (1 + math.sqrt(max(0.0, 1 - r * r)))


def gate_pattern(u: np.ndarray, u_prime: np.ndarray) -> GatePattern:
    """Optimal local input and Helstrom basis for U versus U'."""
    psi_in, r = optimal_input(u, u_prime)
    if r >= 1 - 1e-12:
        raise UndetectableFault("faulty gate equals the gate up to phase")
    omega, omega_prime = helstrom_basis(u @ psi_in, u_prime @ psi_in)
    return GatePattern(psi_in, omega, omega_prime, r, success_probability(r))


def site_pattern(c: Circuit, site: int, fm: FaultModel) -> GatePattern:
    gate = c.gate(site)
    return gate_pattern(gate.matrix(), fault_matrix(gate, fm))


def ideal_test_pattern(c: Circuit, site: int, fm: FaultModel, q: np.ndarray | None = None,
                       cap: int | None = None) -> tuple[np.ndarray, np.ndarray]:
    """Dense (rho, M) obtained by propagating the local pattern through the circuit.

    ``q`` is the operator placed on the wires untouched by the gate for M; it
    defaults to the identity.  rho is normalised to unit trace.
    """
    gate = c.gate(site)
    pat = site_pattern(c, site, fm)
    n = c.n
    dim = 1 << n
    pre = slice_unitary(c, 1, site - 1, cap)
    post = slice_unitary(c, site + 1, len(c.gates), cap)
    local_in = np.outer(pat.psi_in, pat.psi_in.conj())
    local_out = np.outer(pat.omega, pat.omega.conj())
    rest = [w for w in range(n) if w not in gate.wires]
    free = 1 << len(rest)
    rho_site = embed_operator(local_in, gate.wires, n) / free
    m_site = embed_operator(local_out, gate.wires, n)
    if q is not None:
        m_site = m_site @ embed_operator(q, rest, n)
    rho = pre.conj().T @ rho_site @ pre
    m = post @ m_site @ post.conj().T
    if dim != rho.shape[0]:
        raise AssertionError("dimension mismatch")
    return rho, m

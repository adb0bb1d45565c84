"""Dense statevector / matrix oracle.

Basis index convention: qubit q (0-based) is bit q of the index.  Reshaping a
length-2^n vector to ``(2,)*n`` in C order puts qubit q on axis ``n-1-q``.
"""
from __future__ import annotations

from typing import Sequence

import numpy as np

from .circuits import Circuit, Gate
from .numeric import POLICY


def _check_cap(n: int, cap: int | None) -> None:
    cap = POLICY.dense_cap if cap is None else cap
    if n > cap:
        raise ValueError(f"{n} qubits exceeds dense cap {cap}")


def apply_local(state: np.ndarray, mat: np.ndarray, wires: Sequence[int], n: int) -> np.ndarray:
    """Apply a local matrix to a state of shape (2^n,) or (2^n, batch)."""
    m = len(wires)
    batch = state.shape[1:]
    psi = state.reshape((2,) * n + batch)
    op = mat.reshape((2,) * (2 * m))
    # local index bit k belongs to wires[k]; reshaped axis k is bit m-1-k
    in_axes = [n - 1 - wires[m - 1 - k] for k in range(m)]
    out = np.tensordot(op, psi, axes=(list(range(m, 2 * m)), in_axes))
    out = np.moveaxis(out, list(range(m)), in_axes)
    return out.reshape(state.shape)


def embed_operator(mat: np.ndarray, wires: Sequence[int], n: int) -> np.ndarray:
    """Full 2^n matrix of ``mat`` acting on ``wires``."""
    return apply_local(np.eye(1 << n, dtype=complex), mat, wires, n)


def apply_gate(state: np.ndarray, gate: Gate, n: int) -> np.ndarray:
    return apply_local(state, gate.matrix(), gate.wires, n)


def apply_circuit(state: np.ndarray, c: Circuit) -> np.ndarray:
    for g in c.gates:
        state = apply_gate(state, g, c.n)
    return state


def circuit_unitary(c: Circuit, cap: int | None = None) -> np.ndarray:
    _check_cap(c.n, cap)
    return apply_circuit(np.eye(1 << c.n, dtype=complex), c)


def slice_unitary(c: Circuit, i: int, j: int, cap: int | None = None) -> np.ndarray:
    """U_{i:j} = U_j ... U_i with 1-based inclusive indices; identity if i > j."""
    _check_cap(c.n, cap)
    d = len(c.gates)
    if i > j:
        if not (1 <= i <= d + 1 and 0 <= j <= d):
            raise IndexError("slice indices out of range")
        return np.eye(1 << c.n, dtype=complex)
    if not (1 <= i <= j <= d):
        raise IndexError("slice indices out of range")
    return circuit_unitary(Circuit(c.n, c.gates[i - 1:j]), cap)


def is_unitary(u: np.ndarray, atol: float = 1e-9) -> bool:
    return u.shape[0] == u.shape[1] and np.allclose(u.conj().T @ u, np.eye(u.shape[0]), atol=atol)


def _groups(vals: np.ndarray, tol: float) -> list[list[int]]:
    groups: list[list[int]] = []
    for i, v in enumerate(vals):
        if groups and abs(v - vals[groups[-1][0]]) < tol:
            groups[-1].append(i)
        else:
            groups.append([i])
    return groups


def eig_unitary(u: np.ndarray, atol: float | None = None) -> list[tuple[complex, np.ndarray]]:
    """Eigenpairs of a small unitary via its two commuting Hermitian parts.

    (U + U^dag)/2 is diagonalised first; inside each of its eigenspaces the
    part (U - U^dag)/2i is diagonalised, giving a common eigenbasis.
    """
    atol = POLICY.atol if atol is None else atol
    u = np.asarray(u, dtype=complex)
    if u.shape[0] > 16:
        raise ValueError("eig_unitary is limited to dimension 16")
    if not is_unitary(u, 1e-8):
        raise ValueError("matrix is not unitary")
    h1 = (u + u.conj().T) / 2
    h2 = (u - u.conj().T) / 2j
    w1, v1 = np.linalg.eigh(h1)
    vecs = []
    for grp in _groups(w1, 1e-7):
        basis = v1[:, grp]
        sub = basis.conj().T @ h2 @ basis
        _, w = np.linalg.eigh((sub + sub.conj().T) / 2)
        vecs.append(basis @ w)
    vecs = np.concatenate(vecs, axis=1)
    out = []
    for k in range(vecs.shape[1]):
        v = vecs[:, k]
        lam = complex(v.conj() @ u @ v)
        out.append((lam / abs(lam), v))
    return out


def expectation(m: np.ndarray, rho: np.ndarray) -> float:
    if m.shape != rho.shape:
        raise ValueError("dimension mismatch")
    return float(np.real(np.trace(m @ rho)))


def born_probability(state: np.ndarray, projector: np.ndarray) -> float:
    """tr(B sigma) for a statevector or density matrix sigma."""
    if state.ndim == 1:
        return float(np.real(np.vdot(state, projector @ state)))
    return expectation(projector, state)


def born_sample(state: np.ndarray, projector: np.ndarray, rng: np.random.Generator,
                cap: int | None = None) -> int:
    """One Bernoulli outcome with success probability tr(B sigma)."""
    n = int(np.log2(projector.shape[0]))
    _check_cap(n, cap)
    p = min(max(born_probability(state, projector), 0.0), 1.0)
    return int(rng.random() < p)


def basis_state(index: int, n: int) -> np.ndarray:
    v = np.zeros(1 << n, dtype=complex)
    v[index] = 1
    return v


def zero_block_probability(states: np.ndarray, m: int) -> np.ndarray:
    """Probability that the leading m qubits read all zeros, per column."""
    if m == 0:
        return np.ones(states.shape[1]) if states.ndim == 2 else np.array(1.0)
    step = 1 << m
    return np.sum(np.abs(states[::step]) ** 2, axis=0)

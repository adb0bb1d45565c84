import numpy as np
import pytest
from scipy.stats import binomtest, chisquare

from qatpg.circuits import Circuit, Gate, random_circuit
from qatpg.clifford import clifford_simulate, random_clifford, tableau_to_circuit
from qatpg.densesim import (apply_circuit, basis_state, born_probability, born_sample,
                            circuit_unitary, eig_unitary, embed_operator, expectation,
                            is_unitary, slice_unitary, zero_block_probability)

from helpers import equal_up_to_phase, random_unitary

H = np.array([[1, 1], [1, -1]]) / np.sqrt(2)


def test_circuit_unitary_examples():
    assert np.allclose(circuit_unitary(Circuit(2)), np.eye(4))
    assert np.allclose(circuit_unitary(Circuit(1, (Gate.named("h", 0),))), H)
    u = circuit_unitary(Circuit(2, (Gate.named("cnot", 0, 1),)))
    # control is qubit 1 (low bit): |01> (index 1) <-> |11> (index 3)
    perm = np.eye(4)[[0, 3, 2, 1]]
    assert np.allclose(u, perm)


def test_dense_cap_enforced():
    with pytest.raises(ValueError):
        circuit_unitary(Circuit(3), cap=2)


def test_slice_conventions():
    c = random_circuit(3, 5, seed=1)
    d = len(c.gates)
    assert np.allclose(slice_unitary(c, 1, d), circuit_unitary(c))
    g = c.gates[2]
    assert np.allclose(slice_unitary(c, 3, 3), embed_operator(g.matrix(), g.wires, 3))
    assert np.allclose(slice_unitary(c, 4, 3), np.eye(8))
    with pytest.raises(IndexError):
        slice_unitary(c, 0, 2)
    with pytest.raises(IndexError):
        slice_unitary(c, 1, d + 1)


def test_composition_of_circuits():
    for seed in range(5):
        a, b = random_circuit(3, 4, seed), random_circuit(3, 4, seed + 10)
        assert np.allclose(circuit_unitary(a.then(b)), circuit_unitary(b) @ circuit_unitary(a))


def _eigvals(u):
    return sorted(np.round([lam for lam, _ in eig_unitary(u)], 9), key=lambda z: (z.real, z.imag))


def test_eig_examples():
    assert np.allclose(_eigvals(np.diag([1, -1])), [-1, 1])
    t = np.diag([1, np.exp(1j * np.pi / 4)])
    assert np.allclose(sorted(np.angle([lam for lam, _ in eig_unitary(t)])), [0, np.pi / 4])
    cx = np.eye(4)[[0, 3, 2, 1]]
    vals = [lam for lam, _ in eig_unitary(cx)]
    assert np.allclose(sorted(np.real(vals)), [-1, 1, 1, 1])
    with pytest.raises(ValueError):
        eig_unitary(np.diag([1, 2]))


def test_eig_reconstructs_random_unitaries():
    rng = np.random.default_rng(0)
    for dim in (2, 4, 8, 16):
        u = random_unitary(dim, rng)
        pairs = eig_unitary(u)
        vals = np.array([lam for lam, _ in pairs])
        vecs = np.stack([v for _, v in pairs], axis=1)
        assert np.allclose(np.abs(vals), 1, atol=1e-9)
        assert np.allclose(vecs.conj().T @ vecs, np.eye(dim), atol=1e-9)
        assert np.allclose(vecs @ np.diag(vals) @ vecs.conj().T, u, atol=1e-9)


def test_eig_invariant_under_clifford_basis_change():
    rng = np.random.default_rng(1)
    u = circuit_unitary(random_circuit(2, 3, seed=4))
    v = circuit_unitary(tableau_to_circuit(random_clifford(2, rng)))
    a = np.sort_complex(np.round([lam for lam, _ in eig_unitary(u)], 8))
    b = np.sort_complex(np.round([lam for lam, _ in eig_unitary(v @ u @ v.conj().T)], 8))
    assert np.allclose(a, b)


def test_expectation_examples():
    rho = np.diag([0.3, 0.7])
    assert np.isclose(expectation(np.eye(2), rho), 1)
    assert np.isclose(expectation(np.diag([1, 0]), np.diag([0, 1])), 0)
    plus = np.full((2, 2), 0.5)
    assert np.isclose(expectation(plus, np.diag([1, 0])), 0.5)
    with pytest.raises(ValueError):
        expectation(np.eye(2), np.eye(4))


def test_born_sample_examples():
    rng = np.random.default_rng(0)
    plus = np.array([1, 1]) / np.sqrt(2)
    assert all(born_sample(plus, np.eye(2), rng) == 1 for _ in range(50))
    assert all(born_sample(plus, np.zeros((2, 2)), rng) == 0 for _ in range(50))
    hits = sum(born_sample(plus, np.diag([1, 0]), rng) for _ in range(10000))
    assert abs(hits / 10000 - 0.5) <= 0.02
    assert np.isclose(born_probability(np.outer(plus, plus), np.diag([1, 0])), 0.5)


def test_clifford_simulator_agrees_with_born_sampling():
    rng = np.random.default_rng(3)
    n = 5
    circ = tableau_to_circuit(random_clifford(n, rng))
    psi = apply_circuit(basis_state(0, n), circ)
    shots = 10000
    counts = {}
    for o in clifford_simulate(circ, shots, rng):
        counts[o] = counts.get(o, 0) + 1
    probs = np.abs(psi) ** 2
    keys = [i for i in range(1 << n) if probs[i] > 1e-12]
    obs = [counts.pop("".join(str((i >> q) & 1) for q in range(n)), 0) for i in keys]
    assert not counts
    assert chisquare(obs, probs[keys] * shots).pvalue > 0.001
    # the first qubit alone as a Bernoulli check against born_sample
    p0 = born_probability(psi, embed_operator(np.diag([1, 0]), [0], n))
    if 0 < p0 < 1:
        k = sum(born_sample(psi, embed_operator(np.diag([1, 0]), [0], n), rng) for _ in range(4000))
        assert binomtest(k, 4000, p0).pvalue > 0.001


def test_zero_block_probability():
    n = 3
    states = np.stack([apply_circuit(basis_state(0, n), random_circuit(n, 3, s)) for s in range(4)], 1)
    for m in range(n + 1):
        proj = embed_operator(np.diag([1.0] + [0.0] * ((1 << m) - 1)), list(range(m)), n) if m else np.eye(8)
        want = [born_probability(states[:, k], proj) for k in range(4)]
        assert np.allclose(zero_block_probability(states, m), want)


def test_random_circuit_unitary():
    u = circuit_unitary(random_circuit(3, 20, seed=7))
    assert is_unitary(u, 1e-10)
    assert equal_up_to_phase(u, u)

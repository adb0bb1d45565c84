import numpy as np
import pytest
from scipy.stats import binomtest, chisquare

from qatpg.circuits import Circuit, Gate
from qatpg.clifford import (CliffordTableau, clifford_simulate, conjugate_by_gate, from_pauli_map,
                            projector_prep_circuit, random_clifford, tableau_to_circuit)
from qatpg.densesim import circuit_unitary, embed_operator
from qatpg.pauli import SignedPauli, commutes, independent, pauli_matrix
from qatpg.spd import enumerate_projectors
from qatpg.stabilizer import StabilizerProjector, dense_projector

from helpers import equal_up_to_phase, random_pauli, random_projector


def g(text, n):
    return SignedPauli.from_str(text, n)


def _acts_like(circ: Circuit, tab: CliffordTableau) -> bool:
    u = circuit_unitary(circ)
    n = tab.n
    for j in range(n):
        for img, src in ((tab.xs[j], "X"), (tab.zs[j], "Z")):
            p = SignedPauli.single(n, j, src)
            if not np.allclose(u @ pauli_matrix(p) @ u.conj().T, pauli_matrix(img), atol=1e-9):
                return False
    return True


def test_hadamard_conjugation():
    h = CliffordTableau.from_gate(Gate.named("h", 0), 1)
    assert h.conjugate(g("X1", 1)) == g("Z1", 1)
    assert h.conjugate(g("Y1", 1)) == g("-Y1", 1)
    assert h.conjugate(g("Z1", 1)) == g("X1", 1)


def test_cnot_conjugation_matches_dense():
    cx = CliffordTableau.from_gate(Gate.named("cnot", 0, 1), 2)
    assert cx.conjugate(g("X1", 2)) == g("X1*X2", 2)
    u = circuit_unitary(Circuit(2, (Gate.named("cnot", 0, 1),)))
    rng = np.random.default_rng(0)
    for _ in range(30):
        p = random_pauli(2, rng)
        assert np.allclose(u @ pauli_matrix(p) @ u.conj().T, pauli_matrix(cx.conjugate(p)))


@pytest.mark.parametrize("kind", ["h", "s", "sdg", "x", "y", "z"])
def test_single_qubit_gate_conjugation_matches_dense(kind):
    gate = Gate.named(kind, 0)
    u = gate.matrix()
    for letter in "XYZ":
        p = SignedPauli.single(1, 0, letter)
        assert np.allclose(u @ p.matrix() @ u.conj().T, conjugate_by_gate(p, gate).matrix())


def test_clifford_rotation_conjugation_matches_dense():
    for theta in (np.pi / 2, -np.pi / 2, np.pi):
        gate = Gate.rot(g("X1*Z2", 2), theta)
        u = embed_operator(gate.matrix(), gate.wires, 2)
        for p in (g("Z1", 2), g("X2", 2), g("Y1*Y2", 2)):
            assert np.allclose(u @ p.matrix() @ u.conj().T, conjugate_by_gate(p, gate).matrix())


def test_from_pauli_map_examples():
    t = from_pauli_map([(g("X1", 1), g("Z1", 1)), (g("Z1", 1), g("X1", 1))])
    assert t.conjugate(g("X1", 1)) == g("Z1", 1) and t.conjugate(g("Z1", 1)) == g("X1", 1)
    t = from_pauli_map([(g("Z1", 2), g("Z1", 2))])
    assert t.is_valid() and t.conjugate(g("Z1", 2)) == g("Z1", 2)
    with pytest.raises(ValueError):
        from_pauli_map([(g("X1", 1), g("Z1", 1)), (g("Z1", 1), g("Z1", 1))])
    with pytest.raises(ValueError):
        from_pauli_map([(g("X1", 2), g("Z1", 2)), (g("Z1", 2), g("Z2", 2))])


def _random_partial_map(n, rng):
    size = int(rng.integers(1, 2 * n + 1))
    ps = []
    while len(ps) < size:
        p = random_pauli(n, rng)
        if independent(ps + [p]):
            ps.append(p)
    u = random_clifford(n, rng)
    qs = [u.conjugate(p) for p in ps]
    # random sign changes on the image side keep the pattern valid
    qs = [q if rng.random() < 0.5 else -q for q in qs]
    return list(zip(ps, qs))


@pytest.mark.parametrize("n", [1, 2, 3])
def test_from_pauli_map_random_partial_maps(n):
    rng = np.random.default_rng(100 + n)
    for _ in range(200):
        pairs = _random_partial_map(n, rng)
        t = from_pauli_map(pairs)
        assert t.is_valid()
        for p, q in pairs:
            assert t.conjugate(p) == q


def test_tableau_to_circuit_examples():
    assert len(tableau_to_circuit(CliffordTableau.identity(3)).gates) == 0
    hh = CliffordTableau.from_circuit(Circuit(2, (Gate.named("h", 0), Gate.named("h", 1))))
    assert _acts_like(tableau_to_circuit(hh), hh)


@pytest.mark.parametrize("n", [1, 2, 3])
def test_tableau_to_circuit_round_trip(n):
    rng = np.random.default_rng(7 * n)
    for _ in range(40):
        t = random_clifford(n, rng)
        circ = tableau_to_circuit(t)
        assert _acts_like(circ, t)
        assert len(circ.gates) <= 8 * n * n + 4 * n
        assert set(gt.kind for gt in circ.gates) <= {"h", "s", "sdg", "cnot", "x", "z"}


def test_composition_matches_dense_products():
    rng = np.random.default_rng(3)
    for _ in range(20):
        a, b, c = (random_clifford(3, rng) for _ in range(3))
        assert a.then(b).then(c) == a.then(b.then(c))
        ua, ub = circuit_unitary(tableau_to_circuit(a)), circuit_unitary(tableau_to_circuit(b))
        assert equal_up_to_phase(circuit_unitary(tableau_to_circuit(a.then(b))), ub @ ua)
        assert a.then(a.inverse()) == CliffordTableau.identity(3)


def _prep_ok(a: StabilizerProjector) -> bool:
    circ = projector_prep_circuit(a)
    assert set(gt.kind for gt in circ.gates) <= {"h", "s", "cnot", "x", "z"}
    u = circuit_unitary(circ)
    lead = np.zeros(1 << a.k)
    lead[0] = 1
    base = np.kron(np.eye(1 << (a.n - a.k)), np.diag(lead))
    return np.allclose(u @ base @ u.conj().T, dense_projector(a), atol=1e-9)


def test_projector_prep_examples():
    assert projector_prep_circuit(StabilizerProjector.from_str("<Z1,Z2>", 2)).gates == ()
    assert _prep_ok(StabilizerProjector.from_str("<X1*X2,Z1*Z2>", 2))
    minus_z = projector_prep_circuit(StabilizerProjector.from_str("<-Z1>", 1))
    assert [gt.kind for gt in minus_z.gates] == ["x"]


def test_projector_prep_round_trip():
    for n in (1, 2):
        for a in enumerate_projectors(n):
            assert _prep_ok(a)
    rng = np.random.default_rng(9)
    for _ in range(200):
        assert _prep_ok(random_projector(3, rng))


def test_simulate_examples():
    rng = np.random.default_rng(1)
    outs = clifford_simulate(Circuit(1, (Gate.named("h", 0),)), 10000, rng)
    ones = sum(o == "1" for o in outs)
    assert binomtest(ones, 10000, 0.5).pvalue > 0.001
    assert set(clifford_simulate(Circuit(1, (Gate.named("x", 0),)), 100, rng)) == {"1"}
    bell = Circuit(2, (Gate.named("h", 0), Gate.named("cnot", 0, 1)))
    assert set(clifford_simulate(bell, 500, rng)) == {"00", "11"}
    with pytest.raises(ValueError):
        clifford_simulate(Circuit(1, (Gate.rz(0, 0.3),)), 1, rng)


def test_simulate_matches_born_distribution():
    rng = np.random.default_rng(2)
    n = 4
    circ = tableau_to_circuit(random_clifford(n, rng))
    psi = circuit_unitary(circ)[:, 0]
    probs = np.abs(psi) ** 2
    shots = 10000
    outs = clifford_simulate(circ, shots, rng)
    counts = np.zeros(1 << n)
    for o in outs:
        counts[sum(int(b) << q for q, b in enumerate(o))] += 1
    support = probs > 1e-12
    assert counts[~support].sum() == 0
    assert chisquare(counts[support], probs[support] * shots).pvalue > 0.001


def test_random_clifford_is_valid():
    rng = np.random.default_rng(4)
    for n in (1, 2, 3, 5):
        t = random_clifford(n, rng)
        assert t.is_valid()
        for p in (random_pauli(n, rng) for _ in range(5)):
            for q in (random_pauli(n, rng) for _ in range(5)):
                assert commutes(p, q) == commutes(t.conjugate(p), t.conjugate(q))

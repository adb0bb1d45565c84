import math

import numpy as np
import pytest
import scipy.sparse
from scipy.optimize import linprog

from qatpg.circuits import Gate
from qatpg.clifford import random_clifford, tableau_to_circuit
from qatpg.densesim import circuit_unitary, embed_operator
from qatpg.pauli import SignedPauli
from qatpg.spd import (SPD, _full_basis_matrix, apply_rotation_via_channels, enumerate_projectors,
                       optimal_spd, pauli_coefficients, projector_table, reconstruct,
                       rotation_channel_terms, sparsify, spd_norms)
from qatpg.stabilizer import StabilizerProjector, dense_projector

from helpers import random_effect, random_projector

T = np.diag([1, np.exp(1j * np.pi / 4)])
MAGIC = T @ np.full((2, 2), 0.5) @ T.conj().T


def S(text, n):
    return StabilizerProjector.from_str(text, n)


def _dense_lp_oracle(a, weight="nu"):
    """Independent LP: equality on real and imaginary matrix entries, solved by HiGHS."""
    n = int(round(math.log2(a.shape[0])))
    projs = enumerate_projectors(n)
    cols = np.array([np.concatenate([dense_projector(p).real.ravel(), dense_projector(p).imag.ravel()])
                     for p in projs]).T
    rhs = np.concatenate([a.real.ravel(), a.imag.ravel()])
    w = np.ones(len(projs)) if weight == "nu" else np.array([p.trace for p in projs], float)
    res = linprog(np.concatenate([w, w]), A_eq=np.hstack([cols, -cols]), b_eq=rhs,
                  bounds=(0, None), method="highs")
    assert res.status == 0
    return res.fun


def test_enumeration_counts():
    assert [len(enumerate_projectors(n)) for n in (1, 2, 3)] == [7, 91, 2467]
    assert len(set(enumerate_projectors(3))) == 2467
    ranks = [p.k for p in enumerate_projectors(2)]
    assert [ranks.count(k) for k in (0, 1, 2)] == [1, 30, 60]
    with pytest.raises(ValueError):
        enumerate_projectors(4)


def test_stabilizer_projector_is_its_own_optimum():
    a = S("<X1*X2,Z1*Z2>", 2)
    s = optimal_spd(dense_projector(a))
    assert len(s) == 1 and s.terms[0][1] == a and math.isclose(s.terms[0][0], 1, abs_tol=1e-9)


def test_magic_state_optimum_is_sqrt2():
    for obj in ("nu", "nu_star", "lex_nu_nu_star", "lex_nu_star_nu"):
        for method in ("simplex", "highs"):
            s = optimal_spd(MAGIC, obj, method)
            assert abs(s.nu - math.sqrt(2)) < 1e-6
            assert np.allclose(reconstruct(s), MAGIC, atol=1e-7)
    assert abs(_dense_lp_oracle(MAGIC) - math.sqrt(2)) < 1e-6


def test_operator_outside_unit_interval_rejected():
    with pytest.raises(ValueError):
        optimal_spd(2 * np.eye(2))
    with pytest.raises(ValueError):
        optimal_spd(np.array([[0, 1], [0, 0]]))


def test_norm_examples():
    n1 = spd_norms(SPD(1, [(1, S("<Z1>", 1))]))
    assert (n1.nu, n1.nu_star) == (1, 1)
    n2 = spd_norms(SPD(3, [(0.25, S("<Z2>", 3))]))
    assert (n2.nu, n2.nu_star) == (0.25, 1.0)
    n3 = spd_norms(SPD(1, [(0.5, S("<Z1>", 1)), (-0.5, S("<X1>", 1))]))
    assert (n3.nu, n3.nu_star) == (1, 1)


def test_duplicates_merged_and_zeros_dropped():
    a, b = S("<Z1>", 1), S("<X1>", 1)
    s = SPD(1, [(0.5, a), (0.5, b), (0.5, a), (-0.5, b)])
    assert len(s) == 1 and s.terms[0] == (1.0, a)
    tiny = SPD(2, [(1e-40, S("<Z1>", 2))])
    assert len(tiny) == 1  # threshold is relative, small normalised states survive


def test_reconstruct_examples():
    assert np.allclose(reconstruct(SPD(1, [(1, S("<Z1>", 1))])), np.diag([1, 0]))
    assert np.allclose(reconstruct(SPD(2)), np.zeros((4, 4)))


def test_sparsify_examples():
    one = SPD(1, [(1, S("<Z1>", 1))])
    assert sparsify(one).terms == one.terms
    a, b = S("<Z1>", 1), S("<X1>", 1)
    # redundant rank-one decomposition of A using both projectors and their complements
    s = SPD(1, [(1.5, a), (0.5, S("<-Z1>", 1)), (-0.5, StabilizerProjector.identity(1)),
                (0.3, b), (0.3, S("<-X1>", 1)), (-0.3, StabilizerProjector.identity(1))])
    out = sparsify(s)
    assert np.allclose(reconstruct(out), reconstruct(s))
    assert len(out) == 1 and out.terms[0][1] == a


def test_sparsify_reduces_inflated_decomposition():
    rng = np.random.default_rng(4)
    a = random_effect(4, rng)
    base = optimal_spd(a)
    projs = list(enumerate_projectors(2))
    extra = []
    for j in rng.choice(len(projs), size=15, replace=False):
        p = projs[int(j)]
        c = rng.normal()
        # add c(P) and remove it through its complement pair, keeping the operator
        extra += [(c, p)]
        extra += [(-c * w, q) for w, q in _complement(p)]
    inflated = SPD(2, list(base.terms) + extra)
    assert np.allclose(reconstruct(inflated), a, atol=1e-9)
    out = sparsify(inflated)
    assert np.allclose(reconstruct(out), a, atol=1e-7)
    assert len(out) < len(inflated)
    assert out.nu <= inflated.nu + 1e-6
    names = set(p for _, p in inflated.terms)
    assert all(p in names for _, p in out.terms)


def _complement(p):
    """P = I - P^- for a one-generator projector, else P = P' - P'' within its group."""
    if p.k == 0:
        return [(1.0, p)]
    g = p.gens[0]
    rest = list(p.gens[1:])
    plus = StabilizerProjector(p.n, rest)
    minus = StabilizerProjector(p.n, rest + [-g])
    return [(1.0, plus), (-1.0, minus)]


def test_channel_terms_examples():
    assert rotation_channel_terms(0) == (1, 0, 0)
    c = rotation_channel_terms(math.pi / 2)
    assert np.allclose(c, (0, 0, 1))
    c = rotation_channel_terms(math.pi / 4)
    assert np.allclose(c, (0.5, -0.20711, 0.70711), atol=5e-6)
    assert c[0] == (1 + math.cos(math.pi / 4) - math.sin(math.pi / 4)) / 2
    assert abs(sum(abs(v) for v in c) - 1.41421) < 1e-5


def _rotation_dense(p, theta, n):
    g = Gate.rot(p, theta)
    return embed_operator(g.matrix(), g.wires, n)


def test_channel_examples():
    s = SPD(1, [(1, S("<X1>", 1))])
    assert apply_rotation_via_channels(s, SignedPauli.from_str("Z1", 1), 0).terms == s.terms
    out = apply_rotation_via_channels(s, SignedPauli.from_str("Z1", 1), math.pi / 2)
    assert len(out) == 1 and out.terms[0][1] in (S("<Y1>", 1), S("<-Y1>", 1))
    u = _rotation_dense(SignedPauli.from_str("Z1", 1), math.pi / 2, 1)
    assert np.allclose(reconstruct(out), u @ reconstruct(s) @ u.conj().T)


@pytest.mark.parametrize("theta", [math.pi / 4, -math.pi / 4, 0.3, 2.5, -2.9, math.pi])
def test_channels_match_dense_rotation(theta):
    rng = np.random.default_rng(int(abs(theta) * 100))
    p = SignedPauli.from_str("Z1*Z2", 2)
    for _ in range(10):
        s = SPD(2, [(rng.normal(), random_projector(2, rng)) for _ in range(4)])
        out = apply_rotation_via_channels(s, p, theta)
        u = _rotation_dense(p, theta, 2)
        assert np.allclose(reconstruct(out), u @ reconstruct(s) @ u.conj().T, atol=1e-7)
        c = rotation_channel_terms(abs(math.remainder(theta, 2 * math.pi)))
        assert out.nu <= sum(abs(v) for v in c) * s.nu + 1e-9


def test_lp_optimum_matches_independent_oracle():
    rng = np.random.default_rng(5)
    for _ in range(100):
        a = random_effect(2, rng)
        assert abs(optimal_spd(a, "nu").nu - _dense_lp_oracle(a)) < 1e-6
    for _ in range(30):
        a = random_effect(4, rng)
        assert abs(optimal_spd(a, "nu").nu - _dense_lp_oracle(a)) < 1e-6
        assert abs(optimal_spd(a, "nu_star").nu_star - _dense_lp_oracle(a, "nu_star")) < 1e-6


def test_projector_table_matches_enumeration():
    table = projector_table(3)
    r, c, v = table.entries()
    m = np.zeros((64, table.size))
    m[r, c] = v
    cols = {tuple(np.round(col, 12)) for col in m.T}
    assert cols == {tuple(np.round(col, 12)) for col in _full_basis_matrix(3).T}
    assert len(cols) == table.size == 2467
    y = np.random.default_rng(0).normal(size=64)
    assert np.allclose(table.products(y), m.T @ y)


def test_four_qubit_table_counts_and_columns():
    table = projector_table(4)
    assert table.size == 150451
    assert [blk[1].shape[0] for blk in table.blocks] == [1, 255, 5355, 11475, 2295]
    rng = np.random.default_rng(3)
    for j in rng.integers(0, table.size, size=40):
        p = table.projector(int(j))
        assert table.index(p) == j
        proj = dense_projector(p)
        assert np.allclose(proj @ proj, proj)
        assert np.allclose(table.column(int(j)), pauli_coefficients(proj))


def _sparse_highs_oracle(a, weight):
    """Full 4-qubit LP over all 150451 columns, solved by HiGHS."""
    table = projector_table(4)
    r, c, v = table.entries()
    m = scipy.sparse.csc_matrix((v, (r, c)), shape=(256, table.size))
    w = table.weights(weight)
    res = linprog(np.concatenate([w, w]), A_eq=scipy.sparse.hstack([m, -m]).tocsc(),
                  b_eq=pauli_coefficients(a), bounds=(0, None), method="highs")
    assert res.status == 0
    return res.fun


def test_four_qubit_optimum_matches_sparse_oracle():
    rng = np.random.default_rng(21)
    a = random_effect(16, rng)
    s = optimal_spd(a, "nu")
    assert np.allclose(reconstruct(s), a, atol=1e-9)
    assert abs(s.nu - _sparse_highs_oracle(a, "nu")) < 1e-6
    s = optimal_spd(a, "nu_star")
    assert np.allclose(reconstruct(s), a, atol=1e-9)
    assert abs(s.nu_star - _sparse_highs_oracle(a, "nu_star")) < 1e-6


def test_four_qubit_start_pool_and_tensor_structure():
    rng = np.random.default_rng(22)
    b = random_effect(8, rng)
    a = np.kron(dense_projector(S("<Z1>", 1)), b)
    plain = optimal_spd(a, "nu")
    seeded = optimal_spd(a, "nu", start=optimal_spd(a, "nu_star"))
    assert abs(plain.nu - optimal_spd(b, "nu").nu) < 1e-6
    assert abs(seeded.nu - plain.nu) < 1e-6
    assert abs(optimal_spd(a, "nu_star").nu_star - optimal_spd(b, "nu_star").nu_star) < 1e-6


def test_clifford_invariance_of_optimum():
    rng = np.random.default_rng(6)
    for trial in range(100):
        n = 1 + trial % 2
        a = random_effect(1 << n, rng)
        u = circuit_unitary(tableau_to_circuit(random_clifford(n, rng)))
        b = u @ a @ u.conj().T
        assert abs(optimal_spd(a, "nu").nu - optimal_spd(b, "nu").nu) < 1e-6
        assert abs(optimal_spd(a, "nu_star").nu_star - optimal_spd(b, "nu_star").nu_star) < 1e-6


def test_tensor_invariance_of_optimum():
    rng = np.random.default_rng(7)
    for _ in range(20):
        a = random_effect(2, rng)
        sp = random_projector(1, rng, k=int(rng.integers(0, 2)))
        sa = np.kron(dense_projector(sp), a)  # S on qubit 2, A on qubit 1
        assert abs(optimal_spd(sa, "nu").nu - optimal_spd(a, "nu").nu) < 1e-6
        assert abs(optimal_spd(sa, "nu_star").nu_star
                   - sp.trace * optimal_spd(a, "nu_star").nu_star) < 1e-6


def test_lexicographic_objective_beats_random_restarts():
    rng = np.random.default_rng(8)
    for _ in range(5):
        a = random_effect(4, rng)
        pure = optimal_spd(a, "nu")
        lex = optimal_spd(a, "lex_nu_nu_star")
        assert abs(lex.nu - pure.nu) < 1e-6
        projs = enumerate_projectors(2)
        m, b = _full_basis_matrix(2), pauli_coefficients(a)
        for _ in range(5):
            w = 1 + 1e-7 * rng.uniform(size=len(projs))
            res = linprog(np.concatenate([w, w]), A_eq=np.hstack([m, -m]), b_eq=b,
                          bounds=(0, None), method="highs")
            x = res.x[:len(projs)] - res.x[len(projs):]
            if abs(np.abs(x).sum() - pure.nu) < 1e-6:
                nu_star = sum(abs(c) * p.trace for c, p in zip(x, projs))
                assert lex.nu_star <= nu_star + 1e-6


def test_serialization_round_trip_is_bit_exact():
    rng = np.random.default_rng(9)
    s = SPD(3, [(rng.normal() / 3, random_projector(3, rng)) for _ in range(6)])
    back = SPD.from_json(s.to_json())
    assert back.n == s.n and back.terms == s.terms

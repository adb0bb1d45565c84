import math

import numpy as np
import pytest
from scipy.stats import chi2_contingency

from qatpg.atpg import generate_test_patterns
from qatpg.circuits import Circuit, Gate, MissingGate, bv_circuit, inject_fault, qft_circuit
from qatpg.sampler import (DenseExecutor, SamplingPlan, TableauExecutor, draw_trials,
                           exact_expectation, make_executor, required_trials, run_test_application)
from qatpg.spd import SPD
from qatpg.stabilizer import StabilizerProjector

from helpers import random_projector


def S(text, n):
    return StabilizerProjector.from_str(text, n)


def test_required_trials_examples():
    assert required_trials(0.1, 0.1, 1, 1) == 600
    assert required_trials(0.3, 0.3, 1, 1) == 43
    base = 2.0 / 0.3 ** 2 * math.log(2 / 0.3)
    assert required_trials(0.3, 0.3, 2, 1) == math.ceil(4 * base)
    assert required_trials(0.3, 0.3, 1.5, 2) == math.ceil(9 * base)
    for bad in [(0, 0.1), (-1, 0.1), (0.1, 0), (0.1, 1)]:
        with pytest.raises(ValueError):
            required_trials(*bad, 1, 1)


def test_plan_tables():
    rng = np.random.default_rng(1)
    a = SPD(3, [(float(rng.normal()), random_projector(3, rng)) for _ in range(5)])
    b = SPD(3, [(float(rng.normal()), random_projector(3, rng)) for _ in range(4)])
    plan = SamplingPlan.build(a, b, 0.3, 0.3)
    assert abs(plan.p_input.sum() - 1) < 1e-12 and abs(plan.p_meas.sum() - 1) < 1e-12
    assert plan.correction == a.nu_star * b.nu
    assert plan.trials == required_trials(0.3, 0.3, a.nu_star, b.nu)


def test_empty_spd_rejected():
    ex = DenseExecutor(Circuit(1))
    with pytest.raises(ValueError):
        run_test_application(SPD(1), SPD(1, [(1, S("<Z1>", 1))]), ex, 0.3, 0.3)
    with pytest.raises(ValueError):
        run_test_application(SPD(1, [(1, S("<Z1>", 1))]), SPD(1), ex, 0.3, 0.3)


@pytest.mark.parametrize("kind", ["dense", "tableau"])
def test_identity_cut_is_deterministic(kind):
    s = SPD(2, [(1, S("<Z1,Z2>", 2))])
    res = run_test_application(s, s, make_executor(Circuit(2), kind), 0.1, 0.1, seed=3)
    assert res.estimate == 1.0 and res.trials == 600
    assert np.all(res.records == 1.0)


def test_identity_measurement_always_succeeds():
    rho = SPD(2, [(0.25, StabilizerProjector.identity(2))])
    m = SPD(2, [(1, StabilizerProjector.identity(2))])
    c = qft_circuit(2)
    res = run_test_application(rho, m, DenseExecutor(c), 0.3, 0.3, seed=0)
    assert res.estimate == 1.0
    assert exact_expectation(rho, m, c) == pytest.approx(1.0)


def test_seed_determinism():
    tp = generate_test_patterns(qft_circuit(3), 13, MissingGate())
    ex = DenseExecutor(qft_circuit(3))
    r1 = run_test_application(tp.spd_rho, tp.spd_m, ex, 0.3, 0.3, seed=42)
    r2 = run_test_application(tp.spd_rho, tp.spd_m, ex, 0.3, 0.3, seed=42)
    r3 = run_test_application(tp.spd_rho, tp.spd_m, ex, 0.3, 0.3, seed=43)
    assert r1.estimate == r2.estimate and np.array_equal(r1.records, r2.records)
    assert not np.array_equal(r1.records, r3.records)
    assert r1.to_dict()["seed"] == 42


def test_estimator_bound_and_record_values():
    rng = np.random.default_rng(2)
    c = qft_circuit(3)
    ex = DenseExecutor(c)
    for _ in range(5):
        a = SPD(3, [(float(rng.normal()), random_projector(3, rng)) for _ in range(4)])
        b = SPD(3, [(float(rng.normal()), random_projector(3, rng)) for _ in range(4)])
        res = run_test_application(a, b, ex, 0.5, 0.5, seed=int(rng.integers(1 << 30)))
        bound = a.nu_star * b.nu
        assert set(np.round(np.abs(res.records) / bound, 12)) <= {0.0, 1.0}
        assert -bound <= res.estimate <= bound


def test_unbiased_on_identity_cut():
    rng = np.random.default_rng(3)
    a = SPD(2, [(0.7, random_projector(2, rng, k=1)), (-0.3, random_projector(2, rng, k=2)),
                (0.2, random_projector(2, rng, k=0))])
    b = SPD(2, [(0.9, random_projector(2, rng, k=2)), (-0.4, random_projector(2, rng, k=1))])
    c = Circuit(2)
    exact = exact_expectation(a, b, c)
    res = run_test_application(a, b, DenseExecutor(c), 0.3, 0.3, seed=4, trials=10 ** 6)
    se = res.records.std() / math.sqrt(res.trials)
    assert abs(res.estimate - exact) < 4 * se


def test_qft3_fault_free_concentration():
    c = qft_circuit(3)
    tp = generate_test_patterns(c, 13, MissingGate())
    exact = exact_expectation(tp.spd_rho, tp.spd_m, c)
    assert exact == pytest.approx(tp.p_success, abs=1e-9)
    ex = DenseExecutor(c)
    root = np.random.SeedSequence(5)
    hits = sum(abs(run_test_application(tp.spd_rho, tp.spd_m, ex, 0.1, 0.1, seed=s).estimate
                   - exact) <= 0.1 for s in root.spawn(100))
    assert hits >= 90


def test_qft3_faulty_cut_concentrates_on_dense_value():
    c = qft_circuit(3)
    tp = generate_test_patterns(c, 13, MissingGate())
    cut = inject_fault(c, 13, MissingGate())
    exact = exact_expectation(tp.spd_rho, tp.spd_m, cut)
    assert exact == pytest.approx(1 - tp.p_success, abs=1e-9)
    res = run_test_application(tp.spd_rho, tp.spd_m, DenseExecutor(cut), 0.05, 0.01, seed=6)
    assert abs(res.estimate - exact) < 0.05


def test_tableau_and_dense_executors_agree():
    c = bv_circuit(4, "111")
    for site in (2, 5, 9):
        tp = generate_test_patterns(c, site, MissingGate())
        cut = inject_fault(c, site, MissingGate())
        plan = SamplingPlan.build(tp.spd_rho, tp.spd_m, 0.3, 0.3)
        draws = draw_trials(plan, 4000, np.random.default_rng(site))
        dense = DenseExecutor(cut).run(plan, draws, np.random.default_rng(1))
        tab = TableauExecutor(cut).run(plan, draws, np.random.default_rng(2))
        counts = np.array([[dense.sum(), (~dense).sum()], [tab.sum(), (~tab).sum()]])
        if counts[:, 0].min() == 0 or counts[:, 1].min() == 0:
            assert np.array_equal(dense, tab)
        else:
            assert chi2_contingency(counts).pvalue > 0.001


def test_tableau_executor_matches_dense_on_random_patterns():
    rng = np.random.default_rng(7)
    c = Circuit(3, [Gate.named("h", 0), Gate.named("cnot", 0, 1), Gate.named("s", 2),
                    Gate.named("cnot", 2, 1), Gate.named("h", 2)])
    for _ in range(3):
        a = SPD(3, [(float(rng.normal()), random_projector(3, rng)) for _ in range(3)])
        b = SPD(3, [(float(rng.normal()), random_projector(3, rng)) for _ in range(3)])
        plan = SamplingPlan.build(a, b, 0.3, 0.3)
        draws = draw_trials(plan, 3000, rng)
        dense = DenseExecutor(c).run(plan, draws, np.random.default_rng(1))
        tab = TableauExecutor(c).run(plan, draws, np.random.default_rng(2))
        for j in range(len(b)):
            sel = draws.j == j
            counts = np.array([[dense[sel].sum(), (~dense[sel]).sum()],
                               [tab[sel].sum(), (~tab[sel]).sum()]])
            if counts.min(axis=0).min() == 0:
                assert np.array_equal(dense[sel], tab[sel])
            else:
                assert chi2_contingency(counts).pvalue > 0.001


def test_tableau_executor_requires_clifford():
    with pytest.raises(ValueError):
        TableauExecutor(qft_circuit(3))
    assert isinstance(make_executor(qft_circuit(3)), DenseExecutor)
    assert isinstance(make_executor(bv_circuit(4, "111")), TableauExecutor)


def test_exact_expectation_examples():
    c = bv_circuit(4, "111")
    tp = generate_test_patterns(c, 5, MissingGate())
    assert exact_expectation(tp.spd_rho, tp.spd_m, c) == pytest.approx(1.0, abs=1e-9)
    ident = SPD(4, [(1, StabilizerProjector.identity(4))])
    assert exact_expectation(tp.spd_rho, ident, c) == pytest.approx(1.0, abs=1e-9)
    zero = SPD(4, [(0.0, S("<Z1>", 4))])
    assert exact_expectation(zero, ident, c) == 0.0

import json
from pathlib import Path

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from distvqe.hamiltonian import Term, group_qwc, parse_hamiltonian, random_hamiltonian, to_dense_matrix
from distvqe.simulator import (
    AnsatzSpec,
    NoiseConfig,
    apply_depolarizing,
    energy,
    expectation_exact,
    expectation_grouped,
    expectation_sampled,
    prepare_state,
    prepare_states,
)

import oracles

GOLDEN = json.loads((Path(__file__).parent / "fixtures" / "golden_circuits.json").read_text())
PLUS = np.array([1, 1], dtype=complex) / np.sqrt(2)


def test_param_count_and_validation():
    assert AnsatzSpec(4, 3).param_count == 36
    with pytest.raises(ValueError):
        AnsatzSpec(0)
    with pytest.raises(ValueError):
        AnsatzSpec(2, entangler="star")
    with pytest.raises(ValueError):
        prepare_state(AnsatzSpec(2, 1), np.zeros(5))
    with pytest.raises(ValueError):
        NoiseConfig(p=1.5)


def test_zero_angles_give_all_zeros_state():
    state = prepare_state(AnsatzSpec(3, 2), np.zeros(18))
    expected = np.zeros(8)
    expected[0] = 1
    assert np.allclose(state, expected)


def test_ry_pi_on_first_qubit_then_cnot():
    a = AnsatzSpec(2, 1)
    theta = np.zeros(a.param_count)
    theta[1] = np.pi  # layer 0, qubit 0, Ry
    state = prepare_state(a, theta)
    # |10> then CNOT(0 -> 1) gives |11>
    assert np.isclose(abs(state[3]), 1.0)


@pytest.mark.parametrize("case", GOLDEN, ids=lambda c: f"n{c['n_qubits']}L{c['layers']}{c['entangler']}")
def test_golden_circuits(case):
    a = AnsatzSpec(case["n_qubits"], case["layers"], case["entangler"])
    expected = np.array(case["re"]) + 1j * np.array(case["im"])
    assert np.abs(prepare_state(a, case["theta"]) - expected).max() < 1e-10


def test_batched_matches_single():
    a = AnsatzSpec(3, 2)
    thetas = np.random.default_rng(0).uniform(0, 6, (5, a.param_count))
    batch = prepare_states(a, thetas)
    for row, theta in zip(batch, thetas):
        assert np.allclose(row, prepare_state(a, theta), atol=1e-14)


@settings(max_examples=30, deadline=None)
@given(st.integers(1, 5), st.integers(1, 3), st.integers(0, 2**32 - 1))
def test_norm_preserved(n, layers, seed):
    a = AnsatzSpec(n, layers, "ring")
    theta = np.random.default_rng(seed).uniform(-10, 10, a.param_count)
    assert abs(np.linalg.norm(prepare_state(a, theta)) - 1) < 1e-12


@pytest.mark.parametrize(
    "state, word, value",
    [
        (np.array([1, 0]), "Z", 1.0),
        (np.array([0, 1]), "Z", -1.0),
        (PLUS, "X", 1.0),
        (PLUS, "Z", 0.0),
        (np.array([1, 1j]) / np.sqrt(2), "Y", 1.0),
        (np.array([1, 0, 0, 1]) / np.sqrt(2), "ZZ", 1.0),
        (np.array([1, 0, 0, 1]) / np.sqrt(2), "XX", 1.0),
        (np.array([1, 0, 0, 1]) / np.sqrt(2), "YY", -1.0),
    ],
)
def test_expectation_examples(state, word, value):
    assert np.isclose(expectation_exact(np.asarray(state, dtype=complex), Term(1.0, word)), value)


def test_expectation_matches_dense_matrix():
    rng = np.random.default_rng(4)
    a = AnsatzSpec(4, 2)
    h = random_hamiltonian(4, 25, rng, include_identity=True)
    state = prepare_state(a, rng.uniform(0, 2 * np.pi, a.param_count))
    ref = oracles.hamiltonian_matrix((t.coeff, t.word) for t in h.terms)
    assert abs(energy(state, h) - np.vdot(state, ref @ state).real) < 1e-12
    for t in h.terms:
        direct = t.coeff * np.vdot(state, oracles.pauli_matrix(t.word) @ state).real
        assert abs(expectation_exact(state, t) - direct) < 1e-12


def test_expectation_dimension_mismatch():
    with pytest.raises(ValueError):
        expectation_exact(np.array([1, 0], dtype=complex), Term(1.0, "ZZ"))


def test_sampled_plus_state_z_is_near_zero():
    rng = np.random.default_rng(0)
    assert abs(expectation_sampled(PLUS, Term(1.0, "Z"), 100_000, rng)) < 0.02


def test_sampled_mean_is_unbiased():
    rng = np.random.default_rng(1)
    a = AnsatzSpec(2, 1)
    state = prepare_state(a, rng.uniform(0, 6, a.param_count))
    term = Term(0.7, "XY")
    exact = expectation_exact(state, term)
    reps, shots = 100, 10_000
    means = [expectation_sampled(state, term, shots, rng) for _ in range(reps)]
    sigma = 0.7 * np.sqrt((1 - (exact / 0.7) ** 2) / shots) / np.sqrt(reps)
    assert abs(np.mean(means) - exact) < 4 * max(sigma, 1e-6)


def test_sampled_identity_and_bad_shots():
    rng = np.random.default_rng(0)
    assert expectation_sampled(PLUS, Term(2.5, "I"), 10, rng) == 2.5
    with pytest.raises(ValueError):
        expectation_sampled(PLUS, Term(1.0, "Z"), 0, rng)


def test_sampled_with_depolarizing_shrinks():
    rng = np.random.default_rng(2)
    zero = np.array([1, 0], dtype=complex)
    est = expectation_sampled(zero, Term(1.0, "Z"), 200_000, rng, p=0.4)
    assert abs(est - 0.6) < 0.01


@pytest.mark.parametrize(
    "value, word, p, expected",
    [(0.8, "Z", 0.5, 0.4), (0.8, "XZ", 0.25, 0.6), (0.8, "Z", 1.0, 0.0), (0.8, "II", 0.7, 0.8)],
)
def test_depolarizing_examples(value, word, p, expected):
    assert np.isclose(apply_depolarizing(value, Term(1.0, word), p), expected)


def test_depolarizing_rejects_bad_p():
    with pytest.raises(ValueError):
        apply_depolarizing(1.0, Term(1.0, "Z"), -0.1)


def test_depolarizing_factorizes_over_energy():
    rng = np.random.default_rng(5)
    h = random_hamiltonian(3, 10, rng, include_identity=True)
    state = prepare_state(AnsatzSpec(3, 1), rng.uniform(0, 6, 9))
    plan = group_qwc(h)
    for p in (0.0, 0.2, 0.9):
        noisy = expectation_grouped(state, h, plan, 0, p=p)
        exact = np.array([expectation_exact(state, t) for t in h.terms])
        ident = np.array([t.is_identity for t in h.terms])
        assert np.allclose(noisy, np.where(ident, exact, (1 - p) * exact), atol=1e-14)


def test_energy_is_linear_in_coefficients():
    rng = np.random.default_rng(6)
    h1 = random_hamiltonian(3, 6, rng)
    h2 = type(h1)(3, tuple(Term(2 * t.coeff - 0.5, t.word) for t in h1.terms))
    state = prepare_state(AnsatzSpec(3, 2), rng.uniform(0, 6, 18))
    base = energy(state, h1)
    unit = sum(expectation_exact(state, Term(1.0, t.word)) for t in h1.terms)
    assert np.isclose(energy(state, h2), 2 * base - 0.5 * unit)


def test_grouped_exact_matches_matrix_and_sampling_is_close():
    h = parse_hamiltonian("0.5 ZZ\n0.3 ZI\n-0.2 IZ\n0.4 XX\n1.0 II\n")
    plan = group_qwc(h)
    assert len(plan) == 2
    rng = np.random.default_rng(7)
    state = prepare_state(AnsatzSpec(2, 2), rng.uniform(0, 6, 12))
    exact = expectation_grouped(state, h, plan, 0)
    mat = to_dense_matrix(h)
    assert abs(exact.sum() - np.vdot(state, mat @ state).real) < 1e-12
    sampled = expectation_grouped(state, h, plan, 50_000, rng)
    assert np.abs(sampled - exact).max() < 0.02
    assert sampled[4] == 1.0


def test_grouped_rejects_foreign_plan_and_missing_rng():
    h = parse_hamiltonian("1 ZZ\n1 XX\n")
    other = group_qwc(parse_hamiltonian("1 ZZ\n"))
    state = np.array([1, 0, 0, 0], dtype=complex)
    with pytest.raises(ValueError):
        expectation_grouped(state, h, other, 0)
    with pytest.raises(ValueError):
        expectation_grouped(state, h, group_qwc(h), 10)

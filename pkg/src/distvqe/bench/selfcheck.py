"""Quick numerical self-tests behind ``vqe-bench check``."""

from __future__ import annotations

import functools
from typing import Callable

import numpy as np

from ..distopt import TrainConfig, run_training
from ..exactsolver import ground_state_energy
from ..gradients import (
    LossEvaluator,
    bound_constants,
    finite_difference_grad,
    lemma1_check,
    parameter_shift_grad,
)
from ..hamiltonian import group_qwc, qwc_commute, random_hamiltonian, to_dense_matrix
from ..simulator import AnsatzSpec, NoiseConfig, expectation_grouped, prepare_state
from .metrics import mean_squared_grad, theorem1_rhs

PAULI = {
    "I": np.eye(2),
    "X": np.array([[0, 1], [1, 0]], dtype=complex),
    "Y": np.array([[0, -1j], [1j, 0]]),
    "Z": np.diag([1.0, -1.0]),
}


def kron_matrix(h) -> np.ndarray:
    return sum(t.coeff * functools.reduce(np.kron, [PAULI[c] for c in t.word]) for t in h.terms)


def _shift_vs_fd(rng):
    worst = 0.0
    for _ in range(5):
        n = int(rng.integers(2, 4))
        a = AnsatzSpec(n, 2)
        h = random_hamiltonian(n, 5, rng)
        theta = rng.uniform(0, 2 * np.pi, a.param_count)
        diff = parameter_shift_grad(a, theta, h.terms) - finite_difference_grad(a, theta, h.terms, 1e-4)
        worst = max(worst, float(np.abs(diff).max()))
    return worst < 1e-6, f"max |shift - fd| = {worst:.2e}"


def _lemma1(rng):
    a = AnsatzSpec(2, 1)
    h = random_hamiltonian(2, 5, rng)
    theta = rng.uniform(0, 2 * np.pi, a.param_count)
    worst = max(float(np.abs(np.subtract(*lemma1_check(a, theta, h, m))).max()) for m in range(1, 6))
    return worst < 1e-12, f"max deviation = {worst:.2e}"


def _noise_scaling(rng):
    a = AnsatzSpec(3, 1)
    h = random_hamiltonian(3, 6, rng, include_identity=True)
    theta = rng.uniform(0, 2 * np.pi, a.param_count)
    g0 = parameter_shift_grad(a, theta, h.terms)
    worst = max(
        float(np.abs(parameter_shift_grad(a, theta, h.terms, NoiseConfig(p)) - (1 - p) * g0).max())
        for p in (0.1, 0.3, 1.0)
    )
    return worst <= 1e-14, f"max deviation = {worst:.2e}"


def _dense_and_ground(rng):
    h = random_hamiltonian(3, 6, rng)
    dev = float(np.abs(to_dense_matrix(h) - kron_matrix(h)).max())
    e = ground_state_energy(h).energy
    e_ref = float(np.linalg.eigvalsh(kron_matrix(h))[0])
    return dev < 1e-12 and abs(e - e_ref) < 1e-8, f"matrix dev {dev:.1e}, energy dev {abs(e - e_ref):.1e}"


def _grouping(rng):
    h = random_hamiltonian(4, 20, rng)
    plan = group_qwc(h)
    sound = all(
        qwc_commute(h.terms[i].word, h.terms[j].word) for g in plan.groups for i in g for j in g
    )
    a = AnsatzSpec(4, 2)
    state = prepare_state(a, rng.uniform(0, 2 * np.pi, a.param_count))
    ungrouped = LossEvaluator(h, a).exact_values(state[None, :], np.arange(len(h)))[0]
    dev = float(np.abs(expectation_grouped(state, h, plan, 0) - ungrouped).max())
    return sound and dev < 1e-12, f"{len(plan)} groups for {len(h)} terms, dev {dev:.1e}"


def _bound(rng):
    a = AnsatzSpec(2, 1)
    h = random_hamiltonian(2, 6, rng)
    cfg = TrainConfig(workers=3, local_steps=2, iterations=20, mode="shuffle", seed=int(rng.integers(1 << 30)))
    res = run_training(cfg, h, a)
    c = bound_constants(h, a.param_count)
    lhs = mean_squared_grad(res.grad_norms_before_rounds())
    rhs = theorem1_rhs(c, cfg.lr, 0.0, 3, 2, 20, res.initial_loss, res.losses[-1])
    within_g = max(r.grad_norm for r in res.records) <= c.G
    return lhs <= rhs and within_g, f"mean ||grad||^2 = {lhs:.3g} <= {rhs:.3g}"


CHECKS: dict[str, Callable] = {
    "parameter-shift vs finite differences": _shift_vs_fd,
    "subset-average gradient (m/M scaling)": _lemma1,
    "depolarizing gradient scaling": _noise_scaling,
    "dense matrix and ground energy": _dense_and_ground,
    "qubit-wise commuting grouping": _grouping,
    "convergence bound and gradient-norm bound": _bound,
}


def run_checks(seed: int = 0, echo: Callable[[str], None] = print) -> bool:
    rng = np.random.default_rng(seed)
    ok_all = True
    for name, fn in CHECKS.items():
        ok, detail = fn(rng)
        ok_all &= ok
        echo(f"{'PASS' if ok else 'FAIL'}  {name}: {detail}")
    return ok_all

"""Acceptance criteria 1-10.  Each test prints a single PASS/FAIL line."""

import itertools
import time

import numpy as np
import pytest
from scipy.optimize import linprog

from distvqe.bench.experiment import resolve_hamiltonian
from distvqe.bench.metrics import mean_squared_grad, theorem1_rhs
from distvqe.distopt import (
    AGGREGATORS,
    TrainConfig,
    WorkerState,
    deterministic_view,
    run_training,
    softmax_weights,
    synchronize,
)
from distvqe.exactsolver import ground_state_energy
from distvqe.gradients import (
    LossEvaluator,
    bound_constants,
    finite_difference_grad,
    lemma1_check,
    parameter_shift_grad,
)
from distvqe.hamiltonian import Hamiltonian, group_qwc, qwc_commute, random_hamiltonian
from distvqe.simulator import AnsatzSpec, NoiseConfig, expectation_grouped, expectation_exact, prepare_state


@pytest.fixture
def report(capsys):
    def emit(criterion, ok, detail):
        with capsys.disabled():
            print(f"\n[{'PASS' if ok else 'FAIL'}] criterion {criterion}: {detail}")
        assert ok, detail

    return emit


def test_c1_parameter_shift_matches_finite_differences(report):
    rng = np.random.default_rng(101)
    start = time.perf_counter()
    worst = 0.0
    for _ in range(20):
        n, layers = int(rng.choice([2, 3, 4])), int(rng.choice([1, 2]))
        a = AnsatzSpec(n, layers)
        h = random_hamiltonian(n, int(rng.integers(3, 9)), rng)
        theta = rng.uniform(0, 2 * np.pi, a.param_count)
        diff = parameter_shift_grad(a, theta, h.terms) - finite_difference_grad(a, theta, h.terms, 1e-4)
        worst = max(worst, float(np.abs(diff).max()))
    elapsed = time.perf_counter() - start
    report(1, worst < 1e-6 and elapsed < 10, f"max |shift - fd| = {worst:.2e} over 20 instances in {elapsed:.2f}s")


def test_c2_subset_average_gradient(report):
    rng = np.random.default_rng(202)
    start = time.perf_counter()
    worst = 0.0
    for big_m, n in [(4, 2), (6, 3)]:
        a = AnsatzSpec(n, 1)
        h = random_hamiltonian(n, big_m, rng)
        theta = rng.uniform(0, 2 * np.pi, a.param_count)
        for m in range(1, big_m + 1):
            avg, scaled = lemma1_check(a, theta, h, m)
            worst = max(worst, float(np.abs(avg - scaled).max()))
    elapsed = time.perf_counter() - start
    report(2, worst < 1e-12 and elapsed < 30, f"max deviation {worst:.2e} for M in (4, 6), all m, {elapsed:.2f}s")


def test_c3_noise_scales_gradients(report):
    rng = np.random.default_rng(303)
    worst = 0.0
    for _ in range(10):
        n = int(rng.integers(2, 4))
        a = AnsatzSpec(n, 2)
        h = random_hamiltonian(n, 6, rng, include_identity=True)
        theta = rng.uniform(0, 2 * np.pi, a.param_count)
        g0 = parameter_shift_grad(a, theta, h.terms)
        for p in (0.1, 0.3, 1.0):
            gp = parameter_shift_grad(a, theta, h.terms, NoiseConfig(p=p))
            worst = max(worst, float(np.abs(gp - (1 - p) * g0).max()))
    report(3, worst <= 1e-14, f"max |grad(p) - (1-p) grad(0)| = {worst:.2e}")


def test_c4_convergence_bound_not_violated(report):
    rng = np.random.default_rng(404)
    results = []
    for i in range(10):
        n, k = int(rng.integers(2, 4)), int(rng.integers(3, 5))
        w = int(rng.choice([1, 2, 4]))
        a = AnsatzSpec(n, 1)
        h = random_hamiltonian(n, int(rng.integers(k, 9)), rng)
        cfg = TrainConfig(workers=k, local_steps=w, iterations=50, lr=0.1, seed=i)
        res = run_training(cfg, h, a)
        c = bound_constants(h, a.param_count)
        lhs = mean_squared_grad(res.grad_norms_before_rounds())
        rhs = theorem1_rhs(c, cfg.lr, 0.0, k, w, 50, res.initial_loss, res.losses[-1])
        max_norm = max([res.initial_grad_norm, *(r.grad_norm for r in res.records)])
        results.append((rhs is not None and lhs <= rhs, max_norm <= c.G, lhs, rhs))
    ok = all(a and b for a, b, _, _ in results)
    tightest = max(lhs / rhs for _, _, lhs, rhs in results)
    report(4, ok, f"10/10 runs within the bound and ||grad|| <= G: {ok} (largest lhs/rhs {tightest:.2e})")


def _c5_errors(h, seeds, budget=256, k=4):
    a = AnsatzSpec(h.n_qubits, 2)
    ev = LossEvaluator(h, a)
    e0 = ground_state_energy(h).energy
    errs = {}
    for mode, w in [("shuffle", 1), ("shuffle", 32), ("qudio", 32)]:
        out = []
        for seed in seeds:
            cfg = TrainConfig(workers=k, local_steps=w, iterations=budget // w, lr=0.4, mode=mode, seed=seed)
            res = run_training(cfg, h, a, evaluator=ev)
            out.append(abs(float(res.losses.min()) - e0))
        errs[(mode, w)] = np.array(out)
    return errs


@pytest.mark.slow
def test_c5_shuffle_is_insensitive_to_local_steps(report):
    start = time.perf_counter()
    seeds = range(5)
    lines, ok = [], True
    for name in ("random:6:32:7", "h2"):
        errs = _c5_errors(resolve_hamiltonian(name), seeds)
        increment = errs[("shuffle", 32)].mean() - errs[("shuffle", 1)].mean()
        wins = int(np.sum(errs[("qudio", 32)] > errs[("shuffle", 32)]))
        good = (
            increment < 0.15
            and errs[("qudio", 32)].mean() > errs[("shuffle", 32)].mean()
            and wins >= 4
        )
        ok &= good
        lines.append(
            f"{name}: shuffle W32-W1 = {increment:+.3f}, "
            f"qudio {errs[('qudio', 32)].mean():.3f} vs shuffle {errs[('shuffle', 32)].mean():.3f} "
            f"({wins}/5 seeds)"
        )
    elapsed = time.perf_counter() - start
    report(5, ok and elapsed < 600, "; ".join(lines) + f"; {elapsed:.0f}s")


def test_c6_single_worker_converges_on_h2(report):
    h = resolve_hamiltonian("h2")
    res = run_training(TrainConfig(workers=1, local_steps=1, iterations=300, lr=0.4), h, AnsatzSpec(4, 2))
    err = abs(float(res.losses.min()) - ground_state_energy(h).energy)
    report(6, err <= 1e-2, f"Err = {err:.2e} Ha after 300 iterations")


def _biased_hamiltonian(rng, n, m):
    words = set()
    while len(words) < m:
        w = "".join(rng.choice(list("IZXY"), n, p=[0.5, 0.4, 0.05, 0.05]))
        if w != "I" * n:
            words.add(w)
    return Hamiltonian.from_terms((float(c), w) for c, w in zip(rng.uniform(-1, 1, m), sorted(words)))


def _qwc_fraction(h):
    return np.mean([qwc_commute(a, b) for a, b in itertools.combinations(h.words, 2)])


def test_c7_grouping_equivalence_and_reduction(report):
    rng = np.random.default_rng(707)
    worst, sound, bounded = 0.0, True, True
    for _ in range(20):
        n = int(rng.integers(2, 6))
        h = random_hamiltonian(n, int(rng.integers(4, min(30, 4**n - 1))), rng, include_identity=True)
        plan = group_qwc(h)
        state = prepare_state(AnsatzSpec(n, 2), rng.uniform(0, 2 * np.pi, 6 * n))
        ungrouped = np.array([expectation_exact(state, t) for t in h.terms])
        worst = max(worst, float(np.abs(expectation_grouped(state, h, plan, 0) - ungrouped).max()))
        sound &= all(
            qwc_commute(h.terms[i].word, h.terms[j].word)
            for g in plan.groups
            for i, j in itertools.combinations(g, 2)
        )
        bounded &= len(plan) <= len(h)
    dense = [_biased_hamiltonian(rng, int(rng.integers(3, 6)), 12) for _ in range(10)]
    dense += [resolve_hamiltonian("h2")]
    qualifying = [h for h in dense if _qwc_fraction(h) >= 0.5]
    drops = [1 - len(group_qwc(h)) / len(h) for h in qualifying]
    ok = worst < 1e-12 and sound and bounded and len(qualifying) > 0 and min(drops) >= 0.25
    report(
        7,
        ok,
        f"grouped vs per-term dev {worst:.1e}, all groups QWC: {sound}; "
        f"{len(qualifying)} dense-QWC Hamiltonians, smallest setting reduction {min(drops):.0%}",
    )


def _in_convex_hull(points, x):
    k = points.shape[0]
    res = linprog(
        np.zeros(k),
        A_eq=np.vstack([points.T, np.ones((1, k))]),
        b_eq=np.append(x, 1.0),
        bounds=[(0, None)] * k,
        method="highs",
    )
    return res.status == 0


def test_c8_synchronization_invariants(report):
    rng = np.random.default_rng(808)
    equal = hull = weights_ok = degenerate = True
    for trial in range(100):
        k, p = int(rng.integers(1, 9)), int(rng.integers(1, 25))
        thetas = rng.normal(scale=3.0, size=(k, p))
        losses = rng.normal(size=k)

        def ensemble(ls=losses):
            return [
                WorkerState(r, thetas[r].copy(), np.random.default_rng(r), last_loss=float(ls[r]))
                for r in range(k)
            ]

        for agg in AGGREGATORS:
            workers = ensemble()
            theta, _ = synchronize(workers, agg, np.random.default_rng(trial))
            equal &= all(np.array_equal(w.theta, theta) for w in workers)
            equal &= all(w.theta.tobytes() == workers[0].theta.tobytes() for w in workers)
            if agg == "average":
                hull &= bool(np.all(theta >= thetas.min(0) - 1e-12) and np.all(theta <= thetas.max(0) + 1e-12))
                hull &= _in_convex_hull(thetas, theta)
        w = softmax_weights(losses)
        weights_ok &= abs(w.sum() - 1) < 1e-12 and bool(np.all(w >= 0))
        same = np.full(k, losses[0])
        t_avg, _ = synchronize(ensemble(same), "average", np.random.default_rng(0))
        t_wtd, _ = synchronize(ensemble(same), "weighted", np.random.default_rng(0))
        degenerate &= bool(np.abs(t_avg - t_wtd).max() < 1e-12)
    ok = equal and hull and weights_ok and degenerate
    report(
        8,
        ok,
        f"100 ensembles: bit-exact broadcast {equal}, average in hull {hull}, "
        f"weights sum to 1 {weights_ok}, weighted == average at equal losses {degenerate}",
    )


def test_c9_determinism_across_thread_counts(report):
    h = resolve_hamiltonian("h2")
    a = AnsatzSpec(4, 2)
    k = 4
    views = []
    for threads in (1, 2, k):
        for agg in ("average", "random"):
            cfg = TrainConfig(
                workers=k,
                local_steps=2,
                iterations=4,
                aggregator=agg,
                noise=NoiseConfig(p=0.1, shots=50),
                grouping=True,
                seed=9,
                threads=threads,
            )
            views.append((threads, agg, deterministic_view(run_training(cfg, h, a).records)))
    ok = all(
        v == other
        for (_, agg, v), (_, agg2, other) in itertools.product(views, views)
        if agg == agg2
    )
    report(9, ok, f"identical record streams under threads 1, 2, {k} (shots=50, p=0.1)")


@pytest.mark.slow
def test_c10_noisy_regime_ordering(report):
    h = resolve_hamiltonian("h2")
    a = AnsatzSpec(4, 2)
    ev = LossEvaluator(h, a)
    e0 = ground_state_energy(h).energy
    start = time.perf_counter()
    parts, ok = [], True
    for p in (0.0, 0.1, 0.2):
        means = {}
        for mode in ("shuffle", "qudio"):
            errs = []
            for seed in range(5):
                cfg = TrainConfig(
                    workers=4, local_steps=32, iterations=8, mode=mode, noise=NoiseConfig(p=p, shots=100), seed=seed
                )
                res = run_training(cfg, h, a, evaluator=ev)
                errs.append(abs(float(res.losses.min()) - e0))
            means[mode] = float(np.mean(errs))
        ok &= means["shuffle"] <= means["qudio"]
        parts.append(f"p={p:g}: {means['shuffle']:.3f} <= {means['qudio']:.3f}")
    elapsed = time.perf_counter() - start
    report(10, ok and elapsed < 900, "shuffle vs qudio mean Err, " + ", ".join(parts) + f"; {elapsed:.0f}s")

"""Parameter-shift gradients of Pauli-sum losses, plus reference checks.

Shifted circuits are evaluated as one batch of ``2P`` states ordered
parameter-major, sign-minor: ``theta + s e_0``, ``theta - s e_0``,
``theta + s e_1``, ...  When sampling, random draws are taken from the
caller's generator in that row order, setting by setting, so a fixed
generator state gives a fixed gradient.
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .hamiltonian import GroupingPlan, Hamiltonian, PauliTable, Term, group_qwc
from .simulator import (
    AnsatzSpec,
    NoiseConfig,
    parity_signs,
    pauli_expectations,
    prepare_states,
    sample_counts,
)

SHIFT = np.pi / 2
MAX_SUBSETS = 200_000


def shifted_thetas(theta: np.ndarray, shift: float = SHIFT) -> np.ndarray:
    theta = np.asarray(theta, dtype=float)
    p = theta.size
    offsets = np.zeros((2 * p, p))
    offsets[0::2][np.arange(p), np.arange(p)] = shift
    offsets[1::2][np.arange(p), np.arange(p)] = -shift
    return theta[None, :] + offsets


class LossEvaluator:
    """Evaluates ``sum_j coeff_j <P_j>`` over arbitrary subsets of a Hamiltonian.

    Holds the Pauli lookup tables for every term so that partitions of the
    same Hamiltonian can be evaluated without rebuilding them.
    """

    def __init__(self, h: Hamiltonian, ansatz: AnsatzSpec):
        if h.n_qubits != ansatz.n_qubits:
            raise ValueError(
                f"Hamiltonian has {h.n_qubits} qubits but the ansatz has {ansatz.n_qubits}"
            )
        self.h = h
        self.ansatz = ansatz
        self.table = PauliTable(h.words)
        self.coeffs = h.coeffs
        self.is_identity = np.array([t.is_identity for t in h.terms])
        self.signs = [None if t.is_identity else parity_signs(t.word) for t in h.terms]
        self._plans: dict[tuple[int, ...], GroupingPlan] = {}

    def _rows(self, idx) -> np.ndarray:
        if idx is None:
            return np.arange(len(self.h))
        rows = np.asarray(idx, dtype=int)
        if rows.size == 0:
            raise ValueError("empty term selection")
        return rows

    def exact_values(self, states: np.ndarray, rows: np.ndarray, p: float = 0.0) -> np.ndarray:
        """Per-term noisy expectations with coefficients, shape ``(B, len(rows))``."""
        vals = pauli_expectations(states, self.table, rows) * self.coeffs[rows]
        if p:
            vals = np.where(self.is_identity[rows], vals, (1.0 - p) * vals)
        return vals

    def loss(self, theta, idx=None, p: float = 0.0) -> float:
        rows = self._rows(idx)
        states = prepare_states(self.ansatz, np.asarray(theta)[None, :])
        return float(self.exact_values(states, rows, p).sum())

    def losses(self, thetas: np.ndarray, idx=None) -> np.ndarray:
        rows = self._rows(idx)
        states = prepare_states(self.ansatz, thetas)
        return self.exact_values(states, rows).sum(axis=1)

    def plan_for(self, rows: Sequence[int]) -> GroupingPlan:
        """QWC plan over the given rows; group members are indices into ``self.h``."""
        key = tuple(sorted(int(r) for r in rows))
        plan = self._plans.get(key)
        if plan is None:
            local = group_qwc(self.h.subset(key))
            plan = GroupingPlan(
                tuple(tuple(key[i] for i in g) for g in local.groups), local.bases
            )
            self._plans[key] = plan
        return plan

    def sampled_total(
        self,
        states: np.ndarray,
        rows: np.ndarray,
        shots: int,
        rng: np.random.Generator,
        p: float = 0.0,
        grouping: bool = False,
    ) -> tuple[np.ndarray, int]:
        """Shot-estimated loss for each batch state, and the settings measured.

        Identity terms are added exactly and never sampled.
        """
        total = np.full(states.shape[0], self.coeffs[rows][self.is_identity[rows]].sum())
        live = [int(r) for r in rows if not self.is_identity[r]]
        if not live:
            return total, 0
        if grouping:
            plan = self.plan_for(live)
            settings = list(zip(plan.groups, plan.bases))
        else:
            settings = [((r,), self.h.terms[r].word) for r in live]
        for members, basis in settings:
            counts = sample_counts(states, basis, shots, rng, p)
            for r in members:
                total += self.coeffs[r] * (counts @ self.signs[r]) / shots
        return total, len(settings)

    def gradient(
        self,
        theta,
        idx=None,
        noise: NoiseConfig = NoiseConfig(),
        rng: np.random.Generator | None = None,
        grouping: bool = False,
    ) -> tuple[np.ndarray, int]:
        """Parameter-shift gradient over the selected terms and the number of shots spent."""
        theta = np.asarray(theta, dtype=float)
        if theta.size != self.ansatz.param_count:
            raise ValueError(
                f"expected {self.ansatz.param_count} parameters, got {theta.size}"
            )
        rows = self._rows(idx)
        states = prepare_states(self.ansatz, shifted_thetas(theta))
        if noise.shots == 0:
            vals = self.exact_values(states, rows, noise.p).sum(axis=1)
            used = 0
        else:
            if rng is None:
                raise ValueError("sampled gradients require an rng")
            vals, n_settings = self.sampled_total(
                states, rows, noise.shots, rng, noise.p, grouping
            )
            used = states.shape[0] * n_settings * noise.shots
        return 0.5 * (vals[0::2] - vals[1::2]), used


def _evaluator(ansatz: AnsatzSpec, terms: Sequence[Term]) -> LossEvaluator:
    if not terms:
        raise ValueError("terms must be non-empty")
    return LossEvaluator(Hamiltonian.from_terms((t.coeff, t.word) for t in terms), ansatz)


def parameter_shift_grad(
    ansatz: AnsatzSpec,
    theta,
    terms: Sequence[Term],
    noise: NoiseConfig = NoiseConfig(),
    rng: np.random.Generator | None = None,
    grouping: bool = False,
) -> np.ndarray:
    grad, _ = _evaluator(ansatz, terms).gradient(theta, None, noise, rng, grouping)
    return grad


def finite_difference_grad(ansatz: AnsatzSpec, theta, terms: Sequence[Term], eps: float = 1e-4) -> np.ndarray:
    """Central differences of the exact loss; a check on the shift rule."""
    if not 0 < eps <= 1e-2:
        raise ValueError("eps must lie in (0, 1e-2]")
    ev = _evaluator(ansatz, terms)
    vals = ev.losses(shifted_thetas(theta, eps))
    return (vals[0::2] - vals[1::2]) / (2 * eps)


@dataclass(frozen=True)
class BoundConstants:
    G: float
    F1: float
    F2: float


def bound_constants(h: Hamiltonian, n_params: int) -> BoundConstants:
    """Gradient-norm bound and Lipschitz constants of a Pauli-sum loss.

    ``G = P * sum|coeff|`` bounds the gradient norm; the loss is
    ``G``-Lipschitz and its gradient is ``P * G``-Lipschitz.
    """
    g = n_params * h.l1_norm
    return BoundConstants(G=g, F1=g, F2=n_params * g)


def lemma1_check(ansatz: AnsatzSpec, theta, h: Hamiltonian, m: int) -> tuple[np.ndarray, np.ndarray]:
    """Average gradient over all size-``m`` term subsets versus ``m/M`` times the full gradient.

    Each subset's gradient is recomputed from scratch, so the average is an
    independent check of sampling-without-replacement unbiasedness.
    """
    big_m = len(h)
    if not 1 <= m <= big_m:
        raise ValueError(f"m must be in [1, {big_m}]")
    n_subsets = math.comb(big_m, m)
    if n_subsets > MAX_SUBSETS:
        raise ValueError(f"{n_subsets} subsets exceeds the enumeration limit {MAX_SUBSETS}")
    ev = LossEvaluator(h, ansatz)
    acc = np.zeros(ansatz.param_count)
    for subset in itertools.combinations(range(big_m), m):
        grad, _ = ev.gradient(theta, subset)
        acc += grad
    full, _ = ev.gradient(theta)
    return acc / n_subsets, (m / big_m) * full


def slice_discrepancies(ev: LossEvaluator, theta, assignments) -> np.ndarray:
    """``||grad L - g_k||^2`` for each worker's slice gradient ``g_k``."""
    full, _ = ev.gradient(theta)
    return np.array(
        [float(np.sum((full - ev.gradient(theta, rows)[0]) ** 2)) for rows in assignments]
    )

"""Statevector simulation of the layered hardware-efficient ansatz.

Each layer applies ``Rz(a) -> Ry(b) -> Rz(c)`` to every qubit followed by a
CNOT ladder.  Parameters are laid out layer-major, qubit-minor, with the
three rotation angles innermost::

    theta[l * 3 * n + q * 3 + r]    r = 0: first Rz, 1: Ry, 2: second Rz

Rotations are ``exp(-i theta P / 2)``, so the parameter-shift rule with a
shift of pi/2 is exact.  The initial state is ``|0...0>``.

Most functions accept a batch of states shaped ``(B, 2**n)`` so that all
shifted circuits of a gradient evaluation are simulated together.
"""

from __future__ import annotations

from dataclasses import dataclass
from functools import cached_property
from typing import Sequence

import numpy as np

from .hamiltonian import GroupingPlan, Hamiltonian, PauliTable, Term, pauli_masks, popcount_parity

ENTANGLERS = ("linear", "ring")


@dataclass(frozen=True)
class AnsatzSpec:
    n_qubits: int
    layers: int = 2
    entangler: str = "linear"

    def __post_init__(self):
        if self.n_qubits < 1 or self.layers < 1:
            raise ValueError("n_qubits and layers must be positive")
        if self.entangler not in ENTANGLERS:
            raise ValueError(f"entangler must be one of {ENTANGLERS}")

    @property
    def param_count(self) -> int:
        return 3 * self.n_qubits * self.layers

    @property
    def dim(self) -> int:
        return 1 << self.n_qubits

    def cnot_pairs(self) -> list[tuple[int, int]]:
        n = self.n_qubits
        pairs = [(q, q + 1) for q in range(n - 1)]
        if self.entangler == "ring" and n > 2:
            pairs.append((n - 1, 0))
        return pairs

    @cached_property
    def entangler_perm(self) -> np.ndarray:
        """Gather indices for one full CNOT ladder: ``psi_out = psi_in[perm]``."""
        n = self.n_qubits
        perm = np.arange(self.dim)
        # compose in application order; each CNOT is an involution on indices
        for c, t in self.cnot_pairs():
            cbit, tbit = 1 << (n - 1 - c), 1 << (n - 1 - t)
            idx = np.arange(self.dim)
            src = np.where(idx & cbit, idx ^ tbit, idx)
            perm = perm[src]
        return perm


@dataclass(frozen=True)
class NoiseConfig:
    """Global depolarizing strength ``p`` and shots per setting (0 = exact)."""

    p: float = 0.0
    shots: int = 0

    def __post_init__(self):
        if not 0.0 <= self.p <= 1.0:
            raise ValueError(f"depolarizing strength must be in [0, 1], got {self.p}")
        if self.shots < 0:
            raise ValueError("shots must be non-negative")


# -- gates -------------------------------------------------------------------


def rz(theta: np.ndarray) -> np.ndarray:
    theta = np.asarray(theta, dtype=float)
    out = np.zeros(theta.shape + (2, 2), dtype=complex)
    out[..., 0, 0] = np.exp(-0.5j * theta)
    out[..., 1, 1] = np.exp(0.5j * theta)
    return out


def ry(theta: np.ndarray) -> np.ndarray:
    theta = np.asarray(theta, dtype=float)
    c, s = np.cos(theta / 2), np.sin(theta / 2)
    out = np.empty(theta.shape + (2, 2), dtype=complex)
    out[..., 0, 0] = c
    out[..., 0, 1] = -s
    out[..., 1, 0] = s
    out[..., 1, 1] = c
    return out


HADAMARD = np.array([[1, 1], [1, -1]], dtype=complex) / np.sqrt(2)
S_DAG = np.diag([1, -1j])
BASIS_CHANGE = {"X": HADAMARD, "Y": HADAMARD @ S_DAG}


def apply_1q(states: np.ndarray, gate: np.ndarray, qubit: int, n_qubits: int) -> np.ndarray:
    """Apply a 2x2 gate (shared, or one per batch row) to ``qubit``."""
    b = states.shape[0]
    view = states.reshape(b, 1 << qubit, 2, 1 << (n_qubits - qubit - 1))
    if gate.ndim == 2:
        out = np.einsum("ij,bajc->baic", gate, view)
    else:
        out = np.einsum("bij,bajc->baic", gate, view)
    return out.reshape(b, -1)


def prepare_states(ansatz: AnsatzSpec, thetas: np.ndarray) -> np.ndarray:
    thetas = np.atleast_2d(np.asarray(thetas, dtype=float))
    if thetas.shape[1] != ansatz.param_count:
        raise ValueError(
            f"expected {ansatz.param_count} parameters, got {thetas.shape[1]}"
        )
    n = ansatz.n_qubits
    b = thetas.shape[0]
    states = np.zeros((b, ansatz.dim), dtype=complex)
    states[:, 0] = 1.0
    angles = thetas.reshape(b, ansatz.layers, n, 3)
    perm = ansatz.entangler_perm
    for layer in range(ansatz.layers):
        a = angles[:, layer]
        # U = Rz(c) Ry(b) Rz(a), one 2x2 per (batch, qubit)
        gates = rz(a[..., 2]) @ ry(a[..., 1]) @ rz(a[..., 0])
        for q in range(n):
            states = apply_1q(states, gates[:, q], q, n)
        if n > 1:
            states = states[:, perm]
    return states


def prepare_state(ansatz: AnsatzSpec, theta: Sequence[float]) -> np.ndarray:
    theta = np.asarray(theta, dtype=float)
    if theta.ndim != 1:
        raise ValueError("theta must be a flat parameter vector")
    return prepare_states(ansatz, theta[None, :])[0]


# -- exact expectations ------------------------------------------------------


def apply_pauli(state: np.ndarray, word: str) -> np.ndarray:
    table = PauliTable([word])
    return table.phases[0] * state[table.flips[0]]


def pauli_expectations(states: np.ndarray, table: PauliTable, rows=None) -> np.ndarray:
    """``<psi_b|P_j|psi_b>`` for every batch state ``b`` and table row ``j``.

    Returns shape ``(B, J)``; coefficients are not applied.
    """
    states = np.atleast_2d(states)
    flips = table.flips if rows is None else table.flips[rows]
    phases = table.phases if rows is None else table.phases[rows]
    moved = states[:, flips]  # (B, J, D)
    vals = np.einsum("bd,jd,bjd->bj", states.conj(), phases, moved)
    return vals.real


def expectation_exact(state: np.ndarray, term: Term) -> float:
    if state.shape[-1] != 1 << term.n_qubits:
        raise ValueError("state dimension does not match the term's qubit count")
    return term.coeff * float(np.vdot(state, apply_pauli(state, term.word)).real)


def energy(state: np.ndarray, h: Hamiltonian) -> float:
    return float(pauli_expectations(state, PauliTable(h.words))[0] @ h.coeffs)


def apply_depolarizing(expectation: float, term: Term, p: float) -> float:
    """Global depolarizing channel at the expectation level.

    A non-identity Pauli is traceless, so its expectation shrinks by
    ``(1 - p)``; the identity term is left unchanged.
    """
    if not 0.0 <= p <= 1.0:
        raise ValueError(f"depolarizing strength must be in [0, 1], got {p}")
    if term.is_identity:
        return expectation
    return (1.0 - p) * expectation


# -- sampling ----------------------------------------------------------------


def rotate_to_basis(states: np.ndarray, basis: str) -> np.ndarray:
    n = len(basis)
    for q, c in enumerate(basis):
        if c in BASIS_CHANGE:
            states = apply_1q(states, BASIS_CHANGE[c], q, n)
    return states


def sample_counts(
    states: np.ndarray, basis: str, shots: int, rng: np.random.Generator, p: float = 0.0
) -> np.ndarray:
    """Outcome counts, shape ``(B, 2**n)``, after rotating into ``basis``.

    With ``p > 0`` outcomes are drawn from the depolarized distribution
    ``(1 - p) |amp|^2 + p / 2**n``.  Rows are drawn in batch order.
    """
    states = np.atleast_2d(states)
    probs = np.abs(rotate_to_basis(states, basis)) ** 2
    if p:
        probs = (1.0 - p) * probs + p / probs.shape[1]
    probs /= probs.sum(axis=1, keepdims=True)
    return rng.multinomial(shots, probs)


def parity_signs(word: str) -> np.ndarray:
    """+1/-1 eigenvalue of each computational outcome for ``word`` measured in its own basis."""
    n = len(word)
    x_mask, z_mask = pauli_masks(word)
    parity = popcount_parity(np.arange(1 << n) & (x_mask | z_mask))
    return 1.0 - 2.0 * parity


def expectation_sampled(
    state: np.ndarray, term: Term, shots: int, rng: np.random.Generator, p: float = 0.0
) -> float:
    if shots < 1:
        raise ValueError("shots must be at least 1")
    if term.is_identity:
        return term.coeff
    counts = sample_counts(state[None, :], term.word, shots, rng, p)[0]
    return term.coeff * float(counts @ parity_signs(term.word)) / shots


def expectation_grouped(
    state: np.ndarray,
    h: Hamiltonian,
    plan: GroupingPlan,
    shots: int,
    rng: np.random.Generator | None = None,
    p: float = 0.0,
) -> np.ndarray:
    """Per-term expectations (with coefficients) using one basis per group.

    ``shots=0`` returns exact values.  With shots, every member of a group is
    read off the same set of samples.
    """
    if plan.n_terms != len(h) or sorted(i for g in plan.groups for i in g) != list(range(len(h))):
        raise ValueError("grouping plan does not cover this Hamiltonian")
    out = np.zeros(len(h))
    if shots == 0:
        table = PauliTable(h.words)
        vals = pauli_expectations(state, table)[0]
        for i, term in enumerate(h.terms):
            out[i] = apply_depolarizing(term.coeff * vals[i], term, p)
        return out
    if rng is None:
        raise ValueError("sampling requires an rng")
    for members, basis in zip(plan.groups, plan.bases):
        if all(h.terms[i].is_identity for i in members):
            for i in members:
                out[i] = h.terms[i].coeff
            continue
        counts = sample_counts(state[None, :], basis, shots, rng, p)[0]
        for i in members:
            term = h.terms[i]
            if term.is_identity:
                out[i] = term.coeff
            else:
                out[i] = term.coeff * float(counts @ parity_signs(term.word)) / shots
    return out

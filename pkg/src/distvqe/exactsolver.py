"""Ground-state energy by exact diagonalization."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.sparse.linalg import ArpackNoConvergence, LinearOperator, eigsh

from .hamiltonian import MAX_DENSE_QUBITS, Hamiltonian, pauli_action, to_dense_matrix

DENSE_LIMIT = 10


@dataclass(frozen=True)
class GroundTruth:
    energy: float
    n_qubits: int
    state: np.ndarray | None = None


def hamiltonian_operator(h: Hamiltonian) -> LinearOperator:
    """Matrix-free ``H @ v``; terms sharing an X/Y pattern share one gather."""
    dim = 1 << h.n_qubits
    by_flip: dict[bytes, tuple[np.ndarray, np.ndarray]] = {}
    for term in h.terms:
        flip, phase = pauli_action(term.word)
        key = flip[:1].tobytes()  # flip[0] == x_mask identifies the pattern
        if key in by_flip:
            by_flip[key][1][:] += term.coeff * phase
        else:
            by_flip[key] = (flip, term.coeff * phase)
    parts = list(by_flip.values())

    def matvec(v):
        v = np.asarray(v).reshape(-1)
        out = np.zeros(dim, dtype=complex)
        for flip, diag in parts:
            out += diag * v[flip]
        return out

    return LinearOperator((dim, dim), matvec=matvec, dtype=complex)


def ground_state_energy(h: Hamiltonian, return_state: bool = False) -> GroundTruth:
    """Smallest eigenvalue of ``h``: dense ``eigh`` up to 10 qubits, Lanczos above."""
    n = h.n_qubits
    if n > MAX_DENSE_QUBITS:
        raise ValueError(f"{n} qubits exceeds the limit of {MAX_DENSE_QUBITS}")
    if n <= DENSE_LIMIT:
        vals, vecs = np.linalg.eigh(to_dense_matrix(h))
        return GroundTruth(float(vals[0]), n, vecs[:, 0] if return_state else None)
    op = hamiltonian_operator(h)
    try:
        vals, vecs = eigsh(op, k=1, which="SA", tol=1e-12, maxiter=20 * op.shape[0])
    except ArpackNoConvergence as exc:
        raise RuntimeError(f"Lanczos did not converge for {n} qubits") from exc
    return GroundTruth(float(vals[0]), n, vecs[:, 0] if return_state else None)

"""Weighted Pauli-operator Hamiltonians.

A Hamiltonian is stored as an ordered list of ``Term`` objects, each a real
coefficient times a Pauli word such as ``"XIZY"``.  Character ``j`` of a word
acts on qubit ``j``; qubit 0 is the most significant bit of a basis-state
index, so the dense matrix of ``"XZ"`` is ``kron(X, Z)``.

Term indices used by partitions and grouping plans are 0-based positions
into ``Hamiltonian.terms``.
"""

from __future__ import annotations

import math
import re
from dataclasses import dataclass, field
from typing import Iterable, Sequence, TextIO

import numpy as np

PAULI_CHARS = frozenset("IXYZ")
MAX_DENSE_QUBITS = 14

_WORD_RE = re.compile(r"^[A-Za-z]+$")


class HamiltonianParseError(ValueError):
    """Raised for malformed Hamiltonian text; carries the offending line number."""

    def __init__(self, lineno: int, message: str):
        super().__init__(f"line {lineno}: {message}")
        self.lineno = lineno


@dataclass(frozen=True)
class Term:
    coeff: float
    word: str

    def __post_init__(self):
        if not math.isfinite(self.coeff):
            raise ValueError(f"non-finite coefficient {self.coeff!r} for {self.word}")
        if not self.word or set(self.word) - PAULI_CHARS:
            raise ValueError(f"invalid Pauli word {self.word!r}")

    @property
    def n_qubits(self) -> int:
        return len(self.word)

    @property
    def is_identity(self) -> bool:
        return set(self.word) == {"I"}

    @property
    def support(self) -> tuple[int, ...]:
        return tuple(q for q, c in enumerate(self.word) if c != "I")


@dataclass(frozen=True)
class Hamiltonian:
    n_qubits: int
    terms: tuple[Term, ...]

    def __post_init__(self):
        if self.n_qubits < 1:
            raise ValueError("n_qubits must be positive")
        if not self.terms:
            raise ValueError("a Hamiltonian needs at least one term")
        seen = set()
        for term in self.terms:
            if term.n_qubits != self.n_qubits:
                raise ValueError(
                    f"term {term.word} has length {term.n_qubits}, expected {self.n_qubits}"
                )
            if term.word in seen:
                raise ValueError(f"duplicate Pauli word {term.word}")
            seen.add(term.word)

    @classmethod
    def from_terms(cls, pairs: Iterable[tuple[float, str]]) -> "Hamiltonian":
        """Build from ``(coeff, word)`` pairs, merging repeated words."""
        merged: dict[str, float] = {}
        for coeff, word in pairs:
            merged[word] = merged.get(word, 0.0) + float(coeff)
        terms = tuple(Term(c, w) for w, c in merged.items())
        if not terms:
            raise ValueError("a Hamiltonian needs at least one term")
        return cls(len(terms[0].word), terms)

    def __len__(self) -> int:
        return len(self.terms)

    @property
    def coeffs(self) -> np.ndarray:
        return np.array([t.coeff for t in self.terms], dtype=float)

    @property
    def words(self) -> list[str]:
        return [t.word for t in self.terms]

    @property
    def l1_norm(self) -> float:
        return float(np.abs(self.coeffs).sum())

    @property
    def identity_offset(self) -> float:
        """Coefficient of the all-``I`` term, 0.0 if absent."""
        return sum(t.coeff for t in self.terms if t.is_identity)

    def subset(self, indices: Iterable[int]) -> "Hamiltonian":
        return Hamiltonian(self.n_qubits, tuple(self.terms[i] for i in indices))


def parse_hamiltonian(text: str | TextIO) -> Hamiltonian:
    """Parse ``<coeff> <pauli_word>`` lines into a Hamiltonian.

    Blank lines and anything after ``#`` are ignored.  Repeated words are
    merged by summing coefficients, keeping the position of the first
    occurrence.
    """
    if not isinstance(text, str):
        text = text.read()
    merged: dict[str, float] = {}
    n_qubits = None
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        parts = line.split()
        if len(parts) != 2:
            raise HamiltonianParseError(lineno, f"expected '<coeff> <word>', got {raw.strip()!r}")
        coeff_text, word = parts
        try:
            coeff = float(coeff_text)
        except ValueError:
            raise HamiltonianParseError(lineno, f"malformed coefficient {coeff_text!r}") from None
        if not math.isfinite(coeff):
            raise HamiltonianParseError(lineno, f"non-finite coefficient {coeff_text!r}")
        if not _WORD_RE.match(word) or set(word) - PAULI_CHARS:
            bad = sorted(set(word) - PAULI_CHARS)
            raise HamiltonianParseError(lineno, f"invalid Pauli character(s) {bad} in {word!r}")
        if n_qubits is None:
            n_qubits = len(word)
        elif len(word) != n_qubits:
            raise HamiltonianParseError(
                lineno, f"word {word!r} has length {len(word)}, expected {n_qubits}"
            )
        merged[word] = merged.get(word, 0.0) + coeff
    if n_qubits is None:
        raise HamiltonianParseError(0, "empty input: no terms found")
    return Hamiltonian(n_qubits, tuple(Term(c, w) for w, c in merged.items()))


def load_hamiltonian(path) -> Hamiltonian:
    with open(path, encoding="utf-8") as fh:
        return parse_hamiltonian(fh)


def format_hamiltonian(h: Hamiltonian) -> str:
    # repr() of a float round-trips exactly through float()
    return "".join(f"{t.coeff!r} {t.word}\n" for t in h.terms)


# -- Pauli action tables -----------------------------------------------------


def pauli_masks(word: str) -> tuple[int, int]:
    """Return ``(x_mask, z_mask)`` bitmasks; qubit 0 is the highest bit."""
    n = len(word)
    x_mask = z_mask = 0
    for q, c in enumerate(word):
        bit = 1 << (n - 1 - q)
        if c in "XY":
            x_mask |= bit
        if c in "YZ":
            z_mask |= bit
    return x_mask, z_mask


def popcount_parity(values: np.ndarray) -> np.ndarray:
    """Parity (0/1) of the number of set bits of each non-negative integer."""
    values = np.asarray(values, dtype=np.int64).copy()
    parity = np.zeros_like(values)
    while values.any():
        parity ^= values & 1
        values >>= 1
    return parity


def pauli_action(word: str) -> tuple[np.ndarray, np.ndarray]:
    """Flip indices and phases such that ``(P psi)[j] = phase[j] * psi[flip[j]]``."""
    n = len(word)
    x_mask, z_mask = pauli_masks(word)
    n_y = word.count("Y")
    idx = np.arange(1 << n, dtype=np.int64)
    flip = idx ^ x_mask
    # P|i> = i^{nY} (-1)^{popcount(i & z)} |i ^ x>, evaluated at i = flip[j]
    sign = 1 - 2 * popcount_parity(flip & z_mask)
    phase = (1j**n_y) * sign
    return flip, phase.astype(complex)


@dataclass
class PauliTable:
    """Stacked flip/phase arrays for a list of words, used by the simulator."""

    words: list[str]
    flips: np.ndarray = field(init=False)
    phases: np.ndarray = field(init=False)

    def __post_init__(self):
        pairs = [pauli_action(w) for w in self.words]
        self.flips = np.stack([p[0] for p in pairs])
        self.phases = np.stack([p[1] for p in pairs])


def to_dense_matrix(h: Hamiltonian) -> np.ndarray:
    if h.n_qubits > MAX_DENSE_QUBITS:
        raise ValueError(
            f"{h.n_qubits} qubits exceeds the dense limit of {MAX_DENSE_QUBITS}"
        )
    dim = 1 << h.n_qubits
    mat = np.zeros((dim, dim), dtype=complex)
    cols = np.arange(dim)
    for term in h.terms:
        flip, phase = pauli_action(term.word)
        # column flip[j] carries phase[j] into row j
        mat[cols, flip] += term.coeff * phase
    return mat


# -- partitioning ------------------------------------------------------------


@dataclass(frozen=True)
class Partition:
    assignments: tuple[tuple[int, ...], ...]

    @property
    def sizes(self) -> list[int]:
        return [len(a) for a in self.assignments]

    def __len__(self) -> int:
        return len(self.assignments)

    def __getitem__(self, rank: int) -> tuple[int, ...]:
        return self.assignments[rank]


def block_sizes(m: int, k: int) -> list[int]:
    if not 1 <= k <= m:
        raise ValueError(f"need 1 <= K <= M, got K={k}, M={m}")
    base, extra = divmod(m, k)
    return [base + 1 if i < extra else base for i in range(k)]


def _slice_blocks(order: Sequence[int], k: int) -> Partition:
    blocks = []
    start = 0
    for size in block_sizes(len(order), k):
        blocks.append(tuple(int(i) for i in order[start : start + size]))
        start += size
    return Partition(tuple(blocks))


def static_partition(h: Hamiltonian, k: int, order: str = "file") -> Partition:
    """Contiguous blocks of terms; the first ``M mod K`` workers get one extra.

    ``order`` picks how terms are ranked before slicing: ``"file"`` keeps input
    order, ``"coeff"`` sorts by descending ``|coeff|`` (stable).
    """
    m = len(h)
    if order == "file":
        ranked = list(range(m))
    elif order == "coeff":
        ranked = sorted(range(m), key=lambda i: -abs(h.terms[i].coeff))
    else:
        raise ValueError(f"unknown partition order {order!r}")
    return _slice_blocks(ranked, k)


def permutation_rng(seed: int, t: int, w: int) -> np.random.Generator:
    # stream id 0 is reserved for term permutations; see distopt for the others
    return np.random.default_rng(np.random.SeedSequence([seed, 0, t, w]))


def shuffle_partition(h: Hamiltonian, k: int, seed: int, t: int, w: int) -> Partition:
    """Random equal-size split of the terms, a pure function of ``(seed, t, w)``.

    Every worker can recompute the same permutation locally, so no
    communication is needed to agree on who measures what.
    """
    m = len(h)
    block_sizes(m, k)
    perm = permutation_rng(seed, t, w).permutation(m)
    return _slice_blocks(perm, k)


# -- qubit-wise commuting groups ---------------------------------------------


def qwc_commute(a: str, b: str) -> bool:
    if len(a) != len(b):
        raise ValueError(f"length mismatch: {a!r} vs {b!r}")
    return all(x == y or x == "I" or y == "I" for x, y in zip(a, b))


@dataclass(frozen=True)
class GroupingPlan:
    groups: tuple[tuple[int, ...], ...]
    bases: tuple[str, ...]

    def __len__(self) -> int:
        return len(self.groups)

    @property
    def n_terms(self) -> int:
        return sum(len(g) for g in self.groups)


def group_qwc(h: Hamiltonian) -> GroupingPlan:
    """Greedy first-fit colouring by descending ``|coeff|``.

    The all-identity word commutes with everything and joins the first group.
    """
    order = sorted(range(len(h)), key=lambda i: -abs(h.terms[i].coeff))
    groups: list[list[int]] = []
    bases: list[list[str]] = []
    for i in order:
        word = h.terms[i].word
        for members, basis in zip(groups, bases):
            if qwc_commute(word, "".join(basis)):
                members.append(i)
                for q, c in enumerate(word):
                    if c != "I":
                        basis[q] = c
                break
        else:
            groups.append([i])
            bases.append(list(word))
    return GroupingPlan(
        tuple(tuple(g) for g in groups), tuple("".join(b) for b in bases)
    )


def random_hamiltonian(
    n_qubits: int,
    n_terms: int,
    rng: np.random.Generator,
    include_identity: bool = False,
    scale: float = 1.0,
) -> Hamiltonian:
    """Distinct random Pauli words with coefficients uniform in ``[-scale, scale]``."""
    limit = 4**n_qubits - (0 if include_identity else 1)
    if not 1 <= n_terms <= limit:
        raise ValueError(f"cannot draw {n_terms} distinct words on {n_qubits} qubits")
    identity = "I" * n_qubits
    words: list[str] = []
    seen = set()
    while len(words) < n_terms:
        word = "".join(rng.choice(list("IXYZ"), n_qubits))
        if word in seen or (word == identity and not include_identity):
            continue
        seen.add(word)
        words.append(word)
    coeffs = rng.uniform(-scale, scale, n_terms)
    return Hamiltonian(n_qubits, tuple(Term(float(c), w) for c, w in zip(coeffs, words)))

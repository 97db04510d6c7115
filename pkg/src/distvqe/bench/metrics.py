"""Error statistics, speedups and the convergence-bound evaluator."""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Mapping, Sequence

import numpy as np

from ..gradients import BoundConstants


def approximation_error(e_vqe: float, e_ideal: float) -> float:
    return abs(e_vqe - e_ideal)


def mean_std(values: Sequence[float]) -> tuple[float, float]:
    arr = np.asarray(values, dtype=float)
    return float(arr.mean()), float(arr.std())


def empirical_cdf(values: Sequence[float]) -> tuple[np.ndarray, np.ndarray]:
    """Sorted samples and their CDF levels ``(i + 1) / n``."""
    xs = np.sort(np.asarray(values, dtype=float))
    return xs, np.arange(1, xs.size + 1) / xs.size


@dataclass(frozen=True)
class Timing:
    """Per-iteration time ``t1`` and time-to-target ``t2`` (None if never reached)."""

    t1: float
    t2: float | None


def time_to_target(round_ms: Sequence[float], errors: Sequence[float], target: float) -> float | None:
    """Cumulative time up to the first synchronization with error <= ``target``."""
    elapsed = 0.0
    for ms, err in zip(round_ms, errors):
        elapsed += ms
        if err <= target:
            return elapsed
    return None


def compute_speedups(
    timings: Mapping[tuple[int, int], Timing]
) -> dict[tuple[int, int], tuple[float, float | None]]:
    """Speedups relative to the ``(K, W) = (1, 1)`` entry.

    Oriented so that larger means faster: ``s1 = t1[1,1] / t1[K,W]`` and
    ``s2 = t2[1,1] / t2[K,W]``.  ``s2`` is None whenever either run never
    reached the target accuracy.
    """
    if (1, 1) not in timings:
        raise KeyError("speedups need the single-worker, W=1 baseline (1, 1)")
    base = timings[(1, 1)]
    out = {}
    for key, tm in timings.items():
        s1 = base.t1 / tm.t1
        s2 = None if base.t2 is None or tm.t2 is None else base.t2 / tm.t2
        out[key] = (s1, s2)
    return out


def theorem1_rhs(
    constants: BoundConstants,
    eta: float,
    p: float,
    k: int,
    w: int,
    t: int,
    loss_first: float,
    loss_last: float,
    lipschitz: float | None = None,
) -> float | None:
    """Right-hand side of the shuffled local-SGD convergence bound.

    Bounds ``(1/T) sum_t ||grad L(theta_t)||^2`` by::

        2 (L_first - L_last) / (eta T)
        + 4 F^2 eta^2 W^2 G^2 (K - 1) / (K T)
        + (2K (K - 2 + 2p) + (eta F + 1)(1 - p)^2) G^2 / T

    ``F`` (gradient Lipschitz constant) defaults to ``constants.F2``.
    Returns None when ``K > 2(1 - p)`` does not hold, since the bound is
    then not established.
    """
    if t < 1:
        raise ValueError("T must be at least 1")
    if not k > 2 * (1 - p):
        return None
    f = constants.F2 if lipschitz is None else lipschitz
    g2 = constants.G**2
    descent = 2 * (loss_first - loss_last) / (eta * t)
    drift = 4 * f**2 * eta**2 * w**2 * g2 * (k - 1) / (k * t)
    variance = (2 * k * (k - 2 + 2 * p) + (eta * f + 1) * (1 - p) ** 2) * g2 / t
    return descent + drift + variance


def mean_squared_grad(grad_norms: Sequence[float]) -> float:
    arr = np.asarray(grad_norms, dtype=float)
    return float(np.mean(arr**2))


def aligned_interval(local_steps: Sequence[int]) -> int:
    return math.lcm(*local_steps)

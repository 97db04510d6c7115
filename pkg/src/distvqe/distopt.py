"""Distributed VQE training: K workers, W local steps, synchronous averaging.

Two ways of handing out Hamiltonian terms:

* ``qudio``: a fixed contiguous split computed once per run.
* ``shuffle``: a fresh random split for every local step ``(t, w)``, derived
  from the shared seed so every worker agrees without messaging.

Random streams all descend from the single run seed, keyed by purpose:
``(seed, 0, t, w)`` term permutations, ``(seed, 1, rank)`` worker
measurements, ``(seed, 2)`` the server's random aggregation, ``(seed, 3)``
the initial parameters.  Because every stream is owned by exactly one
party, results do not depend on how workers are mapped onto threads.
"""

from __future__ import annotations

import csv
import io
import json
import logging
import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field, replace
from typing import Callable, Iterable, Sequence

import numpy as np

from .gradients import LossEvaluator
from .hamiltonian import Hamiltonian, Partition, shuffle_partition, static_partition
from .simulator import AnsatzSpec, NoiseConfig

log = logging.getLogger(__name__)

MODES = ("qudio", "shuffle")
AGGREGATORS = ("average", "random", "median", "weighted")
LOSS_SOURCES = ("slice", "full")
SCHEMA_VERSION = 1


def stream(seed: int, *key: int) -> np.random.Generator:
    return np.random.default_rng(np.random.SeedSequence([seed, *key]))


@dataclass
class WorkerState:
    rank: int  # 0-based
    theta: np.ndarray
    rng: np.random.Generator
    last_loss: float | None = None
    shots: int = 0
    compute_ms: float = 0.0


@dataclass(frozen=True)
class TrainConfig:
    workers: int = 1
    local_steps: int = 1
    iterations: int = 100
    lr: float = 0.4
    mode: str = "shuffle"
    aggregator: str = "average"
    noise: NoiseConfig = NoiseConfig()
    grouping: bool = False
    seed: int = 0
    partition_order: str = "file"
    loss_source: str = "slice"
    threads: int = 1

    def __post_init__(self):
        if self.workers < 1 or self.local_steps < 1 or self.iterations < 1:
            raise ValueError("workers, local_steps and iterations must be >= 1")
        if not self.lr > 0:
            raise ValueError("learning rate must be positive")
        if self.mode not in MODES:
            raise ValueError(f"mode must be one of {MODES}")
        if self.aggregator not in AGGREGATORS:
            raise ValueError(f"aggregator must be one of {AGGREGATORS}")
        if self.loss_source not in LOSS_SOURCES:
            raise ValueError(f"loss_source must be one of {LOSS_SOURCES}")
        if self.threads < 1:
            raise ValueError("threads must be >= 1")


@dataclass
class RunRecord:
    t: int
    loss: float
    grad_norm: float
    worker_losses: list[float]
    distances: list[float]
    shots_cumulative: int
    wall_ms: float
    parallel_ms: float
    theta: np.ndarray = field(repr=False)


@dataclass
class TrainResult:
    records: list[RunRecord]
    theta: np.ndarray
    theta0: np.ndarray
    initial_loss: float
    initial_grad_norm: float

    @property
    def losses(self) -> np.ndarray:
        return np.array([r.loss for r in self.records])

    def grad_norms_before_rounds(self) -> np.ndarray:
        """``||grad L||`` at the parameters each round started from."""
        return np.array([self.initial_grad_norm] + [r.grad_norm for r in self.records[:-1]])


# -- local step and aggregation ----------------------------------------------


def local_update(
    worker: WorkerState,
    rows: Sequence[int],
    lr: float,
    noise: NoiseConfig,
    evaluator: LossEvaluator,
    grouping: bool = False,
) -> WorkerState:
    """One gradient step on the worker's current slice of terms."""
    if len(rows) == 0:
        raise ValueError("a worker needs at least one term")
    grad, used = evaluator.gradient(worker.theta, rows, noise, worker.rng, grouping)
    return replace(worker, theta=worker.theta - lr * grad, shots=worker.shots + used)


def _thetas(workers: Sequence[WorkerState]) -> np.ndarray:
    return np.stack([w.theta for w in workers])


def aggregate_average(workers: Sequence[WorkerState]) -> np.ndarray:
    return _thetas(workers).mean(axis=0)


def aggregate_random(workers: Sequence[WorkerState], server_rng: np.random.Generator) -> np.ndarray:
    return workers[int(server_rng.integers(len(workers)))].theta.copy()


def _losses(workers: Sequence[WorkerState]) -> np.ndarray:
    if any(w.last_loss is None for w in workers):
        raise ValueError("loss-based aggregation needs every worker's last_loss")
    return np.array([w.last_loss for w in workers], dtype=float)


def aggregate_median(workers: Sequence[WorkerState]) -> np.ndarray:
    """Parameters of the worker holding the ceil(K/2)-th smallest loss.

    For even K this is the lower of the two middle losses; equal losses are
    ordered by rank.
    """
    losses = _losses(workers)
    order = sorted(range(len(workers)), key=lambda i: (losses[i], workers[i].rank))
    pick = order[(len(workers) + 1) // 2 - 1]
    return workers[pick].theta.copy()


def softmax_weights(losses: np.ndarray) -> np.ndarray:
    z = -np.asarray(losses, dtype=float)
    z = np.exp(z - z.max())
    return z / z.sum()


def aggregate_weighted(workers: Sequence[WorkerState]) -> np.ndarray:
    weights = softmax_weights(_losses(workers))
    return weights @ _thetas(workers)


def trajectory_distances(workers: Sequence[WorkerState], theta_bar: np.ndarray) -> np.ndarray:
    return np.linalg.norm(_thetas(workers) - theta_bar[None, :], axis=1)


def synchronize(
    workers: Sequence[WorkerState], aggregator: str, server_rng: np.random.Generator
) -> tuple[np.ndarray, np.ndarray]:
    """Aggregate, broadcast the result to every worker, and return it with the
    pre-aggregation distances of each worker to the plain average."""
    theta_bar = aggregate_average(workers)
    distances = trajectory_distances(workers, theta_bar)
    if aggregator == "average":
        theta = theta_bar
    elif aggregator == "random":
        theta = aggregate_random(workers, server_rng)
    elif aggregator == "median":
        theta = aggregate_median(workers)
    elif aggregator == "weighted":
        theta = aggregate_weighted(workers)
    else:
        raise ValueError(f"aggregator must be one of {AGGREGATORS}")
    for w in workers:
        w.theta = theta.copy()
    return theta, distances


# -- main loop ---------------------------------------------------------------


def initial_parameters(seed: int, n_params: int) -> np.ndarray:
    return stream(seed, 3).uniform(0.0, 2 * np.pi, n_params)


def run_training(
    config: TrainConfig,
    h: Hamiltonian,
    ansatz: AnsatzSpec,
    theta0: np.ndarray | None = None,
    sink: Callable[[RunRecord], None] | None = None,
    evaluator: LossEvaluator | None = None,
) -> TrainResult:
    """Run ``config.iterations`` rounds of W local steps plus one synchronization.

    ``sink`` is called with every record as soon as it exists, so partial
    logs survive a failure later in the run.
    """
    k, n_steps = config.workers, config.local_steps
    if k > len(h):
        raise ValueError(f"{k} workers but only {len(h)} Hamiltonian terms")
    ev = evaluator or LossEvaluator(h, ansatz)
    seed = config.seed
    if theta0 is None:
        theta0 = initial_parameters(seed, ansatz.param_count)
    theta0 = np.asarray(theta0, dtype=float)
    theta = theta0.copy()
    workers = [WorkerState(r, theta.copy(), stream(seed, 1, r)) for r in range(k)]
    server_rng = stream(seed, 2)
    fixed: Partition | None = None
    if config.mode == "qudio":
        fixed = static_partition(h, k, config.partition_order)

    def slice_for(t: int, w: int, rank: int) -> tuple[int, ...]:
        if fixed is not None:
            return fixed[rank]
        return shuffle_partition(h, k, seed, t, w)[rank]

    def run_worker(t: int, worker: WorkerState) -> WorkerState:
        start = time.perf_counter()
        rows: tuple[int, ...] = ()
        for w in range(n_steps):
            rows = slice_for(t, w, worker.rank)
            worker = local_update(worker, rows, config.lr, config.noise, ev, config.grouping)
        worker.compute_ms = (time.perf_counter() - start) * 1e3
        # diagnostic loss for median/weighted aggregation; not timed, not sampled
        worker.last_loss = ev.loss(worker.theta, rows if config.loss_source == "slice" else None)
        return worker

    records: list[RunRecord] = []
    initial_loss = ev.loss(theta)
    initial_grad_norm = float(np.linalg.norm(ev.gradient(theta)[0]))
    pool = ThreadPoolExecutor(config.threads) if config.threads > 1 else None
    try:
        for t in range(config.iterations):
            start = time.perf_counter()
            if pool is None:
                workers = [run_worker(t, w) for w in workers]
            else:
                workers = list(pool.map(lambda w: run_worker(t, w), workers))
            sync_start = time.perf_counter()
            theta, distances = synchronize(workers, config.aggregator, server_rng)
            end = time.perf_counter()
            sync_ms = (end - sync_start) * 1e3
            record = RunRecord(
                t=t,
                loss=ev.loss(theta),
                grad_norm=float(np.linalg.norm(ev.gradient(theta)[0])),
                worker_losses=[float(w.last_loss) for w in workers],
                distances=[float(d) for d in distances],
                shots_cumulative=int(sum(w.shots for w in workers)),
                wall_ms=(end - start) * 1e3,
                parallel_ms=max(w.compute_ms for w in workers) + sync_ms,
                theta=theta.copy(),
            )
            records.append(record)
            if sink is not None:
                sink(record)
    finally:
        if pool is not None:
            pool.shutdown()
    return TrainResult(records, theta, theta0, initial_loss, initial_grad_norm)


# -- serialization -----------------------------------------------------------

TIMING_COLUMNS = ("wall_ms", "parallel_ms")


def csv_header(k: int) -> list[str]:
    return (
        ["t", "loss", "grad_norm"]
        + [f"worker_loss_{i + 1}" for i in range(k)]
        + [f"distance_{i + 1}" for i in range(k)]
        + ["shots_cumulative", *TIMING_COLUMNS]
    )


def csv_row(record: RunRecord) -> list:
    return (
        [record.t, repr(record.loss), repr(record.grad_norm)]
        + [repr(v) for v in record.worker_losses]
        + [repr(v) for v in record.distances]
        + [record.shots_cumulative, f"{record.wall_ms:.3f}", f"{record.parallel_ms:.3f}"]
    )


def records_to_csv(records: Iterable[RunRecord], k: int, fh=None) -> str | None:
    """Write records as CSV to ``fh``, or return the text when ``fh`` is None."""
    out = fh if fh is not None else io.StringIO()
    writer = csv.writer(out, lineterminator="\n")
    writer.writerow(csv_header(k))
    for record in records:
        writer.writerow(csv_row(record))
    return None if fh is not None else out.getvalue()


def record_to_json(record: RunRecord) -> str:
    return json.dumps(
        {
            "schema": SCHEMA_VERSION,
            "t": record.t,
            "loss": record.loss,
            "grad_norm": record.grad_norm,
            "worker_losses": record.worker_losses,
            "distances": record.distances,
            "shots_cumulative": record.shots_cumulative,
            "wall_ms": record.wall_ms,
            "parallel_ms": record.parallel_ms,
            "theta": record.theta.tolist(),
        }
    )


def deterministic_view(records: Iterable[RunRecord]) -> list[tuple]:
    """Everything in a record stream except the timing columns."""
    return [
        (
            r.t,
            r.loss,
            r.grad_norm,
            tuple(r.worker_losses),
            tuple(r.distances),
            r.shots_cumulative,
            r.theta.tobytes(),
        )
        for r in records
    ]

"""Seeded sweeps over (mode, K, W, aggregator, noise) and their result files.

Output layout under ``out``::

    runs/<cell>_s<seed>.csv      one row per synchronization
    runs/<cell>_s<seed>.jsonl    same rows plus parameters, as JSON lines
    summary.json                 per-cell error statistics, speedups, bound checks
    cdf.csv                      empirical CDF of the error per (mode, aggregator, p)
    loss_curves.csv              loss at iterations aligned across the W sweep
"""

from __future__ import annotations

import csv
import itertools
import json
import logging
from dataclasses import asdict, dataclass, field, fields
from importlib import resources
from pathlib import Path
from typing import Any

import numpy as np
import yaml

from ..distopt import (
    AGGREGATORS,
    MODES,
    SCHEMA_VERSION,
    TrainConfig,
    csv_header,
    csv_row,
    record_to_json,
    run_training,
)
from ..exactsolver import ground_state_energy
from ..gradients import LossEvaluator, bound_constants
from ..hamiltonian import Hamiltonian, load_hamiltonian, parse_hamiltonian, random_hamiltonian
from ..simulator import AnsatzSpec, NoiseConfig
from .metrics import (
    Timing,
    aligned_interval,
    approximation_error,
    compute_speedups,
    empirical_cdf,
    mean_squared_grad,
    mean_std,
    theorem1_rhs,
    time_to_target,
)

log = logging.getLogger(__name__)

BUILTIN = ("h2", "lih")
SWEEP_FIELDS = ("modes", "workers", "local_steps", "aggregators", "noise_p")


def resolve_hamiltonian(spec: str) -> Hamiltonian:
    """A file path, a bundled molecule (``h2``, ``lih``) or ``random:<n>:<m>:<seed>``."""
    if spec in BUILTIN:
        text = resources.files("distvqe.data").joinpath(f"{spec}.txt").read_text("utf-8")
        return parse_hamiltonian(text)
    if spec.startswith("random:"):
        try:
            _, n, m, seed = spec.split(":")
            return random_hamiltonian(int(n), int(m), np.random.default_rng(int(seed)))
        except ValueError as exc:
            raise ValueError(f"expected random:<n>:<m>:<seed>, got {spec!r}") from exc
    path = Path(spec)
    if not path.exists():
        raise FileNotFoundError(f"Hamiltonian file not found: {spec}")
    return load_hamiltonian(path)


def _as_list(value) -> list:
    return list(value) if isinstance(value, (list, tuple)) else [value]


@dataclass
class ExperimentConfig:
    hamiltonian: str = "h2"
    layers: int = 2
    entangler: str = "linear"
    modes: list[str] = field(default_factory=lambda: ["shuffle"])
    workers: list[int] = field(default_factory=lambda: [1])
    local_steps: list[int] = field(default_factory=lambda: [1])
    aggregators: list[str] = field(default_factory=lambda: ["average"])
    noise_p: list[float] = field(default_factory=lambda: [0.0])
    iterations: int = 100
    # when set, T = step_budget // W so every W performs the same number of local steps
    step_budget: int | None = None
    lr: float = 0.4
    shots: int = 0
    grouping: bool = False
    seed: int = 0
    repetitions: int = 1
    target_error: float = 0.1
    partition_order: str = "file"
    loss_source: str = "slice"
    threads: int = 1
    timing: str = "parallel"
    log_every: int | None = None
    out: str = "results"

    def __post_init__(self):
        for name in SWEEP_FIELDS:
            setattr(self, name, _as_list(getattr(self, name)))
        if self.repetitions < 1:
            raise ValueError("repetitions must be >= 1")
        if self.timing not in ("parallel", "wall"):
            raise ValueError("timing must be 'parallel' or 'wall'")
        bad = set(self.modes) - set(MODES)
        if bad:
            raise ValueError(f"unknown mode(s) {sorted(bad)}")
        bad = set(self.aggregators) - set(AGGREGATORS)
        if bad:
            raise ValueError(f"unknown aggregator(s) {sorted(bad)}")

    @classmethod
    def from_mapping(cls, data: dict[str, Any]) -> "ExperimentConfig":
        known = {f.name for f in fields(cls)}
        unknown = set(data) - known
        if unknown:
            raise ValueError(f"unknown config key(s): {sorted(unknown)}")
        return cls(**data)

    @classmethod
    def from_file(cls, path) -> "ExperimentConfig":
        with open(path, encoding="utf-8") as fh:
            data = yaml.safe_load(fh) or {}
        if not isinstance(data, dict):
            raise ValueError(f"{path}: expected a flat key/value mapping")
        return cls.from_mapping(data)

    def seeds(self) -> list[int]:
        return [self.seed + r for r in range(self.repetitions)]

    def iterations_for(self, w: int) -> int:
        if self.step_budget is None:
            return self.iterations
        t = self.step_budget // w
        if t < 1:
            raise ValueError(f"step_budget {self.step_budget} is smaller than W={w}")
        return t


def cell_name(mode: str, k: int, w: int, aggregator: str, p: float) -> str:
    return f"{mode}_K{k}_W{w}_{aggregator}_p{p:g}"


def _train_config(cfg: ExperimentConfig, mode, k, w, agg, p, seed) -> TrainConfig:
    return TrainConfig(
        workers=k,
        local_steps=w,
        iterations=cfg.iterations_for(w),
        lr=cfg.lr,
        mode=mode,
        aggregator=agg,
        noise=NoiseConfig(p=p, shots=cfg.shots),
        grouping=cfg.grouping,
        seed=seed,
        partition_order=cfg.partition_order,
        loss_source=cfg.loss_source,
        threads=cfg.threads,
    )


def run_experiment(cfg: ExperimentConfig) -> dict:
    """Run every sweep cell for every seed and write the result files.

    Returns the summary that is also written to ``summary.json``.
    """
    h = resolve_hamiltonian(cfg.hamiltonian)
    ansatz = AnsatzSpec(h.n_qubits, cfg.layers, cfg.entangler)
    evaluator = LossEvaluator(h, ansatz)
    e_ideal = ground_state_energy(h).energy
    constants = bound_constants(h, ansatz.param_count)
    out = Path(cfg.out)
    (out / "runs").mkdir(parents=True, exist_ok=True)
    interval = cfg.log_every or aligned_interval(cfg.local_steps)
    time_col = "parallel_ms" if cfg.timing == "parallel" else "wall_ms"

    cells = []
    curve_rows = []
    for mode, k, w, agg, p in itertools.product(
        cfg.modes, cfg.workers, cfg.local_steps, cfg.aggregators, cfg.noise_p
    ):
        name = cell_name(mode, k, w, agg, p)
        cell: dict[str, Any] = {
            "cell": name,
            "mode": mode,
            "workers": k,
            "local_steps": w,
            "aggregator": agg,
            "noise_p": p,
            "iterations": None,
            "errors": [],
            "failures": [],
            "bound_checks": [],
        }
        per_iter_ms, to_target_ms = [], []
        for seed in cfg.seeds():
            try:
                tc = _train_config(cfg, mode, k, w, agg, p, seed)
                cell["iterations"] = tc.iterations
                stem = out / "runs" / f"{name}_s{seed}"
                with open(stem.with_suffix(".csv"), "w", newline="") as fcsv, open(
                    stem.with_suffix(".jsonl"), "w"
                ) as fjson:
                    writer = csv.writer(fcsv, lineterminator="\n")
                    writer.writerow(csv_header(k))

                    def sink(record):
                        writer.writerow(csv_row(record))
                        fjson.write(record_to_json(record) + "\n")

                    result = run_training(tc, h, ansatz, sink=sink, evaluator=evaluator)
            except Exception as exc:  # one failed run must not sink the sweep
                log.exception("run %s seed %d failed", name, seed)
                cell["failures"].append({"seed": seed, "error": repr(exc)})
                continue
            losses = result.losses
            cell["errors"].append(approximation_error(float(losses.min()), e_ideal))
            rounds = [getattr(r, time_col) for r in result.records]
            per_iter_ms.append(float(np.mean(rounds)) / w)
            to_target_ms.append(
                time_to_target(rounds, [abs(x - e_ideal) for x in losses], cfg.target_error)
            )
            curve_rows.append((name, mode, k, w, agg, p, seed, 0, result.initial_loss))
            for r in result.records:
                step = (r.t + 1) * w
                if step % interval == 0:
                    curve_rows.append((name, mode, k, w, agg, p, seed, step, r.loss))
            norms = [r.grad_norm for r in result.records]
            rhs = theorem1_rhs(
                constants, cfg.lr, p, k, w, tc.iterations, result.initial_loss, losses[-1]
            )
            lhs = mean_squared_grad(result.grad_norms_before_rounds())
            cell["bound_checks"].append(
                {
                    "seed": seed,
                    "mean_sq_grad": lhs,
                    "rhs": rhs,
                    "holds": None if rhs is None else bool(lhs <= rhs),
                    "max_grad_norm": max([result.initial_grad_norm, *norms]),
                    "grad_norm_within_G": bool(max([result.initial_grad_norm, *norms]) <= constants.G),
                }
            )
        if cell["errors"]:
            cell["err_mean"], cell["err_std"] = mean_std(cell["errors"])
        else:
            cell["err_mean"] = cell["err_std"] = None
        cell["complete"] = not cell["failures"]
        cell["t1_ms"] = float(np.mean(per_iter_ms)) if per_iter_ms else None
        reached = [x for x in to_target_ms if x is not None]
        cell["t2_ms"] = (
            float(np.mean(reached)) if reached and len(reached) == len(to_target_ms) else None
        )
        cells.append(cell)

    _attach_speedups(cells)
    summary = {
        "schema": SCHEMA_VERSION,
        "hamiltonian": cfg.hamiltonian,
        "n_qubits": h.n_qubits,
        "n_terms": len(h),
        "n_params": ansatz.param_count,
        "ground_energy": e_ideal,
        "G": constants.G,
        "aligned_interval": interval,
        "config": asdict(cfg),
        "complete": all(c["complete"] for c in cells),
        "cells": cells,
    }
    (out / "summary.json").write_text(json.dumps(summary, indent=2) + "\n")
    _write_cdf(out / "cdf.csv", cells)
    with open(out / "loss_curves.csv", "w", newline="") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(["cell", "mode", "workers", "local_steps", "aggregator", "noise_p", "seed", "iteration", "loss"])
        for row in curve_rows:
            writer.writerow([*row[:-1], repr(float(row[-1]))])
    return summary


def _attach_speedups(cells: list[dict]) -> None:
    groups: dict[tuple, dict[tuple[int, int], dict]] = {}
    for c in cells:
        groups.setdefault((c["mode"], c["aggregator"], c["noise_p"]), {})[
            (c["workers"], c["local_steps"])
        ] = c
    for group in groups.values():
        timings = {
            key: Timing(c["t1_ms"], c["t2_ms"]) for key, c in group.items() if c["t1_ms"]
        }
        speed = compute_speedups(timings) if (1, 1) in timings else {}
        for key, c in group.items():
            c["s1"], c["s2"] = speed.get(key, (None, None))


def _write_cdf(path: Path, cells: list[dict]) -> None:
    pooled: dict[tuple, list[float]] = {}
    for c in cells:
        pooled.setdefault((c["mode"], c["aggregator"], c["noise_p"]), []).extend(c["errors"])
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(["mode", "aggregator", "noise_p", "err", "cdf"])
        for (mode, agg, p), errs in pooled.items():
            if not errs:
                continue
            xs, levels = empirical_cdf(errs)
            for x, y in zip(xs, levels):
                writer.writerow([mode, agg, p, repr(float(x)), repr(float(y))])

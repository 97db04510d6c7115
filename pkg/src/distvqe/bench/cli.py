"""``vqe-bench`` command line."""

from __future__ import annotations

import argparse
import logging
import sys

from ..exactsolver import ground_state_energy
from .experiment import ExperimentConfig, resolve_hamiltonian, run_experiment
from .selfcheck import run_checks

SPEEDUP_NOTE = (
    "Speedups are reported as baseline / run (s1 = t1[1,1] / t1[K,W]) so that "
    "values above 1 mean faster and linear scaling gives s1 ~ K."
)


def _ints(text):
    return [int(x) for x in text.split(",")]


def _floats(text):
    return [float(x) for x in text.split(",")]


def _strs(text):
    return text.split(",")


def _on_off(text):
    if text not in ("on", "off"):
        raise argparse.ArgumentTypeError("expected 'on' or 'off'")
    return text == "on"


# (flag, config field, parser); list-valued flags accept comma-separated sweeps
OVERRIDES = [
    ("--hamiltonian", "hamiltonian", str),
    ("--mode", "modes", _strs),
    ("--workers", "workers", _ints),
    ("--local-steps", "local_steps", _ints),
    ("--iterations", "iterations", int),
    ("--step-budget", "step_budget", int),
    ("--lr", "lr", float),
    ("--shots", "shots", int),
    ("--noise-p", "noise_p", _floats),
    ("--aggregator", "aggregators", _strs),
    ("--grouping", "grouping", _on_off),
    ("--seed", "seed", int),
    ("--repetitions", "repetitions", int),
    ("--layers", "layers", int),
    ("--threads", "threads", int),
    ("--target-error", "target_error", float),
    ("--out", "out", str),
]


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="vqe-bench",
        description="Distributed VQE experiments with static or shuffled term partitions.",
        epilog=SPEEDUP_NOTE,
    )
    parser.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", required=True)

    run = sub.add_parser("run", help="run a seeded sweep and write CSV/JSON results", epilog=SPEEDUP_NOTE)
    run.add_argument("--config", help="YAML file of flat key/value settings")
    for flag, dest, kind in OVERRIDES:
        run.add_argument(flag, dest=dest, type=kind, default=None)

    exact = sub.add_parser("exact", help="print the ground-state energy of a Hamiltonian")
    exact.add_argument("--hamiltonian", required=True)

    check = sub.add_parser("check", help="run numerical self-tests")
    check.add_argument("--seed", type=int, default=0)
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(
        level=logging.INFO if args.verbose else logging.WARNING,
        format="%(levelname)s %(name)s: %(message)s",
    )
    if args.command == "exact":
        h = resolve_hamiltonian(args.hamiltonian)
        print(repr(ground_state_energy(h).energy))
        return 0
    if args.command == "check":
        return 0 if run_checks(args.seed) else 1

    data = {}
    if args.config:
        cfg = ExperimentConfig.from_file(args.config)
        data = {k: v for k, v in vars(cfg).items()}
    for _, dest, _ in OVERRIDES:
        value = getattr(args, dest)
        if value is not None:
            data[dest] = value
    cfg = ExperimentConfig.from_mapping(data)
    summary = run_experiment(cfg)
    for cell in summary["cells"]:
        mean = cell["err_mean"]
        print(
            f"{cell['cell']:<40} T={cell['iterations']}  "
            f"Err={'n/a' if mean is None else f'{mean:.4f}'}  "
            f"s1={_fmt(cell['s1'])}  s2={_fmt(cell['s2'])}"
        )
    print(f"ground energy {summary['ground_energy']:.6f}; results in {cfg.out}")
    return 0 if summary["complete"] else 2


def _fmt(x):
    return "n/a" if x is None else f"{x:.2f}"


if __name__ == "__main__":
    sys.exit(main())

from .experiment import ExperimentConfig, resolve_hamiltonian, run_experiment
from .metrics import compute_speedups, empirical_cdf, theorem1_rhs

__all__ = [
    "ExperimentConfig",
    "compute_speedups",
    "empirical_cdf",
    "resolve_hamiltonian",
    "run_experiment",
    "theorem1_rhs",
]

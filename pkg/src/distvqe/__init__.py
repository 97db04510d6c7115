"""Distributed VQE with static (QUDIO) and shuffled (Shuffle-QUDIO) term partitions."""

from .distopt import RunRecord, TrainConfig, TrainResult, run_training
from .exactsolver import ground_state_energy
from .gradients import LossEvaluator, bound_constants, parameter_shift_grad
from .hamiltonian import (
    Hamiltonian,
    Term,
    group_qwc,
    load_hamiltonian,
    parse_hamiltonian,
    shuffle_partition,
    static_partition,
)
from .simulator import AnsatzSpec, NoiseConfig, prepare_state

__version__ = "0.1.0"

"""Semi-supervised two-community labeling on stochastic block models with
Glauber dynamics of a magnetization-penalized Ising model."""

from .glauber import (ErrorMetrics, SimParams, Trajectory, classification_error, reveal_mask, run_algorithm,
                      run_continuous, run_discrete, seed_spins)
from .ising import IsingParams, SpinState, energy, energy_delta, flip_rate, gibbs_weight, rho_n
from .meanfield import DriftParams, direction_field, drift, t_end_for_error, z_infinity
from .sbm import (EstimationError, Graph, SbmParams, admissible_alpha_interval, estimate_params, read_graph,
                  sample_sbm, write_graph)

__version__ = "0.1.0"

__all__ = [
    "DriftParams", "ErrorMetrics", "EstimationError", "Graph", "IsingParams", "SbmParams", "SimParams",
    "SpinState", "Trajectory", "admissible_alpha_interval", "classification_error", "direction_field", "drift",
    "energy", "energy_delta", "estimate_params", "flip_rate", "gibbs_weight", "read_graph", "reveal_mask",
    "rho_n", "run_algorithm", "run_continuous", "run_discrete", "sample_sbm", "seed_spins", "t_end_for_error",
    "write_graph", "z_infinity",
]

"""Simulation and resource analysis of concatenated C4/C6 error-detecting codes."""

from .gf2 import CheckMatrix, PauliProduct, Syndrome, format_pauli, parse_pauli, symplectic_commutes, syndrome_after_pauli, validate_check_matrix
from .noise import NoiseParams, noise_params
from .stabilizer import GateOp, StabilizerState, TrialBatch, exact_distribution, init_state
from .codes import block_size, concatenated_check_matrix, decode_circuit, encoded_gate_circuit
from .protocols import PrepContext, ResourceCount, bell_pool, prepare_bell_pair, prepare_encoded_cat
from .harness import ExperimentStats, ci68, fit_power_law, run_chain_experiment, run_gate_error_experiment
from .resources import optimize_pcnot, threshold_from_recursion, zero_error_resources

__all__ = [
    "CheckMatrix", "PauliProduct", "Syndrome", "format_pauli", "parse_pauli", "symplectic_commutes",
    "syndrome_after_pauli", "validate_check_matrix", "NoiseParams", "noise_params", "GateOp",
    "StabilizerState", "TrialBatch", "exact_distribution", "init_state", "block_size",
    "concatenated_check_matrix", "decode_circuit", "encoded_gate_circuit", "PrepContext",
    "ResourceCount", "bell_pool", "prepare_bell_pair", "prepare_encoded_cat", "ExperimentStats",
    "ci68", "fit_power_law", "run_chain_experiment", "run_gate_error_experiment", "optimize_pcnot",
    "threshold_from_recursion", "zero_error_resources",
]

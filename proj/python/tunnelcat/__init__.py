"""Bosonic double-well tunneling assisted by a learnable ancilla."""

from ._core import (
    Config,
    ConfigError,
    FockSpace,
    NumericalError,
    closedform,
    find_max_probability,
    joint_hamiltonian,
    kron,
    load_config,
    localized_state,
    oracle_check,
    parse_config,
    partial_trace_ancilla,
    propagate,
    reduced_system_state,
    run,
    simulate,
    train_cell,
    transfer_probability,
    version,
    well_hamiltonian,
)

__version__ = version()

__all__ = [
    "Config",
    "ConfigError",
    "FockSpace",
    "NumericalError",
    "closedform",
    "find_max_probability",
    "joint_hamiltonian",
    "kron",
    "load_config",
    "localized_state",
    "oracle_check",
    "parse_config",
    "partial_trace_ancilla",
    "propagate",
    "reduced_system_state",
    "run",
    "simulate",
    "train_cell",
    "transfer_probability",
    "version",
    "well_hamiltonian",
]

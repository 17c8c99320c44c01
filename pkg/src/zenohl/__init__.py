"""Hamiltonian learning for 1D geometrically 2-local Pauli chains.

Quantum-Zeno kicks split the chain into independent two-qubit patches, each
patch is reconstructed by process tomography, and the local estimates are
combined into the global coefficient vector.
"""
from .errors import InputError, InternalError, NumericError
from .pauli import PauliHamiltonian, PauliString, chain_basis, ising_hamiltonian, random_2local_chain
from .pipeline import ProtocolSpec, RunResult, ising_experiment, run_protocol, sweep
from .zeno import plan_configurations

__all__ = [
    "InputError",
    "InternalError",
    "NumericError",
    "PauliHamiltonian",
    "PauliString",
    "ProtocolSpec",
    "RunResult",
    "chain_basis",
    "ising_experiment",
    "ising_hamiltonian",
    "plan_configurations",
    "random_2local_chain",
    "run_protocol",
    "sweep",
]

__version__ = "0.1.0"

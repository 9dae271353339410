"""Hamiltonians, Lindblad generators, master-equation and quantum-jump solvers."""
from .jumps import quantum_jump_evolve
from .master import IntegrationError, Trajectory, TruncationWarning, evolve_master
from .model import (
    Generator,
    ModelParams,
    expectation,
    generator,
    hamiltonian,
    hamiltonian_atomic,
    hamiltonian_interaction,
    jump_operators,
    lindblad_rhs,
    steady_state,
)

__all__ = [
    "Generator",
    "IntegrationError",
    "ModelParams",
    "Trajectory",
    "TruncationWarning",
    "evolve_master",
    "expectation",
    "generator",
    "hamiltonian",
    "hamiltonian_atomic",
    "hamiltonian_interaction",
    "jump_operators",
    "lindblad_rhs",
    "quantum_jump_evolve",
    "steady_state",
]

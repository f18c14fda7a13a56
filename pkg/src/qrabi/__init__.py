"""Numerics for the Rabi model interpolating between the degenerate-qubit and relativistic limits."""
from .model import ModelParams, ScaledParams, Sector, TridiagonalOperator, build_sector_hamiltonian, scaled_params
from .eigen import Spectrum, compute_spectrum, eigenpairs, eigenvalues

__all__ = [
    "ModelParams", "ScaledParams", "Sector", "TridiagonalOperator", "build_sector_hamiltonian",
    "scaled_params", "Spectrum", "compute_spectrum", "eigenpairs", "eigenvalues",
]
__version__ = "0.1.0"

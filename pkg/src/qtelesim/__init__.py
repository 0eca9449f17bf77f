"""Simulations of qubit teleportation, entanglement swapping, quantum scissors
and cavity-decay atomic teleportation."""

from .core import (
    DensityMatrix,
    DimensionError,
    StateVector,
    UnitaryOp,
    amplitudes_close,
    apply_unitary,
    fidelity,
    measure_projective,
    reduced_density,
    tensor,
)
from .rng import RngStream

__version__ = "0.1.0"

__all__ = [
    "DensityMatrix",
    "DimensionError",
    "RngStream",
    "StateVector",
    "UnitaryOp",
    "amplitudes_close",
    "apply_unitary",
    "fidelity",
    "measure_projective",
    "reduced_density",
    "tensor",
]

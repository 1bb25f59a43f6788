from .lattice import SQRT_PI, LatticeSpec, ModularGrid, ModularPoint
from .wavefunctions import HybridTable, IntegerWavefunction, ModularWavefunction, PositionWavefunction
from .operators import DisplacementLabel, OperatorMatrix
from .wigner import CylinderWigner, EnsembleState, Marginals

__all__ = [
    "SQRT_PI",
    "LatticeSpec",
    "ModularGrid",
    "ModularPoint",
    "PositionWavefunction",
    "ModularWavefunction",
    "IntegerWavefunction",
    "HybridTable",
    "DisplacementLabel",
    "OperatorMatrix",
    "CylinderWigner",
    "EnsembleState",
    "Marginals",
]

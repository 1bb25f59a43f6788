from .lattice_service import LatticeService
from .zak_service import ZakService
from .state_service import StateService
from .operator_service import OperatorService
from .wigner_service import WignerService
from .qec_service import QecService
from .tomography_service import TomographyService
from .selftest_service import run_selftest

__all__ = [
    "LatticeService",
    "ZakService",
    "StateService",
    "OperatorService",
    "WignerService",
    "QecService",
    "TomographyService",
    "run_selftest",
]

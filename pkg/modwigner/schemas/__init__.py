from .states import (
    CatParams,
    CoherentParams,
    GkpParams,
    Pi2Params,
    PlaneWaveParams,
    ShiftError,
    StateSpec,
    UniformParams,
)
from .wigner import FringeAnalysis, WignerManifest
from .qec import ModularWidths, QecReport, QecSweepRow
from .tomography import IntegerTomographySample, TomographySample
from .run_config import RunConfig

__all__ = [
    "CatParams",
    "CoherentParams",
    "GkpParams",
    "Pi2Params",
    "PlaneWaveParams",
    "ShiftError",
    "StateSpec",
    "UniformParams",
    "FringeAnalysis",
    "WignerManifest",
    "ModularWidths",
    "QecReport",
    "QecSweepRow",
    "IntegerTomographySample",
    "TomographySample",
    "RunConfig"]

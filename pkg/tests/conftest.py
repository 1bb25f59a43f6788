"""
Shared fixtures.

Lattices, grids and the standard states used across the service tests.
Environment variables (ENVIRONMENT, LOG_LEVEL, NUM_THREADS) are pinned by
pytest-env in pytest.ini before modwigner.config is imported.
"""

import numpy as np
import pytest

from modwigner.models.lattice import LatticeSpec, ModularGrid
from modwigner.schemas.states import GkpParams
from modwigner.services import (
    LatticeService,
    OperatorService,
    QecService,
    StateService,
    TomographyService,
    WignerService,
    ZakService,
)

from tests import factories


# ---------------------------------------------------------------------------
# Geometry
# ---------------------------------------------------------------------------

@pytest.fixture
def lattice() -> LatticeSpec:
    """Default lattice l = sqrt(pi)."""
    return LatticeSpec()


@pytest.fixture
def unit_lattice() -> LatticeSpec:
    return LatticeSpec(1.0)


@pytest.fixture
def grid(lattice) -> ModularGrid:
    """Full-resolution grid used for GKP states."""
    return ModularGrid(lattice, 256, 256)


@pytest.fixture
def small_grid(lattice) -> ModularGrid:
    """Display grid small enough to hold 4-D Wigner values in memory."""
    return ModularGrid(lattice, 66, 66)


@pytest.fixture
def rng() -> np.random.Generator:
    return np.random.default_rng(1234)


# ---------------------------------------------------------------------------
# Services
# ---------------------------------------------------------------------------

@pytest.fixture
def lattice_service() -> LatticeService:
    return LatticeService()


@pytest.fixture
def zak_service() -> ZakService:
    return ZakService()


@pytest.fixture
def state_service() -> StateService:
    return StateService()


@pytest.fixture
def operator_service() -> OperatorService:
    return OperatorService()


@pytest.fixture
def wigner_service() -> WignerService:
    return WignerService()


@pytest.fixture
def qec_service() -> QecService:
    return QecService()


@pytest.fixture
def tomography_service() -> TomographyService:
    return TomographyService()


# ---------------------------------------------------------------------------
# States
# ---------------------------------------------------------------------------

@pytest.fixture
def gkp_plus() -> GkpParams:
    return GkpParams(delta=0.15, kappa=0.15, logical="plus")


@pytest.fixture
def gkp_plus_broad() -> GkpParams:
    return GkpParams(delta=0.21, kappa=0.21, logical="plus")


@pytest.fixture
def random_integer_state():
    return factories.IntegerWavefunctionFactory(nmax=3, mmax=3)

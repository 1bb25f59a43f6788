"""
Run configuration assembled from the key = value config grammar and CLI flags.

Every section forbids unknown keys; defaults come from ``settings``.
"""

import re
from typing import List, Literal, Optional, Tuple, Union

from pydantic import BaseModel, ConfigDict, Field, field_validator, model_validator

from ..config import settings
from ..models.lattice import SQRT_PI, LatticeSpec, ModularGrid
from .states import GkpParams, StateSpec

_SWEEP_PATTERN = re.compile(
    r"^\s*(delta|kappa)\s*=\s*([-+0-9.eE]+)\s*:\s*([-+0-9.eE]+)\s*:\s*([-+0-9.eE]+)\s*$"
)


class _Section(BaseModel):
    model_config = ConfigDict(extra="forbid")


class LatticeSection(_Section):
    l: float = Field(SQRT_PI, gt=0)


class GridSection(_Section):
    nx: int = Field(default_factory=lambda: settings.DEFAULT_NX, gt=0)
    np: int = Field(default_factory=lambda: settings.DEFAULT_NP, gt=0)
    nmax: int = Field(default_factory=lambda: settings.DEFAULT_NMAX, ge=0)
    mmax: int = Field(default_factory=lambda: settings.DEFAULT_MMAX, ge=0)
    display_nx: Optional[int] = Field(None, gt=0)
    display_np: Optional[int] = Field(None, gt=0)

    @field_validator("nx", "np", "display_nx", "display_np")
    @classmethod
    def must_be_even(cls, v):
        if v is not None and v % 2:
            raise ValueError("grid sizes must be even")
        return v


class WignerSection(_Section):
    fringe_threshold: float = Field(default_factory=lambda: settings.FRINGE_THRESHOLD, gt=0, lt=1)
    separable: Optional[bool] = None   # None: detect from the coefficients
    extension: Literal["periodic", "cell"] = "periodic"   # closed-form convention for flat momentum factors
    plot: bool = False


class QecSection(_Section):
    ancilla: GkpParams = Field(default_factory=lambda: GkpParams(delta=0.02, kappa=0.02))
    p: Union[float, Literal["sample"]] = 0.0
    rounds: int = Field(2, ge=0)
    sweep: Optional[str] = None

    @field_validator("sweep")
    @classmethod
    def validate_sweep(cls, v):
        if v is None:
            return v
        match = _SWEEP_PATTERN.match(v)
        if not match:
            raise ValueError("sweep must look like delta=start:stop:step or kappa=start:stop:step")
        start, stop, step = (float(g) for g in match.groups()[1:])
        if step <= 0 or stop < start or start <= 0:
            raise ValueError("sweep needs 0 < start <= stop and a positive step")
        return v

    def sweep_values(self) -> Tuple[str, List[float]]:
        """(parameter, values) of the sweep, stop included when on the step grid."""
        match = _SWEEP_PATTERN.match(self.sweep or "")
        if not match:
            return "delta", []
        name = match.group(1)
        start, stop, step = (float(g) for g in match.groups()[1:])
        count = int(round((stop - start) / step)) + 1
        values = [start + i * step for i in range(count) if start + i * step <= stop + 1e-12]
        return name, values


class TomoSection(_Section):
    alpha_points: Optional[int] = Field(None, gt=0)   # None: 4*Nmax+2
    beta_points: Optional[int] = Field(None, gt=0)    # None: 4*Mmax+2
    extension: Literal["periodic", "quasi_periodic"] = "periodic"
    protocol: Literal["modular", "integer"] = "modular"


class OutputSection(_Section):
    out_dir: str = Field(default_factory=lambda: settings.OUTPUT_DIR)
    seed: Optional[int] = Field(default_factory=lambda: settings.DEFAULT_SEED)


class RunConfig(_Section):
    lattice: LatticeSection = Field(default_factory=LatticeSection)
    grid: GridSection = Field(default_factory=GridSection)
    state: StateSpec = Field(default_factory=lambda: GkpParams(delta=0.15, kappa=0.15, logical="plus"))
    wigner: WignerSection = Field(default_factory=WignerSection)
    qec: QecSection = Field(default_factory=QecSection)
    tomo: TomoSection = Field(default_factory=TomoSection)
    output: OutputSection = Field(default_factory=OutputSection)

    @model_validator(mode="after")
    def bind_state_lattice(self):
        # states without an explicit period inherit the run lattice
        if self.state.l is None:
            self.state = self.state.model_copy(update={"l": self.lattice.l})
        if self.qec.ancilla.l is None:
            self.qec.ancilla = self.qec.ancilla.model_copy(update={"l": self.lattice.l})
        return self

    @property
    def lattice_spec(self) -> LatticeSpec:
        return self.state.lattice

    def state_grid(self) -> ModularGrid:
        return ModularGrid(self.lattice_spec, self.grid.nx, self.grid.np)

    def display_grid(self) -> ModularGrid:
        return ModularGrid(
            self.lattice_spec,
            self.grid.display_nx or self.grid.nx,
            self.grid.display_np or self.grid.np,
        )

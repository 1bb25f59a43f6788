from typing import Annotated, Literal, Optional, Union

from pydantic import BaseModel, ConfigDict, Field, field_validator

from ..models.lattice import SQRT_PI, LatticeSpec


class StateParamsBase(BaseModel):
    """Shared lattice handling; ``l=None`` means "use the run lattice"."""

    model_config = ConfigDict(extra="forbid", frozen=True)

    l: Optional[float] = Field(None, gt=0, description="Position-lattice period")

    @property
    def lattice(self) -> LatticeSpec:
        return LatticeSpec(self.l if self.l is not None else SQRT_PI)


class GkpParams(StateParamsBase):
    kind: Literal["gkp"] = "gkp"
    delta: float = Field(0.15, gt=0, description="Peak width in xbar")
    kappa: Optional[float] = Field(None, gt=0, description="Envelope width in pbar (defaults to delta)")
    logical: Literal["zero", "one", "plus", "minus"] = "plus"
    ideal: bool = False

    @field_validator("logical", mode="before")
    @classmethod
    def normalize_logical(cls, v):
        aliases = {"0": "zero", "1": "one", "+": "plus", "-": "minus"}
        if isinstance(v, (str, int)):
            return aliases.get(str(v).strip().lower(), str(v).strip().lower())
        return v

    @property
    def envelope(self) -> float:
        return self.kappa if self.kappa is not None else self.delta

    @property
    def regime(self) -> str:
        """"sharp" iff l >= 10*delta and 2*pi/l >= 10*kappa."""
        lattice = self.lattice
        if lattice.l >= 10 * self.delta and lattice.p_period >= 10 * self.envelope:
            return "sharp"
        return "broad"


class ShiftError(BaseModel):
    model_config = ConfigDict(frozen=True)

    u: float = 0.0
    v: float = 0.0

    def in_cell(self, lattice: LatticeSpec) -> bool:
        return abs(self.u) < lattice.x_half and abs(self.v) < lattice.p_half


class CoherentParams(StateParamsBase):
    kind: Literal["coherent"] = "coherent"
    x0: float = 0.0
    p0: float = 0.0
    sigma: float = Field(0.1, gt=0)


class CatParams(StateParamsBase):
    kind: Literal["cat"] = "cat"
    separation: Optional[float] = Field(None, ge=0, description="Distance between the two bumps (defaults to l/2)")
    sigma: float = Field(0.1, gt=0)
    parity: Literal["even", "odd"] = "even"

    @field_validator("parity", mode="before")
    @classmethod
    def normalize_parity(cls, v):
        if isinstance(v, str):
            return {"+": "even", "-": "odd"}.get(v.strip(), v.strip().lower())
        return v


class Pi2Params(StateParamsBase):
    kind: Literal["pi2"] = "pi2"
    n0: int = 2
    m0: int = 0
    sign: Literal["+", "-"] = "+"


class PlaneWaveParams(StateParamsBase):
    """Single integer-basis state |n, m>."""

    kind: Literal["plane"] = "plane"
    n: int = 0
    m: int = 0


class UniformParams(StateParamsBase):
    kind: Literal["uniform"] = "uniform"


StateSpec = Annotated[
    Union[GkpParams, CoherentParams, CatParams, Pi2Params, PlaneWaveParams, UniformParams],
    Field(discriminator="kind"),
]

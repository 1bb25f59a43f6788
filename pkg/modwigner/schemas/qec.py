from typing import Any, List, Optional

from pydantic import BaseModel, ConfigDict, Field

from .states import GkpParams


class ModularWidths(BaseModel):
    """Least-squares Gaussian widths of the modular marginals."""
    delta: float
    kappa: float
    residual: float    # rms residual of both fits, relative to the marginal peaks


class QecReport(BaseModel):
    """Outcome of a Steane correction pipeline."""
    model_config = ConfigDict(arbitrary_types_allowed=True)

    input_state: str
    ancilla: GkpParams
    rounds: int
    homodyne_values: List[float] = Field(default_factory=list)
    p_no_err_before: float = Field(..., ge=0, le=1)
    p_no_err_after: float = Field(..., ge=0, le=1)
    fringes_before: int
    fringes_after: int
    widths_before: ModularWidths
    widths_after: ModularWidths
    photon_number_before: float
    photon_number_after: float
    output_norm: float
    projected_onto_gkp: bool = False
    warnings: List[str] = Field(default_factory=list)
    output_state: Optional[Any] = Field(None, exclude=True)


class QecSweepRow(BaseModel):
    delta: float
    kappa: float
    p_before: float
    p_after: float
    fringes_before: int
    fringes_after: int

from typing import Any, Dict, List, Optional

from pydantic import BaseModel, Field


class FringeAnalysis(BaseModel):
    """Interference oscillations along the integer axis of the (xbar, n) cylinder."""
    count: int
    column_xbar: Optional[float] = None   # None when no interference column exists
    extrema: List[int] = Field(default_factory=list)   # n values of the counted extrema
    threshold: float = 0.2
    saturated: bool = False               # count limited by the truncation window


class WignerManifest(BaseModel):
    """Metadata written next to every exported Wigner surface."""
    state: str
    lattice_l: float
    nmax: int
    mmax: int
    size_x: int
    size_p: int
    separable: bool
    normalization: float
    imaginary_residue: float
    truncation_loss: float
    excluded_samples: int = 0
    warnings: List[str] = Field(default_factory=list)
    files: Dict[str, str] = Field(default_factory=dict)
    config: Dict[str, Any] = Field(default_factory=dict)
    generated_at: str

from pydantic import BaseModel, Field


class TomographySample(BaseModel):
    """Pointer readout at one (alpha, beta) shift and one post-selected (xbar, pbar)."""
    alpha: float
    beta: float
    xbar: float
    pbar: float
    gamma_x: float = Field(0.0, ge=-1.0, le=1.0)
    gamma_y: float = Field(0.0, ge=-1.0, le=1.0)
    probability: float = Field(0.0, ge=0.0)   # post-selection probability density
    valid: bool = True


class IntegerTomographySample(BaseModel):
    """Pointer readout of the controlled exp(i(a xbar + b pbar)) protocol, post-selected on |n, m>."""
    d: int
    e: int
    n: int
    m: int
    gamma_x: float = Field(0.0, ge=-1.0, le=1.0)
    gamma_y: float = Field(0.0, ge=-1.0, le=1.0)
    probability: float = Field(0.0, ge=0.0)
    valid: bool = True

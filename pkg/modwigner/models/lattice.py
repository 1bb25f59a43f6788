"""
Lattice geometry and discretization of the fundamental cell.

The cell is [-l/2, l/2) x [-pi/l, pi/l) with the lower edges included.
Grids are uniform and carry no midpoint offset, so the node at index 0 sits
on the lower edge and the cell centre is node N/2.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from functools import cached_property

import numpy as np

from ..exceptions import DomainError

SQRT_PI = math.sqrt(math.pi)


@dataclass(frozen=True)
class LatticeSpec:
    """Position period l; the momentum period 2*pi/l is always derived."""

    l: float = SQRT_PI

    def __post_init__(self) -> None:
        if not math.isfinite(self.l) or self.l <= 0:
            raise DomainError(f"Lattice period must be positive and finite, got {self.l}", l=self.l)

    @property
    def p_period(self) -> float:
        return 2.0 * math.pi / self.l

    @property
    def x_half(self) -> float:
        return 0.5 * self.l

    @property
    def p_half(self) -> float:
        return math.pi / self.l


@dataclass(frozen=True)
class ModularPoint:
    n: int
    xbar: float
    m: int
    pbar: float


@dataclass(frozen=True)
class ModularGrid:
    """Uniform Nx x Np sampling of the fundamental cell."""

    lattice: LatticeSpec = field(default_factory=LatticeSpec)
    size_x: int = 256
    size_p: int = 256

    def __post_init__(self) -> None:
        for name, size in (("size_x", self.size_x), ("size_p", self.size_p)):
            if size <= 0 or size % 2:
                raise DomainError(f"{name} must be a positive even integer, got {size}", **{name: size})

    @property
    def dx(self) -> float:
        return self.lattice.l / self.size_x

    @property
    def dp(self) -> float:
        return self.lattice.p_period / self.size_p

    @property
    def cell_measure(self) -> float:
        return self.lattice.l * self.lattice.p_period

    @cached_property
    def xbar(self) -> np.ndarray:
        return -self.lattice.x_half + self.dx * np.arange(self.size_x)

    @cached_property
    def pbar(self) -> np.ndarray:
        return -self.lattice.p_half + self.dp * np.arange(self.size_p)

    def mesh(self) -> tuple[np.ndarray, np.ndarray]:
        """(xbar, pbar) arrays broadcast to shape (Nx, Np)."""
        return np.meshgrid(self.xbar, self.pbar, indexing="ij")

    def quadrature(self, values: np.ndarray) -> complex:
        """Periodic rectangle rule over the cell (equal to the trapezoid rule)."""
        return np.sum(values) * self.dx * self.dp

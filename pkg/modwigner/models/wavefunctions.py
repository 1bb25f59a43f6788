"""
State containers for the three representations.

Arrays are owned by the containers; services never mutate them in place and
always return new instances.
"""

from __future__ import annotations

from dataclasses import dataclass, field, replace
from typing import List

import numpy as np

from ..exceptions import DomainError, PreconditionError
from .lattice import LatticeSpec, ModularGrid


@dataclass(frozen=True, eq=False)
class PositionWavefunction:
    """
    Samples of psi(x) on K consecutive cells, shape (K, Nx).

    Row r holds cell n = r - (K-1)/2, column j the node x = n*l + xbar_j.
    """

    lattice: LatticeSpec
    samples: np.ndarray
    label: str = ""

    def __post_init__(self) -> None:
        if self.samples.ndim != 2:
            raise DomainError("Position samples must be a (cells, Nx) array", shape=self.samples.shape)
        cells, size_x = self.samples.shape
        if cells < 1 or cells % 2 == 0:
            raise PreconditionError(f"Cell count must be a positive odd integer, got {cells}", cells=cells)
        if size_x % 2:
            raise DomainError(f"Per-cell resolution must be even, got {size_x}", size_x=size_x)

    @property
    def cells(self) -> int:
        return self.samples.shape[0]

    @property
    def size_x(self) -> int:
        return self.samples.shape[1]

    @property
    def dx(self) -> float:
        return self.lattice.l / self.size_x

    @property
    def cell_indices(self) -> np.ndarray:
        half = (self.cells - 1) // 2
        return np.arange(-half, half + 1)

    @property
    def x(self) -> np.ndarray:
        """Sample positions, same shape as ``samples``."""
        xbar = -0.5 * self.lattice.l + self.dx * np.arange(self.size_x)
        return self.cell_indices[:, None] * self.lattice.l + xbar[None, :]

    @property
    def norm(self) -> float:
        return float(np.sum(np.abs(self.samples) ** 2) * self.dx)

    def normalized(self) -> "PositionWavefunction":
        return replace(self, samples=self.samples / np.sqrt(self.norm))

    def padded(self, cells: int) -> "PositionWavefunction":
        """Zero-pad symmetrically to ``cells`` cells (odd, not smaller)."""
        if cells < self.cells or cells % 2 == 0:
            raise PreconditionError(
                f"Cannot pad {self.cells} cells to {cells}", cells=cells, current=self.cells
            )
        extra = (cells - self.cells) // 2
        return replace(self, samples=np.pad(self.samples, ((extra, extra), (0, 0))))

    def edge_mass(self) -> float:
        """Probability held by the two outermost cells."""
        if self.cells == 1:
            return 0.0
        edge = np.abs(self.samples[0]) ** 2 + np.abs(self.samples[-1]) ** 2
        return float(np.sum(edge) * self.dx)


@dataclass(frozen=True, eq=False)
class ModularWavefunction:
    """Amplitudes psi(xbar_j, pbar_k) on a ModularGrid, shape (Nx, Np)."""

    grid: ModularGrid
    amplitudes: np.ndarray
    label: str = ""
    ideal_limit: bool = False
    warnings: List[str] = field(default_factory=list)

    def __post_init__(self) -> None:
        expected = (self.grid.size_x, self.grid.size_p)
        if self.amplitudes.shape != expected:
            raise DomainError(
                "Amplitude array does not match the grid",
                shape=self.amplitudes.shape,
                expected=expected,
            )

    @property
    def lattice(self) -> LatticeSpec:
        return self.grid.lattice

    @property
    def density(self) -> np.ndarray:
        return np.abs(self.amplitudes) ** 2

    @property
    def norm(self) -> float:
        return float(self.grid.quadrature(self.density).real)

    def normalized(self) -> "ModularWavefunction":
        return replace(self, amplitudes=self.amplitudes / np.sqrt(self.norm))

    def extend(self, shift_cells: int) -> np.ndarray:
        """Amplitudes on the cell displaced by ``shift_cells`` periods in xbar."""
        phase = np.exp(1j * shift_cells * self.lattice.l * self.grid.pbar)
        return self.amplitudes * phase[None, :]

    def x_marginal(self) -> np.ndarray:
        return np.sum(self.density, axis=1) * self.grid.dp

    def p_marginal(self) -> np.ndarray:
        return np.sum(self.density, axis=0) * self.grid.dx


@dataclass(frozen=True, eq=False)
class IntegerWavefunction:
    """Coefficients psi_{n,m} for |n| <= Nmax, |m| <= Mmax, shape (2Nmax+1, 2Mmax+1)."""

    lattice: LatticeSpec
    coefficients: np.ndarray
    truncation_loss: float = 0.0
    label: str = ""

    def __post_init__(self) -> None:
        rows, cols = self.coefficients.shape
        if rows % 2 == 0 or cols % 2 == 0:
            raise DomainError("Integer coefficient array must have odd dimensions", shape=(rows, cols))

    @property
    def nmax(self) -> int:
        return (self.coefficients.shape[0] - 1) // 2

    @property
    def mmax(self) -> int:
        return (self.coefficients.shape[1] - 1) // 2

    @property
    def n_values(self) -> np.ndarray:
        return np.arange(-self.nmax, self.nmax + 1)

    @property
    def m_values(self) -> np.ndarray:
        return np.arange(-self.mmax, self.mmax + 1)

    @property
    def norm(self) -> float:
        return float(np.sum(np.abs(self.coefficients) ** 2))

    def coefficient(self, n: int, m: int) -> complex:
        if abs(n) > self.nmax or abs(m) > self.mmax:
            return 0j
        return complex(self.coefficients[n + self.nmax, m + self.mmax])

    def vector(self) -> np.ndarray:
        """Flattened coefficients, index (n+Nmax)*(2Mmax+1) + (m+Mmax)."""
        return self.coefficients.reshape(-1)

    def normalized(self) -> "IntegerWavefunction":
        return replace(self, coefficients=self.coefficients / np.sqrt(self.norm))

    def resized(self, nmax: int, mmax: int) -> "IntegerWavefunction":
        """Zero-pad or crop to new bounds; cropped mass is added to the loss."""
        out = np.zeros((2 * nmax + 1, 2 * mmax + 1), dtype=complex)
        keep_n = min(nmax, self.nmax)
        keep_m = min(mmax, self.mmax)
        src = self.coefficients[
            self.nmax - keep_n:self.nmax + keep_n + 1,
            self.mmax - keep_m:self.mmax + keep_m + 1,
        ]
        out[nmax - keep_n:nmax + keep_n + 1, mmax - keep_m:mmax + keep_m + 1] = src
        dropped = self.norm - float(np.sum(np.abs(src) ** 2))
        return replace(self, coefficients=out, truncation_loss=self.truncation_loss + max(dropped, 0.0))


@dataclass(frozen=True, eq=False)
class HybridTable:
    """
    Amplitudes in a hybrid basis.

    ``which="xm"``: values[j, i] = psi(xbar_j, m_i), ``which="np"``:
    values[i, k] = psi(n_i, pbar_k); ``indices`` holds the integer labels.
    """

    which: str
    indices: np.ndarray
    values: np.ndarray

    @property
    def density(self) -> np.ndarray:
        return np.abs(self.values) ** 2

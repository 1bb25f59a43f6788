from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .lattice import LatticeSpec
from .wavefunctions import IntegerWavefunction


@dataclass(frozen=True)
class DisplacementLabel:
    """Label (n, xbar, m, pbar) of a modular displacement; xbar, pbar lie in the cell."""

    n: int
    xbar: float
    m: int
    pbar: float

    def inverse(self) -> "DisplacementLabel":
        return DisplacementLabel(-self.n, -self.xbar, -self.m, -self.pbar)

    def as_tuple(self) -> tuple[int, float, int, float]:
        return (self.n, self.xbar, self.m, self.pbar)


@dataclass(frozen=True, eq=False)
class OperatorMatrix:
    """
    Dense matrix over the truncated integer basis.

    Flattened index i = (r + Nmax)*(2Mmax+1) + (s + Mmax). ``truncated``
    flags the columns whose image leaves the truncation window.
    """

    lattice: LatticeSpec
    nmax: int
    mmax: int
    matrix: np.ndarray
    truncated: np.ndarray
    label: str = ""

    @property
    def dimension(self) -> int:
        return (2 * self.nmax + 1) * (2 * self.mmax + 1)

    def index_grid(self) -> tuple[np.ndarray, np.ndarray]:
        """(r, s) integer values for every flattened index."""
        r, s = np.meshgrid(
            np.arange(-self.nmax, self.nmax + 1),
            np.arange(-self.mmax, self.mmax + 1),
            indexing="ij",
        )
        return r.reshape(-1), s.reshape(-1)

    def interior(self, margin_n: int, margin_m: int) -> np.ndarray:
        """Boolean mask of indices with |r| <= Nmax - margin_n and |s| <= Mmax - margin_m."""
        r, s = self.index_grid()
        return (np.abs(r) <= self.nmax - margin_n) & (np.abs(s) <= self.mmax - margin_m)

    def apply(self, state: IntegerWavefunction) -> IntegerWavefunction:
        vec = self.matrix @ state.resized(self.nmax, self.mmax).vector()
        return IntegerWavefunction(
            lattice=state.lattice,
            coefficients=vec.reshape(2 * self.nmax + 1, 2 * self.mmax + 1),
            truncation_loss=state.truncation_loss,
            label=f"{self.label}·{state.label}",
        )

    def __matmul__(self, other: "OperatorMatrix") -> "OperatorMatrix":
        return OperatorMatrix(
            lattice=self.lattice,
            nmax=self.nmax,
            mmax=self.mmax,
            matrix=self.matrix @ other.matrix,
            truncated=self.truncated | other.truncated,
            label=f"{self.label}·{other.label}",
        )

    def dagger(self) -> "OperatorMatrix":
        return OperatorMatrix(
            lattice=self.lattice,
            nmax=self.nmax,
            mmax=self.mmax,
            matrix=self.matrix.conj().T,
            truncated=np.linalg.norm(self.matrix, axis=1) < 0.5,
            label=f"({self.label})†",
        )

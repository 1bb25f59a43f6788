"""
Cylinder Wigner surfaces.

A surface is stored either as its Fourier sectors Q[d, e, n, m] in the
modular variables,

    W(n, m, xbar, pbar) = 1/(2 pi) * sum_{d,e} Q[d,e,n,m] exp(2 pi i d xbar / l) exp(-i e pbar l),

with d in [-2Nmax, 2Nmax] and e in [-2Mmax, 2Mmax], or, for separable
states, as the two factor sector tables or factor surfaces, or directly as sampled values
(tomographic reconstructions and CSV imports).
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from functools import cached_property
from typing import List, Optional, Sequence, Tuple

import numpy as np

from ..exceptions import DomainError
from .lattice import LatticeSpec, ModularGrid
from .wavefunctions import IntegerWavefunction


@dataclass(frozen=True, eq=False)
class EnsembleState:
    """Convex combination of pure states given by their integer coefficients."""

    components: Sequence[Tuple[float, IntegerWavefunction]]

    def __post_init__(self) -> None:
        if not self.components:
            raise DomainError("An ensemble needs at least one component")
        weights = np.array([w for w, _ in self.components], dtype=float)
        if np.any(weights <= 0):
            raise DomainError("Ensemble weights must be positive", weights=weights.tolist())
        if abs(weights.sum() - 1.0) > 1e-12:
            raise DomainError("Ensemble weights must sum to one", total=float(weights.sum()))

    @classmethod
    def from_weights(
        cls, weights: Sequence[float], states: Sequence[IntegerWavefunction]
    ) -> "EnsembleState":
        total = float(sum(weights))
        return cls(tuple((float(w) / total, s) for w, s in zip(weights, states)))

    @classmethod
    def pure(cls, state: IntegerWavefunction) -> "EnsembleState":
        return cls(((1.0, state),))

    @property
    def lattice(self) -> LatticeSpec:
        return self.components[0][1].lattice

    def density_matrix(self) -> np.ndarray:
        """rho over the flattened truncated basis (small truncations only)."""
        dim = self.components[0][1].coefficients.size
        rho = np.zeros((dim, dim), dtype=complex)
        for weight, state in self.components:
            vec = state.vector()
            rho += weight * np.outer(vec, vec.conj())
        return rho


@dataclass(frozen=True, eq=False)
class Marginals:
    modular_density: np.ndarray    # (Nx, Np)      <xbar,pbar|rho|xbar,pbar>
    integer_density: np.ndarray    # (2N+1, 2M+1)  <n,m|rho|n,m>
    crossed_1: np.ndarray          # (Nx, 2M+1)    density over (xbar, m)
    crossed_2: np.ndarray          # (2N+1, Np)    density over (n, pbar)
    partial_trace_F: np.ndarray    # (2M+1, Np)    sum_n int dxbar W
    partial_trace_G: np.ndarray    # (2N+1, Nx)    sum_m int dpbar W


@dataclass(frozen=True, eq=False)
class CylinderWigner:
    lattice: LatticeSpec
    nmax: int
    mmax: int
    grid: ModularGrid
    sectors: Optional[np.ndarray] = None
    factor_sectors: Optional[Tuple[np.ndarray, np.ndarray]] = None
    factor_values: Optional[Tuple[np.ndarray, np.ndarray]] = None
    raw_values: Optional[np.ndarray] = None
    source: Optional[EnsembleState] = None
    truncation_loss: float = 0.0
    excluded_samples: int = 0
    warnings: List[str] = field(default_factory=list)

    def __post_init__(self) -> None:
        given = sum(
            x is not None for x in (self.sectors, self.factor_sectors, self.factor_values, self.raw_values)
        )
        if given != 1:
            raise DomainError("A Wigner surface needs exactly one source of values")

    # ------------------------------------------------------------------
    # Evaluation
    # ------------------------------------------------------------------

    @property
    def n_values(self) -> np.ndarray:
        return np.arange(-self.nmax, self.nmax + 1)

    @property
    def m_values(self) -> np.ndarray:
        return np.arange(-self.mmax, self.mmax + 1)

    def _phase_tables(self) -> Tuple[np.ndarray, np.ndarray]:
        d = np.arange(-2 * self.nmax, 2 * self.nmax + 1)
        e = np.arange(-2 * self.mmax, 2 * self.mmax + 1)
        ex = np.exp(2j * math.pi * np.outer(d, self.grid.xbar) / self.lattice.l)
        ep = np.exp(-1j * np.outer(e, self.grid.pbar) * self.lattice.l)
        return ex, ep

    @cached_property
    def factors(self) -> Optional[Tuple[np.ndarray, np.ndarray]]:
        """(W_f(n, xbar), W_g(m, pbar)) for separable surfaces, else None."""
        if self.factor_values is not None:
            return self.factor_values
        if self.factor_sectors is None:
            return None
        qf, qg = self.factor_sectors
        ex, ep = self._phase_tables()
        wf = (qf.T @ ex) / self.lattice.l
        wg = (qg.T @ ep) * self.lattice.l / (2 * math.pi)
        return wf, wg

    @cached_property
    def _surface(self) -> Tuple[np.ndarray, float]:
        if self.raw_values is not None:
            return np.asarray(self.raw_values, dtype=float), 0.0
        if self.factors is not None:
            wf, wg = self.factors
            full = wf[:, None, :, None] * wg[None, :, None, :]
        else:
            ex, ep = self._phase_tables()
            full = np.einsum("denm,dj,ek->nmjk", self.sectors, ex, ep, optimize=True) / (2 * math.pi)
        residue = float(np.max(np.abs(full.imag))) if full.size else 0.0
        return np.ascontiguousarray(full.real), residue

    @property
    def values(self) -> np.ndarray:
        """Real surface W[n, m, j, k]."""
        return self._surface[0]

    @property
    def imaginary_residue(self) -> float:
        return self._surface[1]

    @property
    def is_separable(self) -> bool:
        return self.factors is not None

    @property
    def normalization(self) -> float:
        """sum_{n,m} of the cell integral of W."""
        if self.factors is not None:
            wf, wg = self.factors
            return float(np.sum(wf.real) * self.grid.dx * np.sum(wg.real) * self.grid.dp)
        return float(np.sum(self.values) * self.grid.dx * self.grid.dp)

    def section(self, n: int, m: int) -> np.ndarray:
        """W(n, m, ., .) as an (Nx, Np) array."""
        if self.factors is not None and self.raw_values is None:
            wf, wg = self.factors
            return np.outer(wf[n + self.nmax], wg[m + self.mmax]).real
        return self.values[n + self.nmax, m + self.mmax]

"""
Zak Service — conversions between position samples, the modular
wavefunction on the cell, the integer basis and the two hybrid bases.

Conventions (C = sqrt(l / 2 pi)):
  1. Z(xbar, pbar) = C * sum_n psi(xbar + n l) exp(-i n pbar l).
  2. psi_{n,m} = int int Z(xbar, pbar) e*_{n,m}(xbar, pbar) with the
     integer kernel e_{n,m} = (2 pi)^(-1/2) exp(i (2 pi n xbar / l - m pbar l)).
  3. Every sum is an FFT on the uniform grid; the ``*_direct`` methods
     evaluate the same sums term by term and serve as reference.
"""

from __future__ import annotations

import logging
import math
from typing import Literal, Optional, Tuple, Union

import numpy as np

from ..config import settings
from ..exceptions import AliasingError, DomainError, PreconditionError, TruncationError
from ..models.lattice import LatticeSpec, ModularGrid
from ..models.wavefunctions import (
    HybridTable,
    IntegerWavefunction,
    ModularWavefunction,
    PositionWavefunction,
)
from .lattice_service import LatticeService

logger = logging.getLogger(__name__)

Extension = Literal["quasi_periodic", "periodic"]

_INV_SQRT_2PI = 1.0 / math.sqrt(2.0 * math.pi)


def _zak_constant(lattice: LatticeSpec) -> float:
    return math.sqrt(lattice.l / (2.0 * math.pi))


def _alternating(values: np.ndarray) -> np.ndarray:
    return np.where(np.asarray(values) % 2 == 0, 1.0, -1.0)


def _check_resolution(grid: ModularGrid, nmax: int, mmax: int) -> None:
    if grid.size_x < 2 * nmax + 1 or grid.size_p < 2 * mmax + 1:
        raise AliasingError(
            f"Grid {grid.size_x}x{grid.size_p} cannot resolve truncation ({nmax}, {mmax})",
            size_x=grid.size_x,
            size_p=grid.size_p,
            nmax=nmax,
            mmax=mmax,
        )


class ZakService:

    def __init__(self):
        self.lattice_service = LatticeService()

    # ------------------------------------------------------------------
    # Position <-> modular
    # ------------------------------------------------------------------

    def zak_forward(
        self,
        psi: PositionWavefunction,
        size_p: Optional[int] = None,
        check_support: bool = True,
    ) -> ModularWavefunction:
        """Fold the K cells of ``psi`` onto the cell (Np momentum nodes)."""
        size_p = size_p or settings.DEFAULT_NP
        grid = ModularGrid(psi.lattice, psi.size_x, size_p)
        norm = psi.norm
        if norm <= 0:
            raise DomainError("Cannot transform the null wavefunction")
        edge = psi.edge_mass() / norm
        if check_support and edge > settings.TRUNCATION_TOLERANCE:
            raise TruncationError(
                f"{psi.cells} cells do not cover the support (edge mass {edge:.3e})",
                edge_mass=edge,
                cells=psi.cells,
                tolerance=settings.TRUNCATION_TOLERANCE,
            )

        n = psi.cell_indices
        folded = np.zeros((size_p, psi.size_x), dtype=complex)
        np.add.at(folded, n % size_p, _alternating(n)[:, None] * psi.samples)
        amplitudes = _zak_constant(psi.lattice) * np.fft.fft(folded, axis=0).T

        logger.debug("zak_forward: %d cells x %d nodes -> %dx%d", psi.cells, psi.size_x, grid.size_x, grid.size_p)
        return ModularWavefunction(grid=grid, amplitudes=amplitudes, label=psi.label)

    def zak_forward_direct(self, psi: PositionWavefunction, size_p: int) -> ModularWavefunction:
        """Term-by-term evaluation of the Zak sum; reference for ``zak_forward``."""
        grid = ModularGrid(psi.lattice, psi.size_x, size_p)
        phase = np.exp(-1j * np.outer(psi.cell_indices, grid.pbar) * psi.lattice.l)
        amplitudes = _zak_constant(psi.lattice) * (psi.samples.T @ phase)
        return ModularWavefunction(grid=grid, amplitudes=amplitudes, label=psi.label)

    def zak_inverse(self, mod: ModularWavefunction, cells: int) -> PositionWavefunction:
        """Unfold onto ``cells`` consecutive cells centred on cell 0."""
        if cells < 1 or cells % 2 == 0:
            raise PreconditionError(f"Cell count must be a positive odd integer, got {cells}", cells=cells)
        half = (cells - 1) // 2
        n = np.arange(-half, half + 1)
        spectrum = np.fft.ifft(mod.amplitudes, axis=1)
        samples = (spectrum[:, n % mod.grid.size_p].T * _alternating(n)[:, None]) / _zak_constant(mod.lattice)
        return PositionWavefunction(lattice=mod.lattice, samples=samples, label=mod.label)

    # ------------------------------------------------------------------
    # Modular <-> integer
    # ------------------------------------------------------------------

    def modular_to_integer(self, mod: ModularWavefunction, nmax: int, mmax: int) -> IntegerWavefunction:
        _check_resolution(mod.grid, nmax, mmax)
        n = np.arange(-nmax, nmax + 1)
        m = np.arange(-mmax, mmax + 1)
        spectrum = np.fft.ifft(np.fft.fft(mod.amplitudes, axis=0), axis=1)
        signs = np.outer(_alternating(n), _alternating(m))
        coefficients = (math.sqrt(2 * math.pi) / mod.grid.size_x) * signs * spectrum[np.ix_(n % mod.grid.size_x, m % mod.grid.size_p)]
        loss = max(mod.norm - float(np.sum(np.abs(coefficients) ** 2)), 0.0)
        if loss > settings.TRUNCATION_TOLERANCE:
            logger.info("modular_to_integer: truncation (%d, %d) drops %.3e of the norm", nmax, mmax, loss)
        return IntegerWavefunction(
            lattice=mod.lattice,
            coefficients=coefficients,
            truncation_loss=loss,
            label=mod.label,
        )

    def modular_to_integer_direct(self, mod: ModularWavefunction, nmax: int, mmax: int) -> IntegerWavefunction:
        """Term-by-term inner products with the integer kernel; reference for the FFT path."""
        grid = mod.grid
        n = np.arange(-nmax, nmax + 1)
        m = np.arange(-mmax, mmax + 1)
        ex = np.exp(-2j * math.pi * np.outer(n, grid.xbar) / grid.lattice.l)
        ep = np.exp(1j * np.outer(grid.pbar, m) * grid.lattice.l)
        coefficients = _INV_SQRT_2PI * grid.dx * grid.dp * (ex @ mod.amplitudes @ ep)
        return IntegerWavefunction(lattice=mod.lattice, coefficients=coefficients, label=mod.label)

    def integer_to_modular(self, iw: IntegerWavefunction, grid: ModularGrid) -> ModularWavefunction:
        _check_resolution(grid, iw.nmax, iw.mmax)
        if grid.lattice != iw.lattice:
            raise DomainError("Grid and coefficients use different lattices", grid_l=grid.lattice.l, l=iw.lattice.l)
        placed = np.zeros((grid.size_x, grid.size_p), dtype=complex)
        signs = np.outer(_alternating(iw.n_values), _alternating(iw.m_values))
        placed[np.ix_(iw.n_values % grid.size_x, iw.m_values % grid.size_p)] = iw.coefficients * signs
        amplitudes = _INV_SQRT_2PI * grid.size_x * np.fft.ifft(np.fft.fft(placed, axis=1), axis=0)
        return ModularWavefunction(grid=grid, amplitudes=amplitudes, label=iw.label)

    def position_to_integer(
        self, psi: PositionWavefunction, nmax: int, mmax: int, size_p: Optional[int] = None
    ) -> IntegerWavefunction:
        return self.modular_to_integer(self.zak_forward(psi, size_p), nmax, mmax)

    def integer_kernel(
        self, n: int, m: int, xbar: np.ndarray, pbar: np.ndarray, lattice: LatticeSpec
    ) -> np.ndarray:
        """<xbar, pbar | n, m> evaluated pointwise."""
        xbar = np.asarray(xbar)
        pbar = np.asarray(pbar)
        return _INV_SQRT_2PI * np.exp(1j * (2 * math.pi * n * xbar / lattice.l - m * pbar * lattice.l))

    # ------------------------------------------------------------------
    # Hybrid bases
    # ------------------------------------------------------------------

    def hybrid_amplitude(
        self,
        mod: ModularWavefunction,
        which: Literal["xm", "np"],
        bound: Optional[int] = None,
    ) -> HybridTable:
        """
        psi(xbar, m) = sqrt(l/2pi) int psi e^{i m pbar l} dpbar, or
        psi(n, pbar) = l^(-1/2) int psi e^{-2 pi i n xbar / l} dxbar.

        Without ``bound`` every integer the grid resolves is returned.
        """
        grid = mod.grid
        if which == "xm":
            size = grid.size_p
            indices = self._hybrid_indices(size, bound)
            spectrum = np.fft.ifft(mod.amplitudes, axis=1)
            values = math.sqrt(2 * math.pi / grid.lattice.l) * spectrum[:, indices % size] * _alternating(indices)[None, :]
        elif which == "np":
            size = grid.size_x
            indices = self._hybrid_indices(size, bound)
            spectrum = np.fft.fft(mod.amplitudes, axis=0)
            values = (math.sqrt(grid.lattice.l) / size) * spectrum[indices % size, :] * _alternating(indices)[:, None]
        else:
            raise DomainError(f"Unknown hybrid basis {which!r}", which=which)
        return HybridTable(which=which, indices=indices, values=values)

    @staticmethod
    def _hybrid_indices(size: int, bound: Optional[int]) -> np.ndarray:
        if bound is None:
            return np.arange(-size // 2, size // 2)
        if 2 * bound + 1 > size:
            raise AliasingError(f"{size} nodes cannot resolve integers up to {bound}", size=size, bound=bound)
        return np.arange(-bound, bound + 1)

    # ------------------------------------------------------------------
    # Off-grid evaluation
    # ------------------------------------------------------------------

    def evaluate_integer(
        self,
        iw: IntegerWavefunction,
        xbar: Union[float, np.ndarray],
        pbar: Union[float, np.ndarray],
        extension: Extension = "quasi_periodic",
    ) -> np.ndarray:
        """
        Band-limited evaluation at arbitrary (xbar, pbar).

        The coefficient sum is periodic in both variables; with the
        quasi-periodic rule an xbar outside the cell picks up exp(i w l pbar)
        per winding w.
        """
        xbar, pbar = np.broadcast_arrays(np.asarray(xbar, dtype=float), np.asarray(pbar, dtype=float))
        shape = xbar.shape
        x = xbar.reshape(-1)
        p = pbar.reshape(-1)
        lattice = iw.lattice
        if extension == "quasi_periodic":
            winding, x = self.lattice_service.wrap_position(x, lattice)
            phase = np.exp(1j * np.asarray(winding) * lattice.l * p)
        elif extension == "periodic":
            phase = 1.0
        else:
            raise DomainError(f"Unknown extension rule {extension!r}", extension=extension)
        ex = np.exp(2j * math.pi * np.outer(x, iw.n_values) / lattice.l)
        ep = np.exp(-1j * np.outer(p, iw.m_values) * lattice.l)
        values = _INV_SQRT_2PI * np.sum((ex @ iw.coefficients) * ep, axis=1) * phase
        return values.reshape(shape)

    def evaluate_modular(
        self,
        mod: ModularWavefunction,
        xbar: Union[float, np.ndarray],
        pbar: Union[float, np.ndarray],
        extension: Extension = "quasi_periodic",
    ) -> np.ndarray:
        """Trigonometric interpolation of the grid amplitudes (Nyquist modes dropped)."""
        full = self.modular_to_integer(mod, mod.grid.size_x // 2 - 1, mod.grid.size_p // 2 - 1)
        return self.evaluate_integer(full, xbar, pbar, extension)

    # ------------------------------------------------------------------
    # Position <-> momentum
    # ------------------------------------------------------------------

    def momentum_from_position(self, psi: PositionWavefunction) -> Tuple[np.ndarray, np.ndarray]:
        """(p, phi(p)) on the FFT-conjugate grid of the K-cell window, p ascending."""
        x = psi.x.reshape(-1)
        total = x.size
        p = 2 * math.pi * np.fft.fftfreq(total, d=psi.dx)
        phi = _INV_SQRT_2PI * psi.dx * np.exp(-1j * p * x[0]) * np.fft.fft(psi.samples.reshape(-1))
        return np.fft.fftshift(p), np.fft.fftshift(phi)

    def position_from_momentum(
        self, p: np.ndarray, phi: np.ndarray, like: PositionWavefunction
    ) -> PositionWavefunction:
        """Inverse of ``momentum_from_position`` onto the window of ``like``."""
        x0 = like.x.reshape(-1)[0]
        total = p.size
        dp = 2 * math.pi / (total * like.dx)
        p = np.fft.ifftshift(p)
        phi = np.fft.ifftshift(phi)
        samples = _INV_SQRT_2PI * dp * total * np.fft.ifft(phi * np.exp(1j * p * x0))
        return PositionWavefunction(
            lattice=like.lattice,
            samples=samples.reshape(like.cells, like.size_x),
            label=like.label,
        )

"""
Tomography Service — modular Wigner reconstruction from pointer readouts.

Protocol:
  1. Entangle the state with an ideal-limit GKP pointer through
     C(alpha, beta) = exp(i (2 pi alpha N / l - beta l M) (x) Gamma_z); the two
     pointer branches carry psi shifted by +-(alpha, beta) along the cell
     (periodic extension, since N and M are integer generators; see
     correlation_function for the quasi-periodic phase).
  2. Post-select the state on |xbar, pbar>; the pointer is left in
     a0|0> + a1|1> with a0 = psi(xbar + alpha, pbar + beta) and
     a1 = psi(xbar - alpha, pbar - beta).
  3. Read Gamma_x, Gamma_y.  probability * (gamma_x + i gamma_y) is the
     correlation C(xbar, pbar, alpha, beta) = a0 * conj(a1).
  4. Fourier transform C over (alpha, beta) and fold the harmonics through
     sinc(n - u/2) sinc(m - v/2) into W(n, m, xbar, pbar).

The integer variant post-selects on |n, m>.  Its pointer branches shift
the coefficients by (ceil(d/2), ceil(e/2)) and -(floor(d/2), floor(e/2)),
so odd sectors are read at half-shifted pairs and folded through the same
sinc kernels as the sector table.
"""

from __future__ import annotations

import logging
import math
from concurrent.futures import ThreadPoolExecutor
from typing import List, Optional, Sequence, Tuple, Union

import numpy as np

from ..config import settings
from ..exceptions import AliasingError, DomainError, PreconditionError
from ..models.lattice import LatticeSpec, ModularGrid
from ..models.wavefunctions import IntegerWavefunction, ModularWavefunction, PositionWavefunction
from ..models.wigner import CylinderWigner, EnsembleState
from ..schemas.tomography import IntegerTomographySample, TomographySample
from .zak_service import Extension, ZakService

logger = logging.getLogger(__name__)

StateLike = Union[ModularWavefunction, IntegerWavefunction, EnsembleState]

_NODE_TOLERANCE = 1e-9


def _pointer_readout(a0: np.ndarray, a1: np.ndarray) -> Tuple[np.ndarray, np.ndarray, np.ndarray]:
    """(probability, gamma_x, gamma_y) of the post-selected pointer a0|0> + a1|1>."""
    weight = np.abs(a0) ** 2 + np.abs(a1) ** 2
    probability = 0.5 * weight
    coherence = a0 * np.conj(a1)
    safe = np.where(weight > 0, weight, 1.0)
    gamma_x = np.clip(2 * coherence.real / safe, -1.0, 1.0)
    gamma_y = np.clip(2 * coherence.imag / safe, -1.0, 1.0)
    return probability, gamma_x, gamma_y


def _period_nodes(count: int, period: float) -> np.ndarray:
    return -0.5 * period + period * np.arange(count) / count


def _axis(values: np.ndarray, name: str) -> Tuple[np.ndarray, np.ndarray]:
    nodes, inverse = np.unique(np.round(values, 12), return_inverse=True)
    if nodes.size < 1:
        raise PreconditionError(f"No {name} values in the sample set")
    return nodes, inverse


class TomographyService:

    def __init__(self):
        self.zak_service = ZakService()

    # ------------------------------------------------------------------
    # Correlation function
    # ------------------------------------------------------------------

    def correlation_function(
        self,
        state: StateLike,
        xbar,
        pbar,
        alpha,
        beta,
        extension: Extension = "quasi_periodic",
        nmax: Optional[int] = None,
        mmax: Optional[int] = None,
    ) -> np.ndarray:
        """
        C = <xbar + alpha, pbar + beta| rho |xbar - alpha, pbar - beta>, broadcast over the inputs.

        Shifted arguments outside the cell follow ``extension``.  The
        simulated pointer readouts shift through the integer generators,
        which is the periodic rule; the quasi-periodic value differs from
        it by exp(i l (w+ (pbar + beta) - w- (pbar - beta))) for windings w+-
        of xbar +- alpha.
        """
        total = 0.0
        for weight, component in self._components(state, nmax, mmax):
            a0, a1 = self._branches(component, xbar, pbar, alpha, beta, extension)
            total = total + weight * a0 * np.conj(a1)
        return np.asarray(total)

    # ------------------------------------------------------------------
    # Modular protocol
    # ------------------------------------------------------------------

    def sample_grid(
        self, lattice: LatticeSpec, alpha_points: int, beta_points: int
    ) -> Tuple[np.ndarray, np.ndarray]:
        """Shifts covering one full period of each variable."""
        return _period_nodes(alpha_points, lattice.l), _period_nodes(beta_points, lattice.p_period)

    def simulate_readout(
        self,
        state: StateLike,
        alphas: Sequence[float],
        betas: Sequence[float],
        grid: ModularGrid,
        nmax: Optional[int] = None,
        mmax: Optional[int] = None,
    ) -> List[TomographySample]:
        """
        Pointer readouts for every (alpha, beta) and every post-selected grid
        node.  Mixed states are simulated as the weighted average of their
        pure components.
        """
        components = self._components(state, nmax, mmax)
        alphas = np.asarray(alphas, dtype=float)
        betas = np.asarray(betas, dtype=float)
        xbar, pbar = grid.mesh()

        def run(alpha: float) -> List[TomographySample]:
            rows = []
            for beta in betas:
                probability = np.zeros(xbar.shape)
                coherence = np.zeros(xbar.shape, dtype=complex)
                for weight, component in components:
                    a0, a1 = self._branches(component, xbar, pbar, alpha, beta, "periodic")
                    p, gx, gy = _pointer_readout(a0, a1)
                    probability += weight * p
                    coherence += weight * p * (gx + 1j * gy)
                valid = probability >= settings.NULL_NORM_TOLERANCE
                safe = np.where(valid, probability, 1.0)
                gamma = np.where(valid, coherence / safe, 0.0)
                for (j, k), ok in np.ndenumerate(valid):
                    rows.append(
                        TomographySample(
                            alpha=float(alpha),
                            beta=float(beta),
                            xbar=float(xbar[j, k]),
                            pbar=float(pbar[j, k]),
                            gamma_x=float(np.clip(gamma[j, k].real, -1.0, 1.0)),
                            gamma_y=float(np.clip(gamma[j, k].imag, -1.0, 1.0)),
                            probability=float(probability[j, k]),
                            valid=bool(ok),
                        )
                    )
            return rows

        with ThreadPoolExecutor(max_workers=settings.worker_count()) as pool:
            chunks = list(pool.map(run, alphas))
        samples = [row for chunk in chunks for row in chunk]
        invalid = sum(not s.valid for s in samples)
        logger.info("simulate_readout: %d samples, %d invalid", len(samples), invalid)
        return samples

    def reconstruct_from_samples(
        self,
        samples: Sequence[TomographySample],
        lattice: LatticeSpec,
        nmax: Optional[int] = None,
        mmax: Optional[int] = None,
    ) -> CylinderWigner:
        """
        W from a complete product grid of readouts.  Invalid samples count
        as C = 0 and are reported in ``excluded_samples``.
        """
        nmax = settings.DEFAULT_NMAX if nmax is None else nmax
        mmax = settings.DEFAULT_MMAX if mmax is None else mmax
        if not samples:
            raise PreconditionError("No tomography samples to reconstruct from")

        table = np.array([(s.alpha, s.beta, s.xbar, s.pbar) for s in samples])
        alphas, ia = _axis(table[:, 0], "alpha")
        betas, ib = _axis(table[:, 1], "beta")
        xbars, ix = _axis(table[:, 2], "xbar")
        pbars, ip = _axis(table[:, 3], "pbar")
        shape = (alphas.size, betas.size, xbars.size, pbars.size)
        if len(samples) != int(np.prod(shape)):
            raise PreconditionError(
                "Samples do not form a complete (alpha, beta, xbar, pbar) grid",
                samples=len(samples),
                expected=int(np.prod(shape)),
            )
        if alphas.size < 4 * nmax + 1 or betas.size < 4 * mmax + 1:
            raise AliasingError(
                "Shift sampling too coarse for the truncation window",
                alpha_points=int(alphas.size),
                beta_points=int(betas.size),
                nmax=nmax,
                mmax=mmax,
            )
        grid = ModularGrid(lattice, xbars.size, pbars.size)
        if np.max(np.abs(grid.xbar - xbars)) > _NODE_TOLERANCE or np.max(np.abs(grid.pbar - pbars)) > _NODE_TOLERANCE:
            raise DomainError("Post-selection points are not the nodes of a modular grid")

        correlation = np.zeros(shape, dtype=complex)
        excluded = 0
        for s, a, b, j, k in zip(samples, ia, ib, ix, ip):
            if not s.valid:
                excluded += 1
                continue
            correlation[a, b, j, k] = s.probability * (s.gamma_x + 1j * s.gamma_y)

        values = self.correlation_to_wigner(correlation, alphas, betas, lattice, nmax, mmax)
        if excluded:
            logger.warning("reconstruct_from_samples: %d invalid sample(s) excluded", excluded)
        return CylinderWigner(
            lattice=lattice,
            nmax=nmax,
            mmax=mmax,
            grid=grid,
            raw_values=values,
            excluded_samples=excluded,
        )

    def correlation_to_wigner(
        self,
        correlation: np.ndarray,
        alphas: np.ndarray,
        betas: np.ndarray,
        lattice: LatticeSpec,
        nmax: int,
        mmax: int,
    ) -> np.ndarray:
        """W[n, m, j, k] = sum_{u,v} C_hat[u, v, j, k] sinc(n - u/2) sinc(m - v/2)."""
        u = np.arange(-2 * nmax, 2 * nmax + 1)
        v = np.arange(-2 * mmax, 2 * mmax + 1)
        fa = np.exp(-2j * math.pi * np.outer(u, alphas) / lattice.l) / alphas.size
        fb = np.exp(1j * np.outer(v, betas) * lattice.l) / betas.size
        harmonics = np.einsum("ua,vb,abjk->uvjk", fa, fb, correlation, optimize=True)
        n = np.arange(-nmax, nmax + 1)
        m = np.arange(-mmax, mmax + 1)
        kn = np.sinc(n[:, None] - 0.5 * u[None, :])
        km = np.sinc(m[:, None] - 0.5 * v[None, :])
        values = np.einsum("nu,mv,uvjk->nmjk", kn, km, harmonics, optimize=True)
        residue = float(np.max(np.abs(values.imag))) if values.size else 0.0
        if residue > settings.REALNESS_TOLERANCE:
            logger.warning("correlation_to_wigner: imaginary residue %.3e", residue)
        return np.ascontiguousarray(values.real)

    # ------------------------------------------------------------------
    # Post-selection on the modular basis
    # ------------------------------------------------------------------

    def postselect_modular(self, psi: PositionWavefunction, xbar, pbar) -> np.ndarray:
        """
        P(xbar, pbar) = (l / 2 pi) |sum_k psi(k l + xbar) exp(-i pbar k l)|^2,
        with psi interpolated band-limited between samples.
        """
        xbar, pbar = np.broadcast_arrays(np.asarray(xbar, dtype=float), np.asarray(pbar, dtype=float))
        lattice = psi.lattice
        flat = psi.samples.reshape(-1)
        x0 = psi.x.reshape(-1)[0]
        freqs = 2 * math.pi * np.fft.fftfreq(flat.size, d=psi.dx)
        spectrum = np.fft.fft(flat) / flat.size
        cells = psi.cell_indices.astype(float)

        out = np.empty(xbar.shape)
        for index in np.ndindex(xbar.shape):
            points = cells * lattice.l + xbar[index]
            offsets = np.rint((points - x0) / psi.dx)
            on_node = np.abs(points - x0 - offsets * psi.dx) < _NODE_TOLERANCE
            if np.all(on_node):
                values = flat[offsets.astype(int) % flat.size]
            else:
                values = np.exp(1j * np.outer(points - x0, freqs)) @ spectrum
            amplitude = np.sum(values * np.exp(-1j * pbar[index] * cells * lattice.l))
            out[index] = lattice.l / (2 * math.pi) * abs(amplitude) ** 2
        return out

    # ------------------------------------------------------------------
    # Integer protocol
    # ------------------------------------------------------------------

    def simulate_readout_integer(
        self,
        state: Union[IntegerWavefunction, EnsembleState],
        shifts: Optional[Sequence[Tuple[int, int]]] = None,
        nmax: Optional[int] = None,
        mmax: Optional[int] = None,
    ) -> List[IntegerTomographySample]:
        """
        Readouts of the controlled integer shift for sector (d, e),
        post-selected on every |n, m> of the window.  The pointer branches
        move the state by (ceil(d/2), ceil(e/2)) and -(floor(d/2), floor(e/2)),
        so the readout at |n, m> is c[b + d, t + e] conj(c[b, t]) with
        (b, t) = (n, m) - (floor(d/2), floor(e/2)).  ``shifts`` defaults to
        every (d, e) the window supports.
        """
        components = self._components(state, nmax, mmax)
        nmax_, mmax_ = components[0][1].nmax, components[0][1].mmax
        if shifts is None:
            shifts = [(d, e) for d in range(-2 * nmax_, 2 * nmax_ + 1) for e in range(-2 * mmax_, 2 * mmax_ + 1)]
        rows: List[IntegerTomographySample] = []
        n_values = np.arange(-nmax_, nmax_ + 1)
        m_values = np.arange(-mmax_, mmax_ + 1)
        for d, e in shifts:
            if abs(d) > 2 * nmax_ or abs(e) > 2 * mmax_:
                raise PreconditionError("Shift outside the truncation window", d=d, e=e, nmax=nmax_, mmax=mmax_)
            probability = np.zeros((n_values.size, m_values.size))
            coherence = np.zeros((n_values.size, m_values.size), dtype=complex)
            for weight, component in components:
                a0 = self._shifted_coefficients(component.coefficients, -(-d // 2), -(-e // 2))
                a1 = self._shifted_coefficients(component.coefficients, -(d // 2), -(e // 2))
                p, gx, gy = _pointer_readout(a0, a1)
                probability += weight * p
                coherence += weight * p * (gx + 1j * gy)
            for (i, j), p in np.ndenumerate(probability):
                valid = p >= settings.NULL_NORM_TOLERANCE
                gamma = coherence[i, j] / p if valid else 0.0
                rows.append(
                    IntegerTomographySample(
                        d=d,
                        e=e,
                        n=int(n_values[i]),
                        m=int(m_values[j]),
                        gamma_x=float(np.clip(np.real(gamma), -1.0, 1.0)),
                        gamma_y=float(np.clip(np.imag(gamma), -1.0, 1.0)),
                        probability=float(p),
                        valid=bool(valid),
                    )
                )
        logger.info("simulate_readout_integer: %d shifts, %d samples", len(shifts), len(rows))
        return rows

    def reconstruct_from_integer_samples(
        self,
        samples: Sequence[IntegerTomographySample],
        lattice: LatticeSpec,
        grid: ModularGrid,
        nmax: int,
        mmax: int,
    ) -> CylinderWigner:
        """
        W from the integer readouts.  Each (d, e) block of products
        P[n, m] = probability * (gamma_x + i gamma_y) is moved back to the
        pair index (b, t) and folded: Q[d, e] = K_d @ D @ K_e^T with
        K_d[n, b] = sinc(n - b - d/2).  Unmeasured sectors stay at zero.
        """
        size_n, size_m = 2 * nmax + 1, 2 * mmax + 1
        products = np.zeros((4 * nmax + 1, 4 * mmax + 1, size_n, size_m), dtype=complex)
        measured = np.zeros((4 * nmax + 1, 4 * mmax + 1), dtype=bool)
        excluded = 0
        for s in samples:
            if abs(s.d) > 2 * nmax or abs(s.e) > 2 * mmax or abs(s.n) > nmax or abs(s.m) > mmax:
                raise DomainError("Integer sample outside the truncation window", d=s.d, e=s.e, n=s.n, m=s.m)
            measured[s.d + 2 * nmax, s.e + 2 * mmax] = True
            if not s.valid:
                excluded += 1
                continue
            products[s.d + 2 * nmax, s.e + 2 * mmax, s.n + nmax, s.m + mmax] = s.probability * (s.gamma_x + 1j * s.gamma_y)

        n = np.arange(-nmax, nmax + 1)
        m = np.arange(-mmax, mmax + 1)
        sectors = np.zeros_like(products)
        for i, j in zip(*np.nonzero(measured)):
            d, e = int(i) - 2 * nmax, int(j) - 2 * mmax
            pairs = self._shifted_coefficients(products[i, j], d // 2, e // 2)
            kernel_d = np.sinc(n[:, None] - n[None, :] - 0.5 * d)
            kernel_e = np.sinc(m[:, None] - m[None, :] - 0.5 * e)
            sectors[i, j] = kernel_d @ pairs @ kernel_e.T

        warnings = []
        missing = int(measured.size - measured.sum())
        if missing:
            warnings.append(f"{missing} (d, e) sector(s) not measured")
            logger.warning("reconstruct_from_integer_samples: %d sector(s) not measured", missing)
        if excluded:
            logger.warning("reconstruct_from_integer_samples: %d invalid sample(s) excluded", excluded)
        return CylinderWigner(
            lattice=lattice,
            nmax=nmax,
            mmax=mmax,
            grid=grid,
            sectors=sectors,
            excluded_samples=excluded,
            warnings=warnings,
        )

    # ------------------------------------------------------------------
    # Private helpers
    # ------------------------------------------------------------------

    def _components(
        self, state: StateLike, nmax: Optional[int], mmax: Optional[int]
    ) -> List[Tuple[float, IntegerWavefunction]]:
        nmax = settings.DEFAULT_NMAX if nmax is None else nmax
        mmax = settings.DEFAULT_MMAX if mmax is None else mmax
        if isinstance(state, ModularWavefunction):
            return [(1.0, self.zak_service.modular_to_integer(state, nmax, mmax))]
        if isinstance(state, IntegerWavefunction):
            return [(1.0, state.resized(nmax, mmax))]
        if isinstance(state, EnsembleState):
            return [(w, s.resized(nmax, mmax)) for w, s in state.components]
        raise DomainError(f"Unsupported state type {type(state).__name__}")

    def _branches(
        self, iw: IntegerWavefunction, xbar, pbar, alpha, beta, extension: Extension
    ) -> Tuple[np.ndarray, np.ndarray]:
        xbar, pbar, alpha, beta = np.broadcast_arrays(
            np.asarray(xbar, dtype=float),
            np.asarray(pbar, dtype=float),
            np.asarray(alpha, dtype=float),
            np.asarray(beta, dtype=float),
        )
        a0 = self.zak_service.evaluate_integer(iw, xbar + alpha, pbar + beta, extension)
        a1 = self.zak_service.evaluate_integer(iw, xbar - alpha, pbar - beta, extension)
        return a0, a1

    @staticmethod
    def _shifted_coefficients(coefficients: np.ndarray, dn: int, dm: int) -> np.ndarray:
        """out[n, m] = c[n + dn, m + dm], zero outside the window."""
        out = np.zeros_like(coefficients)
        rows, cols = coefficients.shape
        src_r = slice(max(0, dn), min(rows, rows + dn))
        dst_r = slice(max(0, -dn), min(rows, rows - dn))
        src_c = slice(max(0, dm), min(cols, cols + dm))
        dst_c = slice(max(0, -dm), min(cols, cols - dm))
        out[dst_r, dst_c] = coefficients[src_r, src_c]
        return out

"""
State Service — the catalogue of states in modular form.

  * physical GKP: psi = N G_delta(xbar - c) G_kappa(pbar) on the cell, c = -l/4
    for the logical zero and +l/4 for the logical one; plus/minus are the
    normalized sum/difference of the two.
  * ideal GKP: the same with the narrowest widths the grid resolves.
  * coherent: Zak transform of a Gaussian, evaluated as a scaled theta series.
  * cat: normalized superposition of two coherent states.
  * pi/2-rotated: (|n0, m0> +- |-n0, m0>)/sqrt(2) in the integer basis.
"""

from __future__ import annotations

import logging
import math
from dataclasses import replace
from typing import Optional, Union

import numpy as np
from scipy import special

from ..config import settings
from ..exceptions import DegenerateStateError, PreconditionError
from ..models.lattice import LatticeSpec, ModularGrid
from ..models.wavefunctions import IntegerWavefunction, ModularWavefunction, PositionWavefunction
from ..schemas.states import (
    CatParams,
    CoherentParams,
    GkpParams,
    Pi2Params,
    PlaneWaveParams,
    ShiftError,
    StateSpec,
    UniformParams,
)
from ..utils.special import gaussian, gaussian_fourier_segment, wrapped_gaussian_series
from .lattice_service import LatticeService
from .zak_service import ZakService

logger = logging.getLogger(__name__)

_IDEAL_NODES = 2          # ideal-limit widths, in grid steps
_DEGENERATE_ERF_ARG = 0.1

AnyState = Union[ModularWavefunction, IntegerWavefunction]


def _center(logical: str, lattice: LatticeSpec) -> float:
    return -0.25 * lattice.l if logical == "zero" else 0.25 * lattice.l


def _describe(params) -> str:
    fields = params.model_dump(exclude={"kind"}, exclude_none=True)
    return f"{params.kind}(" + ",".join(f"{k}={v}" for k, v in fields.items()) + ")"


class StateService:

    def __init__(self):
        self.zak_service = ZakService()
        self.lattice_service = LatticeService()

    # ------------------------------------------------------------------
    # GKP states
    # ------------------------------------------------------------------

    def make_physical_gkp(self, params: GkpParams, grid: ModularGrid) -> ModularWavefunction:
        if params.ideal:
            return self.make_ideal_gkp(params.logical, grid)
        lattice = grid.lattice
        if params.logical in ("zero", "one"):
            amplitudes = self._gkp_logical(params.logical, params.delta, params.envelope, grid)
        else:
            zero = self._gkp_logical("zero", params.delta, params.envelope, grid)
            one = self._gkp_logical("one", params.delta, params.envelope, grid)
            amplitudes = zero + one if params.logical == "plus" else zero - one

        warnings = []
        smallest = min(
            lattice.l / (4 * params.delta),
            math.pi / (lattice.l * params.envelope),
        )
        if smallest < _DEGENERATE_ERF_ARG:
            message = f"GKP normalization is degenerate (smallest erf argument {smallest:.3g})"
            logger.warning(message)
            warnings.append(message)

        state = ModularWavefunction(grid=grid, amplitudes=amplitudes, label=_describe(params), warnings=warnings)
        return state.normalized()

    def make_ideal_gkp(self, logical: str, grid: ModularGrid) -> ModularWavefunction:
        """Narrowest grid-representable GKP state, flagged as the ideal limit."""
        params = GkpParams(
            l=grid.lattice.l,
            delta=_IDEAL_NODES * grid.dx,
            kappa=_IDEAL_NODES * grid.dp,
            logical=logical,
        )
        state = self.make_physical_gkp(params, grid)
        return replace(state, ideal_limit=True, label=f"gkp(ideal,logical={logical})")

    def _gkp_logical(self, logical: str, delta: float, kappa: float, grid: ModularGrid) -> np.ndarray:
        lattice = grid.lattice
        c = _center(logical, lattice)
        x_profile = gaussian(grid.xbar - c, delta).astype(complex)
        p_profile = gaussian(grid.pbar, kappa)
        # the lower-edge node sits on the jump of the quasi-periodic extension
        from_below = gaussian(lattice.x_half - c, delta) * np.exp(-1j * lattice.l * grid.pbar)
        amplitudes = x_profile[:, None] * p_profile[None, :]
        amplitudes[0, :] = 0.5 * (x_profile[0] + from_below) * p_profile
        return amplitudes * self.gkp_normalization(delta, kappa, lattice)

    def gkp_normalization(self, delta: float, kappa: float, lattice: LatticeSpec) -> float:
        """Continuum N with N^-2 = (delta kappa pi/2) [erf(l/4d) + erf(3l/4d)] erf(pi/(l kappa))."""
        l = lattice.l
        inverse_square = (
            0.5 * delta * kappa * math.pi
            * (special.erf(l / (4 * delta)) + special.erf(3 * l / (4 * delta)))
            * special.erf(math.pi / (l * kappa))
        )
        return 1.0 / math.sqrt(inverse_square)

    def gkp_overlap(self, params: GkpParams) -> float:
        """<0|1> of the two physical logical states; independent of kappa."""
        r = params.lattice.l / params.delta
        return float(
            2.0 * math.exp(-(r / 4) ** 2) * special.erf(r / 2)
            / (special.erf(r / 4) + special.erf(3 * r / 4))
        )

    def photon_number_estimate(self, delta: float) -> float:
        """Mean photon number n ~ 1/(2 delta^2); reported only."""
        return 1.0 / (2.0 * delta ** 2)

    def gkp_integer_coeffs(self, params: GkpParams, nmax: int, mmax: int) -> IntegerWavefunction:
        """psi_{n,m} = (2 pi)^(-1/2) N f_n g_m from the closed-form segment integrals."""
        lattice = params.lattice
        l = lattice.l
        n = np.arange(-nmax, nmax + 1)
        m = np.arange(-mmax, mmax + 1)
        g = gaussian_fourier_segment(-lattice.p_half, lattice.p_half, -m * l, params.envelope)
        norm = self.gkp_normalization(params.delta, params.envelope, lattice)

        def logical(name: str) -> np.ndarray:
            c = _center(name, lattice)
            k = 2 * math.pi * n / l
            f = np.exp(-1j * k * c) * gaussian_fourier_segment(-lattice.x_half - c, lattice.x_half - c, k, params.delta)
            return norm * np.outer(f, g) / math.sqrt(2 * math.pi)

        if params.logical in ("zero", "one"):
            coefficients = logical(params.logical)
        else:
            sign = 1.0 if params.logical == "plus" else -1.0
            overlap = self.gkp_overlap(params)
            coefficients = (logical("zero") + sign * logical("one")) / math.sqrt(2.0 + 2.0 * sign * overlap)

        loss = max(1.0 - float(np.sum(np.abs(coefficients) ** 2)), 0.0)
        return IntegerWavefunction(lattice=lattice, coefficients=coefficients, truncation_loss=loss, label=_describe(params))

    # ------------------------------------------------------------------
    # Shifts
    # ------------------------------------------------------------------

    def apply_shift(self, state: ModularWavefunction, err: ShiftError) -> ModularWavefunction:
        """
        Position shift by u followed by a momentum kick v:
        psi'(xbar, pbar) = exp(i v xbar) psi(xbar - u, pbar - v) with the
        quasi-periodic rule across the xbar edges. Translations are FFT
        phases, exact rolls when u, v are grid multiples.
        """
        grid = state.grid
        lattice = grid.lattice
        if not err.in_cell(lattice):
            logger.info("apply_shift: shift (%.4g, %.4g) leaves the cell", err.u, err.v)
        xbar, pbar = grid.mesh()
        # exp(-i xbar pbar) psi is periodic in xbar
        periodic = state.amplitudes * np.exp(-1j * xbar * pbar)
        kx = 2 * math.pi * np.fft.fftfreq(grid.size_x, d=grid.dx)
        shifted = np.fft.ifft(np.fft.fft(periodic, axis=0) * np.exp(-1j * kx * err.u)[:, None], axis=0)
        shifted = shifted * np.exp(1j * (xbar - err.u) * pbar)
        kp = 2 * math.pi * np.fft.fftfreq(grid.size_p, d=grid.dp)
        shifted = np.fft.ifft(np.fft.fft(shifted, axis=1) * np.exp(-1j * kp * err.v)[None, :], axis=1)
        shifted = shifted * np.exp(1j * err.v * xbar)
        return replace(state, amplitudes=shifted, label=f"shift({err.u:.6g},{err.v:.6g})·{state.label}")

    # ------------------------------------------------------------------
    # Gaussian states
    # ------------------------------------------------------------------

    def coherent_position(
        self,
        x0: float,
        p0: float,
        sigma: float,
        lattice: LatticeSpec,
        cells: Optional[int] = None,
        size_x: Optional[int] = None,
    ) -> PositionWavefunction:
        """psi(x) = (pi sigma^2)^(-1/4) exp(-(x - x0)^2 / 2 sigma^2) exp(i p0 x) on K cells."""
        size_x = size_x or settings.DEFAULT_NX
        if cells is None:
            reach = abs(x0) + 12 * sigma + lattice.l
            cells = 2 * int(math.ceil(reach / lattice.l)) + 1
        template = PositionWavefunction(lattice=lattice, samples=np.zeros((cells, size_x), dtype=complex))
        x = template.x
        samples = (math.pi * sigma ** 2) ** -0.25 * gaussian(x - x0, sigma) * np.exp(1j * p0 * x)
        return replace(template, samples=samples, label=f"coherent(x0={x0},p0={p0},sigma={sigma})")

    def make_coherent_modular(
        self, x0: float, p0: float, sigma: float, lattice: LatticeSpec, grid: ModularGrid
    ) -> ModularWavefunction:
        """
        Z(xbar, pbar) = C (pi sigma^2)^(-1/4) exp(i p0 xbar) exp(i n0 l (p0 - pbar))
                        * sum_n G_sigma(xbar - r + n l) exp(i n l (p0 - pbar)),
        with x0 = n0 l + r, i.e. G_sigma(u) Theta_3 summed term-scaled.
        """
        point = self.lattice_service.split_point(x0, p0, lattice)
        n0, r = point.n, point.xbar
        l = lattice.l
        series = wrapped_gaussian_series(grid.xbar - r, l * (p0 - grid.pbar), sigma, l)
        prefactor = math.sqrt(l / (2 * math.pi)) * (math.pi * sigma ** 2) ** -0.25
        amplitudes = (
            prefactor
            * np.exp(1j * p0 * grid.xbar)[:, None]
            * np.exp(1j * n0 * l * (p0 - grid.pbar))[None, :]
            * series
        )
        state = ModularWavefunction(
            grid=grid,
            amplitudes=amplitudes,
            label=f"coherent(x0={x0},p0={p0},sigma={sigma})",
        )
        return state.normalized()

    def make_cat_modular(
        self,
        separation: Optional[float],
        sigma: float,
        lattice: LatticeSpec,
        grid: ModularGrid,
        parity: str = "even",
    ) -> ModularWavefunction:
        """Two coherent states at -+separation/2 (default separation l/2), even or odd."""
        separation = 0.5 * lattice.l if separation is None else separation
        left = self._coherent_raw(-0.5 * separation, sigma, lattice, grid)
        right = self._coherent_raw(0.5 * separation, sigma, lattice, grid)
        sign = 1.0 if parity in ("even", "+") else -1.0
        amplitudes = left + sign * right
        state = ModularWavefunction(
            grid=grid,
            amplitudes=amplitudes,
            label=f"cat(separation={separation},sigma={sigma},parity={parity})",
        )
        if state.norm < settings.NULL_NORM_TOLERANCE:
            raise DegenerateStateError(
                "Cat superposition cancels to the null state",
                separation=separation,
                parity=parity,
            )
        return state.normalized()

    def cat_norm_squared(self, separation: float, sigma: float, parity: str = "even") -> float:
        """||G(x + s/2) +- G(x - s/2)||^2 for unit-norm Gaussians."""
        sign = 1.0 if parity in ("even", "+") else -1.0
        return 2.0 + 2.0 * sign * math.exp(-(separation ** 2) / (4 * sigma ** 2))

    def _coherent_raw(self, x0: float, sigma: float, lattice: LatticeSpec, grid: ModularGrid) -> np.ndarray:
        n0, r = self.lattice_service.wrap_position(x0, lattice)
        l = lattice.l
        series = wrapped_gaussian_series(grid.xbar - r, -l * grid.pbar, sigma, l)
        prefactor = math.sqrt(l / (2 * math.pi)) * (math.pi * sigma ** 2) ** -0.25
        return prefactor * np.exp(-1j * n0 * l * grid.pbar)[None, :] * series

    # ------------------------------------------------------------------
    # Integer-basis states
    # ------------------------------------------------------------------

    def make_pi2_rotated(
        self,
        n0: int,
        m0: int,
        sign: str = "+",
        lattice: Optional[LatticeSpec] = None,
        nmax: Optional[int] = None,
        mmax: Optional[int] = None,
    ) -> IntegerWavefunction:
        if n0 % 2:
            raise PreconditionError(f"n0 must be even, got {n0}", n0=n0)
        lattice = lattice or LatticeSpec()
        nmax = max(nmax if nmax is not None else settings.DEFAULT_NMAX, abs(n0))
        mmax = max(mmax if mmax is not None else settings.DEFAULT_MMAX, abs(m0))
        coefficients = np.zeros((2 * nmax + 1, 2 * mmax + 1), dtype=complex)
        factor = 1.0 if sign == "+" else -1.0
        coefficients[n0 + nmax, m0 + mmax] += 1.0 / math.sqrt(2)
        coefficients[-n0 + nmax, m0 + mmax] += factor / math.sqrt(2)
        state = IntegerWavefunction(lattice=lattice, coefficients=coefficients, label=f"pi2(n0={n0},m0={m0},sign={sign})")
        if state.norm < settings.NULL_NORM_TOLERANCE:
            raise DegenerateStateError("pi/2-rotated superposition is the null state", n0=n0, sign=sign)
        return state.normalized()

    def make_plane_wave(
        self, n: int, m: int, lattice: LatticeSpec, nmax: Optional[int] = None, mmax: Optional[int] = None
    ) -> IntegerWavefunction:
        nmax = max(nmax if nmax is not None else settings.DEFAULT_NMAX, abs(n))
        mmax = max(mmax if mmax is not None else settings.DEFAULT_MMAX, abs(m))
        coefficients = np.zeros((2 * nmax + 1, 2 * mmax + 1), dtype=complex)
        coefficients[n + nmax, m + mmax] = 1.0
        return IntegerWavefunction(lattice=lattice, coefficients=coefficients, label=f"plane(n={n},m={m})")

    # ------------------------------------------------------------------
    # Dispatch from a parsed state spec
    # ------------------------------------------------------------------

    def build_state(self, spec: StateSpec, grid: ModularGrid) -> ModularWavefunction:
        """Modular wavefunction for any state spec, on ``grid``."""
        lattice = grid.lattice
        if isinstance(spec, GkpParams):
            return self.make_physical_gkp(spec, grid)
        if isinstance(spec, CoherentParams):
            return self.make_coherent_modular(spec.x0, spec.p0, spec.sigma, lattice, grid)
        if isinstance(spec, CatParams):
            return self.make_cat_modular(spec.separation, spec.sigma, lattice, grid, spec.parity)
        if isinstance(spec, Pi2Params):
            iw = self.make_pi2_rotated(spec.n0, spec.m0, spec.sign, lattice, nmax=abs(spec.n0), mmax=abs(spec.m0))
            return self.zak_service.integer_to_modular(iw, grid)
        if isinstance(spec, PlaneWaveParams):
            iw = self.make_plane_wave(spec.n, spec.m, lattice, nmax=abs(spec.n), mmax=abs(spec.m))
            return self.zak_service.integer_to_modular(iw, grid)
        if isinstance(spec, UniformParams):
            iw = self.make_plane_wave(0, 0, lattice, nmax=0, mmax=0)
            return replace(self.zak_service.integer_to_modular(iw, grid), label="uniform")
        raise PreconditionError(f"Unsupported state spec {spec!r}")

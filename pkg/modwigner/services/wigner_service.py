"""
Wigner Service — cylinder Wigner surfaces in the modular variables.

Algorithm (per pure component c of the state):
  1. For every shift (d, e) in [-2N, 2N] x [-2M, 2M] form the shifted
     products D[b, t] = c[b + d, t + e] * conj(c[b, t]).
  2. Contract with the sinc kernels K_d[n, b] = sinc(n - b - d/2) on both
     axes: Q[d, e] = K_d @ D @ K_e^T.
  3. Ensembles add the sectors weighted by their probabilities.

Separable states (rank-one coefficient matrices) skip the 4-D table and
keep one sector table per factor.  Marginals are computed from the
coefficients, so they do not inherit the finite support of the surface.
"""

from __future__ import annotations

import logging
import math
from typing import Literal, Optional, Tuple, Union

import numpy as np

from ..config import settings
from ..exceptions import AliasingError, DomainError, PreconditionError, UnderResolvedError
from ..models.lattice import ModularGrid
from ..models.wavefunctions import IntegerWavefunction, ModularWavefunction
from ..models.wigner import CylinderWigner, EnsembleState, Marginals
from ..schemas.states import CatParams, CoherentParams, GkpParams
from ..schemas.wigner import FringeAnalysis
from .state_service import StateService
from .zak_service import ZakService

logger = logging.getLogger(__name__)

StateLike = Union[ModularWavefunction, IntegerWavefunction, EnsembleState]
AnalyticKind = Literal["gkp", "coherent", "cat"]
Extension = Literal["periodic", "cell"]

_RANK_ONE_TOLERANCE = 1e-10     # relative size of the second singular value
_REGIME_LIMIT = 2.0             # sharp-peak approximations need l/(4 delta) above this


# ------------------------------------------------------------------
# Private helpers
# ------------------------------------------------------------------

def _sinc_kernel(size: int, shift: int) -> np.ndarray:
    """K[n, b] = sinc(n - b - shift/2) over the window [-size, size]."""
    idx = np.arange(-size, size + 1)
    return np.sinc(idx[:, None] - idx[None, :] - 0.5 * shift)


def _shift_window(size: int, shift: int) -> slice:
    """Indices b of the window for which b + shift stays inside."""
    count = 2 * size + 1
    return slice(max(0, -shift), min(count, count - shift))


def _shifted(values: np.ndarray, shift: int, axis: int) -> np.ndarray:
    """values[b + shift] placed at b, zero where b + shift leaves the window."""
    out = np.zeros_like(values)
    count = values.shape[axis]
    src = slice(max(0, shift), min(count, count + shift))
    dst = slice(max(0, -shift), min(count, count - shift))
    index_src = [slice(None)] * values.ndim
    index_dst = [slice(None)] * values.ndim
    index_src[axis] = src
    index_dst[axis] = dst
    out[tuple(index_dst)] = values[tuple(index_src)]
    return out


def _factor_sectors(coeffs: np.ndarray) -> np.ndarray:
    """Q[d, n] = sum_b sinc(n - b - d/2) phi[b + d] conj(phi[b]) for a 1-D factor."""
    size = (coeffs.size - 1) // 2
    shifts = np.arange(-2 * size, 2 * size + 1)
    table = np.zeros((shifts.size, coeffs.size), dtype=complex)
    for row, d in enumerate(shifts):
        products = _shifted(coeffs, d, 0) * coeffs.conj()
        table[row] = _sinc_kernel(size, d) @ products
    return table


def _trapezoid_weights(positions: np.ndarray, shifts: np.ndarray, size: int, reach: int, extension: Extension) -> np.ndarray:
    """
    Weights w[j, k] of the shift integral at sample j.  The support is
    |k| <= reach, cut by the cell edges under the cell extension; the
    boundary nodes of each support carry half weight.
    """
    if extension == "cell":
        limit = np.minimum(np.minimum(positions, size - positions), reach)
    else:
        limit = np.full(positions.shape, reach)
    limit = limit[:, None]
    span = np.abs(shifts)[None, :]
    weights = np.where(span < limit, 1.0, np.where(span == limit, 0.5, 0.0))
    weights[np.broadcast_to(limit == 0, weights.shape)] = 0.0
    return weights


def _rank_one_split(coefficients: np.ndarray) -> Optional[Tuple[np.ndarray, np.ndarray]]:
    """(phi, gamma) with c = outer(phi, gamma) when c has numerical rank one."""
    u, s, vh = np.linalg.svd(coefficients)
    if s[0] == 0.0:
        return None
    if s.size > 1 and s[1] > _RANK_ONE_TOLERANCE * s[0]:
        return None
    scale = math.sqrt(s[0])
    return u[:, 0] * scale, vh[0, :] * scale


def _local_maxima(values: np.ndarray) -> np.ndarray:
    """Indices of strict local maxima of a periodic 1-D array."""
    left = np.roll(values, 1)
    right = np.roll(values, -1)
    return np.flatnonzero((values > left) & (values >= right))


class WignerService:

    def __init__(self):
        self.zak_service = ZakService()
        self.state_service = StateService()

    # ------------------------------------------------------------------
    # Full and separable surfaces
    # ------------------------------------------------------------------

    def wigner_full(
        self,
        state: StateLike,
        nmax: Optional[int] = None,
        mmax: Optional[int] = None,
        grid: Optional[ModularGrid] = None,
        separable: Optional[bool] = None,
    ) -> CylinderWigner:
        """
        Cylinder Wigner surface of a pure state or ensemble.

        ``grid`` is the display grid; it defaults to the state's own grid.
        ``separable`` None auto-detects rank-one states, True demands the
        separable path and False forces the full sector table.
        """
        nmax = settings.DEFAULT_NMAX if nmax is None else nmax
        mmax = settings.DEFAULT_MMAX if mmax is None else mmax
        ensemble, grid, loss, warnings = self._prepare(state, nmax, mmax, grid)
        if grid.size_x < 2 * nmax + 1 or grid.size_p < 2 * mmax + 1:
            raise AliasingError(
                "Display grid cannot resolve the truncation window",
                size_x=grid.size_x,
                size_p=grid.size_p,
                nmax=nmax,
                mmax=mmax,
            )

        split = None
        if separable is not False and len(ensemble.components) == 1:
            split = _rank_one_split(ensemble.components[0][1].coefficients)
        if separable and split is None:
            raise PreconditionError("State is not separable in (xbar, pbar)", label=ensemble.components[0][1].label)

        if split is not None:
            phi, gamma = split
            logger.debug("wigner_full: separable path, truncation (%d, %d)", nmax, mmax)
            return CylinderWigner(
                lattice=ensemble.lattice,
                nmax=nmax,
                mmax=mmax,
                grid=grid,
                factor_sectors=(_factor_sectors(phi), _factor_sectors(gamma)),
                source=ensemble,
                truncation_loss=loss,
                warnings=warnings,
            )

        logger.debug("wigner_full: %d component(s), truncation (%d, %d)", len(ensemble.components), nmax, mmax)
        sectors = np.zeros((4 * nmax + 1, 4 * mmax + 1, 2 * nmax + 1, 2 * mmax + 1), dtype=complex)
        for weight, component in ensemble.components:
            sectors += weight * self.sector_table(component.coefficients)
        return CylinderWigner(
            lattice=ensemble.lattice,
            nmax=nmax,
            mmax=mmax,
            grid=grid,
            sectors=sectors,
            source=ensemble,
            truncation_loss=loss,
            warnings=warnings,
        )

    def sector_table(self, coefficients: np.ndarray) -> np.ndarray:
        """Q[d, e, n, m] of one pure coefficient matrix."""
        nmax = (coefficients.shape[0] - 1) // 2
        mmax = (coefficients.shape[1] - 1) // 2
        d_shifts = np.arange(-2 * nmax, 2 * nmax + 1)
        e_shifts = np.arange(-2 * mmax, 2 * mmax + 1)
        kernels_e = [_sinc_kernel(mmax, e) for e in e_shifts]
        conj = coefficients.conj()
        table = np.zeros((d_shifts.size, e_shifts.size) + coefficients.shape, dtype=complex)
        for i, d in enumerate(d_shifts):
            kernel_d = _sinc_kernel(nmax, d)
            rows = _shifted(coefficients, d, 0)
            for j, e in enumerate(e_shifts):
                products = _shifted(rows, e, 1) * conj
                table[i, j] = kernel_d @ products @ kernels_e[j].T
        return table

    def wigner_separable(
        self,
        f: np.ndarray,
        g: np.ndarray,
        grid: ModularGrid,
        nmax: Optional[int] = None,
        mmax: Optional[int] = None,
    ) -> CylinderWigner:
        """
        Surface of psi(xbar, pbar) = f(xbar) g(pbar) from the sampled factors.
        Each factor should be normalized over its own period.
        """
        nmax = settings.DEFAULT_NMAX if nmax is None else nmax
        mmax = settings.DEFAULT_MMAX if mmax is None else mmax
        f = np.asarray(f, dtype=complex)
        g = np.asarray(g, dtype=complex)
        if f.shape != (grid.size_x,) or g.shape != (grid.size_p,):
            raise DomainError(
                "Factor samples do not match the grid",
                f_shape=list(f.shape),
                g_shape=list(g.shape),
                grid=[grid.size_x, grid.size_p],
            )
        self._check_aliasing(grid, nmax, mmax)
        l = grid.lattice.l
        n = np.arange(-nmax, nmax + 1)
        m = np.arange(-mmax, mmax + 1)
        sign_n = np.where(n % 2 == 0, 1.0, -1.0)
        sign_m = np.where(m % 2 == 0, 1.0, -1.0)
        phi = (math.sqrt(l) / grid.size_x) * sign_n * np.fft.fft(f)[n % grid.size_x]
        gamma = math.sqrt(2 * math.pi / l) * sign_m * np.fft.ifft(g)[m % grid.size_p]
        for name, norm in (("f", grid.dx * np.sum(np.abs(f) ** 2)), ("g", grid.dp * np.sum(np.abs(g) ** 2))):
            if abs(norm - 1.0) > 1e-6:
                logger.warning("wigner_separable: factor %s has norm %.6f", name, norm)
        coefficients = np.outer(phi, gamma)
        loss = max(1.0 - float(np.sum(np.abs(coefficients) ** 2)), 0.0)
        source = EnsembleState.pure(
            IntegerWavefunction(lattice=grid.lattice, coefficients=coefficients, truncation_loss=loss, label="separable")
        )
        return CylinderWigner(
            lattice=grid.lattice,
            nmax=nmax,
            mmax=mmax,
            grid=grid,
            factor_sectors=(_factor_sectors(phi), _factor_sectors(gamma)),
            source=source,
            truncation_loss=loss,
        )

    def factor_wigner(
        self,
        samples: np.ndarray,
        grid: ModularGrid,
        axis: Literal["x", "p"],
        size: int,
        extension: Extension = "periodic",
    ) -> np.ndarray:
        """
        One factor surface by direct quadrature of the shift integral,
        shape (2 size + 1, samples).

        x:  W_f(n, xbar) = 2/l   int exp(-4 pi i n x'/l) f*(xbar - x') f(xbar + x') dx'
        p:  W_g(m, pbar) = l/pi  int exp(2 i m p' l)     g*(pbar - p') g(pbar + p') dp'

        ``periodic`` integrates over the half cell with the factor
        continued periodically, which reproduces the sector form.
        ``cell`` integrates over the whole cell with the factor taken as
        zero outside it.  Both share every marginal; only ``cell`` turns
        the flat momentum factor of a coherent state into a
        sign-changing sinc in m.
        """
        values = np.asarray(samples, dtype=complex)
        count, step = (grid.size_x, grid.dx) if axis == "x" else (grid.size_p, grid.dp)
        if values.shape != (count,):
            raise DomainError("Factor samples do not match the grid", axis=axis, shape=list(values.shape), expected=count)
        if count % 4:
            raise DomainError("Quadrature needs a sample count divisible by 4", axis=axis, count=count)
        if count < 4 * size + 1:
            raise AliasingError(f"{count} samples alias the sectors of truncation {size}", axis=axis, count=count, size=size)

        reach = count // 4 if extension == "periodic" else count // 2
        shifts = np.arange(-reach, reach + 1)
        positions = np.arange(count)
        plus = positions[:, None] + shifts[None, :]
        minus = positions[:, None] - shifts[None, :]
        if extension == "periodic":
            padded = values
            plus, minus = plus % count, minus % count
        else:
            # the edge sample closes the cell
            padded = np.append(values, values[0])
            plus, minus = np.clip(plus, 0, count), np.clip(minus, 0, count)
        weights = _trapezoid_weights(positions, shifts, count, reach, extension)
        products = padded[minus].conj() * padded[plus] * weights

        index = np.arange(-size, size + 1)
        l = grid.lattice.l
        if axis == "x":
            kernel = np.exp(-4j * math.pi * np.outer(index, shifts * step) / l)
            scale = 2 / l
        else:
            kernel = np.exp(2j * l * np.outer(index, shifts * step))
            scale = l / math.pi
        surface = scale * step * (kernel @ products.T)
        logger.debug("factor_wigner: axis %s, %s extension, %d shift nodes", axis, extension, shifts.size)
        return surface.real

    # ------------------------------------------------------------------
    # Closed forms
    # ------------------------------------------------------------------

    def analytic_wigner(
        self,
        kind: AnalyticKind,
        params: Union[GkpParams, CoherentParams, CatParams],
        grid: ModularGrid,
        nmax: Optional[int] = None,
        mmax: Optional[int] = None,
        extension: Extension = "periodic",
    ) -> CylinderWigner:
        """
        Sharp-peak closed forms, stored as their two factor surfaces.

        gkp       logical states: Gaussian peaks in xbar with a Gaussian
                  envelope in n; plus/minus add (-1)^n fringes at 0 and the
                  cell edges.  W_g is a Gaussian in pbar times one in m.
        coherent  Gaussian in xbar and n.  The momentum factor is flat, so
                  W_g = l/(2 pi) on a single m under the periodic extension
                  and l sin(2 m l (pi/l - |pbar|)) / (2 pi^2 m) under the
                  cell extension, negative for part of every m != 0 row.
        cat       two coherent peaks with cos(2 pi n s / l) fringes; W_g as
                  for the coherent state.

        ``extension`` selects the convention of ``factor_wigner``.
        """
        nmax = settings.DEFAULT_NMAX if nmax is None else nmax
        mmax = settings.DEFAULT_MMAX if mmax is None else mmax
        l = grid.lattice.l
        n = np.arange(-nmax, nmax + 1)[:, None]
        m = np.arange(-mmax, mmax + 1)[:, None]
        x = grid.xbar[None, :]
        p = grid.pbar[None, :]
        warnings = []

        def peak(center: float, width: float) -> np.ndarray:
            return np.exp(-((x - center) ** 2) / width ** 2)

        def n_envelope(width: float, offset: float = 0.0) -> np.ndarray:
            return np.exp(-((2 * math.pi * width / l) * (n - offset)) ** 2)

        def flat_momentum(index: int) -> np.ndarray:
            if extension == "cell":
                reach = math.pi / l - np.abs(p)
                return (l ** 2 / math.pi ** 2) * reach * np.sinc(2 * (m - index) * l * reach / math.pi)
            wg = np.zeros((m.size, p.size))
            if abs(index) <= mmax:
                wg[index + mmax, :] = l / (2 * math.pi)
            return wg

        if kind == "gkp":
            if not isinstance(params, GkpParams):
                raise DomainError("gkp closed form needs GkpParams", kind=kind)
            delta, kappa = params.delta, params.envelope
            if l / (4 * delta) < _REGIME_LIMIT:
                warnings.append(f"delta={delta} is outside the sharp-peak regime")
            quarter = l / 4
            if params.logical in ("zero", "one"):
                center = -quarter if params.logical == "zero" else quarter
                wf = (2 / l) * n_envelope(delta) * peak(center, delta)
            else:
                sign = 1.0 if params.logical == "plus" else -1.0
                overlap = self.state_service.gkp_overlap(params)
                fringes = peak(0.0, delta) + peak(l / 2, delta) + peak(-l / 2, delta)
                parity = np.where(n % 2 == 0, 1.0, -1.0)
                wf = n_envelope(delta) * (peak(-quarter, delta) + peak(quarter, delta) + sign * parity * fringes)
                wf = wf / (l * (1 + sign * overlap))
            wg = (l / math.pi) * np.exp(-(p ** 2) / kappa ** 2) * np.exp(-((m * l * kappa) ** 2))
        elif kind == "coherent":
            if not isinstance(params, CoherentParams):
                raise DomainError("coherent closed form needs CoherentParams", kind=kind)
            point = self.zak_service.lattice_service.split_point(params.x0, params.p0, grid.lattice)
            if abs(abs(point.xbar) - l / 2) < 4 * params.sigma:
                warnings.append("coherent peak straddles the cell edge; closed form omits the wrap")
            # the n envelope is centred on p0 in units of 2 pi / l
            offset = point.m + point.pbar * l / (2 * math.pi)
            wf = (2 / l) * n_envelope(params.sigma, offset) * peak(point.xbar, params.sigma)
            wg = flat_momentum(point.n)
        elif kind == "cat":
            if not isinstance(params, CatParams):
                raise DomainError("cat closed form needs CatParams", kind=kind)
            sigma = params.sigma
            sep = params.separation if params.separation is not None else l / 2
            sign = 1.0 if params.parity == "even" else -1.0
            overlap = math.exp(-(sep ** 2) / (4 * sigma ** 2))
            fringes = peak(0.0, sigma) + peak(l / 2, sigma) + peak(-l / 2, sigma)
            wf = n_envelope(sigma) * (
                peak(-sep / 2, sigma) + peak(sep / 2, sigma) + sign * np.cos(2 * math.pi * n * sep / l) * fringes
            )
            wf = wf / (l * (1 + sign * overlap))
            wg = flat_momentum(0)
        else:
            raise DomainError(f"No closed form for {kind!r}", kind=kind)

        for message in warnings:
            logger.warning("analytic_wigner: %s", message)
        return CylinderWigner(
            lattice=grid.lattice,
            nmax=nmax,
            mmax=mmax,
            grid=grid,
            factor_values=(np.asarray(wf, dtype=float), np.asarray(wg, dtype=float)),
            warnings=warnings,
        )

    # ------------------------------------------------------------------
    # Marginals and derived quantities
    # ------------------------------------------------------------------

    def marginals(self, w: CylinderWigner) -> Marginals:
        """All marginals of the surface; exact when the source coefficients are known."""
        if w.source is None:
            return self._marginals_from_values(w)
        grid = w.grid
        l = w.lattice.l
        xbar, pbar = grid.xbar, grid.pbar
        n = w.n_values
        m = w.m_values
        ex = np.exp(2j * math.pi * np.outer(n, xbar) / l)            # (2N+1, Nx)
        ep = np.exp(-1j * np.outer(m, pbar) * l)                     # (2M+1, Np)

        modular = np.zeros((grid.size_x, grid.size_p))
        integer = np.zeros((n.size, m.size))
        crossed_1 = np.zeros((grid.size_x, m.size))
        crossed_2 = np.zeros((n.size, grid.size_p))
        rho_x = np.zeros((n.size, n.size), dtype=complex)
        rho_p = np.zeros((m.size, m.size), dtype=complex)
        for weight, component in w.source.components:
            c = component.resized(w.nmax, w.mmax).coefficients
            amplitudes = ex.T @ c @ ep / math.sqrt(2 * math.pi)
            modular += weight * np.abs(amplitudes) ** 2
            integer += weight * np.abs(c) ** 2
            crossed_1 += weight * np.abs(ex.T @ c) ** 2 / l
            crossed_2 += weight * np.abs(c @ ep) ** 2 * l / (2 * math.pi)
            rho_x += weight * (c @ c.conj().T)
            rho_p += weight * (c.T @ c.conj())

        partial_g = self._reduced_wigner(rho_x, n, xbar, 2 * math.pi / l) / l
        partial_f = self._reduced_wigner(rho_p, m, pbar, -l) * l / (2 * math.pi)
        return Marginals(
            modular_density=modular,
            integer_density=integer,
            crossed_1=crossed_1,
            crossed_2=crossed_2,
            partial_trace_F=partial_f,
            partial_trace_G=partial_g,
        )

    @staticmethod
    def _reduced_wigner(rho: np.ndarray, index: np.ndarray, coords: np.ndarray, frequency: float) -> np.ndarray:
        """sum_{a,b} rho[a,b] exp(i frequency (a-b) coord) sinc(k - (a+b)/2), shape (len(index), len(coords))."""
        a = index[:, None]
        b = index[None, :]
        phases = np.exp(1j * frequency * np.multiply.outer(a - b, coords))          # (K, K, C)
        kernel = np.sinc(index[:, None, None] - 0.5 * (a + b)[None, :, :])          # (K, K, K)
        values = np.einsum("kab,ab,abc->kc", kernel, rho, phases, optimize=True)
        return values.real

    def _marginals_from_values(self, w: CylinderWigner) -> Marginals:
        dx, dp = w.grid.dx, w.grid.dp
        if w.factors is not None and w.raw_values is None:
            wf, wg = (np.real(f) for f in w.factors)
            f_x, g_p = wf.sum(axis=0), wg.sum(axis=0)
            f_n, g_m = wf.sum(axis=1) * dx, wg.sum(axis=1) * dp
            return Marginals(
                modular_density=np.outer(f_x, g_p),
                integer_density=np.outer(f_n, g_m),
                crossed_1=np.outer(f_x, g_m),
                crossed_2=np.outer(f_n, g_p),
                partial_trace_F=wg * f_n.sum(),
                partial_trace_G=wf * g_m.sum(),
            )
        values = w.values
        return Marginals(
            modular_density=values.sum(axis=(0, 1)),
            integer_density=values.sum(axis=(2, 3)) * dx * dp,
            crossed_1=values.sum(axis=0).sum(axis=2).T * dp,
            crossed_2=values.sum(axis=1).sum(axis=1) * dx,
            partial_trace_F=values.sum(axis=0).sum(axis=1) * dx,
            partial_trace_G=values.sum(axis=1).sum(axis=2) * dp,
        )

    def parity_expectation(self, w: CylinderWigner) -> float:
        """<Pi> as the sum of the even sectors at n = m = 0."""
        sectors = self._sectors(w)
        even = sectors[::2, ::2, w.nmax, w.mmax]
        return float(np.sum(even).real)

    def reconstruct_density(self, w: CylinderWigner) -> np.ndarray:
        """
        Density matrix over the flattened truncated basis, recovered from
        the sampled surface.  The display grid must resolve every sector.
        """
        nmax, mmax = w.nmax, w.mmax
        sectors = self._sectors_by_quadrature(w)
        size_n, size_m = 2 * nmax + 1, 2 * mmax + 1
        rho = np.zeros((size_n, size_m, size_n, size_m), dtype=complex)
        # only columns whose shifted partner stays in the window carry products
        inverses_e = []
        for e in range(-2 * mmax, 2 * mmax + 1):
            cols_t = _shift_window(mmax, e)
            inverses_e.append((np.arange(size_m)[cols_t], np.linalg.pinv(_sinc_kernel(mmax, e)[:, cols_t])))
        for i, d in enumerate(range(-2 * nmax, 2 * nmax + 1)):
            cols_b = _shift_window(nmax, d)
            b = np.arange(size_n)[cols_b]
            inverse_d = np.linalg.pinv(_sinc_kernel(nmax, d)[:, cols_b])
            for j, e in enumerate(range(-2 * mmax, 2 * mmax + 1)):
                t, inverse_e = inverses_e[j]
                block = inverse_d @ sectors[i, j] @ inverse_e.T
                rows, cols = np.meshgrid(b, t, indexing="ij")
                rho[rows + d, cols + e, rows, cols] = block
        return rho.reshape(size_n * size_m, size_n * size_m)

    def fringe_analysis(self, w: CylinderWigner, threshold: Optional[float] = None) -> FringeAnalysis:
        """
        Count the extrema of the reduced x-side surface along n on the
        xbar column midway between the two largest density peaks.
        """
        threshold = settings.FRINGE_THRESHOLD if threshold is None else threshold
        marginals = self.marginals(w)
        density = marginals.modular_density.sum(axis=1)
        peaks = _local_maxima(density)
        if peaks.size < 2:
            return FringeAnalysis(count=0, column_xbar=None, extrema=[], threshold=threshold, saturated=False)
        top = peaks[np.argsort(density[peaks])[-2:]]
        column = int(round(0.5 * (top[0] + top[1])))
        profile = marginals.partial_trace_G[:, column]
        scale = float(np.max(np.abs(profile)))
        if scale == 0.0:
            return FringeAnalysis(count=0, column_xbar=float(w.grid.xbar[column]), extrema=[], threshold=threshold, saturated=False)

        extrema = []
        last = profile.size - 1
        for i, value in enumerate(profile):
            if abs(value) < threshold * scale:
                continue
            if i in (0, last):
                extrema.append(i)
                continue
            slope_in = value - profile[i - 1]
            slope_out = profile[i + 1] - value
            if slope_in * slope_out < 0:
                extrema.append(i)
        # the count is limited by the window when the n-envelope has not decayed at its edge
        n_density = marginals.integer_density.sum(axis=1)
        edge = max(n_density[:2].max(), n_density[-2:].max())
        saturated = any(i in (0, last) for i in extrema) or edge >= threshold * float(n_density.max())
        if saturated:
            logger.warning("fringe_analysis: fringe count limited by the truncation |n| <= %d", w.nmax)
        return FringeAnalysis(
            count=len(extrema),
            column_xbar=float(w.grid.xbar[column]),
            extrema=[int(w.n_values[i]) for i in extrema],
            threshold=threshold,
            saturated=saturated,
        )

    def fringe_count(self, w: CylinderWigner, threshold: Optional[float] = None) -> int:
        return self.fringe_analysis(w, threshold).count

    def audit_realness(self, w: CylinderWigner) -> float:
        residue = w.imaginary_residue
        if residue > settings.REALNESS_TOLERANCE:
            logger.warning("Wigner surface has imaginary residue %.3e", residue)
            w.warnings.append(f"imaginary residue {residue:.3e}")
        return residue

    # ------------------------------------------------------------------
    # Private helpers
    # ------------------------------------------------------------------

    def _prepare(
        self, state: StateLike, nmax: int, mmax: int, grid: Optional[ModularGrid]
    ) -> Tuple[EnsembleState, ModularGrid, float, list]:
        warnings = []
        if isinstance(state, ModularWavefunction):
            self._check_aliasing(state.grid, nmax, mmax)
            iw = self.zak_service.modular_to_integer(state, nmax, mmax)
            warnings.extend(state.warnings)
            return EnsembleState.pure(iw), grid or state.grid, iw.truncation_loss, warnings
        if grid is None:
            raise DomainError("A display grid is required for coefficient input")
        if isinstance(state, IntegerWavefunction):
            iw = state.resized(nmax, mmax)
            return EnsembleState.pure(iw), grid, iw.truncation_loss, warnings
        if isinstance(state, EnsembleState):
            components = tuple((weight, s.resized(nmax, mmax)) for weight, s in state.components)
            loss = sum(weight * s.truncation_loss for weight, s in components)
            return EnsembleState(components), grid, loss, warnings
        raise DomainError(f"Unsupported state type {type(state).__name__}")

    @staticmethod
    def _check_aliasing(grid: ModularGrid, nmax: int, mmax: int) -> None:
        if grid.size_x < 4 * nmax + 1 or grid.size_p < 4 * mmax + 1:
            raise AliasingError(
                f"Grid {grid.size_x}x{grid.size_p} aliases the sectors of truncation ({nmax}, {mmax})",
                size_x=grid.size_x,
                size_p=grid.size_p,
                nmax=nmax,
                mmax=mmax,
            )

    def _sectors(self, w: CylinderWigner) -> np.ndarray:
        if w.sectors is not None:
            return w.sectors
        if w.factor_sectors is not None:
            qf, qg = w.factor_sectors
            return qf[:, None, :, None] * qg[None, :, None, :]
        return self._sectors_by_quadrature(w)

    def _sectors_by_quadrature(self, w: CylinderWigner) -> np.ndarray:
        grid = w.grid
        if grid.size_x < 4 * w.nmax + 1 or grid.size_p < 4 * w.mmax + 1:
            raise UnderResolvedError(
                "Display grid is too coarse to recover the sectors",
                size_x=grid.size_x,
                size_p=grid.size_p,
                required_x=4 * w.nmax + 1,
                required_p=4 * w.mmax + 1,
            )
        l = w.lattice.l
        d = np.arange(-2 * w.nmax, 2 * w.nmax + 1)
        e = np.arange(-2 * w.mmax, 2 * w.mmax + 1)
        ex = np.exp(-2j * math.pi * np.outer(d, grid.xbar) / l)
        ep = np.exp(1j * np.outer(e, grid.pbar) * l)
        return np.einsum("nmjk,dj,ek->denm", w.values, ex, ep, optimize=True) * grid.dx * grid.dp

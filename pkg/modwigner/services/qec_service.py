"""
QEC Service — Steane correction of GKP-encoded data with GKP ancillas.

One round entangles the data with an ancilla through the position-position
coupling, measures the ancilla by homodyne detection and keeps

    round "p":  psi(x)  ->  psi(x + p) * F_x(x)     (ancilla comb in x)
    round "x":  phi(p)  ->  phi(p + q) * F_p(p)     (ancilla comb in p)

where F is the ancilla amplitude in the conjugate representation.  The
pipeline alternates p and x rounds and measures the state quality before
and after through Gaussian fits of the modular marginals and the fringe
count of the Wigner surface.
"""

from __future__ import annotations

import logging
import math
from concurrent.futures import ThreadPoolExecutor
from typing import List, Literal, Optional, Sequence, Tuple, Union

import numpy as np
from scipy import optimize, special

from ..config import settings
from ..exceptions import NullProjectionError, NumericError, PreconditionError
from ..models.lattice import LatticeSpec, ModularGrid
from ..models.wavefunctions import ModularWavefunction, PositionWavefunction
from ..schemas.qec import ModularWidths, QecReport, QecSweepRow
from ..schemas.states import CoherentParams, GkpParams, ShiftError, StateSpec
from ..utils.special import gaussian
from .state_service import StateService
from .wigner_service import WignerService
from .zak_service import ZakService

logger = logging.getLogger(__name__)

Quadrature = Literal["p", "x"]
Measured = Union[float, Literal["sample"]]

NO_ERROR_BOUND = math.sqrt(math.pi) / 6
_ENVELOPE_REACH = 5.5       # envelope widths kept inside the position window
_COMB_CUTOFF = 1e-16
_MIN_CELLS = 3


def _wrapped(delta: np.ndarray, period: float) -> np.ndarray:
    return (delta + 0.5 * period) % period - 0.5 * period


def _shift_samples(values: np.ndarray, step: float, shift: float) -> np.ndarray:
    """values(t + shift) on a uniform grid of spacing ``step``, by Fourier interpolation."""
    if shift == 0.0:
        return values
    k = 2 * math.pi * np.fft.fftfreq(values.size, d=step)
    return np.fft.ifft(np.fft.fft(values) * np.exp(1j * k * shift))


def _no_error_probability(delta: float, kappa: float, lattice: LatticeSpec, bound: float) -> float:
    """Mass of exp(-x^2/delta^2) exp(-p^2/kappa^2) inside the bound, relative to the cell."""
    x_side = special.erf(bound / delta) / special.erf(lattice.x_half / delta)
    p_side = special.erf(bound / kappa) / special.erf(lattice.p_half / kappa)
    return float(min(1.0, x_side * p_side))


class QecService:

    def __init__(self):
        self.zak_service = ZakService()
        self.state_service = StateService()
        self.wigner_service = WignerService()

    # ------------------------------------------------------------------
    # Ancilla combs
    # ------------------------------------------------------------------

    def ancilla_comb(
        self, coords: np.ndarray, ancilla: GkpParams, quadrature: Quadrature, lattice: LatticeSpec
    ) -> np.ndarray:
        """
        Ancilla amplitude in the representation the data is filtered in:
        peaks of width delta on l/4 + k l/2 (x side) or on 2 pi k / l (p side),
        under a Gaussian envelope of width 1/kappa.
        """
        delta, kappa = ancilla.delta, ancilla.envelope
        if quadrature == "p":
            offset, spacing = 0.25 * lattice.l, 0.5 * lattice.l
        else:
            offset, spacing = 0.0, lattice.p_period
        reach = math.sqrt(2 * math.log(1 / _COMB_CUTOFF)) / kappa
        lo = max(coords.min(), -reach)
        hi = min(coords.max(), reach)
        k = np.arange(math.floor((lo - offset) / spacing) - 1, math.ceil((hi - offset) / spacing) + 2)
        centers = offset + k * spacing
        weights = np.exp(-0.5 * (kappa * centers) ** 2)
        comb = np.zeros(coords.shape)
        for center, weight in zip(centers, weights):
            comb += weight * gaussian(coords - center, delta)
        return comb

    # ------------------------------------------------------------------
    # Rounds
    # ------------------------------------------------------------------

    def steane_round(
        self,
        psi: PositionWavefunction,
        ancilla: GkpParams,
        p_measured: float = 0.0,
        quadrature: Quadrature = "p",
    ) -> PositionWavefunction:
        """
        One correction round on a position wavefunction.

        ``quadrature="p"`` filters positions with the ancilla comb after the
        measured shift; ``"x"`` does the same in momentum, padding the
        window first so the narrowed momentum peaks keep their envelope.
        """
        if not np.isfinite(p_measured):
            raise PreconditionError("Measured homodyne value must be finite", p_measured=p_measured)
        lattice = psi.lattice

        if quadrature == "p":
            flat = _shift_samples(psi.samples.reshape(-1), psi.dx, p_measured)
            comb = self.ancilla_comb(psi.x.reshape(-1), ancilla, "p", lattice)
            out = PositionWavefunction(
                lattice=lattice,
                samples=(flat * comb).reshape(psi.cells, psi.size_x),
                label=f"steane_p({p_measured:.6g})·{psi.label}",
            )
        elif quadrature == "x":
            padded = psi.padded(max(psi.cells, self.required_cells(psi, ancilla)))
            p, phi = self.zak_service.momentum_from_position(padded)
            dp = p[1] - p[0]
            phi = _shift_samples(phi, dp, p_measured)
            phi = phi * self.ancilla_comb(p, ancilla, "x", lattice)
            out = self.zak_service.position_from_momentum(p, phi, padded)
            out = PositionWavefunction(
                lattice=lattice, samples=out.samples, label=f"steane_x({p_measured:.6g})·{psi.label}"
            )
        else:
            raise PreconditionError(f"Unknown quadrature {quadrature!r}", quadrature=quadrature)

        norm = out.norm
        if norm < settings.NULL_NORM_TOLERANCE:
            raise NullProjectionError(
                "Homodyne outcome is incompatible with the state",
                p_measured=p_measured,
                quadrature=quadrature,
                norm=norm,
            )
        logger.debug("steane_round(%s): kept norm %.6e", quadrature, norm)
        return out.normalized()

    def required_cells(self, psi: PositionWavefunction, ancilla: GkpParams) -> int:
        """Odd cell count holding the position envelope after a momentum filter."""
        x = psi.x.reshape(-1)
        density = np.abs(psi.samples.reshape(-1)) ** 2
        total = density.sum()
        mean = float(np.sum(x * density) / total)
        spread = math.sqrt(max(float(np.sum((x - mean) ** 2 * density) / total), psi.dx ** 2))
        kappa = 1.0 / (math.sqrt(2.0) * spread)
        narrowed = (kappa ** -2 + ancilla.delta ** -2) ** -0.5
        half = int(math.ceil(_ENVELOPE_REACH / (narrowed * psi.lattice.l)))
        return 2 * half + 1

    # ------------------------------------------------------------------
    # Homodyne outcomes and shift noise
    # ------------------------------------------------------------------

    def homodyne_density(
        self, psi: PositionWavefunction, ancilla: GkpParams, quadrature: Quadrature = "p"
    ) -> Tuple[np.ndarray, np.ndarray]:
        """
        Outcome density P(v) proportional to int |psi(t + v)|^2 |F(t)|^2 dt,
        as (values, density) with the density integrating to one.
        """
        lattice = psi.lattice
        if quadrature == "p":
            coords = psi.x.reshape(-1)
            data = np.abs(psi.samples.reshape(-1)) ** 2
        else:
            coords, phi = self.zak_service.momentum_from_position(psi)
            data = np.abs(phi) ** 2
        step = coords[1] - coords[0]
        filt = self.ancilla_comb(coords, ancilla, quadrature, lattice) ** 2
        size = coords.size
        total = 2 * size
        # correlation[v] = sum_t data[t + v] filt[t], zero-padded to stay linear
        corr = np.fft.ifft(np.fft.fft(data, total) * np.conj(np.fft.fft(filt, total))).real
        shifts = np.concatenate([np.arange(0, size), np.arange(-size, 0)])
        order = np.argsort(shifts)
        values = shifts[order] * step
        density = np.clip(corr[order], 0.0, None)
        area = density.sum() * step
        if area <= 0:
            raise NullProjectionError("Homodyne outcome density vanishes", quadrature=quadrature)
        return values, density / area

    def sample_homodyne(
        self,
        psi: PositionWavefunction,
        ancilla: GkpParams,
        quadrature: Quadrature,
        rng: np.random.Generator,
    ) -> float:
        values, density = self.homodyne_density(psi, ancilla, quadrature)
        weights = density / density.sum()
        return float(rng.choice(values, p=weights))

    def shift_noise_samples(
        self, seed: Optional[int], sigma_u: float, sigma_v: float, size: int
    ) -> Tuple[np.ndarray, np.ndarray]:
        """``size`` Gaussian shift errors as two arrays (u, v)."""
        if sigma_u < 0 or sigma_v < 0:
            raise PreconditionError("Shift widths must be non-negative", sigma_u=sigma_u, sigma_v=sigma_v)
        rng = np.random.default_rng(seed)
        u = rng.normal(0.0, sigma_u, size) if sigma_u > 0 else np.zeros(size)
        v = rng.normal(0.0, sigma_v, size) if sigma_v > 0 else np.zeros(size)
        return u, v

    def sample_shift_noise(self, seed: Optional[int], sigma_u: float, sigma_v: float) -> ShiftError:
        u, v = self.shift_noise_samples(seed, sigma_u, sigma_v, 1)
        return ShiftError(u=float(u[0]), v=float(v[0]))

    # ------------------------------------------------------------------
    # Quality measures
    # ------------------------------------------------------------------

    def p_no_err(self, params: GkpParams, bound: float = NO_ERROR_BOUND) -> float:
        """
        Probability that the modular shift lies within +-bound in both
        variables for the separable density exp(-xbar^2/delta^2) exp(-pbar^2/kappa^2).
        """
        return _no_error_probability(params.delta, params.envelope, params.lattice, bound)

    def p_no_err_from_widths(self, widths: ModularWidths, lattice: LatticeSpec, bound: float = NO_ERROR_BOUND) -> float:
        return _no_error_probability(widths.delta, widths.kappa, lattice, bound)

    def fit_modular_widths(self, mod: ModularWavefunction) -> ModularWidths:
        """
        Least-squares widths of the modular marginals:
          xbar:  A0 exp(-(xbar - c0)^2/delta^2) + A1 exp(-(xbar - c1)^2/delta^2)
          pbar:  A exp(-(pbar - c)^2/kappa^2)
        with distances taken around the cell.
        """
        lattice = mod.lattice
        xbar, pbar = mod.grid.xbar, mod.grid.pbar
        x_marg = mod.x_marginal()
        p_marg = mod.p_marginal()

        def x_model(t, a0, c0, a1, c1, width):
            return (
                a0 * np.exp(-(_wrapped(t - c0, lattice.l) ** 2) / width ** 2)
                + a1 * np.exp(-(_wrapped(t - c1, lattice.l) ** 2) / width ** 2)
            )

        def p_model(t, a, c, width):
            return a * np.exp(-(_wrapped(t - c, lattice.p_period) ** 2) / width ** 2)

        top = float(x_marg.max())
        x_guess = self._x_guess(x_marg, xbar, lattice)
        p_top = float(p_marg.max())
        p_width = max(mod.grid.dp, np.count_nonzero(p_marg > 0.5 * p_top) * mod.grid.dp / (2 * math.sqrt(math.log(2))))
        p_guess = [p_top, float(pbar[np.argmax(p_marg)]), p_width]
        try:
            x_params, _ = optimize.curve_fit(x_model, xbar, x_marg, p0=x_guess, maxfev=20000)
            p_params, _ = optimize.curve_fit(p_model, pbar, p_marg, p0=p_guess, maxfev=20000)
        except (RuntimeError, ValueError) as exc:
            raise NumericError("Gaussian fit of the modular marginals failed", reason=str(exc)) from exc

        x_resid = np.sqrt(np.mean((x_model(xbar, *x_params) - x_marg) ** 2)) / max(top, 1e-300)
        p_resid = np.sqrt(np.mean((p_model(pbar, *p_params) - p_marg) ** 2)) / max(float(p_marg.max()), 1e-300)
        return ModularWidths(
            delta=abs(float(x_params[4])),
            kappa=abs(float(p_params[2])),
            residual=float(max(x_resid, p_resid)),
        )

    @staticmethod
    def _x_guess(x_marg: np.ndarray, xbar: np.ndarray, lattice: LatticeSpec) -> List[float]:
        """Start values from the two largest local maxima and the half-maximum width."""
        step = xbar[1] - xbar[0]
        top = float(x_marg.max())
        peaks = np.flatnonzero((x_marg > np.roll(x_marg, 1)) & (x_marg >= np.roll(x_marg, -1)))
        peaks = peaks[np.argsort(x_marg[peaks])[::-1]]
        c0 = float(xbar[peaks[0]]) if peaks.size else 0.0
        if peaks.size > 1 and x_marg[peaks[1]] > 0.05 * top:
            c1, a1, count = float(xbar[peaks[1]]), float(x_marg[peaks[1]]), 2
        else:
            c1, a1, count = float(_wrapped(np.array(c0 + 0.5 * lattice.l), lattice.l)), 0.01 * top, 1
        above = np.count_nonzero(x_marg > 0.5 * top) * step / count
        width = max(step, above / (2 * math.sqrt(math.log(2))))
        return [top, c0, a1, c1, width]

    # ------------------------------------------------------------------
    # Pipeline
    # ------------------------------------------------------------------

    def qec_pipeline(
        self,
        spec: StateSpec,
        ancilla: GkpParams,
        rounds: int = 2,
        p_measured: Measured = 0.0,
        seed: Optional[int] = None,
        grid: Optional[ModularGrid] = None,
        nmax: Optional[int] = None,
        mmax: Optional[int] = None,
    ) -> QecReport:
        """
        Build the input state, run ``rounds`` alternating p/x corrections and
        report the quality measures before and after.
        """
        if rounds < 0:
            raise PreconditionError("Round count must be non-negative", rounds=rounds)
        nmax = settings.DEFAULT_NMAX if nmax is None else nmax
        mmax = settings.DEFAULT_MMAX if mmax is None else mmax
        lattice = spec.lattice
        grid = grid or ModularGrid(lattice, settings.DEFAULT_NX, settings.DEFAULT_NP)
        rng = np.random.default_rng(seed if seed is not None else settings.DEFAULT_SEED)

        mod_in = self.state_service.build_state(spec, grid)
        warnings = list(mod_in.warnings)
        widths_in, p_in, fringes_in = self._quality(mod_in, lattice, nmax, mmax)

        psi = self.zak_service.zak_inverse(mod_in, self.cells_for(mod_in))
        measured: List[float] = []
        for index in range(rounds):
            quadrature: Quadrature = "p" if index % 2 == 0 else "x"
            if p_measured == "sample":
                value = self.sample_homodyne(psi, ancilla, quadrature, rng)
            else:
                value = float(p_measured)
            measured.append(value)
            psi = self.steane_round(psi, ancilla, value, quadrature)
            logger.info("qec round %d (%s): homodyne value %.6g, %d cells", index + 1, quadrature, value, psi.cells)

        if rounds:
            mod_out = self.zak_service.zak_forward(psi, grid.size_p).normalized()
            widths_out, p_out, fringes_out = self._quality(mod_out, lattice, nmax, mmax)
        else:
            mod_out, widths_out, p_out, fringes_out = mod_in, widths_in, p_in, fringes_in

        projected = isinstance(spec, CoherentParams) and rounds > 0
        if projected:
            warnings.append("coherent input is projected onto the GKP code space")

        return QecReport(
            input_state=mod_in.label,
            ancilla=ancilla,
            rounds=rounds,
            homodyne_values=measured,
            p_no_err_before=p_in,
            p_no_err_after=p_out,
            fringes_before=fringes_in,
            fringes_after=fringes_out,
            widths_before=widths_in,
            widths_after=widths_out,
            photon_number_before=self.state_service.photon_number_estimate(widths_in.delta),
            photon_number_after=self.state_service.photon_number_estimate(widths_out.delta),
            output_norm=mod_out.norm,
            projected_onto_gkp=projected,
            warnings=warnings,
            output_state=mod_out,
        )

    def qec_sweep(
        self,
        values: Sequence[float],
        ancilla: GkpParams,
        rounds: int = 2,
        logical: str = "plus",
        grid: Optional[ModularGrid] = None,
        nmax: Optional[int] = None,
        mmax: Optional[int] = None,
        parameter: Literal["delta", "kappa"] = "delta",
        fixed_delta: Optional[float] = None,
    ) -> List[QecSweepRow]:
        """
        Run the pipeline for GKP inputs over ``values``, in order.

        ``delta`` sweeps the symmetric width delta = kappa.  ``kappa``
        sweeps the momentum envelope alone at delta = ``fixed_delta``
        (the GkpParams default when None).
        """
        if parameter not in ("delta", "kappa"):
            raise PreconditionError(f"Cannot sweep {parameter!r}", parameter=parameter)
        delta_fixed = GkpParams().delta if fixed_delta is None else fixed_delta

        def run(value: float) -> QecSweepRow:
            delta = value if parameter == "delta" else delta_fixed
            spec = GkpParams(l=ancilla.l, delta=delta, kappa=value, logical=logical)
            report = self.qec_pipeline(spec, ancilla, rounds, 0.0, None, grid, nmax, mmax)
            return QecSweepRow(
                delta=spec.delta,
                kappa=spec.kappa,
                p_before=report.p_no_err_before,
                p_after=report.p_no_err_after,
                fringes_before=report.fringes_before,
                fringes_after=report.fringes_after,
            )

        workers = settings.worker_count()
        logger.info("qec_sweep: %d %s points on %d worker(s)", len(values), parameter, workers)
        with ThreadPoolExecutor(max_workers=workers) as pool:
            return list(pool.map(run, values))

    # ------------------------------------------------------------------
    # Private helpers
    # ------------------------------------------------------------------

    def cells_for(self, mod: ModularWavefunction) -> int:
        """Odd cell count whose edge cells hold less than the truncation tolerance."""
        table = self.zak_service.hybrid_amplitude(mod, "xm")
        mass = table.density.sum(axis=0) * mod.grid.dx
        occupied = table.indices[mass > settings.TRUNCATION_TOLERANCE * 1e-2 * mass.sum()]
        reach = int(np.max(np.abs(occupied))) if occupied.size else 0
        return max(_MIN_CELLS, 2 * (reach + 2) + 1)

    def _quality(
        self, mod: ModularWavefunction, lattice: LatticeSpec, nmax: int, mmax: int
    ) -> Tuple[ModularWidths, float, int]:
        widths = self.fit_modular_widths(mod)
        probability = self.p_no_err_from_widths(widths, lattice)
        surface = self.wigner_service.wigner_full(mod, nmax, mmax)
        fringes = self.wigner_service.fringe_count(surface)
        return widths, probability, fringes

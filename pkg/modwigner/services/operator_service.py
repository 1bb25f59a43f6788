"""
Operator Service — truncated-matrix realizations over the integer basis.

  D(n, xbar, m, pbar)|r, s> = exp(i xbar (r + n/2) 2pi/l) exp(-i pbar (s + m/2) l) |r + n, s + m>
  Pi|n, m> = |-n, -m>
  Delta(label) = D Pi D^dagger

Identities are asserted on the truncation interior; columns whose image
leaves the window are flagged in ``OperatorMatrix.truncated``.
"""

from __future__ import annotations

import logging
import math
from typing import Dict, Literal, Tuple, Union

import numpy as np

from ..exceptions import AliasingError, DomainError, PreconditionError
from ..models.lattice import LatticeSpec, ModularGrid
from ..models.operators import DisplacementLabel, OperatorMatrix
from ..models.wavefunctions import IntegerWavefunction, ModularWavefunction
from .lattice_service import LatticeService
from .zak_service import ZakService

logger = logging.getLogger(__name__)

Shift = Tuple[int, int]


def _index_grid(nmax: int, mmax: int) -> Tuple[np.ndarray, np.ndarray]:
    r, s = np.meshgrid(np.arange(-nmax, nmax + 1), np.arange(-mmax, mmax + 1), indexing="ij")
    return r.reshape(-1), s.reshape(-1)


def _flat(r: np.ndarray, s: np.ndarray, nmax: int, mmax: int) -> np.ndarray:
    return (r + nmax) * (2 * mmax + 1) + (s + mmax)


def _inside(r: np.ndarray, s: np.ndarray, nmax: int, mmax: int) -> np.ndarray:
    return (np.abs(r) <= nmax) & (np.abs(s) <= mmax)


class OperatorService:

    def __init__(self):
        self.lattice_service = LatticeService()
        self.zak_service = ZakService()

    # ------------------------------------------------------------------
    # Displacements
    # ------------------------------------------------------------------

    def displacement_phase(
        self, label: DisplacementLabel, r: np.ndarray, s: np.ndarray, lattice: LatticeSpec
    ) -> np.ndarray:
        l = lattice.l
        return (
            np.exp(1j * label.xbar * (r + 0.5 * label.n) * 2 * math.pi / l)
            * np.exp(-1j * label.pbar * (s + 0.5 * label.m) * l)
        )

    def displacement_matrix(
        self, label: DisplacementLabel, nmax: int, mmax: int, lattice: LatticeSpec
    ) -> OperatorMatrix:
        if nmax < abs(label.n) + 2 or mmax < abs(label.m) + 2:
            raise PreconditionError(
                f"Truncation ({nmax}, {mmax}) too small for shift ({label.n}, {label.m})",
                nmax=nmax,
                mmax=mmax,
                n=label.n,
                m=label.m,
            )
        r, s = _index_grid(nmax, mmax)
        target_r, target_s = r + label.n, s + label.m
        keep = _inside(target_r, target_s, nmax, mmax)
        dim = r.size
        matrix = np.zeros((dim, dim), dtype=complex)
        columns = np.arange(dim)[keep]
        rows = _flat(target_r[keep], target_s[keep], nmax, mmax)
        matrix[rows, columns] = self.displacement_phase(label, r[keep], s[keep], lattice)
        return OperatorMatrix(
            lattice=lattice,
            nmax=nmax,
            mmax=mmax,
            matrix=matrix,
            truncated=~keep,
            label=f"D{label.as_tuple()}",
        )

    def displacement_apply(self, label: DisplacementLabel, iw: IntegerWavefunction) -> IntegerWavefunction:
        """Matrix-free D|psi>; mass pushed past the window is added to the truncation loss."""
        nmax, mmax = iw.nmax, iw.mmax
        r, s = np.meshgrid(iw.n_values, iw.m_values, indexing="ij")
        shifted = iw.coefficients * self.displacement_phase(label, r, s, iw.lattice)
        out = np.zeros_like(iw.coefficients, dtype=complex)
        src_n = slice(max(0, -label.n), min(2 * nmax + 1, 2 * nmax + 1 - label.n))
        src_m = slice(max(0, -label.m), min(2 * mmax + 1, 2 * mmax + 1 - label.m))
        dst_n = slice(src_n.start + label.n, src_n.stop + label.n)
        dst_m = slice(src_m.start + label.m, src_m.stop + label.m)
        if src_n.start < src_n.stop and src_m.start < src_m.stop:
            out[dst_n, dst_m] = shifted[src_n, src_m]
        lost = max(float(np.sum(np.abs(shifted) ** 2) - np.sum(np.abs(out) ** 2)), 0.0)
        return IntegerWavefunction(
            lattice=iw.lattice,
            coefficients=out,
            truncation_loss=iw.truncation_loss + lost,
            label=f"D{label.as_tuple()}·{iw.label}",
        )

    def compose_displacements(
        self, first: DisplacementLabel, second: DisplacementLabel, lattice: LatticeSpec
    ) -> Tuple[DisplacementLabel, complex]:
        """
        (label, phase) with D(second) D(first) = phase * D(label).

        The continuous parts add with wrap-around; each winding w (in xbar)
        and v (in pbar) contributes (-1)^(w N + v M) with N, M the summed
        integer shifts.
        """
        l = lattice.l
        xbar, w = self.lattice_service.wrapped_sum(first.xbar, second.xbar, l)
        pbar, v = self.lattice_service.wrapped_sum(first.pbar, second.pbar, lattice.p_period)
        n_total = first.n + second.n
        m_total = first.m + second.m
        phase = (
            np.exp(-1j * (math.pi / l) * (first.xbar * second.n - second.xbar * first.n))
            * np.exp(1j * (l / 2) * (first.pbar * second.m - second.pbar * first.m))
            * (-1.0) ** ((w * n_total + v * m_total) % 2)
        )
        return DisplacementLabel(n_total, xbar, m_total, pbar), complex(phase)

    # ------------------------------------------------------------------
    # Parity and point operators
    # ------------------------------------------------------------------

    def parity_matrix(self, nmax: int, mmax: int, lattice: LatticeSpec) -> OperatorMatrix:
        r, s = _index_grid(nmax, mmax)
        dim = r.size
        matrix = np.zeros((dim, dim), dtype=complex)
        matrix[_flat(-r, -s, nmax, mmax), np.arange(dim)] = 1.0
        return OperatorMatrix(
            lattice=lattice,
            nmax=nmax,
            mmax=mmax,
            matrix=matrix,
            truncated=np.zeros(dim, dtype=bool),
            label="Pi",
        )

    def point_operator_matrix(
        self, label: DisplacementLabel, nmax: int, mmax: int, lattice: LatticeSpec
    ) -> OperatorMatrix:
        """
        Delta|r, s> = exp(i (4pi/l) xbar (n - r)) exp(2 i l pbar (s - m)) |2n - r, 2m - s>.
        """
        l = lattice.l
        if abs(label.n) > nmax or abs(label.m) > mmax:
            raise PreconditionError(
                f"Point ({label.n}, {label.m}) lies outside the truncation ({nmax}, {mmax})",
                n=label.n,
                m=label.m,
            )
        r, s = _index_grid(nmax, mmax)
        target_r, target_s = 2 * label.n - r, 2 * label.m - s
        keep = _inside(target_r, target_s, nmax, mmax)
        dim = r.size
        matrix = np.zeros((dim, dim), dtype=complex)
        phase = np.exp(1j * (4 * math.pi / l) * label.xbar * (label.n - r)) * np.exp(2j * l * label.pbar * (s - label.m))
        matrix[_flat(target_r[keep], target_s[keep], nmax, mmax), np.arange(dim)[keep]] = phase[keep]
        if not np.all(keep):
            logger.debug("point operator %s: %d columns leave the window", label.as_tuple(), int(np.sum(~keep)))
        return OperatorMatrix(
            lattice=lattice,
            nmax=nmax,
            mmax=mmax,
            matrix=matrix,
            truncated=~keep,
            label=f"Delta{label.as_tuple()}",
        )

    def wigner_frame_matrix(
        self, label: DisplacementLabel, nmax: int, mmax: int, lattice: LatticeSpec
    ) -> OperatorMatrix:
        """
        Hermitian kernel Phi with W(n, xbar, m, pbar) = Tr(rho Phi):

          <b, t|Phi|a, s> = (1/2pi) exp(2 pi i (a - b) xbar / l) exp(-i (s - t) pbar l)
                            sinc(n - (a + b)/2) sinc(m - (s + t)/2).

        On index pairs with a + b and s + t even it reduces to
        Delta(n, -xbar, m, -pbar) / 2pi.
        """
        l = lattice.l
        a = np.arange(-nmax, nmax + 1)
        s = np.arange(-mmax, mmax + 1)
        kx = (
            np.exp(2j * math.pi * (a[None, :] - a[:, None]) * label.xbar / l)
            * np.sinc(label.n - 0.5 * (a[None, :] + a[:, None]))
        )   # [b, a]
        kp = (
            np.exp(-1j * (s[None, :] - s[:, None]) * label.pbar * l)
            * np.sinc(label.m - 0.5 * (s[None, :] + s[:, None]))
        )   # [t, s]
        matrix = np.kron(kx, kp) / (2 * math.pi)
        return OperatorMatrix(
            lattice=lattice,
            nmax=nmax,
            mmax=mmax,
            matrix=matrix,
            truncated=np.zeros(matrix.shape[0], dtype=bool),
            label=f"Phi{label.as_tuple()}",
        )

    # ------------------------------------------------------------------
    # Logical Paulis and readout observables
    # ------------------------------------------------------------------

    def pauli_labels(self, lattice: LatticeSpec) -> Dict[str, DisplacementLabel]:
        """
        X: half-cell translation (xbar = l/2 folded to -l/2).
        Z: multiplication by exp(2 pi i xbar / l), i.e. the unit integer shift n = 1.

        The codewords sit at xbar = 0 and xbar = -l/2, where exp(2 pi i xbar / l) is +1 and -1.
        Written as a momentum kick that is a shift of 2 pi / l, a full momentum period, so it has
        no in-cell part (pbar = 0) and lands entirely on the integer index; in the half-argument
        convention D(x, p) = exp(2i (p x_op - x p_op)) the same operator reads D(0, pi / l).
        """
        return {
            "X": DisplacementLabel(0, -lattice.x_half, 0, 0.0),
            "Z": DisplacementLabel(1, 0.0, 0, 0.0),
        }

    def pauli_matrices(self, nmax: int, mmax: int, lattice: LatticeSpec) -> Dict[str, OperatorMatrix]:
        labels = self.pauli_labels(lattice)
        return {name: self.displacement_matrix(label, nmax, mmax, lattice) for name, label in labels.items()}

    def gamma_expectation(
        self, state: Union[ModularWavefunction, IntegerWavefunction], which: Literal["x", "y", "z"],
        grid: ModularGrid = None,
    ) -> float:
        """
        Modular readout observables over the half cell xbar in [-l/2, 0):

          Gamma_z = int [rho(xbar) - rho(xbar + l/2)]
          Gamma_x + i Gamma_y = 2 int exp(-i pbar l/2) psi*(xbar, pbar) psi(xbar + l/2, pbar)
        """
        if isinstance(state, IntegerWavefunction):
            if grid is None:
                raise PreconditionError("A grid is needed to evaluate integer-basis states")
            state = self.zak_service.integer_to_modular(state, grid)
        grid = state.grid
        half = grid.size_x // 2
        lower = state.amplitudes[:half]
        upper = state.amplitudes[half:]
        if which == "z":
            value = np.sum(np.abs(lower) ** 2 - np.abs(upper) ** 2) * grid.dx * grid.dp
            return float(value)
        coherence = 2.0 * np.sum(
            np.exp(-0.5j * grid.pbar * grid.lattice.l)[None, :] * lower.conj() * upper
        ) * grid.dx * grid.dp
        if which == "x":
            return float(coherence.real)
        if which == "y":
            return float(coherence.imag)
        raise DomainError(f"Unknown readout observable {which!r}", which=which)

    # ------------------------------------------------------------------
    # Characteristic-function expansion (verification utility)
    # ------------------------------------------------------------------

    def characteristic_function(self, iw: IntegerWavefunction, shift: Shift, grid: ModularGrid) -> np.ndarray:
        """chi(k; xbar, pbar) = Tr(rho D(kx, xbar, kp, pbar)) on the grid, shape (Nx, Np)."""
        kx, kp = shift
        self._check_synthesis_grid(iw.nmax, iw.mmax, grid)
        products = self._shifted_products(iw, kx, kp)
        l = grid.lattice.l
        ex = np.exp(2j * math.pi * np.outer(iw.n_values + 0.5 * kx, grid.xbar) / l)
        ep = np.exp(-1j * np.outer(iw.m_values + 0.5 * kp, grid.pbar) * l)
        return ex.T @ products @ ep

    def synthesize_density(
        self, chi: Dict[Shift, np.ndarray], nmax: int, mmax: int, grid: ModularGrid
    ) -> np.ndarray:
        """Rebuild rho over the flattened basis from chi on every shift supplied."""
        self._check_synthesis_grid(nmax, mmax, grid)
        l = grid.lattice.l
        size = (2 * nmax + 1) * (2 * mmax + 1)
        rho = np.zeros((size, size), dtype=complex)
        n_values = np.arange(-nmax, nmax + 1)
        m_values = np.arange(-mmax, mmax + 1)
        for (kx, kp), values in chi.items():
            ex = np.exp(-2j * math.pi * np.outer(n_values + 0.5 * kx, grid.xbar) / l)
            ep = np.exp(1j * np.outer(grid.pbar, m_values + 0.5 * kp) * l)
            block = (ex @ values @ ep) / (grid.size_x * grid.size_p)   # [b_x, b_p] -> rho[b, b + k]
            r, s = np.meshgrid(n_values, m_values, indexing="ij")
            valid = _inside(r + kx, s + kp, nmax, mmax)
            rows = _flat(r[valid], s[valid], nmax, mmax)
            cols = _flat(r[valid] + kx, s[valid] + kp, nmax, mmax)
            rho[rows, cols] = block[valid]
        return rho

    @staticmethod
    def _shifted_products(iw: IntegerWavefunction, kx: int, kp: int) -> np.ndarray:
        """P[b] = c_b conj(c_{b+k}), zero where b + k leaves the window."""
        c = iw.coefficients
        out = np.zeros_like(c, dtype=complex)
        rows, cols = c.shape
        bx = slice(max(0, -kx), min(rows, rows - kx))
        bp = slice(max(0, -kp), min(cols, cols - kp))
        if bx.start < bx.stop and bp.start < bp.stop:
            tx = slice(bx.start + kx, bx.stop + kx)
            tp = slice(bp.start + kp, bp.stop + kp)
            out[bx, bp] = c[bx, bp] * c[tx, tp].conj()
        return out

    @staticmethod
    def _check_synthesis_grid(nmax: int, mmax: int, grid: ModularGrid) -> None:
        if grid.size_x < 2 * nmax + 1 or grid.size_p < 2 * mmax + 1:
            raise AliasingError(
                "Grid too coarse to separate the basis phases",
                size_x=grid.size_x,
                size_p=grid.size_p,
                nmax=nmax,
                mmax=mmax,
            )

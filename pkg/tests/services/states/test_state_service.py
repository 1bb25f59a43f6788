# -*- coding: utf-8 -*-
"""
Tests for StateService.

Covers:
- Physical GKP states: unit norm, centres, plus = normalized(zero + one), regime flag
- Degenerate-normalization warning and the ideal-limit flag
- gkp_normalization and gkp_overlap against quadrature oracles; overlap monotonicity
- gkp_integer_coeffs against the transform pipeline
- apply_shift: identity, exact rolls on grid multiples, norm, full-period phase
- Coherent states: theta-series form against the Zak transform of the Gaussian
- Cat states: bump positions, overlap formula, odd cat at zero separation
- pi/2-rotated and plane-wave integer states
- build_state dispatch for every spec kind
"""

import math

import numpy as np
import pytest
from scipy import integrate

from modwigner.exceptions import DegenerateStateError, PreconditionError
from modwigner.models.lattice import ModularGrid
from modwigner.schemas.states import (
    CatParams,
    CoherentParams,
    GkpParams,
    Pi2Params,
    PlaneWaveParams,
    ShiftError,
    UniformParams,
)
from modwigner.utils.special import gaussian

from tests.factories import CoherentParamsFactory, GkpParamsFactory, ShiftErrorFactory


def _overlap(a, b) -> complex:
    return a.grid.quadrature(np.conj(a.amplitudes) * b.amplitudes)


# ---------------------------------------------------------------------------
# GKP states
# ---------------------------------------------------------------------------

class TestPhysicalGkp:

    @pytest.mark.parametrize("logical", ["zero", "one", "plus", "minus"])
    def test_unit_norm(self, state_service, grid, logical):
        params = GkpParamsFactory(logical=logical)
        state = state_service.make_physical_gkp(params, grid)
        assert state.norm == pytest.approx(1.0, abs=1e-9)
        assert not state.warnings

    @pytest.mark.parametrize("logical, sign", [("zero", -1), ("one", 1)])
    def test_logical_centres(self, state_service, grid, lattice, logical, sign):
        state = state_service.make_physical_gkp(GkpParams(delta=0.15, logical=logical), grid)
        peak = grid.xbar[np.argmax(state.x_marginal())]
        assert peak == pytest.approx(sign * lattice.l / 4, abs=grid.dx)

    def test_plus_is_normalized_sum(self, state_service, grid):
        zero = state_service.make_physical_gkp(GkpParams(delta=0.15, logical="zero"), grid)
        one = state_service.make_physical_gkp(GkpParams(delta=0.15, logical="one"), grid)
        plus = state_service.make_physical_gkp(GkpParams(delta=0.15, logical="plus"), grid)
        combined = zero.amplitudes + one.amplitudes
        combined = combined / math.sqrt(grid.quadrature(np.abs(combined) ** 2).real)
        assert np.max(np.abs(plus.amplitudes - combined)) < 1e-10

    def test_regime_flag(self):
        assert GkpParams(delta=0.15).regime == "sharp"
        assert GkpParams(delta=0.21).regime == "broad"

    def test_degenerate_normalization_warns(self, state_service, grid):
        state = state_service.make_physical_gkp(GkpParams(delta=10.0, kappa=0.2, logical="zero"), grid)
        assert state.norm == pytest.approx(1.0, abs=1e-9)
        assert any("degenerate" in w for w in state.warnings)

    def test_ideal_limit(self, state_service, grid, lattice):
        state = state_service.make_ideal_gkp("zero", grid)
        assert state.ideal_limit
        assert state.norm == pytest.approx(1.0, abs=1e-9)
        density = state.x_marginal()
        assert grid.xbar[np.argmax(density)] == pytest.approx(-lattice.l / 4, abs=1e-12)
        # essentially all mass within a few nodes of the peak
        window = np.abs(grid.xbar + lattice.l / 4) < 8 * grid.dx
        assert density[window].sum() * grid.dx > 0.999

    def test_photon_number_estimate(self, state_service):
        assert state_service.photon_number_estimate(0.15) == pytest.approx(22.2, abs=0.05)


class TestGkpNormalization:

    @pytest.mark.parametrize("delta, kappa", [(0.1, 0.1), (0.15, 0.2), (0.3, 0.3)])
    def test_matches_quadrature(self, state_service, lattice, delta, kappa):
        l = lattice.l
        x_part = integrate.quad(lambda x: gaussian(x + l / 4, delta) ** 2, -l / 2, l / 2, epsabs=1e-14)[0]
        p_part = integrate.quad(lambda p: gaussian(p, kappa) ** 2, -math.pi / l, math.pi / l, epsabs=1e-14)[0]
        norm = state_service.gkp_normalization(delta, kappa, lattice)
        assert norm ** 2 * x_part * p_part == pytest.approx(1.0, abs=1e-10)


class TestGkpOverlap:

    @pytest.mark.parametrize("delta", [0.1, 0.2, 0.3, 0.4])
    def test_closed_form_matches_quadrature(self, state_service, lattice, delta):
        l = lattice.l
        cross = integrate.quad(
            lambda x: gaussian(x + l / 4, delta) * gaussian(x - l / 4, delta), -l / 2, l / 2, epsabs=1e-15
        )[0]
        single = integrate.quad(lambda x: gaussian(x + l / 4, delta) ** 2, -l / 2, l / 2, epsabs=1e-15)[0]
        assert state_service.gkp_overlap(GkpParams(delta=delta)) == pytest.approx(cross / single, abs=1e-10)

    # the edge node mixes G(l/4)^2 exp(-i l pbar) into the product, O(dx) at broad widths
    @pytest.mark.parametrize("delta", [0.1, 0.15])
    def test_matches_grid_states(self, state_service, grid, delta):
        zero = state_service.make_physical_gkp(GkpParams(delta=delta, logical="zero"), grid)
        one = state_service.make_physical_gkp(GkpParams(delta=delta, logical="one"), grid)
        closed = state_service.gkp_overlap(GkpParams(delta=delta))
        assert _overlap(zero, one).real == pytest.approx(closed, abs=1e-5)

    def test_monotone_in_delta(self, state_service):
        values = [state_service.gkp_overlap(GkpParams(delta=d)) for d in np.linspace(0.05, 0.6, 12)]
        assert all(b > a for a, b in zip(values, values[1:]))
        assert 0.0 <= values[0] < 1.0 and values[-1] < 1.0

    def test_vanishes_for_sharp_peaks(self, state_service):
        assert state_service.gkp_overlap(GkpParams(delta=0.01)) < 1e-100

    def test_kappa_independent(self, state_service):
        assert state_service.gkp_overlap(GkpParams(delta=0.2, kappa=0.1)) == \
            state_service.gkp_overlap(GkpParams(delta=0.2, kappa=0.4))


class TestGkpIntegerCoefficients:

    @pytest.mark.parametrize("delta", [0.1, 0.15, 0.21])
    @pytest.mark.parametrize("kappa", [0.1, 0.2])
    def test_closed_form_matches_transform(self, state_service, zak_service, lattice, delta, kappa):
        params = GkpParams(delta=delta, kappa=kappa, logical="zero")
        fine = ModularGrid(lattice, 4096, 64)
        pipeline = zak_service.modular_to_integer(state_service.make_physical_gkp(params, fine), 6, 3)
        closed = state_service.gkp_integer_coeffs(params, 6, 3)
        assert np.max(np.abs(closed.coefficients - pipeline.coefficients)) < 1e-6

    def test_plus_state(self, state_service, zak_service, lattice):
        params = GkpParams(delta=0.15, logical="plus")
        fine = ModularGrid(lattice, 4096, 64)
        pipeline = zak_service.modular_to_integer(state_service.make_physical_gkp(params, fine), 6, 3)
        closed = state_service.gkp_integer_coeffs(params, 6, 3)
        assert np.max(np.abs(closed.coefficients - pipeline.coefficients)) < 1e-6

    def test_zero_state_structure(self, state_service):
        coeffs = state_service.gkp_integer_coeffs(GkpParams(delta=0.15, logical="zero"), 4, 4)
        c = coeffs.coefficients
        centre = c[4, 4]
        assert centre.real > 0 and abs(centre.imag) < 1e-14
        assert np.argmax(np.abs(c)) == np.ravel_multi_index((4, 4), c.shape)
        # centre at -l/4 gives f_n a phase close to exp(i pi n / 2)
        assert np.angle(c[5, 4]) == pytest.approx(math.pi / 2, abs=0.05)


# ---------------------------------------------------------------------------
# Shifts
# ---------------------------------------------------------------------------

class TestApplyShift:

    def test_zero_shift_is_identity(self, state_service, grid, gkp_plus):
        state = state_service.make_physical_gkp(gkp_plus, grid)
        shifted = state_service.apply_shift(state, ShiftError(u=0.0, v=0.0))
        assert np.max(np.abs(shifted.amplitudes - state.amplitudes)) < 1e-12

    def test_grid_multiple_rolls_density(self, state_service, grid, gkp_plus):
        state = state_service.make_physical_gkp(gkp_plus, grid)
        shifted = state_service.apply_shift(state, ShiftError(u=8 * grid.dx, v=4 * grid.dp))
        expected = np.roll(np.roll(state.density, 8, axis=0), 4, axis=1)
        assert np.max(np.abs(shifted.density - expected)) < 1e-10

    def test_preserves_norm(self, state_service, grid):
        state = state_service.make_physical_gkp(GkpParamsFactory(), grid)
        shifted = state_service.apply_shift(state, ShiftErrorFactory())
        assert shifted.norm == pytest.approx(state.norm, abs=1e-10)

    def test_full_period_is_quasi_periodic_phase(self, state_service, grid, gkp_plus, lattice):
        state = state_service.make_physical_gkp(gkp_plus, grid)
        shifted = state_service.apply_shift(state, ShiftError(u=lattice.l, v=0.0))
        assert np.max(np.abs(shifted.density - state.density)) < 1e-10
        phase = np.exp(-1j * lattice.l * grid.pbar)[None, :]
        assert np.max(np.abs(shifted.amplitudes - phase * state.amplitudes)) < 1e-10

    def test_moves_ideal_state(self, state_service, grid, lattice):
        state = state_service.make_ideal_gkp("zero", grid)
        u, v = 16 * grid.dx, -10 * grid.dp
        shifted = state_service.apply_shift(state, ShiftError(u=u, v=v))
        j, k = np.unravel_index(np.argmax(shifted.density), shifted.density.shape)
        assert grid.xbar[j] == pytest.approx(-lattice.l / 4 + u, abs=1e-12)
        assert grid.pbar[k] == pytest.approx(v, abs=1e-12)

    def test_out_of_cell_flag(self, lattice):
        assert ShiftError(u=0.1, v=0.1).in_cell(lattice)
        assert not ShiftError(u=lattice.l, v=0.0).in_cell(lattice)


# ---------------------------------------------------------------------------
# Gaussian states
# ---------------------------------------------------------------------------

class TestCoherentStates:

    def test_theta_form_matches_zak_of_gaussian(self, state_service, zak_service, lattice):
        params = CoherentParamsFactory()
        grid = ModularGrid(lattice, 64, 32)
        theta = state_service.make_coherent_modular(params.x0, params.p0, params.sigma, lattice, grid)
        psi = state_service.coherent_position(params.x0, params.p0, params.sigma, lattice, cells=21, size_x=64)
        folded = zak_service.zak_forward(psi, 32).normalized()
        difference = theta.amplitudes - folded.amplitudes
        assert math.sqrt(grid.quadrature(np.abs(difference) ** 2).real) < 1e-9

    def test_wide_displacement(self, state_service, zak_service, lattice):
        """x0 several cells away exercises the n0 phase."""
        grid = ModularGrid(lattice, 64, 32)
        theta = state_service.make_coherent_modular(3.3 * lattice.l, -0.8, 0.35, lattice, grid)
        psi = state_service.coherent_position(3.3 * lattice.l, -0.8, 0.35, lattice, cells=21, size_x=64)
        folded = zak_service.zak_forward(psi, 32).normalized()
        assert np.max(np.abs(theta.amplitudes - folded.amplitudes)) < 1e-9

    def test_centre_follows_x0(self, state_service, grid, lattice):
        state = state_service.make_coherent_modular(lattice.l / 4, 0.0, lattice.l / 20, lattice, grid)
        assert state.norm == pytest.approx(1.0, abs=1e-9)
        assert grid.xbar[np.argmax(state.x_marginal())] == pytest.approx(lattice.l / 4, abs=grid.dx)

    def test_narrow_state_is_flat_in_pbar(self, state_service, grid, lattice):
        state = state_service.make_coherent_modular(0.0, 0.0, lattice.l / 20, lattice, grid)
        p_marginal = state.p_marginal()
        assert np.ptp(p_marginal) / p_marginal.mean() < 1e-6


class TestCatStates:

    def test_even_cat_bumps(self, state_service, grid, lattice):
        state = state_service.make_cat_modular(None, lattice.l / 20, lattice, grid, "even")
        density = state.x_marginal()
        left = grid.xbar[np.argmax(np.where(grid.xbar < 0, density, 0))]
        right = grid.xbar[np.argmax(np.where(grid.xbar > 0, density, 0))]
        assert left == pytest.approx(-lattice.l / 4, abs=grid.dx)
        assert right == pytest.approx(lattice.l / 4, abs=grid.dx)
        assert state.norm == pytest.approx(1.0, abs=1e-9)

    def test_odd_cat_at_zero_separation(self, state_service, grid, lattice):
        with pytest.raises(DegenerateStateError):
            state_service.make_cat_modular(0.0, 0.2, lattice, grid, "odd")

    @pytest.mark.parametrize("parity", ["even", "odd"])
    def test_norm_formula_matches_quadrature(self, state_service, grid, lattice, parity):
        separation, sigma = 0.6, 0.3
        left = state_service.make_coherent_modular(-separation / 2, 0.0, sigma, lattice, grid)
        right = state_service.make_coherent_modular(separation / 2, 0.0, sigma, lattice, grid)
        sign = 1.0 if parity == "even" else -1.0
        quadrature = 2.0 + 2.0 * sign * _overlap(left, right).real
        assert state_service.cat_norm_squared(separation, sigma, parity) == pytest.approx(quadrature, abs=1e-9)


# ---------------------------------------------------------------------------
# Integer-basis states and dispatch
# ---------------------------------------------------------------------------

class TestIntegerStates:

    def test_pi2_coefficients(self, state_service, lattice):
        iw = state_service.make_pi2_rotated(2, 0, "+", lattice, 3, 1)
        assert iw.coefficient(2, 0) == pytest.approx(1 / math.sqrt(2))
        assert iw.coefficient(-2, 0) == pytest.approx(1 / math.sqrt(2))
        assert iw.norm == pytest.approx(1.0)
        assert np.count_nonzero(iw.coefficients) == 2

    def test_pi2_minus_sign(self, state_service, lattice):
        iw = state_service.make_pi2_rotated(4, 1, "-", lattice, 4, 1)
        assert iw.coefficient(-4, 1) == pytest.approx(-1 / math.sqrt(2))

    def test_pi2_odd_n0(self, state_service, lattice):
        with pytest.raises(PreconditionError):
            state_service.make_pi2_rotated(3, 0, "+", lattice)

    def test_pi2_null_state(self, state_service, lattice):
        with pytest.raises(DegenerateStateError):
            state_service.make_pi2_rotated(0, 0, "-", lattice, 2, 2)

    def test_plane_wave(self, state_service, lattice):
        iw = state_service.make_plane_wave(-1, 2, lattice, 2, 2)
        assert iw.coefficient(-1, 2) == 1.0
        assert iw.norm == 1.0


class TestBuildState:

    @pytest.mark.parametrize("spec", [
        GkpParams(delta=0.15, logical="minus"),
        CoherentParams(x0=0.2, p0=0.1, sigma=0.15),
        CatParams(sigma=0.1, parity="odd"),
        Pi2Params(n0=2, m0=1, sign="+"),
        PlaneWaveParams(n=1, m=-1),
        UniformParams(),
    ])
    def test_every_kind_is_normalized(self, state_service, grid, spec):
        state = state_service.build_state(spec, grid)
        assert state.grid is grid
        assert state.norm == pytest.approx(1.0, abs=1e-9)

    def test_uniform_density(self, state_service, grid):
        state = state_service.build_state(UniformParams(), grid)
        assert np.allclose(state.density, 1 / (2 * math.pi))

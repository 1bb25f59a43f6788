# -*- coding: utf-8 -*-
"""
Tests for TomographyService.

Covers:
- Pointer readouts: probability * (gamma_x + i gamma_y) equals the correlation function
- End-to-end reconstruction against the directly computed surface, pure and mixed
- Sampling and grid checks (aliasing, incomplete grids, off-node post-selection)
- Excluded samples
- Integer protocol: pi/2-rotated state, the full sector table including the
  half-shifted odd sectors, agreement with the modular protocol
- Quasi-periodic and periodic correlations differ by the winding phase
- Post-selection probabilities on the modular basis
"""

import logging
import math

import numpy as np
import pytest

from modwigner.exceptions import AliasingError, DomainError, PreconditionError
from modwigner.models.lattice import ModularGrid
from modwigner.models.wigner import EnsembleState
from modwigner.schemas.tomography import IntegerTomographySample

from tests.factories import IntegerWavefunctionFactory


@pytest.fixture
def tomo_grid(lattice) -> ModularGrid:
    return ModularGrid(lattice, 8, 8)


@pytest.fixture
def small_state():
    return IntegerWavefunctionFactory(nmax=2, mmax=1)


def _readout(tomography_service, state, lattice, grid, alpha_points=9, beta_points=5):
    alphas, betas = tomography_service.sample_grid(lattice, alpha_points, beta_points)
    return tomography_service.simulate_readout(state, alphas, betas, grid, nmax=2, mmax=1)


# ---------------------------------------------------------------------------
# Readouts
# ---------------------------------------------------------------------------

class TestReadout:

    def test_readout_is_the_correlation(self, tomography_service, small_state, lattice, tomo_grid):
        samples = _readout(tomography_service, small_state, lattice, tomo_grid, 3, 3)
        measured = np.array([s.probability * (s.gamma_x + 1j * s.gamma_y) for s in samples])
        table = np.array([(s.xbar, s.pbar, s.alpha, s.beta) for s in samples])
        expected = tomography_service.correlation_function(
            small_state, table[:, 0], table[:, 1], table[:, 2], table[:, 3], extension="periodic", nmax=2, mmax=1
        )
        np.testing.assert_allclose(measured, expected, atol=1e-8)

    def test_mixed_readout_is_the_weighted_correlation(self, tomography_service, lattice, tomo_grid):
        ensemble = EnsembleState.from_weights(
            [1, 2], [IntegerWavefunctionFactory(nmax=2, mmax=1), IntegerWavefunctionFactory(nmax=2, mmax=1)]
        )
        samples = _readout(tomography_service, ensemble, lattice, tomo_grid, 3, 3)
        measured = np.array([s.probability * (s.gamma_x + 1j * s.gamma_y) for s in samples])
        table = np.array([(s.xbar, s.pbar, s.alpha, s.beta) for s in samples])
        expected = tomography_service.correlation_function(
            ensemble, table[:, 0], table[:, 1], table[:, 2], table[:, 3], extension="periodic", nmax=2, mmax=1
        )
        np.testing.assert_allclose(measured, expected, atol=1e-8)

    def test_quasi_periodic_correlation_carries_the_winding_phase(
        self, tomography_service, lattice_service, small_state, lattice, tomo_grid
    ):
        samples = _readout(tomography_service, small_state, lattice, tomo_grid)
        x, p, a, b = np.array([(s.xbar, s.pbar, s.alpha, s.beta) for s in samples]).T
        periodic = tomography_service.correlation_function(small_state, x, p, a, b, extension="periodic", nmax=2, mmax=1)
        quasi = tomography_service.correlation_function(small_state, x, p, a, b, nmax=2, mmax=1)
        w_plus, _ = lattice_service.wrap_position(x + a, lattice)
        w_minus, _ = lattice_service.wrap_position(x - a, lattice)
        w_plus, w_minus = np.asarray(w_plus), np.asarray(w_minus)
        phase = np.exp(1j * lattice.l * (w_plus * (p + b) - w_minus * (p - b)))
        np.testing.assert_allclose(quasi, periodic * phase, atol=1e-12)
        inside = (w_plus == 0) & (w_minus == 0)
        assert inside.any() and not inside.all()
        np.testing.assert_allclose(quasi[inside], periodic[inside], atol=1e-12)

    def test_sample_count_and_validity(self, tomography_service, small_state, lattice, tomo_grid):
        samples = _readout(tomography_service, small_state, lattice, tomo_grid, 3, 2)
        assert len(samples) == 3 * 2 * tomo_grid.size_x * tomo_grid.size_p
        assert all(-1.0 <= s.gamma_x <= 1.0 and -1.0 <= s.gamma_y <= 1.0 for s in samples)

    def test_shift_nodes_cover_one_period(self, tomography_service, lattice):
        alphas, betas = tomography_service.sample_grid(lattice, 4, 2)
        np.testing.assert_allclose(alphas, lattice.l * np.array([-0.5, -0.25, 0.0, 0.25]))
        np.testing.assert_allclose(betas, lattice.p_period * np.array([-0.5, 0.0]))


# ---------------------------------------------------------------------------
# Modular reconstruction
# ---------------------------------------------------------------------------

class TestReconstruction:

    def test_pure_state_round_trip(self, tomography_service, wigner_service, small_state, lattice, tomo_grid):
        samples = _readout(tomography_service, small_state, lattice, tomo_grid)
        rebuilt = tomography_service.reconstruct_from_samples(samples, lattice, nmax=2, mmax=1)
        direct = wigner_service.wigner_full(small_state, 2, 1, grid=tomo_grid)
        assert rebuilt.excluded_samples == 0
        np.testing.assert_allclose(rebuilt.values, direct.values, atol=1e-8)

    def test_mixed_state_round_trip(self, tomography_service, wigner_service, lattice, tomo_grid):
        ensemble = EnsembleState.from_weights(
            [3, 1], [IntegerWavefunctionFactory(nmax=2, mmax=1), IntegerWavefunctionFactory(nmax=2, mmax=1)]
        )
        samples = _readout(tomography_service, ensemble, lattice, tomo_grid)
        rebuilt = tomography_service.reconstruct_from_samples(samples, lattice, nmax=2, mmax=1)
        direct = wigner_service.wigner_full(ensemble, 2, 1, grid=tomo_grid)
        np.testing.assert_allclose(rebuilt.values, direct.values, atol=1e-8)

    def test_reconstruction_is_normalized(self, tomography_service, small_state, lattice, tomo_grid):
        samples = _readout(tomography_service, small_state, lattice, tomo_grid)
        rebuilt = tomography_service.reconstruct_from_samples(samples, lattice, nmax=2, mmax=1)
        assert rebuilt.normalization == pytest.approx(1.0, abs=1e-8)

    def test_coarse_shift_sampling_raises(self, tomography_service, small_state, lattice, tomo_grid):
        samples = _readout(tomography_service, small_state, lattice, tomo_grid, alpha_points=8)
        with pytest.raises(AliasingError):
            tomography_service.reconstruct_from_samples(samples, lattice, nmax=2, mmax=1)

    def test_incomplete_grid_raises(self, tomography_service, small_state, lattice, tomo_grid):
        samples = _readout(tomography_service, small_state, lattice, tomo_grid)
        with pytest.raises(PreconditionError):
            tomography_service.reconstruct_from_samples(samples[1:], lattice, nmax=2, mmax=1)

    def test_no_samples_raise(self, tomography_service, lattice):
        with pytest.raises(PreconditionError):
            tomography_service.reconstruct_from_samples([], lattice, nmax=2, mmax=1)

    def test_off_node_postselection_raises(self, tomography_service, small_state, lattice, tomo_grid):
        samples = _readout(tomography_service, small_state, lattice, tomo_grid)
        moved = [s.model_copy(update={"xbar": s.xbar + 0.01}) for s in samples]
        with pytest.raises(DomainError):
            tomography_service.reconstruct_from_samples(moved, lattice, nmax=2, mmax=1)

    def test_invalid_samples_are_excluded(self, tomography_service, small_state, lattice, tomo_grid, caplog):
        samples = _readout(tomography_service, small_state, lattice, tomo_grid)
        samples[:3] = [s.model_copy(update={"valid": False}) for s in samples[:3]]
        with caplog.at_level(logging.WARNING):
            rebuilt = tomography_service.reconstruct_from_samples(samples, lattice, nmax=2, mmax=1)
        assert rebuilt.excluded_samples == 3
        assert "3 invalid sample(s) excluded" in caplog.text


# ---------------------------------------------------------------------------
# Integer protocol
# ---------------------------------------------------------------------------

class TestIntegerProtocol:

    def test_pi2_fringes(self, tomography_service, state_service, lattice):
        grid = ModularGrid(lattice, 16, 8)
        iw = state_service.make_pi2_rotated(2, 0, "+", lattice, 2, 1)
        samples = tomography_service.simulate_readout_integer(iw, nmax=2, mmax=1)
        w = tomography_service.reconstruct_from_integer_samples(samples, lattice, grid, 2, 1)
        expected = np.cos(8 * math.pi * grid.xbar / lattice.l) / (2 * math.pi)
        assert np.max(np.abs(w.section(0, 0) - expected[:, None])) < 1e-12
        assert w.warnings == []

    def test_sectors_match_the_table(self, tomography_service, wigner_service, small_state, lattice, tomo_grid):
        samples = tomography_service.simulate_readout_integer(small_state, nmax=2, mmax=1)
        w = tomography_service.reconstruct_from_integer_samples(samples, lattice, tomo_grid, 2, 1)
        table = wigner_service.sector_table(small_state.coefficients)
        np.testing.assert_allclose(w.sectors, table, atol=1e-12)
        assert np.abs(w.sectors[1::2]).max() > 1e-6

    @pytest.mark.parametrize("mixed", [False, True])
    def test_matches_the_modular_protocol(self, tomography_service, small_state, lattice, tomo_grid, mixed):
        state = small_state
        if mixed:
            state = EnsembleState.from_weights([1, 2], [small_state, IntegerWavefunctionFactory(nmax=2, mmax=1)])
        integer = tomography_service.reconstruct_from_integer_samples(
            tomography_service.simulate_readout_integer(state, nmax=2, mmax=1), lattice, tomo_grid, 2, 1
        )
        modular = tomography_service.reconstruct_from_samples(
            _readout(tomography_service, state, lattice, tomo_grid), lattice, nmax=2, mmax=1
        )
        np.testing.assert_allclose(integer.values, modular.values, atol=1e-6)

    def test_odd_shift_reads_half_shifted_pairs(self, tomography_service, small_state):
        samples = tomography_service.simulate_readout_integer(small_state, shifts=[(1, 0)], nmax=2, mmax=1)
        c = small_state.coefficients
        for s in samples:
            i, j = s.n + 2, s.m + 1
            expected = c[i + 1, j] * np.conj(c[i, j]) if i + 1 < c.shape[0] else 0.0
            assert s.probability * (s.gamma_x + 1j * s.gamma_y) == pytest.approx(expected, abs=1e-10)

    def test_default_shifts_cover_the_window(self, tomography_service, small_state):
        samples = tomography_service.simulate_readout_integer(small_state, nmax=2, mmax=1)
        shifts = {(s.d, s.e) for s in samples}
        assert shifts == {(d, e) for d in range(-4, 5) for e in range(-2, 3)}

    def test_partial_shift_set_warns(self, tomography_service, small_state, lattice, tomo_grid):
        samples = tomography_service.simulate_readout_integer(small_state, shifts=[(0, 0)], nmax=2, mmax=1)
        w = tomography_service.reconstruct_from_integer_samples(samples, lattice, tomo_grid, 2, 1)
        assert w.warnings == ["44 (d, e) sector(s) not measured"]

    def test_shift_outside_window_raises(self, tomography_service, small_state):
        with pytest.raises(PreconditionError):
            tomography_service.simulate_readout_integer(small_state, shifts=[(5, 0)], nmax=2, mmax=1)

    def test_sample_outside_window_raises(self, tomography_service, lattice, tomo_grid):
        sample = IntegerTomographySample(d=10, e=0, n=0, m=0, probability=0.1)
        with pytest.raises(DomainError):
            tomography_service.reconstruct_from_integer_samples([sample], lattice, tomo_grid, 2, 1)


# ---------------------------------------------------------------------------
# Post-selection
# ---------------------------------------------------------------------------

class TestPostselect:

    def test_nodes_match_the_zak_density(self, tomography_service, state_service, zak_service, lattice):
        psi = state_service.coherent_position(0.2, 0.5, 0.3, lattice, cells=7, size_x=16)
        mod = zak_service.zak_forward(psi, 8)
        xbar, pbar = mod.grid.mesh()
        probability = tomography_service.postselect_modular(psi, xbar, pbar)
        np.testing.assert_allclose(probability, mod.density, atol=1e-12)

    def test_between_nodes(self, tomography_service, state_service, lattice):
        x0, p0, sigma = 0.2, 0.5, 0.3
        psi = state_service.coherent_position(x0, p0, sigma, lattice, cells=7, size_x=16)
        xbar, pbar = 0.0123, 0.3
        k = np.arange(-3, 4)
        x = k * lattice.l + xbar
        exact = (math.pi * sigma ** 2) ** -0.25 * np.exp(-((x - x0) ** 2) / (2 * sigma ** 2)) * np.exp(1j * p0 * x)
        expected = lattice.l / (2 * math.pi) * abs(np.sum(exact * np.exp(-1j * pbar * k * lattice.l))) ** 2
        assert tomography_service.postselect_modular(psi, xbar, pbar) == pytest.approx(expected, abs=1e-9)

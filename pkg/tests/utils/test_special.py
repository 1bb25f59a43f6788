# -*- coding: utf-8 -*-
"""
Tests for the special-function helpers.

Covers:
- wrapped_gaussian_series against the direct comb sum and the scaled theta series
- gaussian_fourier_segment against quadrature, including negative limits
  and narrow widths far out in k
- Failure modes raising NumericError
"""

import math

import numpy as np
import pytest
from scipy import integrate

from modwigner.exceptions import NumericError
from modwigner.utils.special import (
    gaussian,
    gaussian_fourier_segment,
    wrapped_gaussian_series,
)


class TestGaussianFourierSegment:

    @pytest.mark.parametrize("a, b, k, width", [
        (-0.5, 0.5, 0.0, 0.2),
        (-0.3, 0.8, 3.0, 0.15),
        (-1.0, -0.2, -7.5, 0.3),
        (0.1, 0.9, 25.0, 0.21),
    ])
    def test_matches_quadrature(self, a, b, k, width):
        re = integrate.quad(lambda y: gaussian(y, width) * math.cos(k * y), a, b, epsabs=1e-14, epsrel=1e-13, limit=200)[0]
        im = integrate.quad(lambda y: -gaussian(y, width) * math.sin(k * y), a, b, epsabs=1e-14, epsrel=1e-13, limit=200)[0]
        value = gaussian_fourier_segment(a, b, k, width)[0]
        assert abs(value - complex(re, im)) < 1e-10

    def test_vectorized_over_k(self):
        k = np.linspace(-5, 5, 7)
        values = gaussian_fourier_segment(-0.4, 0.4, k, 0.2)
        assert values.shape == (7,)
        # symmetric interval: the integral is real and even in k
        assert np.allclose(values.imag, 0.0, atol=1e-14)
        assert np.allclose(values, values[::-1], atol=1e-14)

    def test_narrow_width_far_out_in_k(self):
        width, k = 0.01, 2000.0
        value = gaussian_fourier_segment(-0.5, 0.5, k, width)[0]
        expected = width * math.sqrt(2 * math.pi) * math.exp(-0.5 * (k * width) ** 2)
        assert np.isfinite(value)
        assert abs(value - expected) < 1e-80


class TestWrappedGaussianSeries:

    def test_matches_direct_comb(self):
        period = math.sqrt(math.pi)
        width = 0.4
        u = np.linspace(-0.8, 0.8, 9)
        theta = np.linspace(-math.pi, math.pi, 11)
        n = np.arange(-40, 41)
        direct = np.array([
            [np.sum(np.exp(-(uj + n * period) ** 2 / (2 * width ** 2)) * np.exp(1j * n * t)) for t in theta]
            for uj in u
        ])
        assert np.max(np.abs(wrapped_gaussian_series(u, theta, width, period) - direct)) < 1e-13

    def test_equals_scaled_theta_series(self):
        period = math.sqrt(math.pi)
        width = 0.4
        u = np.linspace(-0.8, 0.8, 5)
        theta = np.linspace(-math.pi, math.pi, 7)
        q = math.exp(-period ** 2 / (2 * width ** 2))
        n = np.arange(-40, 41)
        z = theta[None, :] / 2 + 1j * period * u[:, None] / (2 * width ** 2)
        series = np.sum(q ** (n ** 2)[:, None, None] * np.exp(2j * n[:, None, None] * z[None]), axis=0)
        expected = gaussian(u, width)[:, None] * series
        assert np.max(np.abs(wrapped_gaussian_series(u, theta, width, period) - expected)) < 1e-12

    def test_too_wide_for_series(self):
        with pytest.raises(NumericError):
            wrapped_gaussian_series(np.array([0.0]), np.array([0.0]), 1e6, 1e-3)

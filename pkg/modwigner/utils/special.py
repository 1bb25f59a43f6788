"""
Special functions: the wrapped Gaussian (Jacobi theta) series and the
Fourier integrals of Gaussian segments through the Faddeeva function.
"""

from __future__ import annotations

import math
from typing import Union

import numpy as np
from scipy import special

from ..config import settings
from ..exceptions import NumericError

Number = Union[float, complex, np.ndarray]

_MAX_TERMS = 100000


def gaussian(y: Number, width: float) -> np.ndarray:
    """G_w(y) = exp(-y^2 / 2 w^2)."""
    y = np.asarray(y)
    return np.exp(-(y ** 2) / (2.0 * width ** 2))


def _series_bound(width: float, period: float, tol: float, offset: float = 0.0) -> int:
    """Terms |n| <= N needed so that exp(-(n*period - offset)^2 / 2 width^2) < tol."""
    reach = width * math.sqrt(2.0 * math.log(1.0 / tol)) + abs(offset)
    count = int(math.ceil(reach / period)) + 1
    if count > _MAX_TERMS:
        raise NumericError(
            "theta series would need too many terms",
            width=width,
            period=period,
            terms=count,
        )
    return count


def wrapped_gaussian_series(
    u: np.ndarray, theta: np.ndarray, width: float, period: float, tol: float = None
) -> np.ndarray:
    """
    S[j, k] = sum_n exp(-(u_j + n*period)^2 / 2 width^2) exp(i n theta_k).

    This is G_width(u) * Theta_3(theta/2 + i*period*u/(2 width^2), exp(-period^2/2 width^2))
    with each term scaled by the Gaussian prefactor, so narrow widths do not
    overflow. ``u`` should lie within one period of zero.
    """
    tol = tol or settings.SERIES_TOLERANCE
    u = np.asarray(u, dtype=float)
    theta = np.asarray(theta, dtype=float)
    bound = _series_bound(width, period, tol, offset=float(np.max(np.abs(u))) if u.size else 0.0)
    n = np.arange(-bound, bound + 1)
    envelope = gaussian(u[:, None] + n[None, :] * period, width)
    return envelope @ np.exp(1j * np.outer(n, theta))


def _scaled_erf_tail(b: np.ndarray, k: float, width: float) -> np.ndarray:
    """
    exp(-k^2 w^2 / 2) * erf((b + i k w^2) / (sqrt(2) w)) for b >= 0, via Faddeeva w(z).
    """
    z = (b + 1j * k * width ** 2) / (math.sqrt(2.0) * width)
    return np.exp(-0.5 * (k * width) ** 2) - np.exp(-(b ** 2) / (2.0 * width ** 2) - 1j * k * b) * special.wofz(1j * z)


def _scaled_erf(b: Number, k: float, width: float) -> np.ndarray:
    b = np.asarray(b, dtype=float)
    positive = _scaled_erf_tail(np.abs(b), k, width)
    negative = -_scaled_erf_tail(np.abs(b), -k, width)
    return np.where(b >= 0, positive, negative)


def gaussian_fourier_segment(a: float, b: float, k: Number, width: float) -> np.ndarray:
    """
    int_a^b exp(-y^2 / 2 w^2) exp(-i k y) dy for real k (scalar or array).
    """
    k = np.atleast_1d(np.asarray(k, dtype=float))
    prefactor = width * math.sqrt(math.pi / 2.0)
    values = np.array([prefactor * (_scaled_erf(b, kk, width) - _scaled_erf(a, kk, width)) for kk in k])
    if not np.all(np.isfinite(values)):
        raise NumericError("Gaussian segment integral is not finite", a=a, b=b, width=width)
    return values.reshape(-1)

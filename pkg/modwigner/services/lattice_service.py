"""
Lattice Service — modular decomposition of quadratures.

x = n*l + xbar with xbar in [-l/2, l/2) and p = m*(2 pi/l) + pbar with
pbar in [-pi/l, pi/l); lower edges included.
"""

from __future__ import annotations

from typing import Tuple, Union

import numpy as np

from ..exceptions import DomainError
from ..models.lattice import LatticeSpec, ModularPoint

ArrayLike = Union[float, np.ndarray]


def _check_finite(**values: ArrayLike) -> None:
    for name, value in values.items():
        if not np.all(np.isfinite(value)):
            raise DomainError(f"{name} must be finite", **{name: np.asarray(value).tolist()})


def _wrap(value: ArrayLike, period: float) -> Tuple[ArrayLike, ArrayLike]:
    value = np.asarray(value, dtype=float)
    n = np.floor((value + 0.5 * period) / period)
    rest = value - n * period
    # floor can land one ulp on the wrong side of an edge
    over = rest >= 0.5 * period
    under = rest < -0.5 * period
    n = n + over - under
    rest = rest - over * period + under * period
    if n.ndim == 0:
        return int(n), float(rest)
    return n.astype(int), rest


class LatticeService:

    def wrap_position(self, x: ArrayLike, lattice: LatticeSpec) -> Tuple[ArrayLike, ArrayLike]:
        """Split x into (n, xbar); accepts scalars or arrays."""
        _check_finite(x=x)
        return _wrap(x, lattice.l)

    def wrap_momentum(self, p: ArrayLike, lattice: LatticeSpec) -> Tuple[ArrayLike, ArrayLike]:
        """Split p into (m, pbar) with period 2*pi/l."""
        _check_finite(p=p)
        return _wrap(p, lattice.p_period)

    def split_point(self, x: float, p: float, lattice: LatticeSpec) -> ModularPoint:
        """Phase-space point (x, p) as cell indices and in-cell offsets."""
        n, xbar = self.wrap_position(x, lattice)
        m, pbar = self.wrap_momentum(p, lattice)
        return ModularPoint(n=n, xbar=xbar, m=m, pbar=pbar)

    def wrapped_sum(self, a: float, b: float, period: float) -> Tuple[float, int]:
        """
        Add two in-cell coordinates and fold the result back into the cell.

        Returns (wrapped, winding) with a + b = wrapped + winding*period and
        winding in {-1, 0, 1}.
        """
        _check_finite(a=a, b=b, period=period)
        if period <= 0:
            raise DomainError("period must be positive", period=period)
        total = a + b
        half = 0.5 * period
        if total >= half:
            return total - period, 1
        if total < -half:
            return total + period, -1
        return total, 0

    def reassemble_position(self, n: ArrayLike, xbar: ArrayLike, lattice: LatticeSpec) -> ArrayLike:
        return np.asarray(n) * lattice.l + np.asarray(xbar)

    def reassemble_momentum(self, m: ArrayLike, pbar: ArrayLike, lattice: LatticeSpec) -> ArrayLike:
        return np.asarray(m) * lattice.p_period + np.asarray(pbar)

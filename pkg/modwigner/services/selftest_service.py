"""
Self-test — a fast subset of the invariant suite, run by ``modwigner selftest``.

Each check returns {"status": "passed" | "failed", "message": ...}; the run
is "failed" as soon as one check fails.
"""

from __future__ import annotations

import logging
import math
import time
from typing import Any, Callable, Dict

import numpy as np

from ..models.lattice import LatticeSpec, ModularGrid
from ..models.operators import DisplacementLabel
from ..models.wavefunctions import IntegerWavefunction
from ..schemas.states import GkpParams
from .operator_service import OperatorService
from .qec_service import QecService
from .state_service import StateService
from .tomography_service import TomographyService
from .wigner_service import WignerService
from .zak_service import ZakService

logger = logging.getLogger(__name__)

Check = Callable[[], Dict[str, Any]]


def _result(ok: bool, message: str) -> Dict[str, Any]:
    return {"status": "passed" if ok else "failed", "message": message}


def check_zak_round_trip() -> Dict[str, Any]:
    lattice = LatticeSpec()
    states = StateService()
    zak = ZakService()
    psi = states.coherent_position(0.3, 0.5, 0.4, lattice, cells=21, size_x=64)
    back = zak.zak_inverse(zak.zak_forward(psi, 32), psi.cells)
    error = float(np.max(np.abs(back.samples - psi.samples)))
    return _result(error < 1e-9, f"max round-trip error {error:.2e}")


def check_integer_round_trip() -> Dict[str, Any]:
    lattice = LatticeSpec()
    zak = ZakService()
    rng = np.random.default_rng(7)
    coeffs = rng.normal(size=(9, 9)) + 1j * rng.normal(size=(9, 9))
    iw = IntegerWavefunction(lattice=lattice, coefficients=coeffs).normalized()
    grid = ModularGrid(lattice, 32, 32)
    back = zak.modular_to_integer(zak.integer_to_modular(iw, grid), 4, 4)
    error = float(np.max(np.abs(back.coefficients - iw.coefficients)))
    return _result(error < 1e-10, f"max round-trip error {error:.2e}")


def check_no_error_anchors() -> Dict[str, Any]:
    qec = QecService()
    sharp = qec.p_no_err(GkpParams(delta=0.15))
    broad = qec.p_no_err(GkpParams(delta=0.21))
    ok = abs(sharp - 0.99) <= 0.01 and abs(broad - 0.90) <= 0.01
    return _result(ok, f"P(0.15) = {sharp:.4f}, P(0.21) = {broad:.4f}")


def check_displacement_algebra() -> Dict[str, Any]:
    lattice = LatticeSpec()
    ops = OperatorService()
    rng = np.random.default_rng(11)
    worst = 0.0
    for _ in range(20):
        first = DisplacementLabel(
            n=int(rng.integers(-2, 3)), xbar=float(rng.uniform(-lattice.x_half, lattice.x_half)),
            m=int(rng.integers(-2, 3)), pbar=float(rng.uniform(-lattice.p_half, lattice.p_half)),
        )
        second = DisplacementLabel(
            n=int(rng.integers(-2, 3)), xbar=float(rng.uniform(-lattice.x_half, lattice.x_half)),
            m=int(rng.integers(-2, 3)), pbar=float(rng.uniform(-lattice.p_half, lattice.p_half)),
        )
        label, phase = ops.compose_displacements(first, second, lattice)
        product = ops.displacement_matrix(second, 10, 10, lattice) @ ops.displacement_matrix(first, 10, 10, lattice)
        expected = ops.displacement_matrix(label, 10, 10, lattice)
        rows = product.interior(5, 5)
        worst = max(worst, float(np.max(np.abs(product.matrix[rows] - phase * expected.matrix[rows]))))
    parity = ops.parity_matrix(4, 4, lattice).matrix
    involution = float(np.max(np.abs(parity @ parity - np.eye(parity.shape[0]))))
    ok = worst < 1e-10 and involution == 0.0
    return _result(ok, f"composition error {worst:.2e}, parity involution error {involution:.1e}")


def check_wigner_axioms() -> Dict[str, Any]:
    grid = ModularGrid(LatticeSpec(), 64, 64)
    states = StateService()
    wigner = WignerService()
    state = states.make_physical_gkp(GkpParams(delta=0.25, logical="plus"), grid)
    w = wigner.wigner_full(state, 8, 8, separable=False)
    norm = w.normalization
    residue = w.imaginary_residue
    ok = abs(norm - 1.0 + w.truncation_loss) < 1e-6 and residue < 1e-10
    return _result(ok, f"normalization {norm:.8f}, imaginary residue {residue:.1e}")


def check_tomography_equivalence() -> Dict[str, Any]:
    lattice = LatticeSpec()
    states = StateService()
    tomo = TomographyService()
    wigner = WignerService()
    iw = states.make_pi2_rotated(2, 0, "+", lattice, 2, 1)
    grid = ModularGrid(lattice, 10, 10)
    alphas, betas = tomo.sample_grid(lattice, 10, 6)
    samples = tomo.simulate_readout(iw, alphas, betas, grid, 2, 1)
    rebuilt = tomo.reconstruct_from_samples(samples, lattice, 2, 1)
    direct = wigner.wigner_full(iw, 2, 1, grid)
    error = float(np.max(np.abs(rebuilt.values - direct.values)))
    return _result(error < 1e-6, f"max deviation {error:.2e}")


CHECKS: Dict[str, Check] = {
    "zak_round_trip": check_zak_round_trip,
    "integer_round_trip": check_integer_round_trip,
    "no_error_anchors": check_no_error_anchors,
    "displacement_algebra": check_displacement_algebra,
    "wigner_axioms": check_wigner_axioms,
    "tomography_equivalence": check_tomography_equivalence,
}


def run_selftest() -> Dict[str, Any]:
    """Run every check; a check that raises counts as failed."""
    started = time.perf_counter()
    checks: Dict[str, Dict[str, Any]] = {}
    for name, check in CHECKS.items():
        try:
            checks[name] = check()
        except Exception as exc:  # noqa: BLE001 - reported, not raised
            checks[name] = _result(False, f"{type(exc).__name__}: {exc}")
        level = logging.INFO if checks[name]["status"] == "passed" else logging.ERROR
        logger.log(level, "selftest %s: %s", name, checks[name]["message"])

    status = "passed" if all(c["status"] == "passed" for c in checks.values()) else "failed"
    return {
        "status": status,
        "elapsed_seconds": round(time.perf_counter() - started, 3),
        "checks": checks,
    }

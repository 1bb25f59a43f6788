"""
Bit-stable export of Wigner surfaces.

CSV rows follow the C order of ``W[n, m, j, k]`` with columns
``n, m, xbar, pbar, W`` and 17 significant digits, so a re-import with the
round-trip float parser restores every value exactly.
"""

import json
import logging
import math
from datetime import datetime, timezone
from pathlib import Path
from typing import Any, Dict, Optional, Union

import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt  # noqa: E402
import numpy as np  # noqa: E402
import pandas as pd  # noqa: E402

from ..config import settings  # noqa: E402
from ..exceptions import DomainError, ExportError  # noqa: E402
from ..models.lattice import LatticeSpec, ModularGrid  # noqa: E402
from ..models.wigner import CylinderWigner, Marginals  # noqa: E402
from ..schemas.wigner import WignerManifest  # noqa: E402

logger = logging.getLogger(__name__)

PathLike = Union[str, Path]
CSV_COLUMNS = ["n", "m", "xbar", "pbar", "W"]
FLOAT_FORMAT = "%.17g"


def write_json(path: PathLike, payload: Any) -> Path:
    p = Path(path)
    try:
        p.parent.mkdir(parents=True, exist_ok=True)
        with p.open("w", encoding="utf-8") as handle:
            json.dump(payload, handle, indent=2, sort_keys=True)
            handle.write("\n")
    except OSError as exc:
        raise ExportError(f"Could not write {p}: {exc.strerror or exc}", path=str(p)) from exc
    return p


def wigner_frame(w: CylinderWigner) -> pd.DataFrame:
    """Long-format table of the surface in the fixed column order."""
    n, m, j, k = np.meshgrid(
        w.n_values, w.m_values, np.arange(w.grid.size_x), np.arange(w.grid.size_p), indexing="ij"
    )
    return pd.DataFrame({
        "n": n.ravel(),
        "m": m.ravel(),
        "xbar": w.grid.xbar[j.ravel()],
        "pbar": w.grid.pbar[k.ravel()],
        "W": w.values.ravel(),
    }, columns=CSV_COLUMNS)


def write_table(frame: pd.DataFrame, path: PathLike) -> Path:
    """CSV with the export float format; parents are created."""
    p = Path(path)
    try:
        p.parent.mkdir(parents=True, exist_ok=True)
        frame.to_csv(p, index=False, float_format=FLOAT_FORMAT, lineterminator="\n")
    except OSError as exc:
        raise ExportError(f"Could not write {p}: {exc.strerror or exc}", path=str(p)) from exc
    return p


def build_manifest(
    w: CylinderWigner,
    state: str,
    files: Dict[str, str],
    config: Optional[Dict[str, Any]] = None,
) -> WignerManifest:
    return WignerManifest(
        state=state,
        lattice_l=w.lattice.l,
        nmax=w.nmax,
        mmax=w.mmax,
        size_x=w.grid.size_x,
        size_p=w.grid.size_p,
        separable=w.is_separable,
        normalization=w.normalization,
        imaginary_residue=w.imaginary_residue,
        truncation_loss=w.truncation_loss,
        excluded_samples=w.excluded_samples,
        warnings=list(w.warnings),
        files=files,
        config=config or {},
        generated_at=datetime.now(timezone.utc).isoformat(timespec="seconds"),
    )


def export_wigner(
    w: CylinderWigner,
    csv_path: PathLike,
    manifest_path: Optional[PathLike] = None,
    png_path: Optional[PathLike] = None,
    state: str = "",
    config: Optional[Dict[str, Any]] = None,
    marginals: Optional[Marginals] = None,
) -> Dict[str, str]:
    """
    Write the surface CSV and its manifest (default: ``<csv>.json``), plus an
    optional PNG. Returns the written paths keyed by kind.
    """
    csv_file = write_table(wigner_frame(w), csv_path)
    files = {"csv": str(csv_file)}
    if png_path is not None:
        if marginals is None:
            from ..services.wigner_service import WignerService

            marginals = WignerService().marginals(w)
        files["png"] = str(plot_cylinders(w, marginals, png_path, title=state))

    manifest_file = Path(manifest_path) if manifest_path is not None else csv_file.with_suffix(".json")
    manifest = build_manifest(w, state, files, config)
    write_json(manifest_file, manifest.model_dump(mode="json"))
    files["manifest"] = str(manifest_file)
    logger.info("Exported Wigner surface (%d rows) to %s", w.values.size, csv_file)
    return files


def read_wigner_csv(path: PathLike, lattice: Optional[LatticeSpec] = None) -> CylinderWigner:
    """
    Re-import an exported surface. The lattice defaults to the one implied
    by the lowest xbar node (-l/2).
    """
    p = Path(path)
    try:
        frame = pd.read_csv(p, float_precision="round_trip")
    except (OSError, pd.errors.ParserError) as exc:
        raise ExportError(f"Could not read {p}: {exc}", path=str(p)) from exc
    if list(frame.columns) != CSV_COLUMNS:
        raise DomainError(f"{p} does not have the columns {CSV_COLUMNS}", path=str(p), columns=list(frame.columns))

    n_values = np.unique(frame["n"].to_numpy())
    m_values = np.unique(frame["m"].to_numpy())
    xbar = np.unique(frame["xbar"].to_numpy())
    pbar = np.unique(frame["pbar"].to_numpy())
    nmax, mmax = int(n_values.max()), int(m_values.max())
    shape = (n_values.size, m_values.size, xbar.size, pbar.size)
    if frame.shape[0] != math.prod(shape) or n_values.size != 2 * nmax + 1 or m_values.size != 2 * mmax + 1:
        raise DomainError(f"{p} is not a complete (n, m, xbar, pbar) table", path=str(p))

    lattice = lattice or LatticeSpec(-2.0 * float(xbar[0]))
    grid = ModularGrid(lattice, xbar.size, pbar.size)
    values = frame["W"].to_numpy(dtype=float).reshape(shape)
    return CylinderWigner(lattice=lattice, nmax=nmax, mmax=mmax, grid=grid, raw_values=values)


def plot_cylinders(
    w: CylinderWigner,
    marginals: Marginals,
    path: PathLike,
    title: str = "",
) -> Path:
    """
    Two-panel heatmap: the x side (n against xbar, summed over m and pbar)
    and the p side (m against pbar, summed over n and xbar).
    """
    g_side = marginals.partial_trace_G
    f_side = marginals.partial_trace_F
    fig, axes = plt.subplots(1, 2, figsize=(10, 4), constrained_layout=True)
    panels = (
        (axes[0], g_side, w.grid.xbar, w.n_values, r"$\bar{x}$", "n"),
        (axes[1], f_side, w.grid.pbar, w.m_values, r"$\bar{p}$", "m"),
    )
    for ax, data, coords, index, xlabel, ylabel in panels:
        limit = float(np.max(np.abs(data))) or 1.0
        step = coords[1] - coords[0] if coords.size > 1 else 1.0
        image = ax.imshow(
            data,
            origin="lower",
            aspect="auto",
            cmap=settings.PLOT_COLORMAP,
            vmin=-limit,
            vmax=limit,
            extent=(coords[0], coords[-1] + step, index[0] - 0.5, index[-1] + 0.5),
            interpolation="nearest",
        )
        ax.set_xlabel(xlabel)
        ax.set_ylabel(ylabel)
        fig.colorbar(image, ax=ax)
    if title:
        fig.suptitle(title)

    p = Path(path)
    try:
        p.parent.mkdir(parents=True, exist_ok=True)
        fig.savefig(p, dpi=settings.PLOT_DPI)
    except OSError as exc:
        raise ExportError(f"Could not write {p}: {exc.strerror or exc}", path=str(p)) from exc
    finally:
        plt.close(fig)
    return p

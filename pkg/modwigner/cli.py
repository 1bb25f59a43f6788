"""
Command-line entry point: ``modwigner <command> [options]``.

Exit codes: 0 success, 1 computation error, 2 usage or configuration error.
Errors are reported on stderr as one JSON object; stdout carries the JSON
summary of a successful run.
"""

from __future__ import annotations

import argparse
import json
import logging
import sys
from pathlib import Path
from typing import Any, Dict, List, Optional

import numpy as np
import pandas as pd
from pydantic import ValidationError

from . import __version__
from .config import settings
from .exceptions import ConfigError, ModWignerError
from .models.wigner import Marginals
from .schemas.run_config import QecSection, RunConfig
from .schemas.states import CatParams, CoherentParams, GkpParams
from .schemas.tomography import IntegerTomographySample, TomographySample
from .services import (
    QecService,
    StateService,
    TomographyService,
    WignerService,
    ZakService,
    run_selftest,
)
from .utils.config_parser import parse_config, parse_state_spec
from .utils.export_utils import (
    export_wigner,
    plot_cylinders,
    read_wigner_csv,
    write_json,
    write_table,
)

logger = logging.getLogger("modwigner")

EXIT_OK = 0
EXIT_FAILURE = 1
EXIT_USAGE = 2


class UsageError(Exception):
    def __init__(self, message: str, usage: str = ""):
        super().__init__(message)
        self.usage = usage


class _ArgumentParser(argparse.ArgumentParser):
    """argparse parser whose errors raise UsageError instead of exiting."""

    def error(self, message: str):
        raise UsageError(message, self.format_usage())


def _emit_json(payload: Any) -> None:
    print(json.dumps(payload, indent=2, sort_keys=True))


def _emit_error(payload: Dict[str, Any]) -> None:
    print(json.dumps(payload, sort_keys=True, default=str), file=sys.stderr)


def _configure_logging(level: Optional[str]) -> None:
    logging.basicConfig(
        level=(level or settings.LOG_LEVEL).upper(),
        format=settings.LOG_FORMAT,
        stream=sys.stderr,
        force=True,
    )


# ---------------------------------------------------------------------------
# Configuration resolution
# ---------------------------------------------------------------------------

def _validated(model, data: Dict[str, Any]):
    try:
        return model.model_validate(data)
    except ValidationError as exc:
        issues = [
            {"field": ".".join(str(p) for p in e["loc"]), "message": e["msg"]} for e in exc.errors()
        ]
        raise ConfigError(f"{len(issues)} configuration error(s)", issues=issues) from exc


def _read_config_text(path: Optional[str]) -> str:
    if not path:
        return ""
    try:
        return Path(path).read_text(encoding="utf-8")
    except OSError as exc:
        raise ConfigError(
            f"Cannot read configuration file {path}",
            issues=[{"field": "config", "message": exc.strerror or str(exc)}],
        ) from exc


def _load_config(args: argparse.Namespace) -> RunConfig:
    """Config file (if any) overridden by command-line flags."""
    text = _read_config_text(args.config)
    config = parse_config(text)
    data = config.model_dump(mode="python")

    overrides = {
        ("grid", "nx"): getattr(args, "nx", None),
        ("grid", "np"): getattr(args, "np", None),
        ("grid", "nmax"): getattr(args, "nmax", None),
        ("grid", "mmax"): getattr(args, "mmax", None),
        ("grid", "display_nx"): getattr(args, "display_nx", None),
        ("grid", "display_np"): getattr(args, "display_np", None),
        ("output", "seed"): getattr(args, "seed", None),
    }
    for (section, key), value in overrides.items():
        if value is not None:
            data[section][key] = value

    if getattr(args, "state", None):
        data["state"] = parse_state_spec(args.state).model_dump()
    if getattr(args, "ancilla", None):
        data["qec"]["ancilla"] = parse_state_spec(args.ancilla).model_dump()
    if getattr(args, "l", None) is not None:
        data["lattice"]["l"] = args.l
        data["state"]["l"] = args.l
        data["qec"]["ancilla"]["l"] = args.l
    return _validated(RunConfig, data)


def _state_label(config: RunConfig) -> str:
    fields = config.state.model_dump(exclude={"kind"}, exclude_none=True)
    return f"{config.state.kind}(" + ", ".join(f"{k}={v}" for k, v in fields.items()) + ")"


def _output(config: RunConfig, path: Optional[str]) -> Optional[Path]:
    """Relative output paths land under the configured output directory."""
    if path is None:
        return None
    return Path(config.output.out_dir) / path


def _marginal_frames(marginals: Marginals, grid) -> Dict[str, pd.DataFrame]:
    n = np.arange(-(marginals.integer_density.shape[0] // 2), marginals.integer_density.shape[0] // 2 + 1)
    m = np.arange(-(marginals.integer_density.shape[1] // 2), marginals.integer_density.shape[1] // 2 + 1)
    layout = {
        "modular_density": (("xbar", grid.xbar), ("pbar", grid.pbar)),
        "integer_density": (("n", n), ("m", m)),
        "crossed_1": (("xbar", grid.xbar), ("m", m)),
        "crossed_2": (("n", n), ("pbar", grid.pbar)),
        "partial_trace_F": (("m", m), ("pbar", grid.pbar)),
        "partial_trace_G": (("n", n), ("xbar", grid.xbar)),
    }
    frames = {}
    for name, ((row_name, rows), (col_name, cols)) in layout.items():
        values = getattr(marginals, name)
        r, c = np.meshgrid(rows, cols, indexing="ij")
        frames[name] = pd.DataFrame({row_name: r.ravel(), col_name: c.ravel(), "value": values.ravel()})
    return frames


# ---------------------------------------------------------------------------
# Commands
# ---------------------------------------------------------------------------

def _cmd_state(args: argparse.Namespace) -> int:
    config = _load_config(args)
    states = StateService()
    mod = states.build_state(config.state, config.state_grid())
    xbar, pbar = mod.grid.mesh()
    frame = pd.DataFrame({
        "xbar": xbar.ravel(),
        "pbar": pbar.ravel(),
        "re": mod.amplitudes.real.ravel(),
        "im": mod.amplitudes.imag.ravel(),
        "density": mod.density.ravel(),
    })
    payload: Dict[str, Any] = {
        "state": mod.label,
        "norm": mod.norm,
        "size_x": mod.grid.size_x,
        "size_p": mod.grid.size_p,
        "warnings": list(mod.warnings),
    }
    if isinstance(config.state, GkpParams):
        payload["overlap"] = states.gkp_overlap(config.state)
        payload["regime"] = config.state.regime
        payload["photon_number"] = states.photon_number_estimate(config.state.delta)
    if args.out:
        payload["files"] = {"csv": str(write_table(frame, _output(config, args.out)))}
    _emit_json(payload)
    return EXIT_OK


def _build_surface(config: RunConfig, args: argparse.Namespace):
    wigner = WignerService()
    grid = config.display_grid()
    if args.analytic:
        kinds = {GkpParams: "gkp", CoherentParams: "coherent", CatParams: "cat"}
        kind = kinds.get(type(config.state))
        if kind is None:
            raise ConfigError(f"No closed form for {config.state.kind} states",
                              issues=[{"field": "state", "message": "analytic forms exist for gkp, coherent, cat"}])
        return wigner.analytic_wigner(kind, config.state, grid, config.grid.nmax, config.grid.mmax, config.wigner.extension)
    mod = StateService().build_state(config.state, config.state_grid())
    return wigner.wigner_full(mod, config.grid.nmax, config.grid.mmax, grid, config.wigner.separable)


def _cmd_wigner(args: argparse.Namespace) -> int:
    config = _load_config(args)
    wigner = WignerService()
    w = _build_surface(config, args)
    wigner.audit_realness(w)
    fringes = wigner.fringe_analysis(w, config.wigner.fringe_threshold)
    out = _output(config, args.out)
    png = _output(config, args.png) or (out.with_suffix(".png") if config.wigner.plot else None)
    files = export_wigner(
        w,
        out,
        manifest_path=_output(config, args.manifest),
        png_path=png,
        state=_state_label(config),
        config=config.model_dump(mode="json"),
    )
    _emit_json({
        "normalization": w.normalization,
        "imaginary_residue": w.imaginary_residue,
        "truncation_loss": w.truncation_loss,
        "separable": w.is_separable,
        "fringes": fringes.model_dump(),
        "warnings": list(w.warnings),
        "files": files,
    })
    return EXIT_OK


def _cmd_marginals(args: argparse.Namespace) -> int:
    config = _load_config(args)
    wigner = WignerService()
    mod = StateService().build_state(config.state, config.state_grid())
    w = wigner.wigner_full(mod, config.grid.nmax, config.grid.mmax, config.display_grid(), config.wigner.separable)
    marginals = wigner.marginals(w)
    out_dir = _output(config, args.out_dir)
    files = {
        name: str(write_table(frame, out_dir / f"{name}.csv"))
        for name, frame in _marginal_frames(marginals, w.grid).items()
    }
    _emit_json({
        "normalization": float(marginals.integer_density.sum()),
        "parity": wigner.parity_expectation(w),
        "files": files,
    })
    return EXIT_OK


def _cmd_qec_steane(args: argparse.Namespace) -> int:
    config = _load_config(args)
    qec = QecService()
    rounds = args.rounds if args.rounds is not None else config.qec.rounds
    grid = config.state_grid()

    sweep = args.sweep or config.qec.sweep
    if sweep:
        section = _validated(QecSection, {**config.qec.model_dump(), "sweep": sweep})
        name, values = section.sweep_values()
        base = config.state if isinstance(config.state, GkpParams) else GkpParams()
        rows = qec.qec_sweep(
            values, config.qec.ancilla, rounds, base.logical, grid, config.grid.nmax, config.grid.mmax,
            parameter=name, fixed_delta=base.delta,
        )
        frame = pd.DataFrame([row.model_dump() for row in rows])
        frame.insert(0, "delta_over_l", frame["delta"] / config.lattice_spec.l)
        payload: Dict[str, Any] = {"parameter": name, "points": len(rows)}
        if args.out:
            payload["files"] = {"csv": str(write_table(frame, _output(config, args.out)))}
        else:
            payload["rows"] = frame.to_dict(orient="records")
        _emit_json(payload)
        return EXIT_OK

    measured = args.p if args.p is not None else config.qec.p
    if measured != "sample":
        try:
            measured = float(measured)
        except ValueError as exc:
            raise ConfigError(
                f"Homodyne value must be a number or 'sample', got {measured!r}",
                issues=[{"field": "qec.p", "message": "not a number"}],
            ) from exc
    report = qec.qec_pipeline(
        config.state,
        config.qec.ancilla,
        rounds=rounds,
        p_measured=measured,
        seed=config.output.seed,
        grid=grid,
        nmax=config.grid.nmax,
        mmax=config.grid.mmax,
    )
    payload = report.model_dump(mode="json")
    if args.out:
        payload["files"] = {"json": str(write_json(_output(config, args.out), payload))}
    _emit_json(payload)
    return EXIT_OK


def _cmd_tomo_simulate(args: argparse.Namespace) -> int:
    config = _load_config(args)
    tomo = TomographyService()
    nmax, mmax = config.grid.nmax, config.grid.mmax
    mod = StateService().build_state(config.state, config.state_grid())
    protocol = args.protocol or config.tomo.protocol
    if protocol == "integer":
        iw = ZakService().modular_to_integer(mod, nmax, mmax)
        samples: List[Any] = tomo.simulate_readout_integer(iw, nmax=nmax, mmax=mmax)
    else:
        alpha_points = config.tomo.alpha_points or 4 * nmax + 2
        beta_points = config.tomo.beta_points or 4 * mmax + 2
        alphas, betas = tomo.sample_grid(config.lattice_spec, alpha_points, beta_points)
        samples = tomo.simulate_readout(mod, alphas, betas, config.display_grid(), nmax, mmax)
    frame = pd.DataFrame([s.model_dump() for s in samples])
    path = write_table(frame, _output(config, args.out))
    _emit_json({
        "protocol": protocol,
        "samples": len(samples),
        "invalid": int((~frame["valid"]).sum()) if len(frame) else 0,
        "files": {"csv": str(path)},
    })
    return EXIT_OK


def _cmd_tomo_reconstruct(args: argparse.Namespace) -> int:
    config = _load_config(args)
    tomo = TomographyService()
    frame = pd.read_csv(args.samples, float_precision="round_trip")
    records = frame.to_dict(orient="records")
    nmax, mmax = config.grid.nmax, config.grid.mmax
    if "d" in frame.columns:
        samples = [IntegerTomographySample.model_validate(r) for r in records]
        w = tomo.reconstruct_from_integer_samples(samples, config.lattice_spec, config.display_grid(), nmax, mmax)
    else:
        samples = [TomographySample.model_validate(r) for r in records]
        w = tomo.reconstruct_from_samples(samples, config.lattice_spec, nmax, mmax)
    files = export_wigner(
        w, _output(config, args.out), manifest_path=_output(config, args.manifest), png_path=_output(config, args.png),
        state=f"tomography({Path(args.samples).name})", config=config.model_dump(mode="json"),
    )
    _emit_json({
        "normalization": w.normalization,
        "excluded_samples": w.excluded_samples,
        "files": files,
    })
    return EXIT_OK


def _cmd_plot(args: argparse.Namespace) -> int:
    w = read_wigner_csv(args.input)
    marginals = WignerService().marginals(w)
    path = plot_cylinders(w, marginals, args.out, title=args.title or Path(args.input).stem)
    _emit_json({"files": {"png": str(path)}})
    return EXIT_OK


def _cmd_selftest(args: argparse.Namespace) -> int:
    result = run_selftest()
    _emit_json(result)
    return EXIT_OK if result["status"] == "passed" else EXIT_FAILURE


# ---------------------------------------------------------------------------
# Parser
# ---------------------------------------------------------------------------

def _add_run_options(parser: argparse.ArgumentParser, state: bool = True) -> None:
    parser.add_argument("--config", default=None, metavar="FILE", help="key = value run configuration")
    if state:
        parser.add_argument("--state", default=None, metavar="SPEC", help='e.g. "gkp(delta=0.15, logical=plus)"')
    parser.add_argument("--l", type=float, default=None, help="position-lattice period")
    parser.add_argument("--nx", type=int, default=None)
    parser.add_argument("--np", type=int, default=None)
    parser.add_argument("--nmax", type=int, default=None)
    parser.add_argument("--mmax", type=int, default=None)
    parser.add_argument("--display-nx", dest="display_nx", type=int, default=None)
    parser.add_argument("--display-np", dest="display_np", type=int, default=None)
    parser.add_argument("--seed", type=int, default=None)


def _build_parser() -> argparse.ArgumentParser:
    parser = _ArgumentParser(
        prog="modwigner",
        description="Modular-variable phase space: Zak transforms, cylinder Wigner functions, GKP correction, tomography.",
    )
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    parser.add_argument("--log-level", default=None, choices=["DEBUG", "INFO", "WARNING", "ERROR"])
    subparsers = parser.add_subparsers(dest="command", required=True)

    state = subparsers.add_parser("state", help="Build a state and write its modular wavefunction.")
    _add_run_options(state)
    state.add_argument("--out", default=None, metavar="CSV")

    wigner = subparsers.add_parser("wigner", help="Cylinder Wigner surface of a state.")
    _add_run_options(wigner)
    wigner.add_argument("--analytic", action="store_true", help="use the sharp-peak closed form")
    wigner.add_argument("--out", required=True, metavar="CSV")
    wigner.add_argument("--manifest", default=None, metavar="JSON")
    wigner.add_argument("--png", default=None, metavar="PNG")

    marginals = subparsers.add_parser("marginals", help="All marginals of the Wigner surface.")
    _add_run_options(marginals)
    marginals.add_argument("--out-dir", required=True, metavar="DIR")

    qec = subparsers.add_parser("qec", help="GKP error correction.")
    qec_sub = qec.add_subparsers(dest="qec_command", required=True)
    steane = qec_sub.add_parser("steane", help="Steane-type correction with a GKP ancilla.")
    _add_run_options(steane)
    steane.add_argument("--ancilla", default=None, metavar="SPEC")
    steane.add_argument("--rounds", type=int, default=None)
    steane.add_argument("--p", default=None, metavar="VALUE|sample", help="homodyne outcome or 'sample'")
    steane.add_argument("--sweep", default=None, metavar="delta|kappa=START:STOP:STEP")
    steane.add_argument("--out", default=None, metavar="PATH")

    tomo = subparsers.add_parser("tomo", help="Modular tomography.")
    tomo_sub = tomo.add_subparsers(dest="tomo_command", required=True)
    simulate = tomo_sub.add_parser("simulate", help="Simulate pointer readouts.")
    _add_run_options(simulate)
    simulate.add_argument("--protocol", choices=["modular", "integer"], default=None)
    simulate.add_argument("--out", required=True, metavar="CSV")
    reconstruct = tomo_sub.add_parser("reconstruct", help="Rebuild W from readouts.")
    _add_run_options(reconstruct, state=False)
    reconstruct.add_argument("--samples", required=True, metavar="CSV")
    reconstruct.add_argument("--out", required=True, metavar="CSV")
    reconstruct.add_argument("--manifest", default=None, metavar="JSON")
    reconstruct.add_argument("--png", default=None, metavar="PNG")

    plot = subparsers.add_parser("plot", help="Render an exported surface.")
    plot.add_argument("--input", required=True, metavar="CSV")
    plot.add_argument("--out", required=True, metavar="PNG")
    plot.add_argument("--title", default=None)

    subparsers.add_parser("selftest", help="Run the fast invariant checks.")
    return parser


_COMMANDS = {
    "state": _cmd_state,
    "wigner": _cmd_wigner,
    "marginals": _cmd_marginals,
    "plot": _cmd_plot,
    "selftest": _cmd_selftest,
}


def main(argv: Optional[List[str]] = None) -> int:
    parser = _build_parser()
    try:
        args = parser.parse_args(argv)
    except UsageError as exc:
        sys.stderr.write(exc.usage)
        _emit_error({"error": "UsageError", "message": str(exc), "details": {}})
        return EXIT_USAGE
    except SystemExit as exc:
        return int(exc.code or 0)
    _configure_logging(args.log_level)

    try:
        if args.command == "qec":
            return _cmd_qec_steane(args)
        if args.command == "tomo":
            if args.tomo_command == "simulate":
                return _cmd_tomo_simulate(args)
            return _cmd_tomo_reconstruct(args)
        return _COMMANDS[args.command](args)
    except ConfigError as exc:
        _emit_error(exc.to_dict())
        return EXIT_USAGE
    except ModWignerError as exc:
        _emit_error(exc.to_dict())
        return EXIT_FAILURE
    except (OSError, ValueError) as exc:
        _emit_error({"error": type(exc).__name__, "message": str(exc), "details": {}})
        return EXIT_FAILURE


if __name__ == "__main__":
    raise SystemExit(main())

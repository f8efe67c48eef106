"""Batch driver: determinant scans and full solves from a flat key = value config.

Exit codes: 0 success, 2 configuration error, 3 characteristic value, 4 Bromwich
tail not decayed, 5 output failure, 1 anything else.
"""
from __future__ import annotations

import argparse
import configparser
import io
import json
import os
import platform
import sys
import tempfile
import warnings
from dataclasses import asdict, dataclass, field

import numpy as np
import scipy

from . import __version__
from .bvp_pipeline import DownwashSpec, NearSingularityWarning, inverse_laplace_phi, line_values, solve_line
from .errors import CharacteristicValueError, CohilbertError, ConfigError, OutputError
from .flow_kernels import FlowParams
from .fredholm import characteristic_scan, flag_candidates
from .nystrom import KuttaGrid
from .special_functions import BACKEND

GRID_SIZES = (64, 128, 256, 512)
KUTTA_TOL = 1e-3
TANGENCY_TOL = 5e-3
SIGMA_TOL = 1e-3

# key -> (type, default); lengths in half-chords, time in half-chord / a_inf units
SCHEMA = {
    "mach": (float, 0.5),
    "a_inf": (float, 1.0),
    "kutta_extent": (float, 2.0),
    "sigma_a": (float, 0.2),
    "sigma1": (float, 0.5),
    "sigma2": (float, 1.0),
    "downwash": (str, "harmonic-plunge"),
    "amplitude": (float, 1.0),
    "frequency": (float, 0.5),
    "envelope_tau": (float, 1.0),
    "envelope_t0": (float, 6.0),
    "grid_size": (int, 256),
    "sigma_line": (float, None),
    "sigma_check": (float, None),
    "eta_max": (float, None),
    "eta_samples": (int, 201),
    "output_dir": (str, None),
    "det_floor": (float, 1e-10),
    "resolvent_tol": (float, 1e-8),
    "im_tol": (float, 1e-6),
    "tail_tol": (float, 1e-8),
    "x_grid": (list, "-0.5, 0.0, 0.5, 1.5"),
    "z_grid": (list, "0.25, 0.5, 1.0"),
    "t_grid": (list, "4, 6, 8, 10"),
}


@dataclass
class RunConfig:
    flow: FlowParams
    downwash: DownwashSpec
    grid_size: int
    sigma_line: float
    eta_max: float
    eta_samples: int
    output_dir: str
    tolerances: dict
    x_grid: list
    z_grid: list
    t_grid: list
    sigma_check: float | None = None
    raw: dict = field(default_factory=dict)

    def echo(self) -> dict:
        """Config as parsed, with defaults filled in (enough to reproduce the run)."""
        return dict(sorted(self.raw.items()))


def _parse_value(key, text):
    kind, _ = SCHEMA[key]
    try:
        if kind is list:
            return [float(v) for v in str(text).split(",") if v.strip()]
        return kind(text)
    except ValueError as e:
        raise ConfigError(f"bad value for {key}: {text!r}") from e


def load_config(path: str, overrides: dict | None = None) -> RunConfig:
    parser = configparser.ConfigParser(inline_comment_prefixes=("#",), interpolation=None)
    try:
        with open(path, encoding="utf-8") as fh:
            parser.read_string("[run]\n" + fh.read())
    except OSError as e:
        raise ConfigError(f"cannot read config {path}: {e}") from e
    except configparser.Error as e:
        raise ConfigError(f"malformed config: {e}") from e
    raw = dict(parser["run"])
    unknown = sorted(set(raw) - set(SCHEMA))
    if unknown:
        raise ConfigError(f"unknown config keys: {', '.join(unknown)}")
    vals = {k: (_parse_value(k, raw[k]) if k in raw else (_parse_value(k, d) if d is not None else None))
            for k, (_, d) in SCHEMA.items()}
    for k, v in (overrides or {}).items():
        if v is not None:
            vals[k] = v
    return build_config(vals)


def build_config(vals: dict) -> RunConfig:
    flow = FlowParams(a_inf=vals["a_inf"], mach=vals["mach"], kutta_extent=vals["kutta_extent"],
                      sigma_a=vals["sigma_a"], sigma1=vals["sigma1"], sigma2=vals["sigma2"])
    w = DownwashSpec(form=vals["downwash"], amplitude=vals["amplitude"], frequency=vals["frequency"],
                     tau=vals["envelope_tau"], t0=vals["envelope_t0"], u_free=flow.U)
    if w.form == "custom-closed-form":
        raise ConfigError("custom downwash is available from the Python API only")
    if vals["grid_size"] not in GRID_SIZES:
        raise ConfigError(f"grid_size must be one of {GRID_SIZES}")
    sigma = vals["sigma_line"] if vals["sigma_line"] is not None else flow.sigma1 + 0.1 * (flow.sigma2 - flow.sigma1)
    if not flow.sigma1 <= sigma <= flow.sigma2:
        raise ConfigError("sigma_line must lie in [sigma1, sigma2]")
    check = vals["sigma_check"]
    if check is not None and not flow.sigma1 <= check <= flow.sigma2:
        raise ConfigError("sigma_check must lie in [sigma1, sigma2]")
    eta_max = vals["eta_max"] if vals["eta_max"] is not None else 40.0 * flow.sigma1
    n = vals["eta_samples"]
    if n < 1 or n % 2 == 0:
        raise ConfigError("eta_samples must be odd")
    if not eta_max > 0.0:
        raise ConfigError("eta_max must be positive")
    tol = {k: vals[k] for k in ("det_floor", "resolvent_tol", "im_tol", "tail_tol")}
    if any(not v > 0.0 for v in tol.values()):
        raise ConfigError("all tolerances must be positive")
    if vals["output_dir"] is None:
        raise ConfigError("output_dir is required")
    grids = [vals[k] for k in ("x_grid", "z_grid", "t_grid")]
    if any(len(gr) == 0 for gr in grids) or any(z <= 0.0 for z in vals["z_grid"]):
        raise ConfigError("x, z and t grids must be non-empty with z > 0")
    raw = {k: (",".join(format(x, ".17g") for x in v) if isinstance(v, list) else v) for k, v in vals.items()}
    raw.update(sigma_line=sigma, eta_max=eta_max)
    return RunConfig(flow, w, vals["grid_size"], sigma, eta_max, n, vals["output_dir"], tol, *grids, check, raw)


# ---------------------------------------------------------------- output


def _num(v) -> str:
    return format(float(v), ".17g")


def _csv(header, rows) -> str:
    buf = io.StringIO()
    buf.write(",".join(header) + "\n")
    for r in rows:
        buf.write(",".join(_num(v) if isinstance(v, (float, np.floating, int, np.integer)) and not isinstance(v, bool)
                           else str(int(v)) if isinstance(v, (bool, np.bool_)) else str(v) for v in r) + "\n")
    return buf.getvalue()


def _check_dir(path):
    if not os.path.isdir(path):
        raise OutputError(f"output directory {path} does not exist")
    if not os.access(path, os.W_OK):
        raise OutputError(f"output directory {path} is not writable")


def write_outputs(out_dir: str, files: dict) -> None:
    """All-or-nothing: every file is staged in a temporary directory and moved in at the end."""
    _check_dir(out_dir)
    try:
        with tempfile.TemporaryDirectory(dir=out_dir, prefix=".staging-") as stage:
            for name, text in files.items():
                with open(os.path.join(stage, name), "w", encoding="utf-8", newline="\n") as fh:
                    fh.write(text)
            for name in files:
                os.replace(os.path.join(stage, name), os.path.join(out_dir, name))
    except OSError as e:
        raise OutputError(f"writing results failed: {e}") from e


def _versions() -> dict:
    return {"cohilbert": __version__, "numpy": np.__version__, "scipy": scipy.__version__,
            "python": platform.python_version(), "backend": BACKEND}


# ---------------------------------------------------------------- commands


def cmd_scan(cfg: RunConfig) -> int:
    _check_dir(cfg.output_dir)
    grid = KuttaGrid(cfg.flow.kutta_extent, cfg.grid_size)
    samples = characteristic_scan(cfg.flow, grid, cfg.sigma_line, (-cfg.eta_max, cfg.eta_max), cfg.eta_samples,
                                  cfg.tolerances["det_floor"])
    rows = [(s.lam.real, s.lam.imag, s.determinant.real, s.determinant.imag, abs(s.determinant), s.hs_norm, s.candidate)
            for s in samples]
    header = ["sigma", "eta", "re_det", "im_det", "abs_det", "hs_norm", "zero_candidate"]
    candidates = [complex(s.lam) for s in samples if s.candidate]
    manifest = {"command": "scan", "config": cfg.echo(), "versions": _versions(),
                "zero_candidates": [[_num(c.real), _num(c.imag)] for c in candidates]}
    write_outputs(cfg.output_dir, {"scan.csv": _csv(header, rows),
                                   "scan_manifest.json": json.dumps(manifest, indent=1, sort_keys=True) + "\n"})
    for c in candidates:
        print(f"zero candidate near lambda = {c.real:.6g}{c.imag:+.6g}i", file=sys.stderr)
    return 0


def _run_line(cfg: RunConfig, grid, sigma: float, force: bool, diagnostics: bool):
    floor = 0.0 if force else cfg.tolerances["det_floor"]
    solves = solve_line(cfg.flow, cfg.downwash, grid, sigma, cfg.eta_max, cfg.eta_samples, diagnostics=diagnostics,
                        det_floor=floor, resolvent_tol=cfg.tolerances["resolvent_tol"])
    flags = flag_candidates([s.determinant for s in solves], cfg.tolerances["det_floor"])
    bad = [s.lam for s, f in zip(solves, flags) if f]
    if bad and not force:
        listing = ", ".join(f"{z.real:.6g}{z.imag:+.6g}i" for z in bad)
        raise CharacteristicValueError(f"zero candidates of the determinant on the line: {listing}", bad[0])
    return solves, bad


def cmd_solve(cfg: RunConfig, force: bool = False, sigma_check: bool = False) -> int:
    _check_dir(cfg.output_dir)
    grid = KuttaGrid(cfg.flow.kutta_extent, cfg.grid_size)
    solves, bad = _run_line(cfg, grid, cfg.sigma_line, force, diagnostics=True)
    xg, zg, tg = cfg.x_grid, cfg.z_grid, cfg.t_grid
    tol = cfg.tolerances
    field_ = inverse_laplace_phi(cfg.flow, solves, xg, zg, tg, tail_tol=tol["tail_tol"], im_tol=tol["im_tol"],
                                 values=line_values(solves, xg, zg))

    norm_ps = sorted(solves[0].weighted_norms) if solves else []
    header = ["sigma", "eta", "re_det", "im_det", "abs_det", "kutta_residual", "tangency_residual"] + [
        f"weighted_norm_p{q:g}" for q in norm_ps]
    rows = [(s.lam.real, s.lam.imag, s.determinant.real, s.determinant.imag, abs(s.determinant), s.kutta_residual,
             s.tangency_residual, *[s.weighted_norms[q] for q in norm_ps]) for s in solves]
    kutta = max(s.kutta_residual for s in solves)
    tangency = max(s.tangency_residual for s in solves)
    outcomes = {
        "kutta_residual_max": {"value": _num(kutta), "tolerance": _num(KUTTA_TOL), "pass": bool(kutta <= KUTTA_TOL)},
        "tangency_residual_max": {"value": _num(tangency), "tolerance": _num(TANGENCY_TOL),
                                  "pass": bool(tangency <= TANGENCY_TOL)},
        "bromwich_tail_ratio": {"value": _num(field_.tail_ratio), "tolerance": _num(tol["tail_tol"]), "pass": True},
        "phi_imaginary_max": {"value": _num(field_.imag_max), "tolerance": _num(tol["im_tol"]), "pass": True},
        "zero_candidates": {"value": [[_num(z.real), _num(z.imag)] for z in bad], "forced": force, "pass": not bad},
    }
    if sigma_check:
        other = cfg.sigma_check if cfg.sigma_check is not None else 0.5 * (cfg.flow.sigma1 + cfg.flow.sigma2)
        if abs(other - cfg.sigma_line) < 1e-12:
            other = 0.5 * (cfg.sigma_line + cfg.flow.sigma2)
        solves2, _ = _run_line(cfg, grid, other, force, diagnostics=False)
        f2 = inverse_laplace_phi(cfg.flow, solves2, xg, zg, tg, tail_tol=tol["tail_tol"], im_tol=tol["im_tol"],
                                 values=line_values(solves2, xg, zg))
        scale = float(np.max(np.abs(field_.phi)))
        gap = float(np.max(np.abs(field_.phi - f2.phi)))
        rel = gap / scale if scale > 0.0 else gap
        outcomes["sigma_independence"] = {"sigma": [_num(cfg.sigma_line), _num(other)], "value": _num(rel),
                                          "tolerance": _num(SIGMA_TOL), "pass": bool(rel <= SIGMA_TOL)}
    status = "PASS" if all(o["pass"] for o in outcomes.values()) else "FAIL"

    X, Z, T = np.meshgrid(xg, zg, tg, indexing="ij")
    phi_rows = zip(X.ravel(), Z.ravel(), T.ravel(), field_.phi.ravel())
    tensor = {"axes": ["x", "z", "t"], "x": list(map(float, xg)), "z": list(map(float, zg)), "t": list(map(float, tg)),
              "phi": field_.phi.tolist(), "sigma_used": field_.sigma_used, "eta_truncation": field_.eta_truncation}
    manifest = {"command": "solve", "config": cfg.echo(), "tolerances": {k: _num(v) for k, v in sorted(tol.items())},
                "outcomes": outcomes, "status": status, "versions": _versions()}
    write_outputs(cfg.output_dir, {
        "diagnostics.csv": _csv(header, rows),
        "phi.csv": _csv(["x", "z", "t", "phi"], phi_rows),
        "phi.json": json.dumps(tensor, sort_keys=True) + "\n",
        "manifest.json": json.dumps(manifest, indent=1, sort_keys=True) + "\n",
    })
    print(f"solve {status}: kutta {kutta:.3e}, tangency {tangency:.3e}", file=sys.stderr)
    return 0


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="cohilbert", description=__doc__.splitlines()[0])
    sub = ap.add_subparsers(dest="command", required=True)
    for name in ("scan", "solve"):
        sp = sub.add_parser(name)
        sp.add_argument("--config", required=True, help="flat key = value file")
        sp.add_argument("--sigma", type=float, help="abscissa of the vertical line (overrides sigma_line)")
        sp.add_argument("--eta-max", type=float, help="half-length of the eta grid")
        sp.add_argument("--grid", type=int, help="Kutta grid size (64, 128, 256 or 512)")
        if name == "solve":
            sp.add_argument("--force", action="store_true", help="solve despite determinant zero candidates")
            sp.add_argument("--sigma-check", action="store_true", help="repeat at a second abscissa and compare phi")
    return ap


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        cfg = load_config(args.config, {"sigma_line": args.sigma, "eta_max": args.eta_max, "grid_size": args.grid})
        with warnings.catch_warnings():
            warnings.simplefilter("ignore", NearSingularityWarning)
            if args.command == "scan":
                return cmd_scan(cfg)
            return cmd_solve(cfg, force=args.force, sigma_check=args.sigma_check)
    except CohilbertError as e:
        print(f"error: {e}", file=sys.stderr)
        return e.exit_code
    except Exception as e:  # noqa: BLE001 - reported as a generic failure
        print(f"error: {type(e).__name__}: {e}", file=sys.stderr)
        return 1


__all__ = ["RunConfig", "build_config", "cmd_scan", "cmd_solve", "load_config", "main"]

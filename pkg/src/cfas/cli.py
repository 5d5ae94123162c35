"""Command-line front end: ``cfas <subcommand> [options]``.

Exit codes: 0 success, 2 invalid input, 3 simulation point cap exceeded,
4 solver or bracketing failure.

Every subcommand writes CSV (header line first, full-precision floats) or a
JSON array of row objects. Output goes to ``--output``; without it, to
``$CFAS_OUTPUT_DIR/<subcommand>.<ext>`` when that variable is set, else to
stdout. ``--config file.json`` supplies defaults keyed by option name
(``"kappa"``, ``"x-grid"`` or ``"x_grid"``); explicit flags win.
"""

from __future__ import annotations

import argparse
import csv
import io
import json
import math
import os
import sys
import time
from pathlib import Path
from typing import Any, Sequence

import numpy as np

from . import __version__
from .chansim import (
    DEFAULT_REPLICATES,
    DEFAULT_SPACING,
    DEFAULT_SPACING_3D,
    STEERING_CONVENTIONS,
    GridSpec,
    simulate_sup,
)
from .errors import BracketError, CapExceededError, ConvergenceError, FactorizationError
from .equiv import REFERENCE_AREA_RATIOS, TABLE3_KAPPAS, TABLE3_SIDES, THRESHOLD_MAPPING, solve_equivalent_side
from .hsp import hsp_closed, in_asymptotic_regime
from .lcr import broadside_rate, discrepancy_map, hsp_lcr_1d, lcr_rate
from .model import ChannelParams, CorrelationModel, Geometry

OUTPUT_DIR_ENV = "CFAS_OUTPUT_DIR"

EXIT_OK = 0
EXIT_INVALID = 2
EXIT_CAP = 3
EXIT_SOLVER = 4

# simulate falls back to these sides when --sides is omitted
DEFAULT_SIM_SIDE = 0.25


class UsageError(Exception):
    """Invalid command-line input; mapped to exit code 2."""


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise UsageError(message)


# ----------------------------------------------------------------------------
# Value parsing
# ----------------------------------------------------------------------------


def _finite(text: str, name: str) -> float:
    try:
        v = float(text)
    except (TypeError, ValueError):
        raise UsageError(f"--{name}: {text!r} is not a number") from None
    if not math.isfinite(v):
        raise UsageError(f"--{name}: value must be finite, got {text!r}")
    return v


def parse_grid(text: str | Sequence[float], name: str) -> list[float]:
    """``"a,b,c"`` lists values; ``"start:stop:num"`` is an inclusive linspace."""
    if isinstance(text, (list, tuple)):
        return [_finite(str(v), name) for v in text]
    text = str(text).strip()
    if ":" in text:
        parts = text.split(":")
        if len(parts) != 3:
            raise UsageError(f"--{name}: range must be start:stop:num, got {text!r}")
        start, stop = _finite(parts[0], name), _finite(parts[1], name)
        try:
            num = int(parts[2])
        except ValueError:
            raise UsageError(f"--{name}: count {parts[2]!r} is not an integer") from None
        if num < 1:
            raise UsageError(f"--{name}: count must be >= 1, got {num}")
        return [float(v) for v in np.linspace(start, stop, num)]
    if not text:
        raise UsageError(f"--{name}: empty list")
    return [_finite(p, name) for p in text.split(",")]


def _params(args) -> ChannelParams:
    try:
        return ChannelParams(kappa=args.kappa, phi=args.phi, theta=args.theta, gain_ratio=args.gain_ratio)
    except ValueError as exc:
        raise UsageError(str(exc)) from None


def _corr(args) -> CorrelationModel:
    try:
        if args.corr == "jakes":
            return CorrelationModel.jakes()
        return CorrelationModel.quadratic(args.corr_a)
    except ValueError as exc:
        raise UsageError(f"--corr-a: {exc}") from None


def _sides(args, required: bool = True) -> tuple[float, ...]:
    if args.dim == 0:
        return ()
    if args.sides is None:
        if required:
            raise UsageError(f"--sides is required for --dim {args.dim}")
        return (DEFAULT_SIM_SIDE,) * args.dim
    sides = parse_grid(args.sides, "sides")
    if len(sides) != args.dim:
        raise UsageError(f"--sides: expected {args.dim} values for --dim {args.dim}, got {len(sides)}")
    if any(t < 0 for t in sides):
        raise UsageError(f"--sides: lengths must be >= 0, got {sides}")
    return tuple(sides)


def _thresholds(args, params: ChannelParams) -> list[tuple[float, float]]:
    """(x, u) pairs from exactly one of --x, --x-grid, --u, --u-grid, --u-db."""
    given = [n for n in ("x", "x_grid", "u", "u_grid", "u_db") if getattr(args, n) is not None]
    if len(given) != 1:
        raise UsageError("give exactly one of --x, --x-grid, --u, --u-grid, --u-db")
    kind = given[0]
    raw = getattr(args, kind)
    vals = parse_grid(raw, kind.replace("_", "-")) if kind != "x" and kind != "u" else [_finite(str(raw), kind)]
    scale = 2.0 * (params.kappa + 1.0) / params.gain_ratio
    out = []
    for v in vals:
        if kind in ("x", "x_grid"):
            x = v
            u = v / scale
        else:
            u = 10.0 ** (v / 10.0) if kind == "u_db" else v
            x = scale * u
        if not (x > 0.0) or not math.isfinite(x):
            raise UsageError(f"--{kind.replace('_', '-')}: thresholds must be > 0, got {v}")
        out.append((x, u))
    return out


# ----------------------------------------------------------------------------
# Output
# ----------------------------------------------------------------------------


def _cell(v: Any) -> Any:
    if isinstance(v, (bool, np.bool_)):
        return "true" if v else "false"
    if isinstance(v, (float, np.floating)):
        return repr(float(v))
    return v


def render(rows: list[dict], fmt: str) -> str:
    if fmt == "json":
        clean = [{k: (float(v) if isinstance(v, np.floating) else v) for k, v in r.items()} for r in rows]
        return json.dumps(clean, indent=1, allow_nan=True) + "\n"
    buf = io.StringIO()
    if rows:
        w = csv.DictWriter(buf, fieldnames=list(rows[0]), lineterminator="\n")
        w.writeheader()
        for r in rows:
            w.writerow({k: _cell(v) for k, v in r.items()})
    return buf.getvalue()


def _output_path(args) -> Path | None:
    if args.output:
        return Path(args.output)
    base = os.environ.get(OUTPUT_DIR_ENV)
    if base:
        return Path(base) / f"{args.command}.{args.format}"
    return None


def _emit(args, rows: list[dict], manifest: dict | None = None) -> None:
    text = render(rows, args.format)
    path = _output_path(args)
    if path is None:
        sys.stdout.write(text)
    else:
        path.parent.mkdir(parents=True, exist_ok=True)
        path.write_text(text)
    if manifest is not None:
        mpath = Path(args.manifest) if args.manifest else (Path(f"{path}.manifest.json") if path else None)
        if mpath is not None:
            mpath.parent.mkdir(parents=True, exist_ok=True)
            mpath.write_text(json.dumps(manifest, indent=1, sort_keys=True) + "\n")


def _manifest(args, start: float, jitter: Any = None, **extra) -> dict:
    params = {k: v for k, v in vars(args).items() if k not in ("func", "config", "output", "manifest")}
    out = {
        "parameters": params,
        "seed": getattr(args, "seed", None),
        "jitter": jitter,
        "wall_time_ms": round(1000.0 * (time.perf_counter() - start), 3),
        "version": __version__,
    }
    out.update(extra)
    return out


# ----------------------------------------------------------------------------
# Subcommands
# ----------------------------------------------------------------------------


def cmd_hsp(args) -> int:
    start = time.perf_counter()
    params = _params(args)
    geom = Geometry(_sides(args))
    pairs = _thresholds(args, params)
    corr = _corr(args)
    rows = []
    for x, u in pairs:
        p = hsp_closed(args.dim, params, geom, x, corr)
        rows.append({"x": x, "u": u, "hsp": p, "asymptotic": in_asymptotic_regime(args.dim, params, x, p)})
    _emit(args, rows, _manifest(args, start) if args.manifest else None)
    return EXIT_OK


def cmd_simulate(args) -> int:
    start = time.perf_counter()
    params = _params(args)
    sides = _sides(args, required=False)
    pairs = _thresholds(args, params)
    corr = _corr(args)
    if args.replicates < 100:
        raise UsageError(f"--replicates must be >= 100, got {args.replicates}")
    if args.workers < 1:
        raise UsageError(f"--workers must be >= 1, got {args.workers}")
    spacing = args.spacing
    if spacing is None:
        spacing = DEFAULT_SPACING_3D if args.dim == 3 else DEFAULT_SPACING
    try:
        grid = GridSpec(args.dim, sides, spacing, cap=args.cap)
    except ValueError as exc:
        raise UsageError(str(exc)) from None
    sups, factor = simulate_sup(
        params, grid, corr, args.replicates, args.seed, args.workers, args.steering
    )
    geom = Geometry(sides)
    n = args.replicates
    rows = []
    for x, u in pairs:
        p = int(np.count_nonzero(sups >= x)) / n
        rows.append(
            {
                "x": x,
                "u": u,
                "p_hat": p,
                "stderr": math.sqrt(p * (1.0 - p) / n),
                "analytic": hsp_closed(args.dim, params, geom, x, corr),
            }
        )
    manifest = _manifest(
        args,
        start,
        jitter=factor.jitter,
        grid_points=grid.n_points,
        spacing=spacing,
        psd_projection={"applied": factor.projected, "min_eigenvalue": factor.min_eigenvalue},
    )
    _emit(args, rows, manifest)
    return EXIT_OK


def cmd_lcr(args) -> int:
    start = time.perf_counter()
    params = _params(args)
    corr = _corr(args)
    if args.t1 < 0:
        raise UsageError(f"--t1 must be >= 0, got {args.t1}")
    rows = []
    for x, u in _thresholds(args, params):
        res = lcr_rate(params, x, args.quad_order, corr, args.convention)
        row = {
            "x": x,
            "u": u,
            "lcr": res.rate,
            "hsp_lcr": hsp_lcr_1d(params, args.t1, x, corr, args.quad_order, args.convention),
            "hsp_eec": hsp_closed(1, params, Geometry((args.t1,)), x, corr),
        }
        if params.phi == 0.0:
            row["lcr_broadside"] = broadside_rate(params, x, corr)
        if args.convention == "printed":
            row["imag_residual"] = res.imag_residual
        rows.append(row)
    _emit(args, rows, _manifest(args, start) if args.manifest else None)
    return EXIT_OK


def cmd_lcr_map(args) -> int:
    start = time.perf_counter()
    kappas = parse_grid(args.kappa_grid, "kappa-grid")
    phis = parse_grid(args.phi_grid, "phi-grid")
    if args.degrees:
        phis = [math.radians(p) for p in phis]
    # accept a rounded pi/2 (e.g. 1.5708) as the endfire end of the grid
    phis = [math.pi / 2 if 0.0 < p - math.pi / 2 < 1e-4 else p for p in phis]
    if any(k < 0 for k in kappas):
        raise UsageError("--kappa-grid: values must be >= 0")
    if not (0.0 < args.target < 0.5):
        raise UsageError(f"--target must lie in (0, 0.5), got {args.target}")
    if args.t1 < 0:
        raise UsageError(f"--t1 must be >= 0, got {args.t1}")
    res = discrepancy_map(kappas, phis, args.t1, args.target, args.theta, _corr(args))
    rows = [{"kappa": r.kappa, "phi": r.phi, "x": r.x, "difference": r.difference, "status": r.status} for r in res]
    _emit(args, rows, _manifest(args, start) if args.manifest else None)
    failed = [r for r in res if r.status != "ok"]
    if failed:
        f = failed[0]
        print(f"error: solver failed at kappa={f.kappa!r}, phi={f.phi!r}: {f.status}", file=sys.stderr)
        return EXIT_SOLVER
    return EXIT_OK


def _equiv_row(t_ray: float, kappa: float, target: float, corr: CorrelationModel) -> dict:
    try:
        r = solve_equivalent_side(t_ray, kappa, target, corr)
    except (BracketError, ConvergenceError) as exc:
        raise BracketError(f"cell t_ray={t_ray!r}, kappa={kappa!r}: {exc}") from None
    return {
        "t_ray": t_ray,
        "kappa": kappa,
        "t_rice": r.t_rice,
        "area_ratio": r.area_ratio,
        "x0": r.x0,
        "x": r.x,
        "iterations": r.iterations,
        "physical": r.physical,
    }


def cmd_equiv(args) -> int:
    start = time.perf_counter()
    if args.t_ray <= 0:
        raise UsageError(f"--t-ray must be > 0, got {args.t_ray}")
    if args.kappa < 0:
        raise UsageError(f"--kappa must be >= 0, got {args.kappa}")
    if not (1e-6 < args.target < 0.5):
        raise UsageError(f"--target must lie in (1e-6, 0.5), got {args.target}")
    row = _equiv_row(args.t_ray, args.kappa, args.target, _corr(args))
    _emit(args, [row], _manifest(args, start, threshold_mapping=THRESHOLD_MAPPING) if args.manifest else None)
    return EXIT_OK


def cmd_table3(args) -> int:
    start = time.perf_counter()
    corr = _corr(args)
    rows = []
    for i, t in enumerate(TABLE3_SIDES):
        for j, k in enumerate(TABLE3_KAPPAS):
            row = _equiv_row(t, k, args.target, corr)
            row["reference"] = REFERENCE_AREA_RATIOS[i][j]
            row["relative_deviation"] = row["area_ratio"] / REFERENCE_AREA_RATIOS[i][j] - 1.0
            rows.append(row)
    worst = max(abs(r["relative_deviation"]) for r in rows)
    manifest = _manifest(
        args,
        start,
        threshold_mapping=THRESHOLD_MAPPING,
        max_relative_deviation=worst,
        reproduces_reference=worst <= 0.005,
    )
    _emit(args, rows, manifest)
    return EXIT_OK


# ----------------------------------------------------------------------------
# Parser
# ----------------------------------------------------------------------------


def _add_common(p: argparse.ArgumentParser) -> None:
    p.add_argument("--format", choices=("csv", "json"), default="csv")
    p.add_argument("--output", help=f"output file (default: ${OUTPUT_DIR_ENV}/<command>.<format> or stdout)")
    p.add_argument("--manifest", help="run manifest path (default: <output>.manifest.json where applicable)")
    p.add_argument("--config", help="JSON file of option defaults")
    p.add_argument("--corr", choices=("jakes", "quadratic"), default="jakes")
    p.add_argument("--corr-a", type=float, default=math.pi**2, help="quadratic kernel exp(-a tau^2) rate")
    p.add_argument("--degrees", action="store_true", help="angles are given in degrees")


def _add_channel(p: argparse.ArgumentParser, kappa_required: bool = True) -> None:
    p.add_argument("--kappa", type=float, required=kappa_required, default=None if kappa_required else 0.0)
    p.add_argument("--phi", type=float, default=0.0, help="LoS azimuth (radians unless --degrees)")
    p.add_argument("--theta", type=float, help="LoS elevation (radians unless --degrees; default pi/2)")
    p.add_argument("--gain-ratio", type=float, default=1.0)


def _add_thresholds(p: argparse.ArgumentParser) -> None:
    p.add_argument("--x", help="normalized threshold")
    p.add_argument("--x-grid", help="normalized thresholds, a,b,c or start:stop:num")
    p.add_argument("--u", help="linear SNR threshold")
    p.add_argument("--u-grid", help="linear SNR thresholds")
    p.add_argument("--u-db", help="SNR thresholds in dB")


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="cfas", description="High-SNR probabilities of continuous fluid antennas in Ricean fading.")
    parser.add_argument("--version", action="version", version=__version__)
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)

    p = sub.add_parser("hsp", help="closed-form HSP over thresholds")
    _add_common(p)
    p.add_argument("--dim", type=int, choices=(0, 1, 2, 3), required=True)
    p.add_argument("--sides", help="side lengths in wavelengths, comma separated")
    _add_channel(p)
    _add_thresholds(p)
    p.set_defaults(func=cmd_hsp)

    p = sub.add_parser("simulate", help="Monte Carlo HSP on a grid")
    _add_common(p)
    p.add_argument("--dim", type=int, choices=(0, 1, 2, 3), required=True)
    p.add_argument("--sides", help=f"side lengths (default {DEFAULT_SIM_SIDE} per axis)")
    p.add_argument("--spacing", type=float, help=f"grid spacing (default {DEFAULT_SPACING}, {DEFAULT_SPACING_3D} in 3D)")
    p.add_argument("--cap", type=int, default=40_000, help="maximum grid points")
    p.add_argument("--replicates", type=int, default=DEFAULT_REPLICATES)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--workers", type=int, default=1)
    p.add_argument("--steering", choices=STEERING_CONVENTIONS, default="printed")
    _add_channel(p)
    _add_thresholds(p)
    p.set_defaults(func=cmd_simulate)

    p = sub.add_parser("lcr", help="1D level crossing rate and LCR-method HSP")
    _add_common(p)
    p.add_argument("--t1", type=float, default=0.0, help="line length in wavelengths")
    p.add_argument("--quad-order", type=int, default=64)
    p.add_argument("--convention", choices=("derived", "printed"), default="derived")
    _add_channel(p)
    _add_thresholds(p)
    p.set_defaults(func=cmd_lcr)

    p = sub.add_parser("lcr-map", help="LCR minus EEC 1D HSP over a (kappa, phi) grid")
    _add_common(p)
    p.add_argument("--kappa-grid", required=True)
    p.add_argument("--phi-grid", required=True)
    p.add_argument("--t1", type=float, required=True)
    p.add_argument("--target", type=float, default=0.01)
    p.add_argument("--theta", type=float, help="LoS elevation (radians unless --degrees; default pi/2)")
    p.set_defaults(func=cmd_lcr_map)

    p = sub.add_parser("equiv", help="Ricean square side matching a Rayleigh square")
    _add_common(p)
    p.add_argument("--t-ray", type=float, required=True)
    p.add_argument("--kappa", type=float, required=True)
    p.add_argument("--target", type=float, default=0.01)
    p.set_defaults(func=cmd_equiv)

    p = sub.add_parser("table3", help="area ratios for the reference grid of sides and K-factors")
    _add_common(p)
    p.add_argument("--target", type=float, default=0.01)
    p.set_defaults(func=cmd_table3)
    return parser


def _config_path(argv: list[str]) -> str | None:
    for i, tok in enumerate(argv):
        if tok == "--config" and i + 1 < len(argv):
            return argv[i + 1]
        if tok.startswith("--config="):
            return tok.split("=", 1)[1]
    return None


def _apply_config(parser: argparse.ArgumentParser, argv: list[str]) -> argparse.Namespace:
    path = _config_path(argv)
    command = next((t for t in argv if not t.startswith("-")), None)
    subs = parser._subparsers._group_actions[0].choices
    if path is None or command not in subs:
        return parser.parse_args(argv)
    try:
        cfg = json.loads(Path(path).read_text())
    except (OSError, json.JSONDecodeError) as exc:
        raise UsageError(f"--config: cannot read {path}: {exc}") from None
    if not isinstance(cfg, dict):
        raise UsageError("--config: top level must be a JSON object")
    sub = subs[command]
    known = {a.dest for a in sub._actions}
    defaults = {}
    for key, val in cfg.items():
        dest = key.lstrip("-").replace("-", "_")
        if dest not in known or dest in ("config", "help"):
            raise UsageError(f"--config: unknown option {key!r}")
        defaults[dest] = val
    sub.set_defaults(**defaults)
    # flags beat file values; file values also satisfy required options
    for a in sub._actions:
        if a.dest in defaults:
            a.required = False
    return parser.parse_args(argv)


def _finalize(args) -> None:
    for name in ("kappa", "phi", "theta", "gain_ratio", "t1", "t_ray", "target", "spacing", "corr_a"):
        v = getattr(args, name, None)
        if v is not None:
            setattr(args, name, _finite(str(v), name.replace("_", "-")))
    if args.degrees:
        for name in ("phi", "theta"):
            v = getattr(args, name, None)
            if v is not None:
                setattr(args, name, math.radians(v))
    # defaults are radians already, so fill them in after any conversion
    if hasattr(args, "theta") and args.theta is None:
        args.theta = math.pi / 2


def main(argv: Sequence[str] | None = None) -> int:
    parser = build_parser()
    argv = list(sys.argv[1:] if argv is None else argv)
    try:
        args = _apply_config(parser, argv)
        _finalize(args)
        return args.func(args)
    except UsageError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INVALID
    except CapExceededError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_CAP
    except (BracketError, ConvergenceError, FactorizationError) as exc:
        print(f"error: solver failed: {exc}", file=sys.stderr)
        return EXIT_SOLVER
    except ValueError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INVALID


if __name__ == "__main__":
    sys.exit(main())

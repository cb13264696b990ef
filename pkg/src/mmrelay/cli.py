"""Command-line driver: analytic and simulated sweeps written as CSV.

Every command writes RFC-4180 CSV (to ``--out`` or stdout).  With
``--out`` a JSON run manifest is written next to the CSV as
``<out>.manifest.json``.

Exit codes: 0 success, 2 configuration error, 3 numerical failure,
4 I/O error.
"""

from __future__ import annotations

import argparse
import csv
import io
import json
import math
import sys
from pathlib import Path
from typing import Callable, List, Optional

import numpy as np

from . import __version__
from .analytic import (
    coverage_d2d,
    coverage_mmwave_cellular,
    coverage_noise_limited,
    coverage_overall,
)
from .config import ScenarioConfig, load_config, preset
from .errors import InputFormatError, InvalidParameter, NumericalFailure, UndefinedConditional
from .geometry import LosModel, ObstacleLaw, los_probability
from .simulator import CURVES as SIM_CURVES
from .simulator import LAYOUTS, Layout, empirical_los_curve, estimate_coverage
from .spectral import CoverageTable, spectral_sweep

EXIT_OK, EXIT_CONFIG, EXIT_NUMERIC, EXIT_IO = 0, 2, 3, 4

ANALYTIC_CURVES = ("cell", "d2d-mm", "d2d-uw", "noise-limited", "overall", "se", "uplink-resource")
AXES = ("tau", "isd", "xi")
DEFAULT_GRIDS = {"tau": "0:40:0.5", "isd": "200:2000:100", "xi": "0.1:0.3:0.1"}

ANALYTIC_HEADER = ["x", "value", "method", "config_digest"]
SIM_HEADER = ANALYTIC_HEADER + ["ci_halfwidth", "n_drops", "seed"]


def parse_grid(spec: str) -> np.ndarray:
    """``start:stop:step`` (stop inclusive) or a comma-separated list."""
    try:
        if ":" in spec:
            start, stop, step = (float(v) for v in spec.split(":"))
            if not step > 0 or stop < start:
                raise ValueError
            n = int(math.floor((stop - start) / step + 1e-9)) + 1
            return start + step * np.arange(n)
        return np.array([float(v) for v in spec.split(",")])
    except ValueError:
        raise InvalidParameter(f"--grid: cannot parse {spec!r}; use start:stop:step or a,b,c") from None


def _db2lin(x):
    return 10.0 ** (np.asarray(x, dtype=float) / 10.0)


def _fmt(v) -> str:
    if isinstance(v, (float, np.floating)):
        return repr(float(v)) if math.isfinite(v) else ("nan" if math.isnan(v) else str(float(v)))
    return str(v)


def _band(name: str) -> str:
    return "mmwave" if name in ("mm", "mmwave") else "microwave"


# ---------------------------------------------------------------------------
# configuration


def resolve_config(args) -> ScenarioConfig:
    if args.config and args.preset:
        raise InvalidParameter("--config and --preset are mutually exclusive")
    cfg = load_config(args.config) if args.config else preset(args.preset or "uma")
    if getattr(args, "xi", None) is not None:
        cfg = cfg.with_coverage_ratio(args.xi)
    return cfg


def _axis_configs(cfg: ScenarioConfig, axis: str, xs) -> List[ScenarioConfig]:
    if axis == "isd":
        return [cfg.with_isd(float(x)) for x in xs]
    if axis == "xi":
        return [cfg.with_coverage_ratio(float(x)) for x in xs]
    return [cfg] * len(xs)


def _taus(axis: str, xs, tau_db: float) -> np.ndarray:
    return _db2lin(xs) if axis == "tau" else np.full(len(xs), 10.0 ** (tau_db / 10.0))


# ---------------------------------------------------------------------------
# analytic


def analytic_point(cfg: ScenarioConfig, curve: str, tau: float, band: str) -> float:
    inp = cfg.coverage_inputs()
    if curve == "cell":
        return coverage_mmwave_cellular(inp, tau)
    if curve == "noise-limited":
        return coverage_noise_limited(inp, tau)
    if curve == "d2d-mm":
        return coverage_d2d(inp, tau, "mmwave")
    if curve == "d2d-uw":
        return coverage_d2d(inp, tau, "microwave")
    if curve == "overall":
        return coverage_overall(coverage_mmwave_cellular(inp, tau), coverage_d2d(inp, tau, band))
    raise InvalidParameter(f"unknown analytic curve {curve!r}")


def run_analytic(cfg: ScenarioConfig, curve: str, xs, axis: str = "tau",
                 band: str = "microwave", tau_db: float = 10.0) -> List[list]:
    """Rows ``[x, value, method, digest]`` for one analytic curve."""
    if curve not in ANALYTIC_CURVES:
        raise InvalidParameter(f"--curve: unknown analytic curve {curve!r}")
    xs = np.asarray(xs, dtype=float)
    if curve in ("se", "uplink-resource"):
        if axis != "tau":
            raise InvalidParameter("--axis: SE curves are swept over tau only")
        inp = cfg.coverage_inputs()
        cell = CoverageTable(lambda t: coverage_mmwave_cellular(inp, t), cfg.tau_max)
        d2d = CoverageTable(lambda t: coverage_d2d(inp, t, band), cfg.tau_max)
        res = spectral_sweep(cell, d2d, _db2lin(xs), cfg.mmwave_bandwidth_hz,
                             cfg.d2d_bandwidth(band), cfg.tau_max)
        digest = cfg.digest()
        rows = []
        for i, x in enumerate(xs):
            if curve == "se":
                rows.append([x, res.gamma, "se_cellular", digest])
                rows.append([x, res.gamma_relay[i], "se_overall", digest])
            rows.append([x, res.uplink_fraction[i], "uplink_fraction", digest])
        return rows
    method = f"{curve}-{'mm' if band == 'mmwave' else 'uw'}" if curve == "overall" else curve
    rows = []
    for c, x, tau in zip(_axis_configs(cfg, axis, xs), xs, _taus(axis, xs, tau_db)):
        rows.append([x, analytic_point(c, curve, float(tau), band), method, c.digest()])
    return rows


# ---------------------------------------------------------------------------
# simulation


def run_sim(cfg: ScenarioConfig, curve: str, xs, n_drops: int, seed: int, axis: str = "tau",
            band: str = "microwave", tau_db: float = 10.0, layout: Optional[Layout] = None,
            blockage: str = "bernoulli", workers: int = 1) -> List[list]:
    """Rows ``[x, value, method, digest, ci_halfwidth, n_drops, seed]``."""
    if curve not in SIM_CURVES:
        raise InvalidParameter(f"--curve: unknown simulated curve {curve!r}")
    layout = layout or Layout()
    xs = np.asarray(xs, dtype=float)
    method = f"{curve}-{'mm' if band == 'mmwave' else 'uw'}" if curve == "overall" else curve
    if axis == "tau":
        res = estimate_coverage(cfg, layout, _db2lin(xs), n_drops, seed, curve, band, blockage, workers)
        return [[x, e, method, res.config_digest, h, n_drops, seed]
                for x, e, h in zip(xs, res.estimate, res.ci_halfwidth)]
    rows = []
    tau = 10.0 ** (tau_db / 10.0)
    for c, x in zip(_axis_configs(cfg, axis, xs), xs):
        lay = Layout("hex-grid", isd_m=float(x)) if axis == "isd" and layout.tag == "hex-grid" else layout
        res = estimate_coverage(c, lay, [tau], n_drops, seed, curve, band, blockage, workers)
        rows.append([x, res.estimate[0], method, res.config_digest, res.ci_halfwidth[0], n_drops, seed])
    return rows


# ---------------------------------------------------------------------------
# comparison


COMPARE_HEADER = ["xi", "x", "analytic", "sim", "ci_halfwidth", "gap", "bound_violation", "config_digest"]


def compare_rows(analytic_rows, sim_rows, xi=None) -> List[list]:
    """Join analytic and simulated rows on ``x``.

    A bound violation is a simulated estimate above the analytic value by
    more than three CI half-widths.
    """
    sim = {round(float(r[0]), 9): r for r in sim_rows}
    out = []
    for r in analytic_rows:
        key = round(float(r[0]), 9)
        if key not in sim:
            continue
        s = sim[key]
        a, e, h = float(r[1]), float(s[1]), float(s[4])
        out.append([xi if xi is not None else "", r[0], a, e, h, a - e, int(e - 3 * h > a), r[3]])
    return out


def _read_csv(path) -> List[list]:
    with open(path, newline="") as fh:
        reader = csv.reader(fh)
        header = next(reader, None)
        if header is None or header[:2] != ["x", "value"]:
            raise InputFormatError(f"{path}: expected a header starting with x,value", line=1)
        rows = []
        for lineno, row in enumerate(reader, start=2):
            try:
                rows.append([float(row[0]), float(row[1]), row[2], row[3]]
                            + ([float(row[4])] if len(row) > 4 else [0.0]))
            except (ValueError, IndexError):
                raise InputFormatError(f"{path}: malformed row", line=lineno) from None
    return rows


# ---------------------------------------------------------------------------
# output


def _write(rows, header, out: Optional[str]) -> str:
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\r\n")
    writer.writerow(header)
    for row in rows:
        writer.writerow([_fmt(v) for v in row])
    text = buf.getvalue()
    if out:
        Path(out).write_text(text, encoding="utf-8", newline="")
    else:
        sys.stdout.write(text)
    return text


def write_manifest(out: str, command: str, cfg: ScenarioConfig, args, extra=None):
    manifest = {
        "command": command,
        "argv": sys.argv[1:],
        "config_digest": cfg.digest(),
        "seed": getattr(args, "seed", None),
        "grid": getattr(args, "grid", None),
        "axis": getattr(args, "axis", None),
        "outputs": [str(out)],
        "tool_version": __version__,
        "warnings": list(cfg.warnings),
    }
    manifest.update(extra or {})
    path = Path(str(out) + ".manifest.json")
    path.write_text(json.dumps(manifest, indent=2, sort_keys=True) + "\n")
    return path


# ---------------------------------------------------------------------------
# commands


def _grid(args) -> np.ndarray:
    return parse_grid(args.grid or DEFAULT_GRIDS[args.axis])


def cmd_analytic(args) -> int:
    cfg = resolve_config(args)
    rows = run_analytic(cfg, args.curve, _grid(args), args.axis, _band(args.band), args.tau_db)
    _write(rows, ANALYTIC_HEADER, args.out)
    if args.out:
        write_manifest(args.out, "analytic", cfg, args)
    return EXIT_OK


def _layout(args) -> Layout:
    return Layout(args.layout, isd_m=args.isd, footprints=args.footprints)


def cmd_sim(args) -> int:
    cfg = resolve_config(args)
    rows = run_sim(cfg, args.curve, _grid(args), args.drops, args.seed, args.axis, _band(args.band),
                   args.tau_db, _layout(args), args.blockage, args.workers)
    _write(rows, SIM_HEADER, args.out)
    if args.out:
        write_manifest(args.out, "sim", cfg, args, {"n_drops": args.drops, "layout": args.layout})
    return EXIT_OK


def cmd_compare(args) -> int:
    cfg = resolve_config(args)
    rows = []
    if args.analytic_csv or args.sim_csv:
        if not (args.analytic_csv and args.sim_csv):
            raise InvalidParameter("--analytic-csv and --sim-csv must be given together")
        rows = compare_rows(_read_csv(args.analytic_csv), _read_csv(args.sim_csv))
    else:
        xis = [None] if not args.xi_list else [float(v) for v in args.xi_list.split(",")]
        band = _band(args.band)
        xs = _grid(args)
        for xi in xis:
            c = cfg if xi is None else cfg.with_coverage_ratio(xi)
            a = run_analytic(c, args.curve, xs, args.axis, band, args.tau_db)
            s = run_sim(c, args.curve, xs, args.drops, args.seed, args.axis, band, args.tau_db,
                        _layout(args), args.blockage, args.workers)
            rows.extend(compare_rows(a, s, xi))
    _write(rows, COMPARE_HEADER, args.out)
    gaps = [abs(r[5]) for r in rows]
    n_viol = sum(r[6] for r in rows)
    print(f"max |gap| = {max(gaps) if gaps else float('nan'):.6g}; bound violations = {n_viol}",
          file=sys.stderr)
    if args.xi_list:
        for xi in sorted({r[0] for r in rows}):
            g = [r[5] for r in rows if r[0] == xi]
            print(f"xi={xi}: mean gap {np.mean(g):.6g}, max gap {np.max(g):.6g}", file=sys.stderr)
    if args.out:
        write_manifest(args.out, "compare", cfg, args,
                       {"max_abs_gap": max(gaps) if gaps else None, "bound_violations": n_viol})
    return EXIT_OK


LOS_HEADER = ["x", "value", "method", "config_digest", "standard_error", "n_pairs", "seed"]


def cmd_validate_los(args) -> int:
    cfg = resolve_config(args)
    law = cfg.obstacle_law
    ds = parse_grid(args.grid or "0:500:25")
    h = cfg.ue_height_m
    digest = cfg.digest()
    rows = []
    if args.footprints:
        curve = empirical_los_curve(args.footprints, ds, args.pairs, args.seed, h, h)
        method = "footprints"
    else:
        if args.shape == "rectangle":
            width = math.sqrt(law.mean_area / args.aspect)
            law = ObstacleLaw.from_coverage_ratio(
                law.coverage_ratio, shape="rectangle", length_min=args.aspect * width,
                length_max=args.aspect * width, width_min=width, width_max=width,
                height_min=law.height_min, height_max=law.height_max)
        curve = empirical_los_curve(law, ds, args.pairs, args.seed, h, h)
        method = f"empirical-{args.shape}"
    for d, p, se in zip(ds, curve.los_fraction, curve.standard_error):
        rows.append([d, p, method, digest, se, args.pairs, args.seed])
    model = LosModel.from_obstacles(cfg.obstacle_law, h, h)
    for d in ds:
        rows.append([d, float(los_probability(d, model)), "analytic", digest, 0.0, args.pairs, args.seed])
    _write(rows, LOS_HEADER, args.out)
    if args.out:
        write_manifest(args.out, "validate-los", cfg, args, {"n_pairs": args.pairs})
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="mmrelay", description=__doc__.splitlines()[0])
    p.add_argument("--version", action="version", version=__version__)
    sub = p.add_subparsers(dest="command", required=True)

    def common(sp, grid_help):
        sp.add_argument("--config", help="scenario TOML file")
        sp.add_argument("--preset", choices=("uma", "ind"), help="built-in scenario (default uma)")
        sp.add_argument("--grid", help=grid_help)
        sp.add_argument("--out", help="output CSV path (default stdout)")
        sp.add_argument("--xi", type=float, help="override the obstacle coverage ratio")

    def sweep(sp, curves, default_curve):
        sp.add_argument("--curve", choices=curves, default=default_curve)
        sp.add_argument("--axis", choices=AXES, default="tau",
                        help="sweep thresholds (dB), ISD (m) or obstacle coverage ratio")
        sp.add_argument("--tau-db", type=float, default=10.0, help="threshold for isd/xi sweeps")
        sp.add_argument("--band", choices=("mmwave", "microwave", "mm", "uw"), default="microwave",
                        help="D2D band for overall/se curves")

    def simopts(sp):
        sp.add_argument("--drops", type=int, default=10000)
        sp.add_argument("--seed", type=int, default=0)
        sp.add_argument("--layout", choices=LAYOUTS, default="ppp")
        sp.add_argument("--isd", type=float, help="ISD for the hex-grid layout (m)")
        sp.add_argument("--footprints", help="footprint polygon file")
        sp.add_argument("--blockage", choices=("bernoulli", "explicit"), default="bernoulli")
        sp.add_argument("--workers", type=int, default=1)

    grid_help = "start:stop:step or a,b,c (dB for tau, m for isd)"
    a = sub.add_parser("analytic", help="closed-form curves")
    common(a, grid_help)
    sweep(a, ANALYTIC_CURVES, "cell")
    a.set_defaults(func=cmd_analytic)

    s = sub.add_parser("sim", help="Monte-Carlo curves with 99%% confidence intervals")
    common(s, grid_help)
    sweep(s, SIM_CURVES, "cell")
    simopts(s)
    s.set_defaults(func=cmd_sim)

    c = sub.add_parser("compare", help="analytic vs Monte-Carlo gaps and bound violations")
    common(c, grid_help)
    sweep(c, [k for k in SIM_CURVES if k in ANALYTIC_CURVES], "cell")
    simopts(c)
    c.add_argument("--xi-list", help="comma-separated coverage ratios to batch over")
    c.add_argument("--analytic-csv", help="join an existing analytic CSV ...")
    c.add_argument("--sim-csv", help="... with an existing sim CSV")
    c.set_defaults(func=cmd_compare)

    v = sub.add_parser("validate-los", help="empirical LOS probability vs the analytic law")
    common(v, "distances in m, start:stop:step or a,b,c (default 0:500:25)")
    v.add_argument("--pairs", type=int, default=10000)
    v.add_argument("--seed", type=int, default=0)
    v.add_argument("--shape", choices=("cylinder", "rectangle"), default="cylinder")
    v.add_argument("--aspect", type=float, default=1.0, help="rectangle length/width ratio")
    v.add_argument("--footprints", help="footprint polygon file instead of a random law")
    v.set_defaults(func=cmd_validate_los)
    return p


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except (InputFormatError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_IO
    except (NumericalFailure, UndefinedConditional) as exc:
        print(f"numerical failure: {exc}", file=sys.stderr)
        return EXIT_NUMERIC
    except InvalidParameter as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG


if __name__ == "__main__":
    sys.exit(main())

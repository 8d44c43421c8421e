"""Command-line interface: ``addhaz fit | band | predict | simulate``."""

from __future__ import annotations

import argparse
import csv
import json
import math
import os
import sys
import warnings
from pathlib import Path

import numpy as np
from threadpoolctl import threadpool_limits

from .dataset import CsvSchema, load_csv
from .errors import AddHazError, DimensionMismatch, InputError, MissingColumn, NumericalError
from .estimators import fit_global
from .grid import EstimationGrid, build_grid, grid_from_points
from .inference import build_band, perturb_alpha_se
from .kernel import Bandwidth, silverman_bandwidth
from .metrics import c_index, harrell_c_index
from .simgen import SimDesign, run_study

EXIT_OK, EXIT_NUMERICAL, EXIT_USAGE = 0, 1, 2


# -- serialization -------------------------------------------------------------

def _fmt_float(v):
    if math.isnan(v):
        return "NaN"
    if math.isinf(v):
        return "Infinity" if v > 0 else "-Infinity"
    return format(v, ".17g")


def to_json(obj, indent=2, _level=0):
    """JSON text with every float written to 17 significant digits."""
    pad = " " * (indent * (_level + 1))
    end = " " * (indent * _level)
    if isinstance(obj, np.ndarray):
        obj = obj.tolist()
    if isinstance(obj, (bool, np.bool_)):
        return "true" if obj else "false"
    if obj is None:
        return "null"
    if isinstance(obj, (int, np.integer)):
        return str(int(obj))
    if isinstance(obj, (float, np.floating)):
        return _fmt_float(float(obj))
    if isinstance(obj, str):
        return json.dumps(obj)
    if isinstance(obj, dict):
        if not obj:
            return "{}"
        items = [f"{pad}{json.dumps(str(k))}: {to_json(v, indent, _level + 1)}" for k, v in obj.items()]
        return "{\n" + ",\n".join(items) + "\n" + end + "}"
    if isinstance(obj, (list, tuple)):
        if not obj:
            return "[]"
        if all(not isinstance(v, (dict, list, tuple, np.ndarray)) for v in obj):
            return "[" + ", ".join(to_json(v, indent, _level + 1) for v in obj) + "]"
        items = [pad + to_json(v, indent, _level + 1) for v in obj]
        return "[\n" + ",\n".join(items) + "\n" + end + "]"
    raise TypeError(f"cannot serialize {type(obj).__name__}")


def _write_text(path, text):
    if path in (None, "-"):
        sys.stdout.write(text + "\n")
    else:
        Path(path).write_text(text + "\n", encoding="utf-8")


def _write_csv(path, header, rows):
    with open(path, "w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(header)
        for row in rows:
            writer.writerow([_fmt_float(float(v)) if isinstance(v, (float, np.floating)) else v
                             for v in row])


# -- argument helpers ----------------------------------------------------------

def _cols(text):
    return [c.strip() for c in text.split(",") if c.strip()] if text else []


def _floats(text):
    try:
        return [float(v) for v in text.split(",")]
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected comma-separated numbers, got {text!r}") from None


def _ints(text):
    try:
        return [int(v) for v in text.split(",")]
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected comma-separated integers, got {text!r}") from None


def _default_threads():
    env = os.environ.get("ADDHAZ_THREADS")
    if env:
        try:
            return max(1, int(env))
        except ValueError:
            pass
    return os.cpu_count() or 1


def _add_data_args(p, required=True):
    p.add_argument("data", help="input CSV with a header row")
    p.add_argument("--time-col", default="time")
    p.add_argument("--status-col", default="status")
    p.add_argument("--w-cols", required=required, help="comma-separated effect-modifier columns")
    p.add_argument("--x-cols", required=required, help="comma-separated varying-effect columns")
    p.add_argument("--z-cols", default="", help="comma-separated constant-effect columns")
    p.add_argument("--tau", type=float, default=None, help="end of follow-up")


def _add_fit_args(p):
    p.add_argument("--grid", choices=("quantile", "even"), default="quantile")
    p.add_argument("--grid-size", type=_ints, default=[5],
                   help="points per axis (one value or one per W column)")
    p.add_argument("--grid-file", help="CSV of grid points, one column per W column")
    p.add_argument("--bandwidth", default="silverman",
                   help="'silverman' or comma-separated bandwidths, one per W column")
    p.add_argument("--ridge", type=float, default=0.0)


def _schema(args):
    return CsvSchema(args.time_col, args.status_col, _cols(args.w_cols), _cols(args.x_cols),
                     _cols(args.z_cols))


def _bandwidth(args, ds):
    if args.bandwidth == "silverman":
        return silverman_bandwidth(ds)
    bw = Bandwidth(tuple(_floats(args.bandwidth)))
    if bw.q != ds.q:
        raise DimensionMismatch(f"{bw.q} bandwidths given for {ds.q} W columns")
    return bw


def _grid(args, ds):
    if args.grid_file:
        with open(args.grid_file, newline="", encoding="utf-8") as fh:
            rows = list(csv.reader(fh))
        try:
            pts = np.array([[float(v) for v in r] for r in rows[1:] if r], dtype=float)
        except ValueError:
            raise InputError(f"{args.grid_file}: non-numeric grid coordinate") from None
        grid = grid_from_points(pts.reshape(len(pts), -1))
        if grid.q != ds.q:
            raise DimensionMismatch(f"grid file has {grid.q} columns, data has q={ds.q}")
        return grid
    sizes = args.grid_size
    if len(sizes) not in (1, ds.q):
        raise InputError(f"--grid-size needs 1 or {ds.q} values")
    return build_grid(ds, args.grid, sizes if len(sizes) > 1 else sizes[0])


def _fit(args):
    ds = load_csv(args.data, _schema(args), tau=args.tau)
    bw = _bandwidth(args, ds)
    grid = _grid(args, ds)
    return ds, fit_global(ds, grid=grid, bandwidth=bw, ridge=args.ridge)


def _fit_payload(ds, fit):
    names = ds.names or {}
    return {
        "n": ds.n, "events": ds.n_events,
        "columns": {"w": list(names.get("w", [])), "x": list(names.get("x", [])),
                    "z": list(names.get("z", []))},
        "grid_axes": [a.tolist() for a in fit.grid.axes],
        "grid_points": fit.grid.points.tolist(),
        "beta_grid": fit.beta_grid.tolist(),
        "alpha_joint": fit.alpha_joint.tolist(),
        "alpha_refit": fit.alpha_refit.tolist(),
        "bandwidth": list(fit.bandwidth.h),
        "condition": fit.system_condition,
        "cumhaz": fit.cumhaz.to_dict(),
    }


# -- commands ------------------------------------------------------------------

def cmd_fit(args):
    if args.se and args.seed is None:
        raise InputError("--se uses random multipliers and requires --seed")
    ds, fit = _fit(args)
    payload = _fit_payload(ds, fit)
    se = None
    if args.se and ds.r:
        se = perturb_alpha_se(ds, fit.grid, fit.bandwidth, args.replicates, args.seed,
                              threads=args.threads)
        payload["alpha_se"] = se.tolist()
        payload["se_replicates"] = args.replicates
        payload["seed"] = args.seed
    _write_text(args.output, to_json(payload))
    names = ds.names or {}
    if args.beta_csv:
        xn = names.get("x") or [f"x{j + 1}" for j in range(ds.p)]
        wn = names.get("w") or [f"w{j + 1}" for j in range(ds.q)]
        _write_csv(args.beta_csv, [*wn, *(f"beta_{c}" for c in xn)],
                   [[*pt, *b] for pt, b in zip(fit.grid.points, fit.beta_grid)])
    if args.cumhaz_csv:
        ch = fit.cumhaz.to_dict()
        _write_csv(args.cumhaz_csv, ["time", "cumhaz"], zip(ch["times"], ch["values"]))
    out = sys.stderr if args.output in (None, "-") else sys.stdout
    zn = names.get("z") or [f"z{j + 1}" for j in range(ds.r)]
    print(f"n={ds.n} events={ds.n_events} grid points={fit.grid.m} "
          f"bandwidth={','.join(f'{h:.4g}' for h in fit.bandwidth.h)}", file=out)
    for k, name in enumerate(zn):
        line = f"  {name:<16} {fit.alpha_refit[k]: .6g}"
        if se is not None:
            line += f"  ({se[k]:.4g})"
        print(line, file=out)
    return EXIT_OK


def cmd_band(args):
    ds, fit = _fit(args)
    interval = tuple(args.interval) if args.interval else None
    if interval is not None and len(interval) != 2:
        raise InputError("--interval needs two values a,b")
    band = build_band(ds, fit, interval=interval, alpha_level=args.alpha,
                      replicates=args.replicates, seed=args.seed, n_eval=args.n_eval,
                      threads=args.threads)
    _write_text(args.output, to_json(band.to_dict()))
    if args.band_csv:
        xn = (ds.names or {}).get("x") or [f"x{j + 1}" for j in range(ds.p)]
        header = ["w"]
        for c in xn:
            header += [f"beta_{c}", f"se_{c}", f"lower_pointwise_{c}", f"upper_pointwise_{c}",
                       f"lower_band_{c}", f"upper_band_{c}"]
        rows = []
        for e, w in enumerate(band.eval_points[:, 0]):
            row = [w]
            for j in range(ds.p):
                row += [band.beta_hat[e, j], band.se[e, j], band.lower_pointwise[e, j],
                        band.upper_pointwise[e, j], band.lower_band[e, j], band.upper_band[e, j]]
            rows.append(row)
        _write_csv(args.band_csv, header, rows)
    return EXIT_OK


def cmd_predict(args):
    payload = json.loads(Path(args.fit).read_text(encoding="utf-8"))
    grid = EstimationGrid(tuple(payload["grid_axes"]))
    beta_grid = np.asarray(payload["beta_grid"], dtype=float)
    alpha = np.asarray(payload["alpha_refit"], dtype=float)
    cols = payload.get("columns", {})
    w_cols = _cols(args.w_cols) or cols.get("w", [])
    x_cols = _cols(args.x_cols) or cols.get("x", [])
    z_cols = _cols(args.z_cols) if args.z_cols is not None else cols.get("z", [])
    if len(w_cols) != grid.q or len(x_cols) != beta_grid.shape[1] or len(z_cols) != alpha.size:
        raise DimensionMismatch("new data columns do not match the fitted model dimensions")
    with open(args.data, newline="", encoding="utf-8") as fh:
        reader = csv.DictReader(fh)
        header = reader.fieldnames or []
        for c in (*w_cols, *x_cols, *z_cols):
            if c not in header:
                raise MissingColumn(c)
        rows = list(reader)

    def block(names):
        try:
            a = np.array([[float(r[c]) for c in names] for r in rows], dtype=float)
        except ValueError:
            raise InputError("non-numeric value in prediction data") from None
        a = a.reshape(len(rows), len(names))
        if not np.all(np.isfinite(a)):
            raise InputError("non-finite value in prediction data")
        return a

    w, x, z = block(w_cols), block(x_cols), block(z_cols)
    scores = np.einsum("ip,ip->i", grid.interpolation_weights(w) @ beta_grid, x) + z @ alpha
    _write_csv(args.output, ["row", "score"], [[i + 1, float(s)] for i, s in enumerate(scores)])
    if args.time_col in header:
        t = block([args.time_col])[:, 0]
        if args.status_col in header:
            c = harrell_c_index(scores, t, block([args.status_col])[:, 0])
        else:
            c = c_index(scores, t)
        print(f"c_index {_fmt_float(c)}")
    return EXIT_OK


def cmd_simulate(args):
    design = SimDesign(q=1 if args.design == "q1" else 2)
    methods = tuple(_cols(args.methods))
    report = run_study(design, n_list=tuple(args.n), replicates=args.replicates, seed=args.seed,
                       threads=args.threads, methods=methods, grid_sizes=tuple(args.grid_size),
                       band_replicates=args.band_replicates,
                       alpha_se_replicates=args.alpha_se_replicates, test_size=args.test_size)
    header = ["n", "method", "statistic", "parameter", "w", "value"]
    if args.output_csv:
        _write_csv(args.output_csv, header, [[r[h] for h in header] for r in report.rows])
    _write_text(args.output_json, to_json(report.to_dict()))
    return EXIT_OK


# -- parser --------------------------------------------------------------------

def build_parser():
    parser = argparse.ArgumentParser(prog="addhaz",
                                     description="Partially linear varying-coefficient additive hazards")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("fit", help="fit the global kernel estimator")
    _add_data_args(p)
    _add_fit_args(p)
    p.add_argument("--se", action="store_true", help="perturbation SEs for constant effects")
    p.add_argument("--replicates", type=int, default=1000)
    p.add_argument("--seed", type=int)
    p.add_argument("--threads", type=int, default=_default_threads())
    p.add_argument("--output", "-o", help="fit JSON (default: stdout)")
    p.add_argument("--beta-csv", help="coefficient estimates at grid points")
    p.add_argument("--cumhaz-csv", help="cumulative baseline hazard at event times")
    p.set_defaults(func=cmd_fit)

    p = sub.add_parser("band", help="simultaneous confidence bands (q = 1)")
    _add_data_args(p)
    _add_fit_args(p)
    p.add_argument("--interval", type=_floats, help="a,b (default: 5th and 95th W percentiles)")
    p.add_argument("--alpha", type=float, default=0.05)
    p.add_argument("--replicates", type=int, default=1000)
    p.add_argument("--n-eval", type=int, default=101)
    p.add_argument("--seed", type=int, required=True)
    p.add_argument("--threads", type=int, default=_default_threads())
    p.add_argument("--output", "-o", help="band JSON (default: stdout)")
    p.add_argument("--band-csv", help="plot-ready band table")
    p.set_defaults(func=cmd_band)

    p = sub.add_parser("predict", help="linear predictor for new rows")
    p.add_argument("fit", help="fit JSON written by 'addhaz fit'")
    p.add_argument("data", help="CSV of new rows")
    p.add_argument("--w-cols", default="")
    p.add_argument("--x-cols", default="")
    p.add_argument("--z-cols", default=None)
    p.add_argument("--time-col", default="time")
    p.add_argument("--status-col", default="status")
    p.add_argument("--output", "-o", required=True, help="scores CSV")
    p.set_defaults(func=cmd_predict)

    p = sub.add_parser("simulate", help="Monte Carlo comparison study")
    p.add_argument("--design", choices=("q1", "q2"), default="q1")
    p.add_argument("--n", type=_ints, default=[500])
    p.add_argument("--replicates", type=int, default=100)
    p.add_argument("--methods", default="constant,local,global")
    p.add_argument("--grid-size", type=_ints, default=[5])
    p.add_argument("--band-replicates", type=int, default=500)
    p.add_argument("--alpha-se-replicates", type=int, default=500)
    p.add_argument("--test-size", type=int, default=10_000)
    p.add_argument("--seed", type=int, required=True)
    p.add_argument("--threads", type=int, default=_default_threads())
    p.add_argument("--output-csv", help="long-format results table")
    p.add_argument("--output-json", help="JSON summary (default: stdout)")
    p.set_defaults(func=cmd_simulate)
    return parser


def main(argv=None):
    args = build_parser().parse_args(argv)
    if getattr(args, "threads", 1) < 1:
        print("error: --threads must be at least 1", file=sys.stderr)
        return EXIT_USAGE
    warnings.simplefilter("default")
    try:
        with threadpool_limits(limits=1):
            return args.func(args)
    except InputError as exc:
        print(f"error: {type(exc).__name__}: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except (NumericalError, AddHazError) as exc:
        print(f"error: {type(exc).__name__}: {exc}", file=sys.stderr)
        return EXIT_NUMERICAL
    except OSError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE


if __name__ == "__main__":
    sys.exit(main())

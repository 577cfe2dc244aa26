"""Command-line front end.

    sipls metrics   --config F [--sweep AXIS=v1,v2,...]
    sipls validate  --config F [--trials N] [--seed S] [--mode M]
    sipls window    --config F
    sipls optimize  --config F [--mode per_slot|budget] [--baseline traditional] [--iters N]

Exit codes: 0 success, 1 usage or configuration error, 2 validation FAIL,
3 runtime error.
"""
from __future__ import annotations

import argparse
import contextlib
import csv
import io
import json
import math
import sys

import numpy as np

from . import analytic, montecarlo, optimizer
from .geometry import initial_tracks
from .scenario import ConfigError, get_field, load_config, replace_field
from .window import compute_window

__all__ = ["main", "cmd_metrics", "cmd_validate", "cmd_window", "cmd_optimize",
           "SweepSpec", "parse_sweep", "METRIC_COLUMNS", "VALIDATE_COLUMNS", "SLOT_COLUMNS"]

EXIT_OK, EXIT_USAGE, EXIT_FAIL, EXIT_RUNTIME = 0, 1, 2, 3

METRIC_COLUMNS = ["index", "axis", "value", "p_com_w", "dist_ab_m",
                  "cop", "sop_upper", "sop_lower", "srp", "inputs_hash"]
VALIDATE_COLUMNS = ["metric", "mode", "analytic", "analytic_lower", "analytic_upper",
                    "mc_mean", "mc_stderr", "trials", "seed", "z", "verdict"]
SLOT_COLUMNS = ["slot", "time_s", "power_w", "x_alice", "x_bob", "x_eve", "x_carol",
                "rate_bob", "rate_eve", "secrecy_rate"]
Z_LIMIT = 3.0


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        sys.stderr.write(f"{self.prog}: error: {message}\n")
        raise SystemExit(EXIT_USAGE)


class SweepSpec:
    def __init__(self, axis, values, fixed, outputs=("cop", "sop_upper", "sop_lower", "srp")):
        if not values:
            raise ConfigError(f"sweep over {axis} has no values")
        get_field(fixed, axis)
        self.axis, self.values, self.fixed, self.outputs = axis, list(values), fixed, list(outputs)


def parse_sweep(text, cfg):
    axis, sep, vals = text.partition("=")
    if not sep:
        raise ConfigError(f"sweep must look like axis=v1,v2,...: {text!r}")
    try:
        values = [float(v) for v in vals.split(",") if v.strip()]
    except ValueError:
        raise ConfigError(f"bad sweep value list {vals!r}") from None
    return SweepSpec(axis.strip(), values, cfg)


# -- commands ------------------------------------------------------------------

def cmd_metrics(cfg, sweep=None):
    points = [(None, None, cfg)]
    if sweep is not None:
        points = [(sweep.axis, v, replace_field(cfg, sweep.axis, v)) for v in sweep.values]
    rows = []
    for i, (axis, val, c) in enumerate(points):
        p, d = c.comm.tx_power, c.road.min_follow
        rep = analytic.metric_report(c, p, d)
        rows.append({"index": i, "axis": axis or "", "value": "" if val is None else val,
                     "p_com_w": p, "dist_ab_m": d, "cop": rep.cop, "sop_upper": rep.sop_upper,
                     "sop_lower": rep.sop_lower, "srp": rep.srp, "inputs_hash": rep.inputs_hash})
    return rows


def _z(mc, value, n):
    sigma = max(mc.stderr, montecarlo.binomial_stderr(value, n))
    diff = mc.mean - value
    if diff == 0.0:
        return 0.0
    return diff / sigma if sigma > 0 else math.copysign(math.inf, diff)


def cmd_validate(cfg, trials=10 ** 6, seed=montecarlo.DEFAULT_SEED, mode="derivation_matched",
                 workers=1):
    if trials < 10 ** 4:
        raise ConfigError("validate needs at least 10^4 trials")
    p, d = cfg.comm.tx_power, cfg.road.min_follow
    rows = []

    def row(metric, m, an, lo, hi, mc, z, verdict):
        rows.append({"metric": metric, "mode": m, "analytic": an, "analytic_lower": lo,
                     "analytic_upper": hi, "mc_mean": mc.mean, "mc_stderr": mc.stderr,
                     "trials": mc.trials, "seed": mc.seed, "z": z, "verdict": verdict})

    cop = analytic.cop_closed_form(cfg, p, d)
    mc = montecarlo.estimate_cop(cfg, p, d, trials, seed, mode=mode, workers=workers)
    z = _z(mc, cop, trials)
    if mode == "derivation_matched":
        row("cop", mode, cop, cop, cop, mc, z, "PASS" if abs(z) <= Z_LIMIT else "FAIL")
    else:
        row("cop", mode, cop, cop, cop, mc, z, "INFO")

    lo, hi = analytic.sop_lower(cfg, p), analytic.sop_upper(cfg, p)
    any_e, near_e = montecarlo.estimate_sop_pair(cfg, p, trials, seed, workers=workers)
    if any_e.mean < lo:
        z = _z(any_e, lo, trials)
    elif any_e.mean > hi:
        z = _z(any_e, hi, trials)
    else:
        z = 0.0
    row("sop_any_eve", any_e.mode, "", lo, hi, any_e, z, "PASS" if abs(z) <= Z_LIMIT else "FAIL")
    z = _z(near_e, lo, trials)
    row("sop_nearest_eve", near_e.mode, lo, lo, lo, near_e, z,
        "PASS" if abs(z) <= Z_LIMIT else "FAIL")

    srp = analytic.srp_closed_form(cfg)
    mc = montecarlo.estimate_srp(cfg, trials, seed, interference="mean", workers=workers)
    z = _z(mc, srp, trials)
    row("srp", mc.mode, srp, srp, srp, mc, z, "PASS" if abs(z) <= Z_LIMIT else "FAIL")
    mc = montecarlo.estimate_srp(cfg, trials, seed, interference="random", workers=workers)
    row("srp", mc.mode, srp, srp, srp, mc, _z(mc, srp, trials), "INFO")
    return rows


def cmd_window(cfg):
    return compute_window(cfg, initial_tracks(cfg))


def slot_rows(cfg, tracks, run):
    cf = optimizer.slot_coefficients(cfg, tracks, run.trajectory,
                                     range(cfg.road.num_slots + 1), run.baseline)
    rows = []
    for k in range(cfg.road.num_slots + 1):
        p = float(run.power[k])
        rb = math.log2(1.0 + p * cf.s1[k])
        re = math.log2(1.0 + p * cf.s2[k])
        rows.append({"slot": k, "time_s": k * cfg.road.dt, "power_w": p,
                     "x_alice": float(run.trajectory[k]), "x_bob": float(tracks["bob"].x[k]),
                     "x_eve": float(tracks["eve"].x[k]), "x_carol": float(tracks["carol"].x[k]),
                     "rate_bob": rb, "rate_eve": re, "secrecy_rate": max(rb - re, 0.0)})
    return rows


def cmd_optimize(cfg, mode="per_slot", baseline="proposed", iters=30, tol=1e-4, budget=None,
                 seed=None):
    tracks = initial_tracks(cfg)
    win = compute_window(cfg, tracks)
    run = optimizer.alternating_optimize(cfg, tracks, win, tol=tol, i_max=iters, mode=mode,
                                         total=budget, baseline=baseline, seed=seed)
    return run, slot_rows(cfg, tracks, run)


# -- output --------------------------------------------------------------------

def _fmt(v):
    if isinstance(v, (bool, np.bool_)):
        return "true" if v else "false"
    if isinstance(v, (float, np.floating)):
        return repr(float(v))
    return str(v)


def to_csv(rows, columns):
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(columns)
    for r in rows:
        w.writerow([_fmt(r[c]) for c in columns])
    return buf.getvalue()


def _jsonable(obj):
    if isinstance(obj, dict):
        return {k: _jsonable(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_jsonable(v) for v in obj]
    if isinstance(obj, (np.bool_, bool)):
        return bool(obj)
    if isinstance(obj, (np.integer,)):
        return int(obj)
    if isinstance(obj, (float, np.floating)):
        f = float(obj)
        return f if math.isfinite(f) else repr(f)
    return obj


def to_json(obj):
    return json.dumps(_jsonable(obj), indent=2) + "\n"


def _emit(text, out):
    if out:
        with open(out, "w", encoding="utf-8", newline="") as fh:
            fh.write(text)
    else:
        sys.stdout.write(text)


# -- entry point ---------------------------------------------------------------

def build_parser():
    p = _Parser(prog="sipls", description="Sensing-interference PLS toolkit for vehicular ISAC.")
    sub = p.add_subparsers(dest="command", parser_class=_Parser)
    sub.required = True

    def common(sp, fmt="csv"):
        sp.add_argument("--config", required=True, help="scenario file")
        sp.add_argument("--out", help="write output here instead of stdout")
        sp.add_argument("--format", choices=["csv", "json"], default=fmt)

    sp = sub.add_parser("metrics", help="closed-form metrics, optionally over a sweep")
    common(sp)
    sp.add_argument("--sweep", help="axis=v1,v2,... (axis like comm.noise_bob)")

    sp = sub.add_parser("validate", help="closed forms against Monte Carlo")
    common(sp)
    sp.add_argument("--trials", type=int, default=10 ** 6)
    sp.add_argument("--seed", type=int, default=montecarlo.DEFAULT_SEED)
    sp.add_argument("--mode", choices=["derivation_matched", "scenario"],
                    default="derivation_matched")
    sp.add_argument("--workers", type=int, default=1)
    sp.add_argument("--corrupt-constant", type=float, default=None, help=argparse.SUPPRESS)

    sp = sub.add_parser("window", help="transmission window")
    common(sp, fmt="json")

    sp = sub.add_parser("optimize", help="alternating power/trajectory optimization")
    common(sp, fmt="json")
    sp.add_argument("--mode", choices=["per_slot", "budget"], default="per_slot")
    sp.add_argument("--budget", type=float, help="sum power over the window (budget mode), W")
    sp.add_argument("--baseline", choices=["proposed", "traditional"], default="proposed")
    sp.add_argument("--iters", type=int, default=30)
    sp.add_argument("--tol", type=float, default=1e-4)
    sp.add_argument("--seed", type=int, default=None, help="jitter the initial trajectory")
    sp.add_argument("--csv", help="also write the per-slot table here")
    return p


def main(argv=None):
    args = build_parser().parse_args(argv)
    try:
        cfg = load_config(args.config)
        if args.command == "metrics":
            sweep = parse_sweep(args.sweep, cfg) if args.sweep else None
            rows = cmd_metrics(cfg, sweep)
            text = to_csv(rows, METRIC_COLUMNS) if args.format == "csv" else to_json(rows)
            _emit(text, args.out)
            return EXIT_OK
        if args.command == "validate":
            hook = (analytic.corrupted_constant(args.corrupt_constant)
                    if args.corrupt_constant is not None else contextlib.nullcontext())
            with hook:
                rows = cmd_validate(cfg, args.trials, args.seed, args.mode, args.workers)
            text = to_csv(rows, VALIDATE_COLUMNS) if args.format == "csv" else to_json(rows)
            _emit(text, args.out)
            return EXIT_FAIL if any(r["verdict"] == "FAIL" for r in rows) else EXIT_OK
        if args.command == "window":
            win = cmd_window(cfg).to_dict()
            text = to_csv([win], list(win)) if args.format == "csv" else to_json(win)
            _emit(text, args.out)
            return EXIT_OK
        if args.command == "optimize":
            run, rows = cmd_optimize(cfg, args.mode, args.baseline, args.iters, args.tol,
                                     args.budget, args.seed)
            if args.csv:
                _emit(to_csv(rows, SLOT_COLUMNS), args.csv)
            text = to_json(run.to_dict()) if args.format == "json" else to_csv(rows, SLOT_COLUMNS)
            _emit(text, args.out)
            return EXIT_OK
    except ConfigError as exc:
        sys.stderr.write(f"sipls: configuration error: {exc}\n")
        return EXIT_USAGE
    except (ValueError, RuntimeError, ArithmeticError) as exc:
        sys.stderr.write(f"sipls: error: {exc}\n")
        return EXIT_RUNTIME
    return EXIT_USAGE


if __name__ == "__main__":
    sys.exit(main())

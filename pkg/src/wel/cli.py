"""Command-line front end: verify, construct, sweep."""

from __future__ import annotations

import argparse
import itertools
import json
import os
import sys
from concurrent.futures import ThreadPoolExecutor
from pathlib import Path

import numpy as np

from . import io
from .constructions import build_family
from .errors import ChartError, DegenerateFamilyError, ParseError, SpecError, WelError
from .metric import curvature_at, curvature_divergence_residual
from .ode import trajectory_csv_rows
from .tensor import symmetry_defects
from .weakly_einstein import match_case, signature_at, we_residuals

EXIT_PASS, EXIT_FAIL, EXIT_INPUT, EXIT_NUMERIC = 0, 1, 2, 3
SYMMETRY_TOL = 1e-10
PREDICTION_TOL = 1e-6

INPUT_ERRORS = (SpecError, ParseError, ChartError, DegenerateFamilyError)


def _threads():
    try:
        return max(1, int(os.environ.get("WEL_THREADS", "1")))
    except ValueError:
        return 1


def _map(fn, items):
    # results keep input order, so reports do not depend on the thread count
    n = _threads()
    if n == 1:
        return [fn(x) for x in items]
    with ThreadPoolExecutor(max_workers=n) as pool:
        return list(pool.map(fn, items))


def _points(chart, args, margin=1e-3):
    if args.grid:
        return chart.grid(args.grid, margin=margin)
    return chart.sample(args.points, np.random.default_rng(args.seed), margin=margin)


def point_record(chart, x, tol, jet="ad", predicted=None):
    """Everything the reports say about one point."""
    pack = curvature_at(chart, x, jet=jet)
    sym = symmetry_defects(pack.riemann)
    rec = {"point": [float(v) for v in x], "s": float(pack.scalar)}
    ok_sym = max(sym.values()) <= SYMMETRY_TOL
    rec["symmetry"] = sym
    if chart.dim != 4:
        rec["weakly_einstein"] = None
        rec["pass"] = ok_sym
        return rec
    direct, wform = we_residuals(pack)
    we = max(direct, wform) <= tol
    rec["residuals"] = {"direct": direct, "weyl_form": wform}
    rec["weakly_einstein"] = we
    if we:
        sig = signature_at(pack, tol=tol)
        case = match_case(sig)
        rec.update({k: v for k, v in sig.to_json(case).items() if k not in ("point", "residuals")})
        if predicted is not None and case.case_label not in ("einstein", "conformally-flat", "flat-type"):
            rec["predicted"] = {"s": float(predicted.scalar(x)), "lambda": float(abs(predicted.lam(x)))}
            dev = predicted.compare(sig)
            rec["prediction_residual"] = max(dev.values())
            we = we and rec["prediction_residual"] <= PREDICTION_TOL
    rec["pass"] = bool(ok_sym and we)
    return rec


def summarize(records):
    out = {"points": len(records), "pass": all(r["pass"] for r in records)}
    keys = [("direct", lambda r: r.get("residuals", {}).get("direct")),
            ("weyl_form", lambda r: r.get("residuals", {}).get("weyl_form")),
            ("symmetry", lambda r: max(r["symmetry"].values())),
            ("prediction", lambda r: r.get("prediction_residual"))]
    for name, get in keys:
        vals = [v for v in map(get, records) if v is not None]
        if vals:
            out[f"min_{name}"] = float(min(vals))
            out[f"max_{name}"] = float(max(vals))
    hist = {}
    for r in records:
        label = r.get("case", "not-weakly-einstein" if r.get("weakly_einstein") is False else "n/a")
        hist[label] = hist.get(label, 0) + 1
    out["cases"] = dict(sorted(hist.items()))
    rules = {"symmetries": all(max(r["symmetry"].values()) <= SYMMETRY_TOL for r in records)}
    if any(r.get("weakly_einstein") is not None for r in records):
        rules["weakly_einstein"] = all(bool(r.get("weakly_einstein")) for r in records)
    if any("prediction_residual" in r for r in records):
        rules["prediction"] = all(r.get("prediction_residual", 0.0) <= PREDICTION_TOL for r in records)
    out["rules"] = rules
    return out


# --------------------------------------------------------------------------- commands


def cmd_verify(args):
    spec = io.load_spec(args.spec)
    chart = io.chart_from_spec(spec)
    pts = _points(chart, args)
    records = _map(lambda x: point_record(chart, x, args.tol, args.jet), pts)
    report = {"chart": chart.to_json(), "seed": args.seed, "tol": args.tol, "jet": args.jet,
              "records": records, "summary": summarize(records)}
    _emit(report, args, Path(args.out) if args.out else None)
    return EXIT_PASS if report["summary"]["pass"] else EXIT_FAIL


def _construct(family, params, args):
    cm = build_family(family, params)
    skip = cm.classification in ("einstein", "conformally_flat")
    pred = None if skip else cm.predicted
    # kpc metrics are harmonic but not weakly Einstein in general
    tol = args.tol
    pts = _points(cm.chart, args, margin=1e-2)
    if cm.provenance == "kpc":
        records = _map(lambda x: {"point": [float(v) for v in x],
                                  "codazzi": curvature_divergence_residual(cm.chart, x),
                                  "symmetry": symmetry_defects(curvature_at(cm.chart, x).riemann),
                                  "pass": True}, pts)
        for r in records:
            r["pass"] = r["codazzi"] < 1e-4
    else:
        records = _map(lambda x: point_record(cm.chart, x, tol, args.jet, pred), pts)
    summary = summarize(records)
    if "exaot" in cm.info:
        summary["exaot"] = cm.info["exaot"]
        summary["rules"]["exaot_conditions"] = max(
            cm.info["exaot"][k] for k in ("spectrum", "b_v", "scalar_eq", "einstein_v", "amt")) <= PREDICTION_TOL
        summary["pass"] = summary["pass"] and summary["rules"]["exaot_conditions"]
    report = {"family": family, "params": params, "provenance": cm.provenance,
              "classification": cm.classification, "proper_checks": not skip, "seed": args.seed,
              "tol": tol, "records": records, "summary": summary}
    return cm, report


def cmd_construct(args):
    params = _params(args.params)
    cm, report = _construct(args.family, params, args)
    if args.out:
        out = Path(args.out)
        chart = cm.chart.to_json()
        chart["provenance"] = cm.provenance
        chart["trajectory_functions"] = sorted(cm.chart.functions())
        io.write_text(out / "chart.json", io.dumps(chart) + "\n")
        if cm.trajectory is not None:
            header, rows = trajectory_csv_rows(cm.trajectory)
            io.write_text(out / "trajectory.csv", io.csv_text(header, rows))
        io.write_text(out / "report.json", io.dumps(report) + "\n")
    else:
        _emit(report, args, None)
    return EXIT_PASS if report["summary"]["pass"] else EXIT_FAIL


SWEEP_HEADER = ["params", "x1", "x2", "x3", "x4", "s", "e1", "e2", "e3", "e4", "wp1", "wp2", "wp3",
                "wm1", "wm2", "wm3", "direct", "weyl_form", "case"]


def sweep_rows(family, grid, args):
    """One row per (parameter combination, point)."""
    if not isinstance(grid, dict) or not grid:
        raise SpecError("parameter grid must be a non-empty object of lists")
    keys = sorted(grid)
    values = [grid[k] if isinstance(grid[k], list) else [grid[k]] for k in keys]
    rows, ok = [], True
    for combo in itertools.product(*values):
        params = dict(zip(keys, combo))
        _, report = _construct(family, params, args)
        ok = ok and report["summary"]["pass"]
        tag = json.dumps(params, sort_keys=True, separators=(",", ":"))
        for r in report["records"]:
            res = r.get("residuals", {})
            rows.append([tag, *r["point"], r.get("s", float("nan")), *r.get("e_spec", [float("nan")] * 4),
                         *r.get("wp_spec", [float("nan")] * 3), *r.get("wm_spec", [float("nan")] * 3),
                         res.get("direct", float("nan")), res.get("weyl_form", float("nan")),
                         r.get("case", "none")])
    return rows, ok


def cmd_sweep(args):
    rows, ok = sweep_rows(args.family, _params(args.grid_params), args)
    text = io.csv_text(SWEEP_HEADER, rows)
    if args.out:
        io.write_text(args.out, text)
    else:
        sys.stdout.write(text)
    return EXIT_PASS if ok else EXIT_FAIL


def _params(text):
    if text is None:
        return {}
    try:
        obj = json.loads(Path(text).read_text()) if not text.strip().startswith("{") else json.loads(text)
    except (OSError, json.JSONDecodeError) as exc:
        raise SpecError(f"cannot read parameters: {exc}") from None
    if not isinstance(obj, dict):
        raise SpecError("parameters must be a JSON object")
    return obj


def _emit(report, args, path):
    if args.format == "csv":
        header = ["x" + str(k + 1) for k in range(len(report["records"][0]["point"]))]
        header += ["s", "direct", "weyl_form", "case", "pass"]
        rows = [[*r["point"], r.get("s", float("nan")), r.get("residuals", {}).get("direct", float("nan")),
                 r.get("residuals", {}).get("weyl_form", float("nan")), r.get("case", ""), r["pass"]]
                for r in report["records"]]
        text = io.csv_text(header, rows)
    else:
        text = io.dumps(report) + "\n"
    if path is not None:
        io.write_text(path, text)
    else:
        sys.stdout.write(text)


# --------------------------------------------------------------------------- parser


def build_parser():
    p = argparse.ArgumentParser(prog="wel", description="Weakly Einstein metric toolkit.")
    sub = p.add_subparsers(dest="command", required=True)

    def common(sp):
        sp.add_argument("--tol", type=float, default=1e-7)
        sp.add_argument("--points", type=int, default=20)
        sp.add_argument("--grid", type=int, default=0, help="grid points per axis (overrides --points)")
        sp.add_argument("--seed", type=int, default=0)
        sp.add_argument("--jet", choices=("ad", "fd"), default="ad")
        sp.add_argument("--out")
        sp.add_argument("--format", choices=("json", "csv"), default="json")

    v = sub.add_parser("verify", help="check a metric spec point by point")
    v.add_argument("spec", help="JSON file or inline JSON")
    common(v)
    v.set_defaults(func=cmd_verify)

    c = sub.add_parser("construct", help="assemble a family member and check it")
    c.add_argument("family")
    c.add_argument("params", nargs="?", help="JSON file or inline JSON")
    common(c)
    c.set_defaults(func=cmd_construct)

    s = sub.add_parser("sweep", help="tabulate signatures over a parameter grid")
    s.add_argument("family")
    s.add_argument("grid_params", help="JSON object mapping parameter names to lists")
    common(s)
    s.set_defaults(func=cmd_sweep, points=5)
    return p


def main(argv=None):
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return EXIT_INPUT if exc.code else EXIT_PASS
    if args.points < 1 or args.grid < 0 or args.tol <= 0:
        print("error: --points must be >= 1, --grid >= 0, --tol > 0", file=sys.stderr)
        return EXIT_INPUT
    try:
        return args.func(args)
    except INPUT_ERRORS as exc:
        print(f"input error: {exc}", file=sys.stderr)
        return EXIT_INPUT
    except WelError as exc:
        print(f"numerical error: {exc}", file=sys.stderr)
        return EXIT_NUMERIC
    except (FloatingPointError, ZeroDivisionError, OverflowError, ValueError) as exc:
        print(f"numerical error: {exc}", file=sys.stderr)
        return EXIT_NUMERIC


if __name__ == "__main__":
    sys.exit(main())

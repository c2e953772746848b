"""Command-line front end: ``georay ray | filtration | check``.

Problem files are JSON documents::

    {"kind": "curve" | "dual_u" | "filtration",
     "phi": "<grid-function file>",
     "curve": "<test-curve file>",          (kind curve)
     "u": "<grid-function file on dual>",   (kind dual_u)
     "weights": "<weight-data file>",       (kind filtration)
     "dual": {"lower": [..], "upper": [..], "nodes": [..]},   (optional)
     "lambda": {"min": .., "max": .., "spacing": ..},         (dual_u only)
     "t_nodes": 11, "t_max": 1.0,
     "threads": 1, "tol_scale": 1.0}

Exit codes: 0 success, 2 parse error, 3 validation failure, 4 resource
limit.  Output is deterministic: identical inputs give byte-identical
files regardless of ``--threads``.
"""

from __future__ import annotations

import argparse
import json
import os
import sys
from pathlib import Path

import numpy as np

from . import serialization as ser
from .checks import SUITES, run_suite
from .curves import ConcaveTransform, envelope_from_u, validate
from .errors import DomainError, ParseError, ResourceError
from .filtration import BergmanInstance, equivalence_check, phong_sturm_ray, weight_histogram
from .grids import Box, ConvexGridFunction, Grid
from .legendre import SlopeRegion, default_dual_grid, subgradient_range
from .rays import energy_linearity, ray_from_curve


def _load_spec(path: str) -> dict:
    try:
        text = Path(path).read_text()
    except OSError as exc:
        raise ParseError(f"cannot read spec: {exc}") from exc
    try:
        doc = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ParseError(exc.msg, line=exc.lineno, column=exc.colno) from exc
    if not isinstance(doc, dict):
        raise ParseError("spec must be a JSON object", line=1, column=1)
    if doc.get("kind") not in ("curve", "dual_u", "filtration"):
        raise ParseError("kind must be one of curve, dual_u, filtration")
    return doc


def _load_grid_function_file(specdir: Path, name) -> "ConvexGridFunction":
    if not isinstance(name, str):
        raise ParseError("expected a file path string")
    f = ser.load_grid_function((specdir / name).read_text())
    return ConvexGridFunction.trusted(f)


def _grid_from_block(block) -> Grid:
    try:
        return Grid(
            Box(tuple(block["lower"]), tuple(block["upper"])),
            tuple(block["nodes"]),
        )
    except (KeyError, TypeError) as exc:
        raise ParseError(f"malformed grid block: {exc}") from exc


def _t_grid(doc) -> np.ndarray:
    n = int(doc.get("t_nodes", 11))
    tmax = float(doc.get("t_max", 1.0))
    if n < 2 or tmax <= 0:
        raise ParseError("t grid needs t_nodes >= 2 and t_max > 0")
    return np.linspace(0.0, tmax, n)


def cmd_ray(spec_path: str, out_dir: str, tol_scale: float = 1.0) -> int:
    doc = _load_spec(spec_path)
    if doc["kind"] not in ("curve", "dual_u"):
        raise ParseError("ray command needs kind curve or dual_u")
    specdir = Path(spec_path).parent
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    ts = _t_grid(doc)

    if doc["kind"] == "curve":
        tc = ser.load_test_curve((specdir / doc["curve"]).read_text())
        phi = (
            _load_grid_function_file(specdir, doc["phi"]) if "phi" in doc else tc.head
        )
        # discrete envelopes are lambda-concave only up to one grid cell
        h = max(tc.grid.spacing)
        dlam = float(np.diff(tc.lambdas).min()) if tc.lambdas.size > 1 else 0.0
        diag = validate(tc, tol_concave=tol_scale * (h + dlam))
        if not diag.valid:
            print(
                f"invalid test curve: {'; '.join(diag.issues)}"
                + (f" at {diag.witness}" if diag.witness else ""),
                file=sys.stderr,
            )
            return 3
    else:
        phi = _load_grid_function_file(specdir, doc["phi"])
        dual = (
            _grid_from_block(doc["dual"]) if "dual" in doc else default_dual_grid(phi)
        )
        uf = ser.load_grid_function((specdir / doc["u"]).read_text())
        if uf.grid != dual:
            raise DomainError("u is not sampled on the dual grid")
        base = SlopeRegion(dual, uf.finite_mask & subgradient_range(phi, dual).mask)
        u = ConcaveTransform(uf, base)
        lb = doc.get("lambda", {})
        finite_u = uf.values[base.mask]
        lo = float(lb.get("min", finite_u.min()))
        hi = float(lb.get("max", finite_u.max()))
        sp = float(lb.get("spacing", (hi - lo) / 32 if hi > lo else 1.0))
        if sp <= 0:
            raise ParseError("lambda spacing must be positive")
        lambdas = np.arange(lo, hi + sp / 2, sp)
        tc = envelope_from_u(phi, u, lambdas, dual, lambda_head=lo)

    ray = ray_from_curve(tc, ts)
    rep = energy_linearity(ray, phi)
    (out / "ray.csv").write_text(ser.dump_ray_csv(ray))
    energy = {
        "slope": rep.slope,
        "intercept": rep.intercept,
        "max_abs_residual": rep.max_abs_residual,
        "predicted_slope": rep.predicted_slope,
        "lambda_c": tc.lambda_c,
    }
    (out / "energy.json").write_text(json.dumps(energy, indent=1, sort_keys=True) + "\n")
    linear = rep.max_abs_residual <= 1e-2 * tol_scale * max(abs(rep.slope), 1e-30)
    (out / "linearity.json").write_text(
        json.dumps({"linear": bool(linear)}, sort_keys=True) + "\n"
    )
    return 0


def cmd_filtration(
    spec_path: str, out_dir: str, k_list=(4, 8, 16, 32), tol_scale: float = 1.0
) -> int:
    doc = _load_spec(spec_path)
    if doc["kind"] != "filtration":
        raise ParseError("filtration command needs kind filtration")
    specdir = Path(spec_path).parent
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    phi = _load_grid_function_file(specdir, doc["phi"])
    dual = _grid_from_block(doc["dual"]) if "dual" in doc else default_dual_grid(phi)
    data = ser.load_weight_data((specdir / doc["weights"]).read_text())
    inst = BergmanInstance(phi, dual)
    ts = _t_grid(doc)
    k_list = sorted(set(int(k) for k in k_list))
    rows = ["k,t,gap"]
    for k in k_list:
        gaps = equivalence_check(inst, data, k, ts, k_list)
        for t, g in zip(ts, gaps):
            rows.append(f"{k},{repr(float(t))},{repr(float(g))}")
    (out / "gap.csv").write_text("\n".join(rows) + "\n")
    k_max = k_list[-1]
    (out / "ray.csv").write_text(
        ser.dump_ray_csv(phong_sturm_ray(inst, data, k_max, ts))
    )
    vals, counts, cum = weight_histogram(data, k_max)
    (out / "histogram.csv").write_text(ser.dump_histogram_csv(vals, counts, cum))
    return 0


def cmd_check(suite: str, json_path: str | None, tol_scale: float = 1.0) -> int:
    if suite not in SUITES:
        print(f"unknown suite {suite!r}; choose from {sorted(SUITES)}", file=sys.stderr)
        return 2
    rep = run_suite(suite, tol_scale)
    timings = {r["name"]: r.pop("seconds") for r in rep["checks"]}
    for r in rep["checks"]:
        r.pop("limit_seconds")
    report = {
        "suite": rep["suite"],
        "passed": rep["passed"],
        "checks": rep["checks"],
        "timings": timings,
    }
    text = json.dumps(report, indent=1, sort_keys=True) + "\n"
    if json_path:
        Path(json_path).write_text(text)
    else:
        sys.stdout.write(text)
    return 0 if rep["passed"] else 3


def _parse_k_list(text: str):
    try:
        ks = [int(v) for v in text.split(",") if v.strip()]
    except ValueError:
        raise ParseError(f"bad degree list {text!r}") from None
    if not ks or any(k < 1 for k in ks):
        raise ParseError("degrees must be positive integers")
    return ks


def main(argv=None) -> int:
    parser = argparse.ArgumentParser(
        prog="georay", description="geodesic rays from convex envelopes"
    )
    parser.add_argument("--threads", type=int, default=None, help="worker thread cap")
    parser.add_argument(
        "--tol-scale", type=float, default=1.0, help="multiply every tolerance"
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p_ray = sub.add_parser("ray", help="build a geodesic ray from a problem file")
    p_ray.add_argument("--spec", required=True)
    p_ray.add_argument("--out", required=True)

    p_fil = sub.add_parser("filtration", help="Bergman rays from weight data")
    p_fil.add_argument("--spec", required=True)
    p_fil.add_argument("--out", required=True)
    p_fil.add_argument("--k", default="4,8,16,32", help="comma-separated degrees")

    p_chk = sub.add_parser("check", help="run the verification suite")
    p_chk.add_argument("--suite", default="all")
    p_chk.add_argument("--json", default=None, help="write the report here")

    args = parser.parse_args(argv)

    threads = args.threads
    if threads is None:
        env = os.environ.get("GEORAY_THREADS")
        threads = int(env) if env else 1
    if threads < 1:
        print("--threads must be >= 1", file=sys.stderr)
        return 2
    # computation is vectorized single-thread numpy; the cap is advisory and
    # results are identical for any value

    try:
        if args.command == "ray":
            return cmd_ray(args.spec, args.out, args.tol_scale)
        if args.command == "filtration":
            return cmd_filtration(
                args.spec, args.out, _parse_k_list(args.k), args.tol_scale
            )
        return cmd_check(args.suite, args.json, args.tol_scale)
    except ParseError as exc:
        loc = ""
        if exc.line is not None:
            loc = f" (line {exc.line}" + (
                f", column {exc.column})" if exc.column is not None else ")"
            )
        print(f"parse error{loc}: {exc}", file=sys.stderr)
        return 2
    except ResourceError as exc:
        print(f"resource limit: {exc}", file=sys.stderr)
        return 4
    except (DomainError, OSError) as exc:
        print(f"validation failure: {exc}", file=sys.stderr)
        return 3


if __name__ == "__main__":
    sys.exit(main())

"""Command-line interface: ``riesz-shapeflow <command> [flags]``.

Exit codes: 0 success, 1 input error, 2 tolerance not reached (the result
is still written), 3 a verdict differs from ``--expect`` or a check failed.
"""

from __future__ import annotations

import argparse
import json
import math
import os
import sys
import warnings
from dataclasses import replace
from typing import Optional, Sequence

import numpy as np

from . import flows as fl
from . import verify as vf
from .energy import energy, fd_derivative, potentials, shape_derivative, shear_derivative_slice
from .geometry import GeometryError, polygon_from_json
from .kernels import ExpDecay, KernelError, NegLinear, RieszPower
from .quadrature import QuadratureConfig, QuadratureError, ToleranceNotReached

EXIT_OK, EXIT_INPUT, EXIT_TOLERANCE, EXIT_MISMATCH = 0, 1, 2, 3


class InputError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    # argparse exits with 2 on usage errors, which is reserved here
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(EXIT_INPUT, f"{self.prog}: error: {message}\n")


# ------------------------------------------------------------------ inputs


def load_polygon(path: str):
    try:
        with open(path, "rb") as fh:
            raw = fh.read()
    except OSError as exc:
        raise InputError(f"--polygon: cannot read {path}: {exc.strerror}") from None
    try:
        text = raw.decode("utf-8")
    except UnicodeDecodeError as exc:
        raise InputError(f"{path}: invalid UTF-8 at byte offset {exc.start}") from None
    try:
        obj = json.loads(text)
    except json.JSONDecodeError as exc:
        offset = len(text[: exc.pos].encode("utf-8"))
        raise InputError(f"{path}: malformed JSON at byte offset {offset}: {exc.msg}") from None
    if not isinstance(obj, dict) or "vertices" not in obj:
        raise InputError(f'{path}: missing field "vertices"')
    v = obj["vertices"]
    try:
        arr = np.asarray(v, dtype=float)
    except (TypeError, ValueError):
        raise InputError(f'{path}: field "vertices" must be a list of [x, y] number pairs') from None
    if arr.ndim != 2 or arr.shape[1] != 2:
        raise InputError(f'{path}: field "vertices" must be a list of [x, y] number pairs')
    try:
        return polygon_from_json(obj)
    except GeometryError as exc:
        raise InputError(f'{path}: field "vertices": {exc}') from None


def make_kernel(args):
    if args.kernel == "riesz":
        return RieszPower(1.0 if args.alpha is None else args.alpha)
    if args.kernel == "neglinear":
        return NegLinear()
    return ExpDecay(1.0 if args.beta is None else args.beta)


def make_config(args) -> QuadratureConfig:
    threads = args.threads
    if threads is None:
        env = os.environ.get("RIESZ_SHAPEFLOW_THREADS")
        try:
            threads = int(env) if env else 1
        except ValueError:
            raise InputError(f"RIESZ_SHAPEFLOW_THREADS must be an integer, got {env!r}") from None
    return QuadratureConfig(gauss_order=args.order, rel_tol=args.rel_tol, threads=threads)


def make_flow(args):
    flow = fl.flow_from_json({"family": args.flow})
    if args.flow == "vertex_shear" and (args.upper_rate is not None or args.lower_rate is not None):
        flow = replace(flow, upper_rate=args.upper_rate or 0.0, lower_rate=args.lower_rate or 0.0)
    return flow


# ----------------------------------------------------------------- outputs


def _dump(obj) -> str:
    return json.dumps(vf._clean(obj), indent=2, sort_keys=True) + "\n"


def emit(args, text: str) -> None:
    if args.out:
        with open(args.out, "w", encoding="utf-8", newline="\n") as fh:
            fh.write(text)
    else:
        sys.stdout.write(text)


def _csv(header, rows) -> str:
    lines = [",".join(header)]
    lines += [",".join(repr(float(x)) if isinstance(x, (float, np.floating)) else str(x) for x in r) for r in rows]
    return "\n".join(lines) + "\n"


# ---------------------------------------------------------------- commands


def cmd_energy(args) -> int:
    P = load_polygon(args.polygon)
    res = energy(P, make_kernel(args), make_config(args))
    if args.format == "csv":
        emit(args, _csv(["value", "error_estimate"], [[res.value, res.error_estimate]]))
    else:
        emit(args, _dump({"value": res.value, "error_estimate": res.error_estimate, "converged": res.converged,
                          "pair_count": res.pair_count}))
    return EXIT_OK if res.converged else EXIT_TOLERANCE


def _parse_points(items) -> np.ndarray:
    pts = []
    for s in items or []:
        try:
            x, y = (float(p) for p in s.split(","))
        except ValueError:
            raise InputError(f"--at expects x,y; got {s!r}") from None
        pts.append((x, y))
    if not pts:
        raise InputError("potential needs at least one --at x,y")
    return np.array(pts)


def cmd_potential(args) -> int:
    P = load_polygon(args.polygon)
    pts = _parse_points(args.at)
    v, e = potentials(pts, P, make_kernel(args), make_config(args))
    rows = [[p[0], p[1], a, b] for p, a, b in zip(pts, v, e)]
    if args.format == "csv":
        emit(args, _csv(["x", "y", "value", "error_estimate"], rows))
    else:
        emit(args, _dump([{"x": r[0], "y": r[1], "value": r[2], "error_estimate": r[3]} for r in rows]))
    return EXIT_OK


def cmd_derivative(args) -> int:
    P = load_polygon(args.polygon)
    kernel, cfg = make_kernel(args), make_config(args)
    flow = fl.bind(make_flow(args), P)
    t = args.t
    Pt = fl.domain_at(flow, P, t)
    a = shape_derivative(Pt, kernel, flow, t, cfg)
    fd, fde = fd_derivative(flow, P, kernel, t, 1e-4, cfg)
    D = energy(Pt, kernel, cfg)
    out = {"t": t, "D": D.value, "dDdt_analytic": a.value, "analytic_error": a.error_estimate, "dDdt_fd": fd,
           "fd_error": fde, "agree": vf.derivative_agrees(a.value, fd, D.value)}
    if flow.is_shear:
        s = shear_derivative_slice(Pt, kernel, flow, t, cfg)
        out["dDdt_slice"] = s.value
        out["slice_error"] = s.error_estimate
    if args.format == "csv":
        keys = sorted(out)
        emit(args, _csv(keys, [[out[k] for k in keys]]))
    else:
        emit(args, _dump(out))
    return EXIT_OK if out["agree"] else EXIT_MISMATCH


_EXPECT = {"increasing": "StrictlyIncreasing", "decreasing": "StrictlyDecreasing"}


def _t_range(args, flow, P):
    lo = args.t_min
    hi = args.t_max
    if lo is None:
        lo = 0.0 if math.isinf(flow.t_min) or flow.t_min < 0 else flow.t_min
        if flow.open_min and lo <= flow.t_min:
            lo = flow.t_min + 1e-3
    if hi is None:
        hi = fl.critical_time(flow, P)
        if not math.isfinite(hi):
            hi = lo + 2.0
    if not hi > lo:
        raise InputError(f"empty t-range [{lo}, {hi}]; pass --t-min/--t-max")
    return lo, hi


def cmd_sweep(args) -> int:
    P = load_polygon(args.polygon)
    kernel, cfg = make_kernel(args), make_config(args)
    flow = fl.bind(make_flow(args), P)
    lo, hi = _t_range(args, flow, P)
    res = vf.sweep(flow, P, kernel, vf.default_grid(lo, hi, args.steps), cfg, derivative=not args.no_derivative)
    emit(args, res.to_csv() if args.format == "csv" else _dump(res.to_json()))
    if args.expect and res.verdict != _EXPECT[args.expect]:
        print(f"verdict {res.verdict} does not match --expect {args.expect}", file=sys.stderr)
        return EXIT_MISMATCH
    return EXIT_OK


def cmd_verify(args) -> int:
    kernel, cfg = make_kernel(args), make_config(args)
    names = vf.THEOREMS if args.theorem == "all" else [args.theorem]
    verdicts = [vf.verify_theorem(n, kernel, cfg, args.seed, args.random, args.steps) for n in names]
    if args.format == "csv":
        rows = [[v.name, "pass" if v.passed else "fail", v.margins.get("instances"), v.margins.get("min_margin")]
                for v in verdicts]
        emit(args, _csv(["theorem", "status", "instances", "min_margin"], rows))
    else:
        emit(args, vf.report_json(verdicts))
    for v in verdicts:
        print(f"{v.name}: {'PASS' if v.passed else 'FAIL'}", file=sys.stderr)
    return EXIT_OK if all(v.passed for v in verdicts) else EXIT_MISMATCH


def cmd_pipeline(args) -> int:
    P = load_polygon(args.polygon)
    if len(P) != 4:
        raise InputError(f"pipeline needs a quadrilateral, got {len(P)} vertices")
    kernel, cfg = make_kernel(args), make_config(args)
    verdict, stages, sweeps = vf.run_pipeline_check(P, kernel, cfg, args.steps)
    if args.format == "csv":
        rows = []
        for k, s in enumerate(sweeps):
            rows += [[k, t, d, e] for t, d, e in zip(s.t, s.D, s.D_err)]
        emit(args, _csv(["stage", "t", "D", "D_err"], rows))
    else:
        emit(args, _dump({"stages": [s.to_json() for s in stages], "verdict": verdict.to_json(),
                          "sweeps": [s.to_json() for s in sweeps]}))
    return EXIT_OK if verdict.passed else EXIT_MISMATCH


# ------------------------------------------------------------------ parser


def build_parser() -> argparse.ArgumentParser:
    common = _Parser(add_help=False)
    common.add_argument("--kernel", choices=["riesz", "neglinear", "expdecay"], default="riesz")
    common.add_argument("--alpha", type=float, help="Riesz exponent in (0, 2); default 1")
    common.add_argument("--beta", type=float, help="ExpDecay rate; default 1")
    common.add_argument("--order", type=int, default=12, help="Gauss order per panel")
    common.add_argument("--rel-tol", type=float, default=1e-7)
    common.add_argument("--seed", type=int, default=0)
    common.add_argument("--threads", type=int, help="worker threads (env RIESZ_SHAPEFLOW_THREADS)")
    common.add_argument("--out", help="write output here instead of stdout")
    common.add_argument("--format", choices=["json", "csv"], default="json")

    p = _Parser(prog="riesz-shapeflow", description="Nonlocal energies and monotone shape flows on polygons.")
    sub = p.add_subparsers(dest="command", required=True, parser_class=_Parser)

    e = sub.add_parser("energy", parents=[common], help="energy D of a polygon")
    e.add_argument("--polygon", required=True)
    e.set_defaults(func=cmd_energy)

    v = sub.add_parser("potential", parents=[common], help="potential V at probe points")
    v.add_argument("--polygon", required=True)
    v.add_argument("--at", action="append", metavar="X,Y")
    v.set_defaults(func=cmd_potential)

    flow_opts = _Parser(add_help=False)
    flow_opts.add_argument("--flow", required=True, choices=list(fl.FAMILIES))
    flow_opts.add_argument("--upper-rate", type=float)
    flow_opts.add_argument("--lower-rate", type=float)

    d = sub.add_parser("derivative", parents=[common, flow_opts], help="analytic vs finite-difference dD/dt")
    d.add_argument("--polygon", required=True)
    d.add_argument("--t", type=float, default=0.0)
    d.set_defaults(func=cmd_derivative)

    s = sub.add_parser("sweep", parents=[common, flow_opts], help="D along a flow with a monotonicity verdict")
    s.add_argument("--polygon", required=True)
    s.add_argument("--t-min", type=float)
    s.add_argument("--t-max", type=float)
    s.add_argument("--steps", type=int, default=17)
    s.add_argument("--expect", choices=["increasing", "decreasing"])
    s.add_argument("--no-derivative", action="store_true", help="skip the derivative columns")
    s.set_defaults(func=cmd_sweep)

    r = sub.add_parser("verify", parents=[common], help="numerically check one statement or all of them")
    r.add_argument("theorem", help="theorem id or 'all'")
    r.add_argument("--random", type=int, default=10, help="random instances per statement")
    r.add_argument("--steps", type=int, default=17)
    r.set_defaults(func=cmd_verify)

    q = sub.add_parser("pipeline", parents=[common], help="deform a quadrilateral to the square")
    q.add_argument("--polygon", required=True)
    q.add_argument("--steps", type=int, default=9)
    q.set_defaults(func=cmd_pipeline)
    return p


def main(argv: Optional[Sequence[str]] = None) -> int:
    try:
        args = build_parser().parse_args(argv)
    except SystemExit as exc:  # usage errors and --help
        return int(exc.code or 0)
    try:
        with warnings.catch_warnings(record=True) as caught:
            warnings.simplefilter("always", ToleranceNotReached)
            code = args.func(args)
        if code == EXIT_OK and any(issubclass(w.category, ToleranceNotReached) for w in caught):
            for w in caught:
                print(f"warning: {w.message}", file=sys.stderr)
            return EXIT_TOLERANCE
        return code
    except (InputError, GeometryError, KernelError, QuadratureError, fl.FlowError,
            vf.UnknownTheorem, vf.SweepGridError, ValueError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INPUT


if __name__ == "__main__":
    sys.exit(main())

"""Command-line interface.

Exit codes: 0 success, 1 verification or integration failure, 2 usage error.
JSON numbers use Python's shortest round-trip repr; non-finite values become
``null``.
"""
from __future__ import annotations

import argparse
import json
import math
import sys
from typing import Sequence

import numpy as np

from . import dynamics, svg, verify
from .foliation import CANONICAL, ConvergenceError, PlanePoint, plane_to_chart
from .function import (
    DEFAULT_TAU,
    FunctionParams,
    f_gradient,
    f_value,
    kl_residual,
    lojasiewicz_residual,
    sandwich_bounds,
)

EXIT_OK, EXIT_FAIL, EXIT_USAGE = 0, 1, 2
CSV_HEADER = "param,x,y,t,theta,alpha,f,norm"


class UsageError(Exception):
    pass


def _clean(obj):
    if isinstance(obj, dict):
        return {k: _clean(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_clean(v) for v in obj]
    if isinstance(obj, (float, np.floating)):
        v = float(obj)
        return v if math.isfinite(v) else None
    if isinstance(obj, np.integer):
        return int(obj)
    return obj


def dumps(obj) -> str:
    return json.dumps(_clean(obj), indent=2, allow_nan=False) + "\n"


def _emit(text: str, out: str | None) -> None:
    if out is None or out == "-":
        sys.stdout.write(text)
        return
    try:
        with open(out, "w", encoding="utf-8", newline="\n") as fh:
            fh.write(text)
    except OSError as exc:
        raise UsageError(f"cannot write {out}: {exc.strerror or exc}") from exc


def _finite(name: str, *values: float) -> None:
    if not all(math.isfinite(v) for v in values):
        raise UsageError(f"{name} must be finite")


def _tau(args) -> float:
    tau = args.tau
    _finite("--tau", tau)
    if args.allow_unsafe_tau:
        if not tau > 0.0:
            raise UsageError("--tau must be positive")
    elif not 0.0 < tau < 0.1:
        raise UsageError(f"--tau must lie in (0, 0.1), got {tau!r}; pass --allow-unsafe-tau to override")
    return tau


def _point(args) -> PlanePoint:
    _finite("coordinates", args.x, args.y)
    return PlanePoint(args.x, args.y)


# -- commands -----------------------------------------------------------------


def eval_record(tau: float, q: PlanePoint) -> dict:
    params = FunctionParams(tau, unsafe=True)
    grad = f_gradient(params, q)
    lower, upper = sandwich_bounds(params, q)
    chart = None
    kl = None
    if not q.is_origin():
        c = plane_to_chart(CANONICAL, q).chart
        chart = {"t": c.t, "theta": c.theta}
        kl = kl_residual(params, q)
    return {
        "f": f_value(params, q),
        "grad": [grad.gx, grad.gy],
        "chart": chart,
        "bounds": {"lower": lower, "upper": upper},
        "residuals": {"lojasiewicz": lojasiewicz_residual(params, q), "kl": kl},
    }


def cmd_eval(args) -> int:
    _emit(dumps(eval_record(_tau(args), _point(args))), args.out)
    return EXIT_OK


def cmd_invert(args) -> int:
    q = _point(args)
    if q.is_origin():
        raise UsageError("the origin has no chart coordinates")
    res = plane_to_chart(CANONICAL, q)
    _emit(dumps({"t": res.chart.t, "theta": res.chart.theta, "iterations": res.iterations, "residual": res.residual}), args.out)
    return EXIT_OK


def cmd_verify(args) -> int:
    tau = _tau(args)
    if args.samples < 1:
        raise UsageError("--samples must be positive")
    report = verify.run(args.suite, tau=tau, seed=args.seed, samples=args.samples)
    _emit(dumps(report.to_json(timing=args.timing)), args.out)
    for c in report.checks:
        if not c.passed:
            print(f"FAIL {c.suite_name}: {c.worst_residual!r} vs tolerance {c.tolerance!r}", file=sys.stderr)
    return EXIT_OK if report.passed else EXIT_FAIL


def _controls(args) -> dynamics.FlowControls:
    _finite("--r-min/--r-max", args.r_min, args.r_max)
    try:
        return dynamics.FlowControls(r_min=args.r_min, r_max=args.r_max)
    except ValueError as exc:
        raise UsageError(str(exc)) from exc


def _span(args) -> tuple[float, float]:
    _finite("--span-lo/--span-hi", args.span_lo, args.span_hi)
    if not args.span_lo < args.span_hi:
        raise UsageError("need --span-lo < --span-hi")
    return args.span_lo, args.span_hi


def _orbit(args, tau: float) -> dynamics.Trajectory:
    q = _point(args)
    if q.is_origin():
        raise UsageError("the origin is a rest point; pick another start")
    controls = _controls(args)
    if args.mode == "time":
        return dynamics.gradient_flow_time(tau, q, controls, args.direction)
    return dynamics.chart_orbit_through(q, _span(args), controls, tau)


def trajectory_csv(traj: dynamics.Trajectory) -> str:
    lines = [CSV_HEADER]
    lines += [",".join("%.17g" % v for v in row) for row in traj.rows()]
    return "\n".join(lines) + "\n"


def cmd_trace(args) -> int:
    traj = _orbit(args, _tau(args))
    _emit(trajectory_csv(traj), args.out)
    if not traj.success:
        print(f"integration failed: {traj.status}: {traj.message}", file=sys.stderr)
        return EXIT_FAIL
    return EXIT_OK


def cmd_winding(args) -> int:
    tau = _tau(args)
    _finite("--theta0", args.theta0)
    span = _span(args)
    traj = dynamics.chart_orbit(args.theta0, span, _controls(args), tau)
    rep = dynamics.winding(traj)
    record = {
        "theta0": args.theta0,
        "span": list(span),
        "samples": len(traj),
        "status": traj.status,
        "delta_alpha": rep.delta_alpha,
        "turns": rep.turns,
        "delta_theta": rep.delta_theta,
        "a0": rep.a0_estimate,
        "a0_orbit": rep.a0_orbit,
        "bounded_gap": rep.bounded_gap,
        "positive_x_crossings": dynamics.positive_x_crossings(traj),
    }
    _emit(dumps(record), args.out)
    return EXIT_OK if traj.success else EXIT_FAIL


def cmd_fourier(args) -> int:
    n = args.n
    if n < 16:
        raise UsageError(f"need n >= 16, got {n}")
    history = [{"n": m, "a0": dynamics.fourier_a0(m)} for m in (n, 2 * n, 4 * n)]
    _emit(dumps({"a0": history[0]["a0"], "convergence_history": history}), args.out)
    return EXIT_OK


def cmd_plot(args) -> int:
    tau = _tau(args)
    if args.what == "foliation":
        ts = args.leaves if args.leaves else [-1.0, 0.0, 1.0]
        _finite("--leaves", *ts)
        text = svg.foliation_svg(ts)
    elif args.what == "h":
        text = svg.h_svg()
    else:
        if args.zooms < 0 or not args.zoom_factor > 1.0:
            raise UsageError("need --zooms >= 0 and --zoom-factor > 1")
        traj = _orbit(args, tau)
        if len(traj) < 2:
            raise UsageError("orbit has fewer than two samples in the requested span")
        text = svg.orbit_svg(traj, args.zooms, args.zoom_factor)
        if not traj.success:
            _emit(text, args.out)
            print(f"integration failed: {traj.status}: {traj.message}", file=sys.stderr)
            return EXIT_FAIL
    _emit(text, args.out)
    return EXIT_OK


# -- parser -------------------------------------------------------------------


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(EXIT_USAGE, f"{self.prog}: error: {message}\n")


def _orbit_options(mode: str, span: tuple[float, float]) -> argparse.ArgumentParser:
    # a fresh parent per subcommand: parents share Action objects, so
    # per-command defaults must not go through set_defaults
    orbit = argparse.ArgumentParser(add_help=False)
    orbit.add_argument("--mode", choices=("time", "chart"), default=mode)
    orbit.add_argument("--direction", choices=("forward", "backward"), default="forward", help="time mode only")
    orbit.add_argument("--span-lo", type=float, default=span[0], help="chart mode: lower ellipse parameter")
    orbit.add_argument("--span-hi", type=float, default=span[1], help="chart mode: upper ellipse parameter")
    orbit.add_argument("--r-min", type=float, default=1e-2, help="time mode: backward stop radius")
    orbit.add_argument("--r-max", type=float, default=1e6, help="time mode: forward stop radius")
    return orbit


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--tau", type=float, default=DEFAULT_TAU, help="exponent parameter (default %(default)s)")
    common.add_argument("--allow-unsafe-tau", action="store_true", help="accept tau outside (0, 0.1)")
    common.add_argument("--out", default=None, help="output path (default: standard output)")

    p = _Parser(prog="convexspiral", description="Convex function with spiraling gradient orbits.")
    sub = p.add_subparsers(dest="command", required=True, parser_class=_Parser)

    s = sub.add_parser("eval", parents=[common], help="value, gradient and residuals at a point")
    s.add_argument("x", type=float)
    s.add_argument("y", type=float)
    s.set_defaults(func=cmd_eval)

    s = sub.add_parser("invert", parents=[common], help="chart coordinates of a point")
    s.add_argument("x", type=float)
    s.add_argument("y", type=float)
    s.set_defaults(func=cmd_invert)

    s = sub.add_parser("verify", parents=[common], help="run verification suites")
    s.add_argument("suite", choices=("all",) + verify.SUITES)
    s.add_argument("--seed", type=int, default=42)
    s.add_argument("--samples", type=int, default=100_000)
    s.add_argument("--timing", action="store_true", help="include wall times (output is then not reproducible)")
    s.set_defaults(func=cmd_verify)

    s = sub.add_parser("trace", parents=[common, _orbit_options("time", (-50.0, 50.0))], help="write an orbit as CSV")
    s.add_argument("x", type=float)
    s.add_argument("y", type=float)
    s.set_defaults(func=cmd_trace)

    s = sub.add_parser("winding", parents=[common], help="winding of the chart orbit from M(span_lo, theta0)")
    s.add_argument("--theta0", type=float, default=0.0)
    s.add_argument("--span-lo", type=float, default=-50.0)
    s.add_argument("--span-hi", type=float, default=50.0)
    s.add_argument("--r-min", type=float, default=1e-2, help=argparse.SUPPRESS)
    s.add_argument("--r-max", type=float, default=1e6, help=argparse.SUPPRESS)
    s.set_defaults(func=cmd_winding)

    s = sub.add_parser("fourier", parents=[common], help="mean of h by the trapezoidal rule")
    s.add_argument("--n", type=int, default=4096)
    s.set_defaults(func=cmd_fourier)

    s = sub.add_parser("plot", parents=[common, _orbit_options("chart", (0.0, 100.0))], help="SVG figures")
    s.add_argument("what", choices=("foliation", "orbit", "h"))
    s.add_argument("--x", type=float, default=2.0, help="orbit start x")
    s.add_argument("--y", type=float, default=0.0, help="orbit start y")
    s.add_argument("--leaves", type=float, nargs="+", help="foliation: ellipse parameters (default -1 0 1)")
    s.add_argument("--zooms", type=int, default=3)
    s.add_argument("--zoom-factor", type=float, default=10.0)
    s.set_defaults(func=cmd_plot)
    return p


def main(argv: Sequence[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except UsageError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except ConvergenceError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_FAIL
    except ValueError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE


if __name__ == "__main__":
    sys.exit(main())

"""Verification suites: every inequality the construction claims, sampled.

Each check reduces to one number, its *violation*, oriented so that the check
passes iff ``violation <= tolerance`` (``< tolerance`` for strict checks).
Random samples come from numpy's counter-based Philox-4x64 generator keyed by
``SeedSequence([seed, stream])``, one stream per check, so a given
``(seed, samples)`` always draws the same points.
"""
from __future__ import annotations

import math
import time
from dataclasses import asdict, dataclass, field
from typing import Callable

import numpy as np

from . import convexity, dynamics
from .foliation import (
    CANONICAL,
    SQRT2,
    TWO_PI,
    PlanePoint,
    chart_to_plane_arrays,
    jacobian_det_arrays,
    plane_to_chart_arrays,
)
from .function import (
    FunctionParams,
    derivative_scaling_probe,
    fd_gradient_arrays,
    gradient_arrays,
    kl_residual_arrays,
    log_f_arrays,
    log_gradient_norm_arrays,
)

SUITES = ("foliation", "convexity", "lojasiewicz", "smoothness", "dynamics")
GRID = 256
SCALING_RADII = 2.0 ** -np.arange(5, 21)
# closed form of (1/pi) * integral of h over a period, from the two elementary
# integrals int dth/(1+cos^2) = 2pi/sqrt2 and int dph/(sqrt2 - sin(ph)/2) = 2pi/sqrt(7/4)
A0_CLOSED_FORM = 2.0 - 6.0 / math.sqrt(7.0)


def make_rng(seed: int, stream: int) -> np.random.Generator:
    return np.random.Generator(np.random.Philox(np.random.SeedSequence([seed, stream])))


@dataclass
class CheckResult:
    suite_name: str
    samples: int
    worst_residual: float
    tolerance: float
    worst_witness: dict
    passed: bool
    description: str
    strict: bool = False
    seconds: float = 0.0

    def to_json(self, timing: bool = False) -> dict:
        out = {
            "suite_name": self.suite_name,
            "samples": self.samples,
            "worst_residual": _finite_or_none(self.worst_residual),
            "tolerance": self.tolerance,
            "strict": self.strict,
            "worst_witness": {k: _finite_or_none(v) for k, v in self.worst_witness.items()},
            "pass": self.passed,
            "description": self.description,
        }
        if timing:
            out["seconds"] = self.seconds
        return out


def _finite_or_none(v):
    if isinstance(v, (float, np.floating)):
        v = float(v)
        return v if math.isfinite(v) else None
    if isinstance(v, (np.integer,)):
        return int(v)
    return v


def _check(name, samples, worst, tol, witness, description, strict=False) -> CheckResult:
    worst = float(worst)
    ok = (worst < tol) if strict else (worst <= tol)
    return CheckResult(name, int(samples), worst, tol, witness, bool(ok and math.isfinite(worst)), description, strict)


def _argmax(v: np.ndarray) -> int:
    return int(np.argmax(v))


def _log_uniform_points(rng, n, r_lo, r_hi):
    r = np.exp(rng.uniform(math.log(r_lo), math.log(r_hi), n))
    a = rng.uniform(0.0, TWO_PI, n)
    return r * np.cos(a), r * np.sin(a)


# -- foliation ----------------------------------------------------------------


def foliation_checks(seed: int, samples: int, tau: float) -> list[CheckResult]:
    out = []
    rng = make_rng(seed, 1)
    t = rng.uniform(-20.0, 20.0, samples)
    th = rng.uniform(0.0, TWO_PI, samples)
    x, y = chart_to_plane_arrays(CANONICAL, t, th)
    t2, th2, _, _ = plane_to_chart_arrays(CANONICAL, x, y)
    err = np.maximum(np.abs(t2 - t), np.abs(np.angle(np.exp(1j * (th2 - th)))))
    i = _argmax(err)
    out.append(_check("foliation.round_trip", samples, err[i], 1e-9, {"t": t[i], "theta": th[i]},
                      "max of |dt| and angular error after chart -> plane -> chart"))

    tg = np.linspace(-20.0, 20.0, 4001)
    b = np.exp(tg)
    a = SQRT2 * b
    res = 4 * a * b * a * b - (a * a - b * b) ** 2
    rel = np.abs(res / (7.0 * np.exp(4 * tg)) - 1.0)
    i = _argmax(rel)
    out.append(_check("foliation.residual_closed_form", tg.size, rel[i], 1e-14, {"t": tg[i]},
                      "relative error of 4ab a'b' - (a^2-b^2)^2 against 7 e^{4t}"))

    det = jacobian_det_arrays(CANONICAL, t, th) * np.exp(-2 * t)
    viol = np.maximum((SQRT2 - 0.5) - det, det - (SQRT2 + 0.5))
    i = _argmax(viol)
    out.append(_check("foliation.jacobian_det_bounds", samples, viol[i], 1e-12, {"t": t[i], "theta": th[i]},
                      "det J e^{-2t} outside [sqrt2 - 1/2, sqrt2 + 1/2]"))

    rng = make_rng(seed, 2)
    qx, qy = _log_uniform_points(rng, samples, 1e-6, 1e6)
    ts = rng.uniform(-20.0, 20.0, samples)
    ct, st = np.cos(ts), np.sin(ts)
    bb = np.exp(ts)
    u = (qx * ct + qy * st) / (SQRT2 * bb)
    v = (-qx * st + qy * ct) / bb
    # rho'/rho in normalised variables
    ratio = -2.0 * ((u * u + v * v) + (SQRT2 - 1.0 / SQRT2) * u * v) / (u * u + v * v)
    i = _argmax(ratio)
    out.append(_check("foliation.rho_decreasing", samples, ratio[i], 0.0, {"x": qx[i], "y": qy[i], "t": ts[i]},
                      "max of rho'/rho; negative means rho strictly decreasing", strict=True))

    rng = make_rng(seed, 3)
    t0 = rng.uniform(-20.0, 20.0, samples)
    ds = rng.uniform(1e-6, 0.5, samples)
    th0 = rng.uniform(0.0, TWO_PI, samples)
    x0, y0 = chart_to_plane_arrays(CANONICAL, t0, th0)
    x1, y1 = chart_to_plane_arrays(CANONICAL, t0 + ds, th0)
    b0 = np.exp(t0)
    nx = -SQRT2 * b0 * np.sin(t0) * np.sin(th0) + b0 * np.cos(t0) * np.cos(th0)
    ny = SQRT2 * b0 * np.cos(t0) * np.sin(th0) + b0 * np.sin(t0) * np.cos(th0)
    witness = ((x1 - x0) * nx + (y1 - y0) * ny) / (ds * np.exp(2 * t0))
    viol = -witness
    i = _argmax(viol)
    out.append(_check("foliation.nesting_local", samples, viol[i], 0.0, {"t": t0[i], "s": t0[i] + ds[i], "theta": th0[i]},
                      "minus the normalised offset of M(s,theta) beyond the tangent of leaf t, 0 < s-t <= 1/2",
                      strict=True))

    r = np.hypot(x, y)
    viol = np.maximum(t - np.log(r), np.log(r) - (t + 0.5 * math.log(2.0)))
    i = _argmax(viol)
    out.append(_check("foliation.norm_sandwich", samples, viol[i], 1e-12, {"t": t[i], "theta": th[i]},
                      "log-violation of e^t <= |M(t,theta)| <= sqrt2 e^t"))
    return out


# -- convexity ----------------------------------------------------------------


def convexity_checks(seed: int, samples: int, tau: float) -> list[CheckResult]:
    out = []
    alphas = TWO_PI * np.arange(GRID) / GRID
    lams = np.logspace(-6, 6, GRID)
    scan = convexity.concavity_scan(tau, alphas, lams)
    witness = {"alpha": scan.alpha, "lambda": scan.lam}
    out.append(_check("convexity.concavity_scan", scan.samples, scan.worst, convexity.SLACK, witness,
                      "max of (2g''g - g'^2) lambda^2 e^{-4t} over the (alpha, lambda) grid"))
    out.append(_check("convexity.bound_consistency", scan.samples, scan.bound_gap, convexity.SLACK, witness,
                      "max of normalised residual minus 2tau(10tau-1)"))
    out.append(_check("convexity.sufficient_bound", 1, scan.bound, 0.0, {"tau": tau},
                      "2tau(10tau-1); negative means the concavity argument applies", strict=True))

    rng = make_rng(seed, 4)
    lam1 = np.exp(rng.uniform(math.log(1e-6), math.log(1e6), samples))
    lam2 = np.exp(rng.uniform(math.log(1e-6), math.log(1e6), samples))
    al = rng.uniform(0.0, TWO_PI, samples)
    G = lambda lam: np.sqrt(convexity._support_terms(tau, al, lam)[1])
    g1, g2, gm = G(lam1), G(lam2), G(0.5 * (lam1 + lam2))
    viol = (0.5 * (g1 + g2) - gm) / np.maximum(gm, 1.0)
    i = _argmax(viol)
    out.append(_check("convexity.support_midpoint", samples, viol[i], convexity.SLACK,
                      {"alpha": al[i], "lambda1": lam1[i], "lambda2": lam2[i]},
                      "midpoint concavity defect of lambda -> G_alpha(lambda)"))
    lo, hi = np.minimum(lam1, lam2), np.maximum(lam1, lam2)
    diff = G(hi) - G(lo)
    viol = np.where(hi > lo, -diff, -np.inf)
    i = _argmax(viol)
    out.append(_check("convexity.support_increasing", samples, viol[i], 0.0,
                      {"alpha": al[i], "lambda1": lo[i], "lambda2": hi[i]},
                      "minus G(lambda2) - G(lambda1) for lambda1 < lambda2", strict=True))

    rng = make_rng(seed, 5)
    hx, hy = _log_uniform_points(rng, samples, 1e-2, 1e2)
    hxx, hxy, hyy, emin, _ = convexity.hessian_fd_arrays(tau, hx, hy)
    hnorm = np.sqrt(hxx**2 + 2 * hxy**2 + hyy**2)
    viol = -emin / hnorm
    i = _argmax(viol)
    out.append(_check("convexity.hessian_min_eig", samples, viol[i], 1e-8, {"x": hx[i], "y": hy[i]},
                      "minus smallest Hessian eigenvalue over |H|, finite differences"))

    rng = make_rng(seed, 6)
    r1 = 100.0 * np.sqrt(rng.uniform(0.0, 1.0, samples))
    r2 = 100.0 * np.sqrt(rng.uniform(0.0, 1.0, samples))
    a1 = rng.uniform(0.0, TWO_PI, samples)
    a2 = rng.uniform(0.0, TWO_PI, samples)
    px, py, qx, qy = r1 * np.cos(a1), r1 * np.sin(a1), r2 * np.cos(a2), r2 * np.sin(a2)
    defect, scale = convexity.midpoint_arrays(tau, px, py, qx, qy)
    viol = defect / scale
    i = _argmax(viol)
    out.append(_check("convexity.midpoint", samples, viol[i], 1e-12,
                      {"px": px[i], "py": py[i], "qx": qx[i], "qy": qy[i]},
                      "f((P+Q)/2) - (f(P)+f(Q))/2 over max(f(P), f(Q), 1), pairs in the disc of radius 100"))
    return out


# -- lojasiewicz --------------------------------------------------------------


def _relative_margin(log_lhs, log_rhs):
    """``(lhs - rhs) / max(lhs, rhs)`` from logarithms."""
    d = log_lhs - log_rhs
    return np.where(d >= 0, -np.expm1(-d), np.expm1(d))


def lojasiewicz_checks(seed: int, samples: int, tau: float) -> list[CheckResult]:
    out = []
    params = FunctionParams(tau, unsafe=True)
    rng = make_rng(seed, 7)
    x, y = _log_uniform_points(rng, samples, 1e-6, 1e6)
    t, th, _, _ = plane_to_chart_arrays(CANONICAL, x, y)
    log_f = t / tau
    log_grad = log_gradient_norm_arrays(params, t, th)
    margin = _relative_margin(log_grad, math.log(tau / SQRT2) + (1 - tau) * log_f)
    viol = -margin
    i = _argmax(viol)
    out.append(_check("lojasiewicz.gradient_inequality", samples, viol[i], 1e-12, {"x": x[i], "y": y[i]},
                      "minus (|grad f| - tau/sqrt2 f^(1-tau)) over the larger side"))

    kl = kl_residual_arrays(params, t, th)
    viol = -kl / (kl + 1.0)
    i = _argmax(viol)
    out.append(_check("lojasiewicz.kl_inequality", samples, viol[i], 1e-12, {"x": x[i], "y": y[i]},
                      "minus (|grad(psi o f)| - 1) over |grad(psi o f)|, psi(s) = sqrt2/tau s^tau"))

    log_r = np.log(np.hypot(x, y))
    log_upper = log_r / tau
    log_lower = log_upper - 0.5 * math.log(2.0) / tau
    viol = np.maximum(log_lower - log_f, log_f - log_upper)
    i = _argmax(viol)
    out.append(_check("lojasiewicz.sandwich", samples, viol[i], 1e-12, {"x": x[i], "y": y[i]},
                      "log-violation of 2^{-1/(2tau)}|q|^{1/tau} <= f(q) <= |q|^{1/tau}"))

    tg = rng.uniform(-20.0, 20.0, 2000)
    errs, wit = [], []
    for theta, side in ((0.0, "lower"), (0.5 * math.pi, "upper")):
        ex, ey = chart_to_plane_arrays(CANONICAL, tg, np.full_like(tg, theta))
        lf = log_f_arrays(params, ex, ey)
        lr = np.log(np.hypot(ex, ey)) / tau
        bound = lr - 0.5 * math.log(2.0) / tau if side == "lower" else lr
        errs.append(np.abs(np.expm1(lf - bound)))
        wit.append(side)
    stacked = np.concatenate(errs)
    i = _argmax(stacked)
    side = wit[i // tg.size]
    out.append(_check("lojasiewicz.sandwich_equality", stacked.size, stacked[i], 1e-12,
                      {"t": tg[i % tg.size], "axis": 0.0 if side == "lower" else 1.0},
                      "relative gap to the lower bound on major axes and to the upper bound on minor axes"))
    return out


# -- smoothness ---------------------------------------------------------------


def smoothness_checks(seed: int, samples: int, tau: float) -> list[CheckResult]:
    out = []
    params = FunctionParams(tau, unsafe=True)
    rng = make_rng(seed, 8)
    x, y = _log_uniform_points(rng, samples, 1e-3, 1e3)
    gx, gy, _, _ = gradient_arrays(params, x, y)
    fx, fy = fd_gradient_arrays(params, x, y)
    rel = np.hypot(gx - fx, gy - fy) / np.hypot(gx, gy)
    i = _argmax(rel)
    out.append(_check("smoothness.gradient_fd", samples, rel[i], 1e-6, {"x": x[i], "y": y[i]},
                      "relative gap between the chart gradient and central differences with step 1e-4|q|"))
    for order, tol in ((1, 0.05), (2, 0.1)):
        slope = derivative_scaling_probe(params, order, SCALING_RADII)
        expected = 1.0 / tau - order
        out.append(_check(f"smoothness.scaling_order{order}", SCALING_RADII.size, abs(slope - expected), tol,
                          {"slope": slope, "expected": expected},
                          f"|fitted log-log slope of max |D^{order} f| on circles - (1/tau - {order})|"))
    return out


# -- dynamics -----------------------------------------------------------------


def dynamics_checks(seed: int, samples: int, tau: float) -> list[CheckResult]:
    out = []
    a0 = dynamics.fourier_a0(4096)
    a0_2 = dynamics.fourier_a0(8192)
    out.append(_check("dynamics.fourier_a0", 4096, abs(a0 - A0_CLOSED_FORM), 1e-12,
                      {"a0": a0, "closed_form": A0_CLOSED_FORM},
                      "trapezoidal (1/pi) int h against 2 - 6/sqrt7"))
    out.append(_check("dynamics.fourier_convergence", 8192, abs(a0_2 - a0), 1e-12, {"a0_4096": a0, "a0_8192": a0_2},
                      "change of the quadrature when doubling the nodes"))
    integral = math.pi * a0
    out.append(_check("dynamics.fourier_integral", 4096, abs(integral + 0.84) - 0.01, 0.0, {"integral": integral},
                      "int_0^{2pi} h lies in [-0.85, -0.83]"))
    out.append(_check("dynamics.a0_negative", 1, a0, 0.0, {"a0": a0}, "sign of a0", strict=True))

    start = PlanePoint(2.0, 0.0)
    controls = dynamics.FlowControls()
    fwd = dynamics.gradient_flow_time(tau, start, controls, "forward")
    bound = dynamics.blowup_bound(tau, start)
    t_event = fwd.event_param if fwd.event_param is not None else math.inf
    out.append(_check("dynamics.blowup_time", len(fwd), t_event - bound, 0.0,
                      {"t_event": t_event, "bound": bound, "r_max": controls.r_max},
                      "event time at |gamma| = r_max minus the analytic blow-up bound"))
    z = np.array([dynamics.norm_lower_bound(tau, start.norm, s) for s in fwd.param.tolist()])
    viol = 1.0 - fwd.norm / z
    i = _argmax(viol)
    out.append(_check("dynamics.norm_lower_bound", len(fwd), viol[i], 1e-6, {"time": fwd.param[i]},
                      "1 - |gamma(s)| / z(s) with z the comparison solution"))
    rel_steps = np.concatenate([-np.diff(fwd.norm) / fwd.norm[1:], -np.diff(fwd.f) / fwd.f[1:]])
    out.append(_check("dynamics.forward_monotone", len(fwd), rel_steps.max(), 0.0, {},
                      "norm and f strictly increase along the forward orbit", strict=True))
    margin = dynamics.outward_rate_margin(tau, fwd)
    viol = -margin / (fwd.f / fwd.norm)
    i = _argmax(viol)
    out.append(_check("dynamics.outward_rate", len(fwd), viol[i], 1e-12, {"time": fwd.param[i]},
                      "d|gamma|/dt >= f/|gamma| at samples, normalised by f/|gamma|"))
    ratio = dynamics.ratio_check(fwd)
    out.append(_check("dynamics.ratio_check", len(fwd), ratio if ratio is not None else math.inf, 1e-3, {},
                      "differenced dt/dtheta along the time orbit against -(1+sin^2)/(sqrt2 - cos sin)"))
    agree = dynamics.curve_agreement(fwd, controls)
    out.append(_check("dynamics.curve_agreement", len(fwd), agree, 1e-4, {},
                      "distance between the time orbit and the chart orbit at equal t, over |gamma|"))

    bwd = dynamics.gradient_flow_time(tau, start, controls, "backward")
    reached = bwd.status == "event"
    rel_steps = np.concatenate([np.diff(bwd.norm) / bwd.norm[1:], np.diff(bwd.f) / bwd.f[1:]])
    out.append(_check("dynamics.backward_descent", len(bwd), rel_steps.max() if reached else math.inf, 0.0,
                      {"final_norm": bwd.norm[-1], "r_min": controls.r_min},
                      "backward orbit reaches r_min with norm and f strictly decreasing", strict=True))

    orbit = dynamics.chart_orbit(0.0, (-50.0, 50.0), tau=tau)
    w = dynamics.winding(orbit, a0)
    out.append(_check("dynamics.spiral_theta", len(orbit), w.delta_theta + 45.0, 0.0,
                      {"delta_theta": w.delta_theta}, "delta theta over t in [-50, 50] must be <= -45"))
    out.append(_check("dynamics.spiral_alpha", len(orbit), -w.delta_alpha, 0.0,
                      {"delta_alpha": w.delta_alpha, "turns": w.turns}, "delta alpha must be positive", strict=True))
    wide = dynamics.winding(dynamics.chart_orbit(0.0, (-100.0, 100.0), tau=tau), a0)
    out.append(_check("dynamics.gap_growth", len(orbit), wide.bounded_gap / w.bounded_gap, 1.2,
                      {"gap_100": w.bounded_gap, "gap_200": wide.bounded_gap},
                      "ratio of bounded gaps when the t-span doubles"))
    out.append(_check("dynamics.a0_orbit", len(orbit), abs(wide.a0_orbit / a0 - 1.0), 0.01,
                      {"a0_orbit": wide.a0_orbit, "a0": a0},
                      "2 delta alpha / delta theta along the orbit against a0"))
    rate = wide.delta_alpha / 200.0
    lo = abs(a0) / 2 * (SQRT2 - 0.5) / 2
    hi = abs(a0) / 2 * (SQRT2 + 0.5)
    out.append(_check("dynamics.turn_rate", len(orbit), max(lo - rate, rate - hi), 0.0,
                      {"rate": rate, "low": lo, "high": hi},
                      "mean d alpha / dt within |a0|/2 times the bounds on |dtheta/dt|"))
    return out


SUITE_RUNNERS: dict[str, Callable[[int, int, float], list[CheckResult]]] = {
    "foliation": foliation_checks,
    "convexity": convexity_checks,
    "lojasiewicz": lojasiewicz_checks,
    "smoothness": smoothness_checks,
    "dynamics": dynamics_checks,
}


@dataclass
class VerificationReport:
    tau: float
    seed: int
    samples: int
    checks: list[CheckResult] = field(default_factory=list)

    @property
    def passed(self) -> bool:
        return all(c.passed for c in self.checks)

    def to_json(self, timing: bool = False) -> dict:
        return {
            "config": {
                "tau": self.tau,
                "seed": self.seed,
                "samples": self.samples,
                "grid": {"alpha": GRID, "lambda": GRID},
                "rng": "numpy Philox4x64, SeedSequence([seed, stream])",
            },
            "suites": [c.to_json(timing) for c in self.checks],
            "pass": self.passed,
        }


def run(suites, tau: float = 0.09, seed: int = 42, samples: int = 10_000) -> VerificationReport:
    names = list(SUITES) if suites in ("all", None) else [suites] if isinstance(suites, str) else list(suites)
    unknown = [n for n in names if n not in SUITE_RUNNERS]
    if unknown:
        raise KeyError(f"unknown suite(s): {', '.join(unknown)}")
    report = VerificationReport(tau, seed, samples)
    for name in names:
        start = time.perf_counter()
        checks = SUITE_RUNNERS[name](seed, samples, tau)
        elapsed = time.perf_counter() - start
        for c in checks:
            c.seconds = elapsed / len(checks)
        report.checks.extend(checks)
    return report

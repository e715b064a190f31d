"""Gradient orbits of the convex function and their winding.

Two representations of the same curves:

* time domain: ``gamma' = +-grad f(gamma)`` in Cartesian coordinates, which
  is what the blow-up estimate is about;
* chart domain: along an orbit the ellipse parameter ``t`` is strictly
  increasing, so the orbit is the graph of ``theta(t)`` solving the scalar
  autonomous equation ``dtheta/dt = -(sqrt2 - cos sin)/(1 + sin^2)``.  This one
  has a bounded right-hand side and covers any span of ``t`` without
  overflow.

The secant angle is ``alpha = t + phi(theta)`` where ``phi`` is the polar
angle of ``(sqrt2 cos theta, sin theta)``; ``alpha' = h(theta) theta'``.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from . import ode
from .foliation import CANONICAL, SQRT2, TWO_PI, PlanePoint, chart_to_plane_arrays, plane_to_chart
from .function import DEFAULT_TAU, FunctionParams, f_gradient, f_value, chart_arrays


@dataclass(frozen=True)
class FlowControls:
    r_min: float = 1e-2
    r_max: float = 1e6
    abs_tol: float = 1e-12
    rel_tol: float = 1e-10
    max_steps: int = 200_000
    refine: int = 1

    def __post_init__(self):
        if not 0.0 < self.r_min < self.r_max:
            raise ValueError("need 0 < r_min < r_max")
        if not (self.abs_tol > 0 and self.rel_tol > 0):
            raise ValueError("tolerances must be positive")
        if self.refine < 1:
            raise ValueError("refine must be at least 1")


@dataclass(frozen=True)
class TrajectorySample:
    param: float
    point: PlanePoint
    t: float
    theta: float  # unwrapped
    alpha: float
    f_val: float
    norm: float


@dataclass
class Trajectory:
    """Column-wise samples of one orbit; ``theta`` and ``alpha`` are unwrapped."""

    kind: str  # "time" or "chart"
    param: np.ndarray
    x: np.ndarray
    y: np.ndarray
    t: np.ndarray
    theta: np.ndarray
    alpha: np.ndarray
    f: np.ndarray
    norm: np.ndarray
    status: str = "completed"
    message: str = ""
    event_param: float | None = None
    n_steps: int = 0
    meta: dict = field(default_factory=dict)

    def __len__(self) -> int:
        return len(self.param)

    def __getitem__(self, i: int) -> TrajectorySample:
        return TrajectorySample(
            float(self.param[i]),
            PlanePoint(float(self.x[i]), float(self.y[i])),
            float(self.t[i]),
            float(self.theta[i]),
            float(self.alpha[i]),
            float(self.f[i]),
            float(self.norm[i]),
        )

    @property
    def success(self) -> bool:
        return self.status in ("completed", "event")

    def rows(self):
        cols = (self.param, self.x, self.y, self.t, self.theta, self.alpha, self.f, self.norm)
        return zip(*(c.tolist() for c in cols))


# -- angles -----------------------------------------------------------------


def phi_angle(theta):
    """Continuous polar angle of ``(sqrt2 cos theta, sin theta)``.

    Written as ``theta`` plus the bounded angle between ``(cos, sin)`` and the
    stretched point, so it is smooth for every real ``theta`` and needs no
    unwrapping.
    """
    c, s = np.cos(theta), np.sin(theta)
    out = theta + np.arctan((1.0 - SQRT2) * c * s / (SQRT2 * c * c + s * s))
    return float(out) if np.ndim(out) == 0 else out


def alpha_angle(t, theta):
    return t + phi_angle(theta)


def h_function(theta):
    c, s = np.cos(theta), np.sin(theta)
    out = SQRT2 / (1.0 + c * c) - (1.0 + s * s) / (SQRT2 - c * s)
    return float(out) if np.ndim(out) == 0 else out


def theta_rate(theta):
    """``dtheta/dt`` along an orbit parametrised by the ellipse parameter."""
    c, s = np.cos(theta), np.sin(theta)
    out = -(SQRT2 - c * s) / (1.0 + s * s)
    return float(out) if np.ndim(out) == 0 else out


def dt_dtheta(theta):
    c, s = np.cos(theta), np.sin(theta)
    return -(1.0 + s * s) / (SQRT2 - c * s)


def fourier_a0(n_points: int, offset: float = 0.0, func=h_function) -> float:
    """``(1/pi) * integral_0^{2pi} h`` by the periodic trapezoidal rule."""
    if n_points < 16:
        raise ValueError(f"need at least 16 nodes, got {n_points}")
    nodes = offset + TWO_PI * np.arange(n_points) / n_points
    values = np.broadcast_to(np.asarray(func(nodes), dtype=float), nodes.shape)
    return float(2.0 * math.fsum(values) / n_points)


# -- analytic blow-up estimates ----------------------------------------------


def blowup_bound(tau: float, start: PlanePoint) -> float:
    """Upper bound on the blow-up time of the forward orbit through ``start``."""
    if start.is_origin():
        raise ValueError("the origin is a rest point")
    if not 0.0 < tau < 0.5:
        raise ValueError("bound needs 0 < tau < 1/2")
    p = 1.0 / tau
    return math.exp(0.5 * p * math.log(2.0) - math.log(p - 2.0) - (p - 2.0) * math.log(start.norm))


def norm_lower_bound(tau: float, start_norm: float, time: float) -> float:
    """Solution of ``z' = 2^{-1/(2 tau)} z^{1/tau - 1}``, ``z(0) = start_norm``."""
    if not start_norm > 0.0:
        raise ValueError("start norm must be positive")
    p = 1.0 / tau
    base = start_norm ** (2.0 - p) - 2.0 ** (-0.5 * p) * (p - 2.0) * time
    if not base > 0.0:
        raise ValueError(f"time {time} is at or beyond the comparison blow-up")
    return base ** (-1.0 / (p - 2.0))


# -- orbits -----------------------------------------------------------------


def _unwrap_from(theta: np.ndarray, start: float | None = None) -> np.ndarray:
    out = np.unwrap(theta)
    if start is not None and len(out):
        out = out + TWO_PI * round((start - out[0]) / TWO_PI)
    return out


def gradient_flow_time(
    tau: float,
    start: PlanePoint,
    controls: FlowControls = FlowControls(),
    direction: str = "forward",
) -> Trajectory:
    """Integrate ``gamma' = grad f`` (forward) or ``-grad f`` (backward) in time.

    Forward runs stop when the norm reaches ``r_max``, backward runs when it
    drops to ``r_min``.  ``param`` is physical time (negative on backward
    runs).  A stalled step size is reported through ``status`` with the
    samples gathered so far.
    """
    if start.is_origin():
        raise ValueError("the origin is a rest point")
    if direction not in ("forward", "backward"):
        raise ValueError(f"direction must be 'forward' or 'backward', got {direction!r}")
    params = FunctionParams(tau, unsafe=True)
    sign = 1.0 if direction == "forward" else -1.0
    threshold = controls.r_max if direction == "forward" else controls.r_min

    def rhs(_s, z):
        g = f_gradient(params, PlanePoint(z[0], z[1]))
        return np.array([sign * g.gx, sign * g.gy])

    def event(_s, z):
        return math.hypot(z[0], z[1]) - threshold

    sol = ode.dopri5(
        rhs,
        0.0,
        [start.x, start.y],
        rtol=controls.rel_tol,
        atol=controls.abs_tol,
        max_steps=controls.max_steps,
        event=event,
        refine=controls.refine,
    )
    x, y = sol.y[:, 0], sol.y[:, 1]
    t, theta = chart_arrays(x, y)
    theta = _unwrap_from(theta)
    with np.errstate(over="ignore"):
        f = np.exp(t / tau)
    traj = Trajectory(
        kind="time",
        param=sign * sol.t,
        x=x,
        y=y,
        t=t,
        theta=theta,
        alpha=alpha_angle(t, theta),
        f=f,
        norm=np.hypot(x, y),
        status=sol.status,
        message=sol.message,
        event_param=None if sol.t_event is None else sign * sol.t_event,
        n_steps=sol.n_accepted,
        meta={"tau": tau, "direction": direction, "start": (start.x, start.y)},
    )
    if direction == "forward" and sol.status == "event":
        traj.meta["blowup_estimate"] = sol.t_event + blowup_bound(tau, PlanePoint(controls.r_max, 0.0))
    return traj


def _chart_solve(theta0: float, t0: float, t1: float, controls: FlowControls, t_eval=None) -> ode.Solution:
    """Solve the chart equation from ``t0`` to ``t1`` (either direction).

    Backward runs integrate ``s = -t`` forwards; ``Solution.t`` is mapped back
    to ``t`` and ``t_eval`` must then be decreasing.
    """
    sign = 1.0 if t1 >= t0 else -1.0
    sol = ode.dopri5(
        lambda _s, z: np.array([sign * theta_rate(z[0])]),
        sign * t0,
        [theta0],
        sign * t1,
        rtol=controls.rel_tol,
        atol=controls.abs_tol,
        max_steps=controls.max_steps,
        refine=controls.refine,
        t_eval=None if t_eval is None else sign * np.asarray(t_eval, dtype=float),
    )
    sol.t = sign * sol.t
    return sol


def _chart_trajectory(t, theta, tau, sol_status, message, n_steps, meta) -> Trajectory:
    x, y = chart_to_plane_arrays(CANONICAL, t, theta)
    with np.errstate(over="ignore"):
        f = np.exp(t / tau)
    return Trajectory(
        kind="chart",
        param=t.copy(),
        x=x,
        y=y,
        t=t,
        theta=theta,
        alpha=alpha_angle(t, theta),
        f=f,
        norm=np.hypot(x, y),
        status=sol_status,
        message=message,
        n_steps=n_steps,
        meta=meta,
    )


def chart_orbit(
    theta0: float,
    t_span: tuple[float, float],
    controls: FlowControls = FlowControls(),
    tau: float = DEFAULT_TAU,
    t_eval=None,
) -> Trajectory:
    """Orbit through ``M(t_lo, theta0)`` parametrised by the ellipse parameter."""
    t_lo, t_hi = map(float, t_span)
    if not t_lo < t_hi:
        raise ValueError("need t_lo < t_hi")
    sol = _chart_solve(theta0, t_lo, t_hi, controls, t_eval)
    meta = {"tau": tau, "theta0": theta0, "t_span": (t_lo, t_hi)}
    return _chart_trajectory(sol.t, sol.y[:, 0], tau, sol.status, sol.message, sol.n_accepted, meta)


def chart_orbit_through(
    start: PlanePoint,
    t_span: tuple[float, float],
    controls: FlowControls = FlowControls(),
    tau: float = DEFAULT_TAU,
) -> Trajectory:
    """Orbit through ``start`` restricted to ``t_lo <= t <= t_hi``.

    The chart equation is integrated from the start's own ellipse parameter
    towards both ends of the span; rows outside the span are dropped, so a
    start outside the span still yields the right piece of its orbit.
    """
    if start.is_origin():
        raise ValueError("the origin is a rest point")
    t_lo, t_hi = map(float, t_span)
    if not t_lo < t_hi:
        raise ValueError("need t_lo < t_hi")
    chart = plane_to_chart(CANONICAL, start).chart
    t0, th0 = chart.t, chart.theta
    ts, ths = [np.array([t0])], [np.array([th0])]
    status, message, steps = "completed", "", 0
    if t_lo < t0:
        back = _chart_solve(th0, t0, t_lo, controls)
        ts.insert(0, back.t[:0:-1])
        ths.insert(0, back.y[:0:-1, 0])
        steps += back.n_accepted
        if not back.success:
            status, message = back.status, back.message
    if t_hi > t0:
        fwd = _chart_solve(th0, t0, t_hi, controls)
        ts.append(fwd.t[1:])
        ths.append(fwd.y[1:, 0])
        steps += fwd.n_accepted
        if not fwd.success:
            status, message = fwd.status, fwd.message
    t = np.concatenate(ts)
    theta = np.concatenate(ths)
    keep = (t >= t_lo) & (t <= t_hi)
    meta = {"tau": tau, "start": (start.x, start.y), "t_start": t0, "theta0": th0, "t_span": (t_lo, t_hi)}
    return _chart_trajectory(t[keep], theta[keep], tau, status, message, steps, meta)


# -- analysis ---------------------------------------------------------------


@dataclass(frozen=True)
class WindingReport:
    delta_alpha: float
    turns: float
    delta_theta: float
    a0_estimate: float  # quadrature value used for the gap
    a0_orbit: float  # 2 * delta_alpha / delta_theta along this orbit
    bounded_gap: float  # max |(alpha - alpha_0) - a0/2 (theta - theta_0)|


A0_NODES = 4096


def winding(traj: Trajectory, a0: float | None = None) -> WindingReport:
    if len(traj) == 0:
        raise ValueError("empty trajectory")
    if a0 is None:
        a0 = fourier_a0(A0_NODES)
    d_alpha = traj.alpha - traj.alpha[0]
    d_theta = traj.theta - traj.theta[0]
    delta_alpha = float(d_alpha[-1])
    delta_theta = float(d_theta[-1])
    gap = float(np.max(np.abs(d_alpha - 0.5 * a0 * d_theta)))
    return WindingReport(
        delta_alpha=delta_alpha,
        turns=delta_alpha / TWO_PI,
        delta_theta=delta_theta,
        a0_estimate=a0,
        a0_orbit=2.0 * delta_alpha / delta_theta if delta_theta != 0.0 else math.nan,
        bounded_gap=gap,
    )


def ratio_check(traj: Trajectory) -> float | None:
    """Worst relative mismatch between differenced ``dt/dtheta`` and its closed form.

    The closed form is evaluated at the midpoint in ``theta`` of each pair of
    consecutive samples.  ``None`` when there is no pair to difference.
    """
    if len(traj) < 2:
        return None
    dt = np.diff(traj.t)
    dth = np.diff(traj.theta)
    keep = dth != 0.0
    if not keep.any():
        return None
    observed = dt[keep] / dth[keep]
    expected = dt_dtheta(0.5 * (traj.theta[:-1] + traj.theta[1:])[keep])
    return float(np.max(np.abs(observed / expected - 1.0)))


def curve_agreement(traj: Trajectory, controls: FlowControls = FlowControls()) -> float:
    """Max over samples of ``|gamma - M(t, theta_chart(t))| / |gamma|``.

    The chart orbit is started from the first sample and evaluated at every
    sample's ellipse parameter, which bounds the distance to the chart curve.
    """
    t = traj.t
    order = np.argsort(t)
    ts = t[order]
    keep = np.concatenate([[True], np.diff(ts) > 0])
    ts = ts[keep]
    if len(ts) < 2:
        return 0.0
    start_idx = int(np.argmin(t))
    chart = chart_orbit(float(traj.theta[start_idx]), (ts[0], ts[-1]), controls, traj.meta.get("tau", DEFAULT_TAU), t_eval=ts)
    theta_at = np.interp(t, chart.t, chart.theta)
    x, y = chart_to_plane_arrays(CANONICAL, t, theta_at)
    return float(np.max(np.hypot(x - traj.x, y - traj.y) / traj.norm))


def positive_x_crossings(traj: Trajectory) -> int:
    """Number of times the polyline crosses the positive x half-axis."""
    x, y = traj.x, traj.y
    n = 0
    for i in range(len(x) - 1):
        y0, y1 = y[i], y[i + 1]
        if (y0 < 0.0 <= y1) or (y1 < 0.0 <= y0):
            s = y0 / (y0 - y1)
            if x[i] + s * (x[i + 1] - x[i]) > 0.0:
                n += 1
    return n


def outward_rate_margin(tau: float, traj: Trajectory) -> np.ndarray:
    """``<grad f(q), q>/|q| - f(q)/|q|`` per sample; nonnegative by convexity."""
    params = FunctionParams(tau, unsafe=True)
    out = []
    for xi, yi in zip(traj.x.tolist(), traj.y.tolist()):
        q = PlanePoint(xi, yi)
        g = f_gradient(params, q)
        r = q.norm
        out.append(((g.gx * xi + g.gy * yi) - f_value(params, q)) / r)
    return np.array(out)

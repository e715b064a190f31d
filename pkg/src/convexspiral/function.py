"""The convex function whose level sets are the canonical rotating ellipses.

``f(M(t, theta)) = exp(t / tau)`` off the origin and ``f(0) = 0``.  The
foliation is fixed to ``a = sqrt(2) e^t, b = e^t``; only ``tau`` varies.

Magnitudes span ``1/tau`` decades per decade of radius, so most quantities are
also available in log form (``log f = t / tau``).
"""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .foliation import (
    CANONICAL,
    SQRT2,
    ChartPoint,
    PlanePoint,
    chart_to_plane_arrays,
    jacobian,
    jacobian_arrays,
    jacobian_det,
    jacobian_det_arrays,
    plane_to_chart,
    plane_to_chart_arrays,
)

DEFAULT_TAU = 0.09
FD_REL_STEP = 1e-4


@dataclass(frozen=True)
class FunctionParams:
    """Exponent parameter of ``phi(t) = exp(t / tau)``.

    Construction outside ``(0, 1/10)`` needs ``unsafe=True``; such instances
    are only meant for demonstrating where the convexity argument stops.
    """

    tau: float = DEFAULT_TAU
    unsafe: bool = False

    def __post_init__(self):
        if not self.tau > 0.0:
            raise ValueError(f"tau must be positive, got {self.tau}")
        if not self.unsafe and not self.tau < 0.1:
            raise ValueError(f"tau must lie in (0, 0.1), got {self.tau}")

    @property
    def k(self) -> int:
        """Largest integer strictly below ``1/tau``."""
        return math.ceil(1.0 / self.tau) - 1


@dataclass(frozen=True)
class GradientValue:
    gx: float
    gy: float
    chart: ChartPoint | None

    @property
    def norm(self) -> float:
        return math.hypot(self.gx, self.gy)


def _exp(x: float) -> float:
    try:
        return math.exp(x)
    except OverflowError:
        return math.inf


def log_f_value(params: FunctionParams, q: PlanePoint) -> float:
    if q.is_origin():
        return -math.inf
    return plane_to_chart(CANONICAL, q).chart.t / params.tau


def f_value(params: FunctionParams, q: PlanePoint) -> float:
    if q.is_origin():
        return 0.0
    return _exp(log_f_value(params, q))


def _gradient_factors(chart: ChartPoint) -> tuple[float, float, float]:
    """``(Y_theta, -X_theta, det)`` at a chart point."""
    jac = jacobian(CANONICAL, chart)
    return jac.y_theta, -jac.x_theta, jacobian_det(CANONICAL, chart)


def f_gradient(params: FunctionParams, q: PlanePoint) -> GradientValue:
    """Gradient from inverting ``J^T grad f = (f_t, 0)``.

    The result is ``f_t / det * (Y_theta, -X_theta)`` with ``f_t = exp(t/tau)/tau``.
    """
    if q.is_origin():
        return GradientValue(0.0, 0.0, None)
    chart = plane_to_chart(CANONICAL, q).chart
    nx, ny, det = _gradient_factors(chart)
    scale = _exp(chart.t / params.tau) / (params.tau * det)
    return GradientValue(scale * nx, scale * ny, chart)


def log_gradient_norm(params: FunctionParams, q: PlanePoint) -> float:
    if q.is_origin():
        return -math.inf
    chart = plane_to_chart(CANONICAL, q).chart
    nx, ny, det = _gradient_factors(chart)
    return chart.t / params.tau - math.log(params.tau) + math.log(math.hypot(nx, ny)) - math.log(det)


def sandwich_bounds(params: FunctionParams, q: PlanePoint) -> tuple[float, float]:
    """``(2^{-1/(2 tau)} |q|^{1/tau}, |q|^{1/tau})``."""
    r = q.norm
    if r == 0.0:
        return 0.0, 0.0
    p = 1.0 / params.tau
    log_upper = p * math.log(r)
    return _exp(log_upper - 0.5 * p * math.log(2.0)), _exp(log_upper)


def lojasiewicz_residual(params: FunctionParams, q: PlanePoint) -> float:
    """``|grad f| - (tau/sqrt 2) f^(1-tau)``; nonnegative everywhere."""
    if q.is_origin():
        return 0.0
    g = f_gradient(params, q)
    f = _exp(g.chart.t / params.tau)
    return g.norm - params.tau / SQRT2 * f ** (1.0 - params.tau)


def kl_residual(params: FunctionParams, q: PlanePoint) -> float:
    """``sqrt(2) f^(tau-1) |grad f| - 1``, i.e. ``|grad(psi o f)| - 1`` for ``psi(s) = sqrt(2)/tau s^tau``.

    The powers of ``e^{t/tau}`` cancel, leaving ``sqrt(2)/tau * e^t |n| / det``.
    """
    if q.is_origin():
        raise ValueError("the KL residual is not defined at the origin")
    chart = plane_to_chart(CANONICAL, q).chart
    nx, ny, det = _gradient_factors(chart)
    return SQRT2 / params.tau * math.exp(chart.t) * math.hypot(nx, ny) / det - 1.0


# -- array variants ---------------------------------------------------------


def log_f_arrays(params: FunctionParams, x, y):
    """``log f`` on arrays; the origin maps to ``-inf``."""
    x, y = np.broadcast_arrays(np.asarray(x, dtype=float), np.asarray(y, dtype=float))
    out = np.full(x.shape, -np.inf)
    nz = (x != 0.0) | (y != 0.0)
    if nz.any():
        t, _, _, _ = plane_to_chart_arrays(CANONICAL, x[nz], y[nz])
        out[nz] = t / params.tau
    return out


def f_arrays(params: FunctionParams, x, y):
    with np.errstate(over="ignore"):
        return np.exp(log_f_arrays(params, x, y))


def chart_arrays(x, y):
    t, theta, _, _ = plane_to_chart_arrays(CANONICAL, x, y)
    return t, theta


def gradient_arrays(params: FunctionParams, x, y):
    """Return ``(gx, gy, t, theta)``; points must avoid the origin."""
    t, theta = chart_arrays(x, y)
    _, x_theta, _, y_theta = jacobian_arrays(CANONICAL, t, theta)
    det = jacobian_det_arrays(CANONICAL, t, theta)
    with np.errstate(over="ignore"):
        scale = np.exp(t / params.tau) / (params.tau * det)
    return scale * y_theta, -scale * x_theta, t, theta


def log_gradient_norm_arrays(params: FunctionParams, t, theta):
    _, x_theta, _, y_theta = jacobian_arrays(CANONICAL, t, theta)
    det = jacobian_det_arrays(CANONICAL, t, theta)
    return t / params.tau - math.log(params.tau) + np.log(np.hypot(x_theta, y_theta)) - np.log(det)


def kl_residual_arrays(params: FunctionParams, t, theta):
    _, x_theta, _, y_theta = jacobian_arrays(CANONICAL, t, theta)
    det = jacobian_det_arrays(CANONICAL, t, theta)
    return SQRT2 / params.tau * np.exp(t) * np.hypot(x_theta, y_theta) / det - 1.0


# -- smoothness scaling -----------------------------------------------------

_FD_STEP_BY_ORDER = {1: 1e-4, 2: 1e-3, 3: 1e-2}
MIN_PROBE_RADIUS = 2.0**-20


def _derivative_magnitude(params: FunctionParams, order: int, x, y, h):
    """Frobenius norm of the order-``order`` derivative tensor by central differences."""
    if order == 1:
        fx = (f_arrays(params, x + h, y) - f_arrays(params, x - h, y)) / (2 * h)
        fy = (f_arrays(params, x, y + h) - f_arrays(params, x, y - h)) / (2 * h)
        return np.hypot(fx, fy)
    if order == 2:
        f0 = f_arrays(params, x, y)
        fxx = (f_arrays(params, x + h, y) - 2 * f0 + f_arrays(params, x - h, y)) / h**2
        fyy = (f_arrays(params, x, y + h) - 2 * f0 + f_arrays(params, x, y - h)) / h**2
        fxy = (
            f_arrays(params, x + h, y + h)
            - f_arrays(params, x + h, y - h)
            - f_arrays(params, x - h, y + h)
            + f_arrays(params, x - h, y - h)
        ) / (4 * h**2)
        return np.sqrt(fxx**2 + 2 * fxy**2 + fyy**2)

    def third(dx, dy):
        # directional third difference along (dx, dy)
        return (
            f_arrays(params, x + 2 * h * dx, y + 2 * h * dy)
            - 2 * f_arrays(params, x + h * dx, y + h * dy)
            + 2 * f_arrays(params, x - h * dx, y - h * dy)
            - f_arrays(params, x - 2 * h * dx, y - 2 * h * dy)
        ) / (2 * h**3)

    # recover f_xxx, f_xxy, f_xyy, f_yyy from four directions
    s = 1.0 / SQRT2
    dirs = [(1.0, 0.0), (0.0, 1.0), (s, s), (s, -s)]
    d = [third(dx, dy) for dx, dy in dirs]
    fxxx, fyyy = d[0], d[1]
    # D_{(1,1)/sqrt2}^3 f = (fxxx + 3fxxy + 3fxyy + fyyy) / 2^{3/2}, similarly for (1,-1)
    plus = d[2] * 2 * SQRT2 - fxxx - fyyy
    minus = d[3] * 2 * SQRT2 - fxxx + fyyy
    fxxy = (plus - minus) / 6.0
    fxyy = (plus + minus) / 6.0
    return np.sqrt(fxxx**2 + 3 * fxxy**2 + 3 * fxyy**2 + fyyy**2)


def derivative_scaling_probe(
    params: FunctionParams,
    order: int,
    radii,
    n_theta: int = 256,
) -> float:
    """Slope of ``log max_{|q|=r} |D^order f(q)|`` against ``log r``.

    Expected value ``1/tau - order``.  Steps scale with the radius
    (``1e-4 r`` for gradients, coarser for higher orders to keep roundoff in
    check).
    """
    if order not in (1, 2, 3):
        raise ValueError(f"order must be 1, 2 or 3, got {order}")
    radii = np.asarray(radii, dtype=float)
    if radii.size < 2:
        raise ValueError("need at least two radii")
    if radii.min() < MIN_PROBE_RADIUS or radii.max() > 1.0:
        raise ValueError("radii must lie in [2**-20, 1]")
    phi = 2 * np.pi * np.arange(n_theta) / n_theta
    log_max = []
    for r in radii:
        x, y = r * np.cos(phi), r * np.sin(phi)
        mag = _derivative_magnitude(params, order, x, y, _FD_STEP_BY_ORDER[order] * r)
        log_max.append(math.log(mag.max()))
    slope, _ = np.polyfit(np.log(radii), np.array(log_max), 1)
    return float(slope)


def fd_gradient_arrays(params: FunctionParams, x, y, rel_step: float = FD_REL_STEP):
    """Central-difference gradient with step ``rel_step * |q|``."""
    h = rel_step * np.hypot(x, y)
    gx = (f_arrays(params, x + h, y) - f_arrays(params, x - h, y)) / (2 * h)
    gy = (f_arrays(params, x, y + h) - f_arrays(params, x, y - h)) / (2 * h)
    return gx, gy

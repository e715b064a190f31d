"""Rotating-ellipse foliation of the punctured plane.

The leaf with parameter ``t`` is the ellipse with semi-axes ``a(t) = mu*exp(nu*t)``
and ``b(t) = exp(nu*t)``, rotated by the angle ``t``.  A point on it is

    M(t, theta) = R(t) @ (a(t) cos(theta), b(t) sin(theta)).

The inverse map solves ``rho(t) = 1`` for the unique leaf through a point, where
``rho`` is strictly decreasing in ``t`` whenever the foliation condition
``4 a b a' b' > (a^2 - b^2)^2`` holds.

Scalar functions take and return the small dataclasses below and use ``math``;
the ``*_arrays`` variants broadcast over numpy arrays for bulk sampling.
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from typing import NamedTuple

import numpy as np

TWO_PI = 2.0 * math.pi
SQRT2 = math.sqrt(2.0)

RHO_TOL = 1e-13
MAX_ITER = 100
BRACKET_PAD = 1e-3


class ConvergenceError(RuntimeError):
    """Raised when chart inversion exhausts its iteration budget."""


@dataclass(frozen=True)
class FoliationParams:
    mu: float = SQRT2
    nu: float = 1.0

    def __post_init__(self):
        if not self.mu > 1.0:
            raise ValueError(f"mu must exceed 1, got {self.mu}")
        if not self.nu > 0.0:
            raise ValueError(f"nu must be positive, got {self.nu}")

    @property
    def critical_nu(self) -> float:
        """Smallest rate for which the exponential family foliates the plane."""
        return (self.mu**2 - 1.0) / (2.0 * self.mu)

    @property
    def is_foliation(self) -> bool:
        return self.nu > self.critical_nu


CANONICAL = FoliationParams()


def reduce_angle(theta: float) -> float:
    """Representative of ``theta`` in ``[0, 2*pi)``."""
    r = float(theta) % TWO_PI
    return 0.0 if r == TWO_PI else r


@dataclass(frozen=True)
class ChartPoint:
    t: float
    theta: float

    def __post_init__(self):
        object.__setattr__(self, "theta", reduce_angle(self.theta))


@dataclass(frozen=True)
class PlanePoint:
    x: float
    y: float

    @property
    def norm(self) -> float:
        return math.hypot(self.x, self.y)

    def is_origin(self) -> bool:
        return self.x == 0.0 and self.y == 0.0


@dataclass(frozen=True)
class InversionResult:
    chart: ChartPoint
    iterations: int
    residual: float


class Jacobian(NamedTuple):
    x_t: float
    x_theta: float
    y_t: float
    y_theta: float

    @property
    def det(self) -> float:
        return self.x_t * self.y_theta - self.y_t * self.x_theta


def axes(params: FoliationParams, t: float) -> tuple[float, float, float, float]:
    """Return ``(a, b, a', b')`` at ``t``."""
    b = math.exp(params.nu * t)
    a = params.mu * b
    return a, b, params.nu * a, params.nu * b


def chart_to_plane(params: FoliationParams, p: ChartPoint) -> PlanePoint:
    a, b, _, _ = axes(params, p.t)
    ct, st = math.cos(p.t), math.sin(p.t)
    c, s = math.cos(p.theta), math.sin(p.theta)
    return PlanePoint(a * ct * c - b * st * s, a * st * c + b * ct * s)


def jacobian(params: FoliationParams, p: ChartPoint) -> Jacobian:
    a, b, da, db = axes(params, p.t)
    ct, st = math.cos(p.t), math.sin(p.t)
    c, s = math.cos(p.theta), math.sin(p.theta)
    return Jacobian(
        x_t=da * ct * c - a * st * c - db * st * s - b * ct * s,
        x_theta=-a * ct * s - b * st * c,
        y_t=da * st * c + a * ct * c + db * ct * s - b * st * s,
        y_theta=-a * st * s + b * ct * c,
    )


def jacobian_det(params: FoliationParams, p: ChartPoint) -> float:
    """Closed form ``a'b cos^2 + ab' sin^2 + (a^2-b^2) cos sin``."""
    a, b, da, db = axes(params, p.t)
    c, s = math.cos(p.theta), math.sin(p.theta)
    return da * b * c * c + a * db * s * s + (a * a - b * b) * c * s


def foliation_residual(params: FoliationParams, t: float) -> float:
    a, b, da, db = axes(params, t)
    return 4.0 * a * b * da * db - (a * a - b * b) ** 2


def outward_normal(params: FoliationParams, p: ChartPoint) -> tuple[float, float]:
    # not unit length
    jac = jacobian(params, p)
    return jac.y_theta, -jac.x_theta


def nesting_witness(params: FoliationParams, t: float, s: float, theta: float) -> float:
    """Signed offset of ``M(s, theta)`` beyond the tangent line of leaf ``t`` at ``theta``.

    Positive for ``t < s <= t + delta`` with ``delta`` depending on the family;
    for the canonical family the offset can turn negative once ``s - t`` is
    close to one, because the outer leaf is also rotated.
    """
    if not s > t:
        raise ValueError(f"nesting witness needs s > t, got t={t}, s={s}")
    inner = chart_to_plane(params, ChartPoint(t, theta))
    outer = chart_to_plane(params, ChartPoint(s, theta))
    nx, ny = outward_normal(params, ChartPoint(t, theta))
    return (outer.x - inner.x) * nx + (outer.y - inner.y) * ny


def _check_point(q: PlanePoint) -> None:
    if q.is_origin():
        raise ValueError("the origin is not covered by the foliation chart")


def rho(params: FoliationParams, q: PlanePoint, t: float) -> float:
    _check_point(q)
    a, b, _, _ = axes(params, t)
    ct, st = math.cos(t), math.sin(t)
    u = q.x * ct + q.y * st
    v = -q.x * st + q.y * ct
    return (u / a) ** 2 + (v / b) ** 2


def rho_prime(params: FoliationParams, q: PlanePoint, t: float) -> float:
    _check_point(q)
    a, b, da, db = axes(params, t)
    ct, st = math.cos(t), math.sin(t)
    u = q.x * ct + q.y * st
    v = -q.x * st + q.y * ct
    quad = da / a * b * b * u * u + (a * a - b * b) * u * v + db / b * a * a * v * v
    return -2.0 * quad / (a * a * b * b)


def bracket(params: FoliationParams, r: float) -> tuple[float, float]:
    """Interval of leaf parameters that can pass through a point of norm ``r``.

    Follows from ``b(t) <= r <= a(t)``, padded so that roots on the axes of a
    leaf sit strictly inside.
    """
    lr = math.log(r)
    pad = BRACKET_PAD / params.nu
    return (lr - math.log(params.mu)) / params.nu - pad, lr / params.nu + pad


def plane_to_chart(
    params: FoliationParams,
    q: PlanePoint,
    tol: float = RHO_TOL,
    max_iter: int = MAX_ITER,
) -> InversionResult:
    """Invert the chart by safeguarded Newton on ``log rho``.

    Newton steps that leave the current bracket are replaced by bisection.
    Once ``|rho - 1| <= tol`` one more clamped Newton correction is applied,
    which pushes the root to full double precision.
    """
    _check_point(q)
    if not params.is_foliation:
        raise ValueError("parameters violate the foliation condition; rho is not monotone")
    lo, hi = bracket(params, q.norm)
    t = 0.5 * (lo + hi)
    mu, nu = params.mu, params.nu
    skew = mu - 1.0 / mu
    x, y = q.x, q.y
    for it in range(1, max_iter + 1):
        b = math.exp(nu * t)
        a = mu * b
        ct, st = math.cos(t), math.sin(t)
        u = (x * ct + y * st) / a
        v = (-x * st + y * ct) / b
        r = u * u + v * v
        if r > 1.0:
            lo = t
        else:
            hi = t
        dr = -2.0 * (nu * r + skew * u * v)
        step = -math.log(r) * r / dr
        t_new = t + step
        if not lo <= t_new <= hi:
            t_new = 0.5 * (lo + hi)
        if abs(r - 1.0) <= tol:
            t = t_new
            break
        t = t_new
        if hi - lo <= 4e-16 * max(1.0, abs(t)):
            break
    else:
        raise ConvergenceError(f"chart inversion did not converge for {q}")

    b = math.exp(nu * t)
    a = mu * b
    ct, st = math.cos(t), math.sin(t)
    u = (x * ct + y * st) / a
    v = (-x * st + y * ct) / b
    residual = abs(u * u + v * v - 1.0)
    if residual > tol:
        raise ConvergenceError(f"chart inversion stalled at |rho-1|={residual:.3e} for {q}")
    return InversionResult(ChartPoint(t, math.atan2(v, u)), it, residual)


# -- array variants ---------------------------------------------------------


def axes_arrays(params: FoliationParams, t):
    b = np.exp(params.nu * np.asarray(t, dtype=float))
    a = params.mu * b
    return a, b, params.nu * a, params.nu * b


def chart_to_plane_arrays(params: FoliationParams, t, theta):
    a, b, _, _ = axes_arrays(params, t)
    ct, st = np.cos(t), np.sin(t)
    c, s = np.cos(theta), np.sin(theta)
    return a * ct * c - b * st * s, a * st * c + b * ct * s


def jacobian_arrays(params: FoliationParams, t, theta):
    """Return ``(X_t, X_theta, Y_t, Y_theta)`` as arrays."""
    a, b, da, db = axes_arrays(params, t)
    ct, st = np.cos(t), np.sin(t)
    c, s = np.cos(theta), np.sin(theta)
    x_t = da * ct * c - a * st * c - db * st * s - b * ct * s
    x_theta = -a * ct * s - b * st * c
    y_t = da * st * c + a * ct * c + db * ct * s - b * st * s
    y_theta = -a * st * s + b * ct * c
    return x_t, x_theta, y_t, y_theta


def jacobian_det_arrays(params: FoliationParams, t, theta):
    a, b, da, db = axes_arrays(params, t)
    c, s = np.cos(theta), np.sin(theta)
    return da * b * c * c + a * db * s * s + (a * a - b * b) * c * s


def plane_to_chart_arrays(params: FoliationParams, x, y, tol: float = RHO_TOL, max_iter: int = MAX_ITER):
    """Vectorised :func:`plane_to_chart`.

    Returns ``(t, theta, iterations, residual)``; every element iterates in
    lockstep and frozen elements keep their converged value.
    """
    x = np.asarray(x, dtype=float)
    y = np.asarray(y, dtype=float)
    x, y = np.broadcast_arrays(x, y)
    if np.any((x == 0.0) & (y == 0.0)):
        raise ValueError("the origin is not covered by the foliation chart")
    if not params.is_foliation:
        raise ValueError("parameters violate the foliation condition; rho is not monotone")
    mu, nu = params.mu, params.nu
    skew = mu - 1.0 / mu
    lr = np.log(np.hypot(x, y))
    lo = (lr - math.log(mu)) / nu - BRACKET_PAD / nu
    hi = lr / nu + BRACKET_PAD / nu
    t = 0.5 * (lo + hi)
    active = np.ones(x.shape, dtype=bool)
    iters = np.zeros(x.shape, dtype=int)
    for _ in range(max_iter):
        if not active.any():
            break
        b = np.exp(nu * t)
        a = mu * b
        ct, st = np.cos(t), np.sin(t)
        u = (x * ct + y * st) / a
        v = (-x * st + y * ct) / b
        r = u * u + v * v
        lo = np.where(active & (r > 1.0), t, lo)
        hi = np.where(active & (r <= 1.0), t, hi)
        dr = -2.0 * (nu * r + skew * u * v)
        t_new = t - np.log(r) * r / dr
        outside = ~((lo <= t_new) & (t_new <= hi))
        t_new = np.where(outside, 0.5 * (lo + hi), t_new)
        done = (np.abs(r - 1.0) <= tol) | (hi - lo <= 4e-16 * np.maximum(1.0, np.abs(t)))
        iters = iters + active
        t = np.where(active, t_new, t)
        active = active & ~done
    if active.any():
        raise ConvergenceError(f"chart inversion did not converge for {int(active.sum())} points")

    b = np.exp(nu * t)
    a = mu * b
    ct, st = np.cos(t), np.sin(t)
    u = (x * ct + y * st) / a
    v = (-x * st + y * ct) / b
    residual = np.abs(u * u + v * v - 1.0)
    if np.any(residual > tol):
        raise ConvergenceError(f"chart inversion stalled, worst |rho-1|={residual.max():.3e}")
    theta = np.mod(np.arctan2(v, u), TWO_PI)
    theta = np.where(theta == TWO_PI, 0.0, theta)
    return t, theta, iters, residual

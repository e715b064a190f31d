"""Convexity audit through support functions of the sublevel sets.

A quasiconvex function is convex iff ``lambda -> sigma_[f<=lambda](p)`` is
concave for every direction ``p``.  For the canonical ellipses and
``lambda = exp(t/tau)`` the support function in direction ``alpha`` is
``G = sqrt(g)`` with ``g = e^{2t} (cos^2(t - alpha) + 1)``; concavity of ``G``
reduces to ``2 g'' g - g'^2 <= 0``.

The closed forms for ``g'`` and ``g''`` are evaluated as displayed in the
construction and cross-checked against finite differences in the tests.  A
finite-difference Hessian and a midpoint test give two checks that do not
rely on the support-function route at all.
"""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .foliation import PlanePoint
from .function import FunctionParams, f_arrays, f_value

SLACK = 1e-12
HESSIAN_REL_STEP = 1e-4


@dataclass(frozen=True)
class SupportEval:
    alpha: float
    lam: float
    g: float
    g_prime: float
    g_double_prime: float
    residual: float

    @property
    def scale(self) -> float:
        """Natural magnitude ``e^{4t}/lambda^2`` of the residual."""
        return self.g * self.g / (self.lam * self.lam)


def _support_terms(tau, alpha, lam):
    lam = np.asarray(lam, dtype=float)
    t = tau * np.log(lam)
    dt = tau / lam
    ddt = -tau / lam**2
    u = t - alpha
    c, s = np.cos(u), np.sin(u)
    e2t = np.exp(2 * t)
    base = c * c + 1.0
    mixed = c * c + 1.0 - c * s
    g = e2t * base
    g1 = 2 * e2t * dt * mixed
    g2 = 2 * e2t * (dt * dt * (3.0 - 4.0 * c * s) + ddt * mixed)
    return t, g, g1, g2


def support_g(tau: float, alpha: float, lam: float) -> SupportEval:
    if not lam > 0.0:
        raise ValueError(f"level must be positive, got {lam}")
    _, g, g1, g2 = (float(v) for v in _support_terms(tau, alpha, lam))
    return SupportEval(alpha, lam, g, g1, g2, 2 * g2 * g - g1 * g1)


def support_G(tau: float, alpha: float, lam: float) -> float:
    """Support function of ``[f <= lam]`` in direction ``(cos alpha, sin alpha)``."""
    return math.sqrt(support_g(tau, alpha, lam).g)


def sufficient_bound(tau: float) -> float:
    """Normalised upper bound ``2 tau (10 tau - 1)`` on ``(2g''g - g'^2) lambda^2 / e^{4t}``."""
    return 2 * tau * (10 * tau - 1)


@dataclass(frozen=True)
class ScanResult:
    tau: float
    worst: float  # max normalised residual, (2g''g - g'^2) * lambda^2 / e^{4t}
    alpha: float
    lam: float
    bound: float
    bound_gap: float  # max of (normalised residual - bound); <= 0 when the bound holds
    samples: int
    tolerance: float = SLACK

    @property
    def concave(self) -> bool:
        return self.worst <= self.tolerance

    @property
    def bound_holds(self) -> bool:
        return self.bound_gap <= self.tolerance

    @property
    def bound_negative(self) -> bool:
        return self.bound < 0.0


def concavity_scan(tau: float, alpha_grid, lambda_grid, tolerance: float = SLACK) -> ScanResult:
    """Worst normalised concavity residual over an ``(alpha, lambda)`` grid.

    Residuals are divided by ``e^{4t}/lambda^2`` so one tolerance is meaningful
    across the whole log-grid.  Ties resolve to the lexicographically first
    ``(alpha, lambda)`` in grid order.
    """
    alpha_grid = np.atleast_1d(np.asarray(alpha_grid, dtype=float))
    lambda_grid = np.atleast_1d(np.asarray(lambda_grid, dtype=float))
    if alpha_grid.size == 0 or lambda_grid.size == 0:
        raise ValueError("grids must be non-empty")
    if np.any(lambda_grid <= 0):
        raise ValueError("levels must be positive")
    A, L = np.meshgrid(alpha_grid, lambda_grid, indexing="ij")
    t, g, g1, g2 = _support_terms(tau, A, L)
    residual = 2 * g2 * g - g1 * g1
    normalised = residual * L * L / np.exp(4 * t)
    idx = np.unravel_index(int(np.argmax(normalised)), normalised.shape)
    bound = sufficient_bound(tau)
    return ScanResult(
        tau=tau,
        worst=float(normalised[idx]),
        alpha=float(A[idx]),
        lam=float(L[idx]),
        bound=bound,
        bound_gap=float(np.max(normalised - bound)),
        samples=int(normalised.size),
        tolerance=tolerance,
    )


def nesting_check(tau: float, alpha: float, lambda1: float, lambda2: float) -> float:
    if not 0.0 < lambda1 < lambda2:
        raise ValueError(f"need 0 < lambda1 < lambda2, got {lambda1}, {lambda2}")
    return support_G(tau, alpha, lambda2) - support_G(tau, alpha, lambda1)


@dataclass(frozen=True)
class HessianEval:
    hxx: float
    hxy: float
    hyy: float
    min_eig: float
    max_eig: float

    @property
    def norm(self) -> float:
        return math.sqrt(self.hxx**2 + 2 * self.hxy**2 + self.hyy**2)


def _eig2(hxx, hxy, hyy):
    mean = 0.5 * (hxx + hyy)
    rad = np.hypot(0.5 * (hxx - hyy), hxy)
    return mean - rad, mean + rad


def hessian_fd_arrays(tau: float, x, y, rel_step: float = HESSIAN_REL_STEP):
    """Central-difference Hessians; returns ``(hxx, hxy, hyy, min_eig, max_eig)``."""
    params = FunctionParams(tau, unsafe=True)
    x = np.asarray(x, dtype=float)
    y = np.asarray(y, dtype=float)
    h = rel_step * np.hypot(x, y)
    f0 = f_arrays(params, x, y)
    hxx = (f_arrays(params, x + h, y) - 2 * f0 + f_arrays(params, x - h, y)) / h**2
    hyy = (f_arrays(params, x, y + h) - 2 * f0 + f_arrays(params, x, y - h)) / h**2
    hxy = (
        f_arrays(params, x + h, y + h)
        - f_arrays(params, x + h, y - h)
        - f_arrays(params, x - h, y + h)
        + f_arrays(params, x - h, y - h)
    ) / (4 * h**2)
    lo, hi = _eig2(hxx, hxy, hyy)
    return hxx, hxy, hyy, lo, hi


def hessian_fd(tau: float, q: PlanePoint) -> HessianEval:
    if q.is_origin():
        raise ValueError("finite-difference Hessian is not taken at the origin")
    hxx, hxy, hyy, lo, hi = (float(v) for v in hessian_fd_arrays(tau, q.x, q.y))
    return HessianEval(hxx, hxy, hyy, lo, hi)


def midpoint_check(tau: float, p: PlanePoint, q: PlanePoint) -> float:
    """``f((p+q)/2) - (f(p) + f(q))/2``; nonpositive for convex ``f``."""
    params = FunctionParams(tau, unsafe=True)
    mid = PlanePoint(0.5 * (p.x + q.x), 0.5 * (p.y + q.y))
    return f_value(params, mid) - 0.5 * (f_value(params, p) + f_value(params, q))


def midpoint_arrays(tau: float, px, py, qx, qy):
    params = FunctionParams(tau, unsafe=True)
    fp = f_arrays(params, px, py)
    fq = f_arrays(params, qx, qy)
    fm = f_arrays(params, 0.5 * (px + qx), 0.5 * (py + qy))
    return fm - 0.5 * (fp + fq), np.maximum(np.maximum(fp, fq), 1.0)

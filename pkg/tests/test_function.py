from __future__ import annotations

import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from scipy.optimize import brentq

from convexspiral.foliation import CANONICAL, SQRT2, TWO_PI, ChartPoint, PlanePoint, chart_to_plane
from convexspiral.function import (
    DEFAULT_TAU,
    FunctionParams,
    derivative_scaling_probe,
    f_arrays,
    f_gradient,
    f_value,
    fd_gradient_arrays,
    gradient_arrays,
    kl_residual,
    kl_residual_arrays,
    log_f_arrays,
    log_f_value,
    log_gradient_norm,
    log_gradient_norm_arrays,
    lojasiewicz_residual,
    sandwich_bounds,
)

P = FunctionParams()
TAU = DEFAULT_TAU
RADII = 2.0 ** -np.arange(5, 21)


def polar(r, a):
    return PlanePoint(r * math.cos(a), r * math.sin(a))


log_radius = st.floats(math.log(1e-3), math.log(1e3))
angle = st.floats(0.0, TWO_PI, exclude_max=True)


def test_params():
    assert P.tau == 0.09 and P.k == 11
    assert FunctionParams(0.05).k == 19
    assert FunctionParams(0.099).k == 10
    for bad in (0.0, -0.1, 0.1, 0.2):
        with pytest.raises(ValueError):
            FunctionParams(bad)
    assert FunctionParams(0.2, unsafe=True).k == 4


def test_values():
    assert f_value(P, PlanePoint(SQRT2, 0.0)) == pytest.approx(1.0)
    assert f_value(P, PlanePoint(0.0, 1.0)) == pytest.approx(1.0)
    assert f_value(P, PlanePoint(0.0, 0.0)) == 0.0
    assert log_f_value(P, PlanePoint(0.0, 0.0)) == -math.inf


def test_value_at_two_zero():
    t_star = brentq(lambda t: math.exp(2 * t) - 2 - 2 * math.sin(t) ** 2, 0.3, 0.7, xtol=1e-15)
    q = PlanePoint(2.0, 0.0)
    assert f_value(P, q) == pytest.approx(math.exp(t_star / TAU), rel=1e-12)
    lo, hi = sandwich_bounds(P, q)
    assert lo == pytest.approx(2 ** (-1 / (2 * TAU)) * 2 ** (1 / TAU))
    assert hi == pytest.approx(2 ** (1 / TAU))
    assert lo <= f_value(P, q) <= hi


def test_gradient_examples():
    g = f_gradient(P, PlanePoint(0.0, 0.0))
    assert (g.gx, g.gy) == (0.0, 0.0) and g.chart is None
    g = f_gradient(P, PlanePoint(SQRT2, 0.0))
    assert g.gx == pytest.approx(1 / (TAU * SQRT2)) and g.gy == pytest.approx(0.0, abs=1e-12)
    # at (0, 1): X_theta = -sqrt2, Y_theta = 0, det = sqrt2
    g = f_gradient(P, PlanePoint(0.0, 1.0))
    assert g.gx == pytest.approx(0.0, abs=1e-12) and g.gy == pytest.approx(1 / TAU)


@settings(max_examples=200)
@given(log_radius, angle)
def test_gradient_finite_differences(lr, a):
    q = polar(math.exp(lr), a)
    g = f_gradient(P, q)
    fx, fy = fd_gradient_arrays(P, np.array([q.x]), np.array([q.y]))
    assert math.hypot(g.gx - fx[0], g.gy - fy[0]) <= 1e-6 * g.norm


def test_gradient_fd_independent_steps():
    # plain scalar central differences, separate from the array helper
    rng = np.random.default_rng(11)
    for _ in range(200):
        q = polar(math.exp(rng.uniform(-5, 5)), rng.uniform(0, TWO_PI))
        h = 1e-5 * q.norm
        fx = (f_value(P, PlanePoint(q.x + h, q.y)) - f_value(P, PlanePoint(q.x - h, q.y))) / (2 * h)
        fy = (f_value(P, PlanePoint(q.x, q.y + h)) - f_value(P, PlanePoint(q.x, q.y - h))) / (2 * h)
        g = f_gradient(P, q)
        assert math.hypot(g.gx - fx, g.gy - fy) <= 1e-6 * g.norm


@given(st.floats(-30, 30), angle, angle)
def test_constant_on_ellipses(t, th1, th2):
    f1 = log_f_value(P, chart_to_plane(CANONICAL, ChartPoint(t, th1)))
    f2 = log_f_value(P, chart_to_plane(CANONICAL, ChartPoint(t, th2)))
    # relative gap of f from the gap of log f
    assert abs(math.expm1(f1 - f2)) <= 1e-12 * max(1.0, abs(t) / TAU)


@given(st.floats(-3, 3), angle, st.floats(-2, 2))
def test_self_similarity(lr, a, s):
    # f(e^s R(s) q) = e^{s/tau} f(q): the leaf map t -> t + s is a rotation-dilation
    q = polar(math.exp(lr), a)
    c, sn = math.cos(s), math.sin(s)
    q2 = PlanePoint(math.exp(s) * (c * q.x - sn * q.y), math.exp(s) * (sn * q.x + c * q.y))
    assert log_f_value(P, q2) == pytest.approx(log_f_value(P, q) + s / TAU, abs=1e-11)


@given(log_radius, angle)
def test_outward_gradient(lr, a):
    q = polar(math.exp(lr), a)
    g = f_gradient(P, q)
    assert g.gx * q.x + g.gy * q.y >= f_value(P, q) > 0


@given(st.floats(math.log(1e-6), math.log(1e6)), angle)
def test_gradient_vanishing_rate(lr, a):
    q = polar(math.exp(lr), a)
    c = SQRT2 / (TAU * (SQRT2 - 0.5))
    assert log_gradient_norm(P, q) <= math.log(c) + (1 / TAU - 1) * math.log(q.norm) + 1e-12


def test_sandwich_examples():
    lo, _ = sandwich_bounds(P, PlanePoint(SQRT2, 0.0))
    assert lo == pytest.approx(1.0) and f_value(P, PlanePoint(SQRT2, 0.0)) == pytest.approx(lo)
    _, hi = sandwich_bounds(P, PlanePoint(0.0, 1.0))
    assert hi == 1.0 and f_value(P, PlanePoint(0.0, 1.0)) == pytest.approx(hi)
    assert sandwich_bounds(P, PlanePoint(0.0, 0.0)) == (0.0, 0.0)


@given(st.floats(math.log(1e-6), math.log(1e6)), angle)
def test_sandwich_holds(lr, a):
    q = polar(math.exp(lr), a)
    lf = log_f_value(P, q)
    lu = math.log(q.norm) / TAU
    assert lu - math.log(2) / (2 * TAU) - 1e-9 <= lf <= lu + 1e-9


def test_lojasiewicz_examples():
    assert lojasiewicz_residual(P, PlanePoint(SQRT2, 0.0)) == pytest.approx((1 - TAU**2) / (TAU * SQRT2))
    assert lojasiewicz_residual(P, PlanePoint(0.0, 0.0)) == 0.0


def _kl_fd(q: PlanePoint, h: float = 1e-6) -> float:
    """``|grad(psi o f)|`` by central differences, psi(s) = sqrt2/tau s^tau."""
    psi = lambda p: SQRT2 / TAU * f_value(P, p) ** TAU
    gx = (psi(PlanePoint(q.x + h, q.y)) - psi(PlanePoint(q.x - h, q.y))) / (2 * h)
    gy = (psi(PlanePoint(q.x, q.y + h)) - psi(PlanePoint(q.x, q.y - h))) / (2 * h)
    return math.hypot(gx, gy)


def test_kl_examples():
    assert kl_residual(P, PlanePoint(SQRT2, 0.0)) == pytest.approx(1 / TAU - 1)
    assert kl_residual(P, PlanePoint(SQRT2, 0.0)) == pytest.approx(_kl_fd(PlanePoint(SQRT2, 0.0)) - 1, rel=1e-7)
    # on the minor axis |n| = sqrt2 instead of 1, so the residual is sqrt2/tau - 1
    assert kl_residual(P, PlanePoint(0.0, 1.0)) == pytest.approx(SQRT2 / TAU - 1)
    assert kl_residual(P, PlanePoint(0.0, 1.0)) == pytest.approx(_kl_fd(PlanePoint(0.0, 1.0)) - 1, rel=1e-7)
    with pytest.raises(ValueError):
        kl_residual(P, PlanePoint(0.0, 0.0))


@given(st.floats(math.log(1e-6), math.log(1e6)), angle, st.floats(0.01, 0.0999))
def test_residuals_nonnegative(lr, a, tau):
    params = FunctionParams(tau)
    q = polar(math.exp(lr), a)
    assert kl_residual(params, q) >= 0
    # compare in logs: f may be far outside double range relative to its gradient
    lhs = log_gradient_norm(params, q)
    rhs = math.log(tau / SQRT2) + (1 - tau) * log_f_value(params, q)
    assert lhs >= rhs


def test_kl_implies_lojasiewicz():
    # |grad f| >= f^{1-tau}/sqrt2 >= tau/sqrt2 f^{1-tau}
    rng = np.random.default_rng(5)
    for _ in range(500):
        q = polar(math.exp(rng.uniform(-3, 3)), rng.uniform(0, TWO_PI))
        assert kl_residual(P, q) >= 0 and lojasiewicz_residual(P, q) >= 0


def test_array_variants_match_scalar():
    rng = np.random.default_rng(9)
    r = np.exp(rng.uniform(-8, 8, 200))
    a = rng.uniform(0, TWO_PI, 200)
    x, y = r * np.cos(a), r * np.sin(a)
    gx, gy, t, th = gradient_arrays(P, x, y)
    lf = log_f_arrays(P, x, y)
    lg = log_gradient_norm_arrays(P, t, th)
    kl = kl_residual_arrays(P, t, th)
    for i in range(0, 200, 13):
        q = PlanePoint(x[i], y[i])
        g = f_gradient(P, q)
        assert (gx[i], gy[i]) == pytest.approx((g.gx, g.gy), rel=1e-12, abs=1e-12 * g.norm)
        assert lf[i] == pytest.approx(log_f_value(P, q), abs=1e-12)
        assert lg[i] == pytest.approx(log_gradient_norm(P, q), abs=1e-12)
        assert kl[i] == pytest.approx(kl_residual(P, q), rel=1e-12)
    f0 = f_arrays(P, np.array([0.0, 1e40]), np.array([0.0, 0.0]))
    assert f0[0] == 0.0 and f0[1] == math.inf


def test_overflow_handled_in_logs():
    q = PlanePoint(1e40, 0.0)
    assert f_value(P, q) == math.inf
    assert math.isfinite(log_f_value(P, q))
    assert math.isfinite(log_gradient_norm(P, q))
    assert kl_residual(P, q) >= 0


@pytest.mark.parametrize("order,tol", [(1, 0.05), (2, 0.1)])
def test_scaling_probe(order, tol):
    assert derivative_scaling_probe(P, order, RADII) == pytest.approx(1 / TAU - order, abs=tol)


def test_scaling_probe_alternate_tau():
    assert derivative_scaling_probe(FunctionParams(0.05), 1, RADII) == pytest.approx(19.0, abs=0.1)


def test_scaling_probe_third_order():
    assert derivative_scaling_probe(P, 3, RADII[:8]) == pytest.approx(1 / TAU - 3, abs=0.2)


def test_scaling_probe_errors():
    with pytest.raises(ValueError):
        derivative_scaling_probe(P, 4, RADII)
    with pytest.raises(ValueError):
        derivative_scaling_probe(P, 1, [0.5])
    with pytest.raises(ValueError):
        derivative_scaling_probe(P, 1, [2.0, 1.0])

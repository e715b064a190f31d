"""Acceptance criteria 1-11, each at its stated tolerance.

Every test records one ``criterion N: PASS|FAIL ...`` line; the lines are
printed in the pytest terminal summary (see conftest.py) and also when this
file is run directly with ``python3 tests/test_acceptance.py``.
"""
from __future__ import annotations

import math
import subprocess
import sys
import time

import pytest

from convexspiral import dynamics, verify
from convexspiral.foliation import PlanePoint
from convexspiral.function import FunctionParams, derivative_scaling_probe

TAU = 0.09
SEED = 42
RESULTS: dict[int, str] = {}


def record(n: int, ok: bool, detail: str) -> None:
    RESULTS[n] = f"criterion {n:2d}: {'PASS' if ok else 'FAIL'}  {detail}"
    print(RESULTS[n])
    assert ok, RESULTS[n]


def by_name(checks):
    return {c.suite_name: c for c in checks}


@pytest.fixture(scope="module")
def lojasiewicz_run():
    start = time.perf_counter()
    checks = by_name(verify.lojasiewicz_checks(SEED, 100_000, TAU))
    return checks, time.perf_counter() - start


def test_criterion_01_fourier_constant():
    start = time.perf_counter()
    a0 = dynamics.fourier_a0(4096)
    a0_2 = dynamics.fourier_a0(8192)
    elapsed = time.perf_counter() - start
    in_range = -0.85 <= a0 <= -0.83
    converged = abs(a0_2 - a0) < 1e-12
    record(
        1,
        in_range and converged and elapsed < 0.1,
        f"a0(4096)={a0:.10f} in [-0.85,-0.83]: {in_range}; |a0(8192)-a0(4096)|={abs(a0_2 - a0):.1e}; {elapsed:.3f}s",
    )


def test_criterion_02_lojasiewicz(lojasiewicz_run):
    checks, elapsed = lojasiewicz_run
    grad, kl = checks["lojasiewicz.gradient_inequality"], checks["lojasiewicz.kl_inequality"]
    ok = grad.passed and kl.passed and grad.samples == 100_000 and elapsed < 5.0
    record(
        2,
        ok,
        f"worst scaled violation: gradient {grad.worst_residual:.3e}, KL {kl.worst_residual:.3e} (tol 1e-12); {elapsed:.2f}s",
    )


def test_criterion_03_convexity():
    start = time.perf_counter()
    checks = by_name(verify.convexity_checks(SEED, 10_000, TAU))
    elapsed = time.perf_counter() - start
    scan, hess, mid = checks["convexity.concavity_scan"], checks["convexity.hessian_min_eig"], checks["convexity.midpoint"]
    ok = scan.passed and hess.passed and mid.passed and scan.samples == 256 * 256 and elapsed < 10.0
    record(
        3,
        ok,
        f"scan max {scan.worst_residual:.3e}; -min_eig/|H| {hess.worst_residual:.3e}; midpoint {mid.worst_residual:.3e}; {elapsed:.2f}s",
    )


def test_criterion_04_sandwich(lojasiewicz_run):
    checks, _ = lojasiewicz_run
    band, eq = checks["lojasiewicz.sandwich"], checks["lojasiewicz.sandwich_equality"]
    record(
        4,
        band.passed and eq.passed and eq.worst_residual <= 1e-12,
        f"bounds violation {band.worst_residual:.3e} over {band.samples} samples; equality gap {eq.worst_residual:.3e}",
    )


def test_criterion_05_chart():
    checks = by_name(verify.foliation_checks(SEED, 100_000, TAU))
    rt, res, det = (
        checks["foliation.round_trip"],
        checks["foliation.residual_closed_form"],
        checks["foliation.jacobian_det_bounds"],
    )
    ok = rt.worst_residual < 1e-9 and res.worst_residual < 1e-14 and det.passed and rt.samples == 100_000
    record(
        5,
        ok,
        f"round trip {rt.worst_residual:.2e}; residual rel err {res.worst_residual:.2e}; det bound violation {det.worst_residual:.2e}",
    )


def test_criterion_06_gradient():
    checks = by_name(verify.smoothness_checks(SEED, 10_000, TAU))
    fd = checks["smoothness.gradient_fd"]
    record(6, fd.worst_residual <= 1e-6 and fd.samples == 10_000, f"max relative gap {fd.worst_residual:.3e} (tol 1e-6)")


def test_criterion_07_scaling():
    params = FunctionParams(TAU)
    s1 = derivative_scaling_probe(params, 1, verify.SCALING_RADII)
    s2 = derivative_scaling_probe(params, 2, verify.SCALING_RADII)
    ok = abs(s1 - (1 / TAU - 1)) <= 0.05 and abs(s2 - (1 / TAU - 2)) <= 0.1
    record(7, ok, f"order 1 slope {s1:.5f} vs {1 / TAU - 1:.5f}; order 2 slope {s2:.5f} vs {1 / TAU - 2:.5f}")


def test_criterion_08_blowup():
    start_pt = PlanePoint(2.0, 0.0)
    start = time.perf_counter()
    traj = dynamics.gradient_flow_time(TAU, start_pt, dynamics.FlowControls(r_max=1e6))
    elapsed = time.perf_counter() - start
    bound = dynamics.blowup_bound(TAU, start_pt)
    t_event = traj.event_param if traj.event_param is not None else math.inf
    worst = min(
        n / dynamics.norm_lower_bound(TAU, start_pt.norm, s) for n, s in zip(traj.norm.tolist(), traj.param.tolist())
    )
    ok = traj.status == "event" and traj.norm[-1] >= 1e6 * (1 - 1e-12) and t_event <= bound and worst >= 1 - 1e-6
    ok = ok and elapsed < 5.0
    record(8, ok, f"T_event={t_event:.6e} <= bound {bound:.6e}; min norm/z = {worst:.9f}; {elapsed:.2f}s")


def test_criterion_09_spiraling():
    start = time.perf_counter()
    orbit = dynamics.chart_orbit(0.0, (-50.0, 50.0), tau=TAU)
    w = dynamics.winding(orbit)
    wide = dynamics.winding(dynamics.chart_orbit(0.0, (-100.0, 100.0), tau=TAU))
    elapsed = time.perf_counter() - start
    ratio = wide.bounded_gap / w.bounded_gap
    parts = {
        "dtheta<=-45": w.delta_theta <= -45,
        "turns>=3": w.turns >= 3,
        "dalpha>0": w.delta_alpha > 0,
        "gap ratio<1.2": ratio < 1.2,
        "runtime<1s": elapsed < 1.0,
    }
    failed = [k for k, v in parts.items() if not v]
    record(
        9,
        not failed,
        f"dtheta={w.delta_theta:.3f} turns={w.turns:.4f} dalpha={w.delta_alpha:.4f} gap ratio={ratio:.4f} {elapsed:.2f}s"
        + (f"; failing: {', '.join(failed)}" if failed else ""),
    )


def test_criterion_10_ratio_consistency():
    traj = dynamics.gradient_flow_time(TAU, PlanePoint(2.0, 0.0))
    ratio = dynamics.ratio_check(traj)
    agree = dynamics.curve_agreement(traj)
    ok = ratio is not None and ratio < 1e-3 and agree <= 1e-4
    record(10, ok, f"ratio_check {ratio:.3e} (< 1e-3); curve agreement {agree:.3e} (<= 1e-4 x norm)")


def test_criterion_11_determinism():
    cmd = [sys.executable, "-m", "convexspiral", "verify", "all", "--seed", str(SEED)]
    first = subprocess.run(cmd, capture_output=True)
    second = subprocess.run(cmd, capture_output=True)
    same = first.stdout == second.stdout and len(first.stdout) > 0
    record(
        11,
        same and first.returncode == second.returncode == 0,
        f"{len(first.stdout)} bytes, identical: {same}, exit codes {first.returncode}/{second.returncode}",
    )


if __name__ == "__main__":
    sys.exit(pytest.main([__file__, "-q", "-p", "no:cacheprovider"]))

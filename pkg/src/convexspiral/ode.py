"""Dormand-Prince 5(4) integrator with PI step control and dense output.

Written for autonomous flows that may blow up in finite time: step sizes are
allowed to shrink far below the resolution of the accumulated time, so the
time itself is carried as a compensated (Kahan) sum.  Terminal events are
located by bisection on the dense output of the step that crossed them.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable

import numpy as np

C = np.array([0.0, 1 / 5, 3 / 10, 4 / 5, 8 / 9, 1.0, 1.0])
A = [
    [],
    [1 / 5],
    [3 / 40, 9 / 40],
    [44 / 45, -56 / 15, 32 / 9],
    [19372 / 6561, -25360 / 2187, 64448 / 6561, -212 / 729],
    [9017 / 3168, -355 / 33, 46732 / 5247, 49 / 176, -5103 / 18656],
    [35 / 384, 0.0, 500 / 1113, 125 / 192, -2187 / 6784, 11 / 84],
]
B = np.array([35 / 384, 0.0, 500 / 1113, 125 / 192, -2187 / 6784, 11 / 84, 0.0])
B_HAT = np.array([5179 / 57600, 0.0, 7571 / 16695, 393 / 640, -92097 / 339200, 187 / 2100, 1 / 40])
E = B - B_HAT

# quartic continuous extension (Shampine 1986), y(t + s*h) = y + h * K.T @ (P @ [s, s^2, s^3, s^4])
P = np.array([
    [1.0, -8048581381 / 2820520608, 8663915743 / 2820520608, -12715105075 / 11282082432],
    [0.0, 0.0, 0.0, 0.0],
    [0.0, 131558114200 / 32700410799, -68118460800 / 10900136933, 87487479700 / 32700410799],
    [0.0, -1754552775 / 470086768, 14199869525 / 1410260304, -10690763975 / 1880347072],
    [0.0, 127303824393 / 49829197408, -318862633887 / 49829197408, 701980252875 / 199316789632],
    [0.0, -282668133 / 205662961, 2019193451 / 616988883, -1453857185 / 822651844],
    [0.0, 40617522 / 29380423, -110615467 / 29380423, 69997945 / 29380423],
])

SAFETY = 0.9
MIN_FACTOR = 0.2
MAX_FACTOR = 5.0
# PI controller exponents for a 5th-order pair
ALPHA = 0.7 / 5
BETA = 0.4 / 5
H_UNDERFLOW = 1e-300


@dataclass
class Solution:
    t: np.ndarray
    y: np.ndarray
    status: str
    t_event: float | None = None
    y_event: np.ndarray | None = None
    n_accepted: int = 0
    n_rejected: int = 0
    n_evals: int = 0
    message: str = ""

    @property
    def success(self) -> bool:
        return self.status in ("completed", "event")


@dataclass
class _Clock:
    """Kahan-compensated running time."""

    hi: float
    lo: float = 0.0

    def add(self, h: float) -> None:
        y = h - self.lo
        s = self.hi + y
        self.lo = (s - self.hi) - y
        self.hi = s

    @property
    def value(self) -> float:
        return self.hi - self.lo


def dense_eval(y: np.ndarray, h: float, K: np.ndarray, s: float) -> np.ndarray:
    powers = np.array([s, s * s, s**3, s**4])
    return y + h * (K.T @ (P @ powers))


def _rms(x: np.ndarray) -> float:
    return float(np.sqrt(np.mean(x * x)))


def _initial_step(fun, t0, y0, f0, rtol, atol) -> float:
    scale = atol + np.abs(y0) * rtol
    d0 = _rms(y0 / scale)
    d1 = _rms(f0 / scale)
    h0 = 1e-6 if d0 < 1e-5 or d1 < 1e-5 else 0.01 * d0 / d1
    f1 = fun(t0 + h0, y0 + h0 * f0)
    d2 = _rms((f1 - f0) / scale) / h0
    if d1 <= 1e-15 and d2 <= 1e-15:
        h1 = max(1e-6, h0 * 1e-3)
    else:
        h1 = (0.01 / max(d1, d2)) ** (1 / 5)
    return min(100 * h0, h1)


def dopri5(
    fun: Callable[[float, np.ndarray], np.ndarray],
    t0: float,
    y0,
    t_end: float = math.inf,
    *,
    rtol: float = 1e-10,
    atol: float = 1e-12,
    max_steps: int = 100_000,
    event: Callable[[float, np.ndarray], float] | None = None,
    t_eval=None,
    refine: int = 1,
    h0: float | None = None,
) -> Solution:
    """Integrate ``y' = fun(t, y)`` forward from ``t0`` towards ``t_end``.

    ``event(t, y)`` is a terminal event: integration stops at its first sign
    change, located by bisection on the dense output.  Output is one row per
    accepted step, subdivided ``refine`` times through the dense output,
    unless ``t_eval`` (increasing, inside ``[t0, t_end]``) is given.
    """
    y = np.array(y0, dtype=float).ravel()
    clock = _Clock(float(t0))
    f = np.asarray(fun(t0, y), dtype=float)
    n_evals = 1
    if h0 is None:
        h = _initial_step(fun, t0, y, f, rtol, atol)
        n_evals += 1
    else:
        h = h0
    if math.isfinite(t_end):
        h = min(h, t_end - t0)

    if t_eval is not None:
        t_eval = np.asarray(t_eval, dtype=float)
        ts, ys = [], []
        next_eval = 0
        while next_eval < len(t_eval) and t_eval[next_eval] <= t0:
            ts.append(t_eval[next_eval])
            ys.append(y.copy())
            next_eval += 1
    else:
        ts, ys = [float(t0)], [y.copy()]

    g_old = event(t0, y) if event is not None else None
    err_prev = 1.0
    K = np.empty((7, y.size))
    n_acc = n_rej = 0
    status, message = "max_steps", ""
    t_ev = y_ev = None

    while n_acc < max_steps:
        t = clock.value
        if math.isfinite(t_end) and t >= t_end:
            status = "completed"
            break
        if h < H_UNDERFLOW:
            status, message = "step_underflow", f"step size {h:.3e} underflowed at t={t!r}"
            break
        K[0] = f
        for i in range(1, 7):
            K[i] = fun(t + C[i] * h, y + h * (np.asarray(A[i]) @ K[:i]))
        n_evals += 6
        y_new = y + h * (B @ K)
        f_new = K[6]
        scale = atol + np.maximum(np.abs(y), np.abs(y_new)) * rtol
        err = _rms(h * (E @ K) / scale)
        if not np.isfinite(err) or not np.all(np.isfinite(y_new)):
            h *= MIN_FACTOR
            n_rej += 1
            continue
        if err > 1.0:
            h *= max(MIN_FACTOR, SAFETY * err ** (-1 / 5))
            n_rej += 1
            continue
        if np.array_equal(y_new, y):
            status, message = "step_underflow", f"step {h:.3e} no longer moves the state at t={t!r}"
            break

        n_acc += 1
        K_step, y_old, h_step = K.copy(), y, h
        clock.add(h)
        t_new = clock.value

        stop = False
        if event is not None:
            g_new = event(t_new, y_new)
            if g_old != 0.0 and np.sign(g_new) != np.sign(g_old):
                lo, hi = 0.0, 1.0
                for _ in range(200):
                    mid = 0.5 * (lo + hi)
                    if mid in (lo, hi):
                        break
                    g_mid = event(t + mid * h_step, dense_eval(y_old, h_step, K_step, mid))
                    if np.sign(g_mid) == np.sign(g_old):
                        lo = mid
                    else:
                        hi = mid
                s_ev = hi
                t_ev = t + s_ev * h_step
                y_ev = dense_eval(y_old, h_step, K_step, s_ev)
                t_new, y_new = t_ev, y_ev
                stop = True
                status = "event"
            g_old = g_new

        if t_eval is not None:
            while next_eval < len(t_eval) and t_eval[next_eval] <= t_new:
                s = (t_eval[next_eval] - t) / h_step
                ts.append(t_eval[next_eval])
                ys.append(dense_eval(y_old, h_step, K_step, s))
                next_eval += 1
        else:
            end = s_ev if stop else 1.0
            for j in range(1, refine):
                s = end * j / refine
                ts.append(t + s * h_step)
                ys.append(dense_eval(y_old, h_step, K_step, s))
            ts.append(t_new)
            ys.append(y_new.copy())

        y, f = y_new, f_new
        if stop:
            break

        err = max(err, 1e-10)
        factor = SAFETY * err ** (-ALPHA) * err_prev ** BETA
        h *= min(MAX_FACTOR, max(MIN_FACTOR, factor))
        err_prev = err
        if math.isfinite(t_end):
            h = min(h, t_end - t_new)
    else:
        message = f"reached max_steps={max_steps}"

    if status == "max_steps" and math.isfinite(t_end) and clock.value >= t_end:
        status = "completed"
    return Solution(
        t=np.array(ts),
        y=np.array(ys).reshape(len(ys), -1),
        status=status,
        t_event=t_ev,
        y_event=y_ev,
        n_accepted=n_acc,
        n_rejected=n_rej,
        n_evals=n_evals,
        message=message,
    )

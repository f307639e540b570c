"""Dormand-Prince 5(4) stepper with blow-up aware termination.

A Radau IIA continuation (scipy's stepper) takes over when the explicit
pair detects stiffness.
"""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
from scipy.integrate import Radau

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
B5 = np.array(A[6] + [0.0])
# difference between the 5th and embedded 4th order weights
E = np.array([71 / 57600, 0.0, -71 / 16695, 71 / 1920, -17253 / 339200, 22 / 525, -1 / 40])

SAFETY = 0.9
MIN_FACTOR = 0.2
MAX_FACTOR = 5.0
# stiffness test of Hairer & Wanner's DOPRI5: h * |lambda| estimated from the
# last two stages beyond the stability boundary on STIFF_HITS accepted steps
STIFF_BOUND = 3.25
STIFF_HITS = 15


@dataclass
class RKResult:
    times: np.ndarray
    states: np.ndarray
    status: str  # "horizon" | "threshold" | "underflow" | "stiff"
    accepted: int = 0
    rejected: int = 0
    min_step: float = np.inf
    max_step: float = 0.0
    last_step: float = np.nan
    nfev: int = 0
    stats: dict = field(default_factory=dict)


def _stops(checkpoints, t0, horizon):
    return sorted({float(c) for c in checkpoints if t0 < c < horizon} | {float(horizon)})


def dopri5(fun, y0, horizon, *, rtol, atol, first_step, min_step, threshold=np.inf,
           checkpoints=(), stop_on_stiff=False):
    """Integrate ``y' = fun(t, y)`` from 0 to ``horizon``.

    Stops early when ``max|y| >= threshold`` after an accepted step
    (status ``"threshold"``), when the step size falls below ``min_step``
    (status ``"underflow"``), or, with ``stop_on_stiff``, when the step
    size is limited by stability rather than accuracy (status ``"stiff"``).
    Every time in ``checkpoints`` inside (0, horizon] is hit exactly by an
    accepted step.
    """
    y = np.array(y0, dtype=float)
    t = 0.0
    stops = _stops(checkpoints, 0.0, horizon)
    si = 0
    stiff_hits = calm = 0
    times = [0.0]
    states = [y.copy()]
    k1 = fun(t, y)
    nfev = 1
    h = float(first_step)
    res = RKResult(np.empty(0), np.empty(0), "horizon")
    K = np.empty((7, len(y)))
    while t < horizon:
        if h < min_step:
            res.status = "underflow"
            break
        target = stops[si]
        step = h
        landing = False
        if t + step >= target * (1 - 4e-16) or target - (t + step) < 1e-14 * max(1.0, abs(target)):
            step = target - t
            landing = True
        K[0] = k1
        ok = True
        with np.errstate(over="ignore", invalid="ignore"):
            for s in range(1, 7):
                ys = y + step * (np.dot(A[s], K[:s]) if s > 1 else A[s][0] * K[0])
                K[s] = fun(t + C[s] * step, ys)
                if s == 5:
                    y6 = ys
            nfev += 6
            y_new = ys  # stage 7 node equals the 5th-order solution (FSAL)
            err = step * (E @ K)
            scale = atol + rtol * np.maximum(np.abs(y), np.abs(y_new))
            if not (np.all(np.isfinite(y_new)) and np.all(np.isfinite(K[6]))):
                ok = False
                err_norm = np.inf
            else:
                err_norm = float(np.max(np.abs(err) / scale)) if len(y) else 0.0
        if ok and err_norm <= 1.0:
            t = target if landing else t + step
            y = y_new
            k1 = K[6].copy()
            times.append(t)
            states.append(y.copy())
            res.accepted += 1
            res.min_step = min(res.min_step, step)
            res.max_step = max(res.max_step, step)
            res.last_step = step
            if landing:
                si += 1
            fac = MAX_FACTOR if err_norm == 0 else min(MAX_FACTOR, max(MIN_FACTOR, SAFETY * err_norm ** -0.2))
            # a step clipped onto a checkpoint says little about the next one
            if not (landing and step < h):
                h = step * fac
            if len(y) and np.max(np.abs(y)) >= threshold:
                res.status = "threshold"
                break
            if stop_on_stiff:
                den = float(np.sum((y_new - y6) ** 2))
                if den > 0 and step * np.sqrt(float(np.sum((K[6] - K[5]) ** 2)) / den) > STIFF_BOUND:
                    calm = 0
                    stiff_hits += 1
                    if stiff_hits >= STIFF_HITS:
                        res.status = "stiff"
                        break
                else:
                    calm += 1
                    if calm >= 6:
                        stiff_hits = 0
        else:
            res.rejected += 1
            fac = 0.25 if not ok else min(1.0, max(MIN_FACTOR, SAFETY * err_norm ** -0.2))
            h = step * fac
    res.times = np.array(times)
    res.states = np.array(states).reshape(len(times), len(y))
    res.nfev = nfev
    return res


def radau(fun, y0, t0, horizon, *, rtol, atol, first_step, min_step, threshold=np.inf,
          checkpoints=()):
    """Implicit continuation from ``(t0, y0)`` with the same stops and statuses.

    Each segment between consecutive stops is a separate solve whose end
    point is the stop itself, so checkpoints are hit exactly.
    """
    y = np.array(y0, dtype=float)
    t = float(t0)
    times, states = [t], [y.copy()]
    res = RKResult(np.empty(0), np.empty(0), "horizon")
    h = float(first_step) if np.isfinite(first_step) and first_step > 0 else 1e-6
    h = max(h, min_step)
    for stop in _stops(checkpoints, t, horizon):
        solver = Radau(fun, t, y, stop, rtol=rtol, atol=atol, first_step=min(h, stop - t))
        while solver.status == "running":
            msg = solver.step()
            if solver.status == "failed" or msg is not None:
                res.status = "underflow"
                break
            step = solver.t - t
            t, y = float(solver.t), solver.y.copy()
            times.append(t)
            states.append(y.copy())
            res.accepted += 1
            res.min_step = min(res.min_step, step)
            res.max_step = max(res.max_step, step)
            res.last_step = step
            if len(y) and np.max(np.abs(y)) >= threshold:
                res.status = "threshold"
                break
            if solver.status == "running" and solver.step_size < min_step:
                res.status = "underflow"
                break
        res.nfev += solver.nfev
        if res.status != "horizon":
            break
        h = res.last_step
    res.times = np.array(times)
    res.states = np.array(states).reshape(len(times), len(y))
    return res

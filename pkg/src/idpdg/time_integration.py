"""Explicit time stepping built on a limited forward Euler operator.

``fe(u, t, dt)`` returns the limited forward Euler update.  SSP-RK3 is the
usual Shu-Osher convex combination of such steps; the Dormand-Prince 8(7)
scheme (fixed step, 8th-order weights) uses the rate ``(fe(u, t, dt) - u) / dt``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable, Optional

import numpy as np
from scipy.integrate._ivp import dop853_coefficients as _dop

ForwardEuler = Callable[[np.ndarray, float, float], np.ndarray]
Rate = Callable[[np.ndarray, float], np.ndarray]

INTEGRATORS = ("forward_euler", "ssprk3", "dop853")


def step_forward_euler(fe: ForwardEuler, u, t, dt):
    return fe(u, t, dt)


def step_ssprk3(fe: ForwardEuler, u, t, dt):
    u1 = fe(u, t, dt)
    u2 = 0.75 * u + 0.25 * fe(u1, t + dt, dt)
    return u / 3.0 + (2.0 / 3.0) * fe(u2, t + 0.5 * dt, dt)


_S = _dop.N_STAGES
_A = _dop.A[:_S, :_S]
_B = _dop.B
_C = _dop.C[:_S]


def step_high_order_rk(rate: Rate, u, t, dt):
    """One fixed step of the 12-stage, 8th-order Dormand-Prince method."""
    K = []
    for s in range(_S):
        us = u
        for j in range(s):
            if _A[s, j] != 0.0:
                us = us + dt * _A[s, j] * K[j]
        K.append(rate(us, t + _C[s] * dt))
    out = u
    for s in range(_S):
        if _B[s] != 0.0:
            out = out + dt * _B[s] * K[s]
    return out


def limited_rate(fe: ForwardEuler, dt: float) -> Rate:
    return lambda u, t: (fe(u, t, dt) - u) / dt


def compute_dt(dt_max: float, cfl: float, t: float, t_end: float) -> float:
    """``cfl * dt_max`` clipped so the last step lands on ``t_end``."""
    if not (0.0 < cfl <= 1.0):
        raise ValueError("cfl must lie in (0, 1]")
    if not math.isfinite(dt_max):
        raise ValueError("no wave-speed bound (static problem): supply an explicit time step")
    return _clip(cfl * dt_max, t, t_end)


def _clip(dt: float, t: float, t_end: float) -> float:
    remaining = t_end - t
    if dt >= remaining or math.isclose(dt, remaining, rel_tol=1e-12):
        return remaining
    return dt


@dataclass
class RunStats:
    steps: int = 0
    t: float = 0.0
    dt_min: float = math.inf
    dt_max: float = 0.0


def integrate(
    scheme,
    u0: np.ndarray,
    t_end: float,
    cfl: float = 0.5,
    method: str = "ssprk3",
    t0: float = 0.0,
    dt: Optional[float] = None,
    dt_factor: float = 1.0,
    callback: Optional[Callable[[np.ndarray, float, int], None]] = None,
    max_steps: Optional[int] = None,
):
    """Advance ``u0`` to ``t_end``; the step is recomputed from every step-start state.

    For ``dop853`` the limited forward Euler operator is evaluated with the
    admissible pseudo-step ``tau = cfl * idp_max_dt`` while the Runge-Kutta step
    is ``dt_factor`` times larger (the method is not SSP, so nothing is gained
    by tying the two together).  SSP methods require ``dt_factor == 1``.
    """
    if method not in INTEGRATORS:
        raise ValueError(f"unknown integrator {method!r}")
    if dt_factor <= 0.0 or (method != "dop853" and dt_factor != 1.0):
        raise ValueError("dt_factor must be positive and is only used by dop853")
    u = u0.copy()
    t = t0
    stats = RunStats(t=t0)
    fe = scheme.forward_euler
    while t < t_end and not math.isclose(t, t_end, rel_tol=0.0, abs_tol=1e-14 * max(1.0, abs(t_end))):
        if dt is None:
            dt_max = scheme.max_dt(u, t)
            tau = compute_dt(dt_max, cfl, t, t_end)
            h = _clip(dt_factor * cfl * dt_max, t, t_end) if dt_factor != 1.0 else tau
        else:
            h = tau = _clip(dt, t, t_end)
        if method == "ssprk3":
            u = step_ssprk3(fe, u, t, h)
        elif method == "forward_euler":
            u = step_forward_euler(fe, u, t, h)
        else:
            u = step_high_order_rk(limited_rate(fe, min(tau, h)), u, t, h)
        # land exactly on t_end when the step was clipped to it
        t = t_end if h == t_end - t else t + h
        stats.steps += 1
        stats.dt_min = min(stats.dt_min, h)
        stats.dt_max = max(stats.dt_max, h)
        if callback is not None:
            callback(u, t, stats.steps)
        if max_steps is not None and stats.steps >= max_steps:
            break
    stats.t = t
    return u, stats

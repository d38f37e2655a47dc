"""Analytic reference solutions used by the benchmark problems."""

from __future__ import annotations

import numpy as np

from ..equations import RiemannSolution


def hopf_lax_burgers_1d(s, t: float, breaks, values) -> np.ndarray:
    """Entropy solution of ``u_t + (u^2/2)_s = 0`` for piecewise-constant data.

    ``values[k]`` holds on ``(breaks[k-1], breaks[k])``; the outer pieces are
    unbounded.  The Hopf-Lax formula gives ``u = (s - y*) / t`` with y*
    minimising ``U0(y) + (s - y)^2 / (2t)``; U0 is piecewise linear, so the
    minimiser is a break point or a stationary point ``y = s - t c_k`` inside
    piece k.  ``breaks`` may vary per point (shape (m, nb)).
    """
    s = np.atleast_1d(np.asarray(s, dtype=float))
    values = np.asarray(values, dtype=float)
    nb = len(values) - 1
    b = np.broadcast_to(np.asarray(breaks, dtype=float), (len(s), nb))
    if t <= 0.0:
        idx = np.sum(s[:, None] >= b, axis=1)
        return values[idx]

    # explicit primitive: U0(y) = int_{b0}^{y} u0
    def prim(y):
        left = b[:, 0]
        acc = np.where(y < left, values[0] * (y - left), 0.0)
        for k in range(nb):
            lo = b[:, k]
            hi = b[:, k + 1] if k + 1 < nb else np.full_like(lo, np.inf)
            acc = acc + values[k + 1] * np.clip(np.clip(y, lo, hi) - lo, 0.0, None)
        return acc

    cands = [b[:, k] for k in range(nb)]
    for k, c in enumerate(values):
        y = s - t * c
        lo = b[:, k - 1] if k > 0 else np.full_like(s, -np.inf)
        hi = b[:, k] if k < nb else np.full_like(s, np.inf)
        cands.append(np.where((y >= lo) & (y <= hi), y, np.nan))
    Y = np.stack(cands, axis=1)
    with np.errstate(invalid="ignore"):
        cost = np.stack([prim(Y[:, j]) for j in range(Y.shape[1])], axis=1) + (s[:, None] - Y) ** 2 / (2.0 * t)
    cost = np.where(np.isnan(Y), np.inf, cost)
    j = np.argmin(cost, axis=1)
    ystar = Y[np.arange(len(s)), j]
    return (s - ystar) / t


BURGERS2D_STATES = {"ne": -1.0, "nw": -0.2, "sw": 0.5, "se": 0.8}


def burgers2d_exact(x: np.ndarray, t: float) -> np.ndarray:
    """2D Burgers quadrant problem with v = (1, 1) on [0,1]^2.

    With s = (x + y)/2 and w = (x - y)/2 the equation is 1D Burgers in s on
    every line w = const, so each point is a 1D Hopf-Lax evaluation.
    """
    X, Y = x[:, 0], x[:, 1]
    s = 0.5 * (X + Y)
    w = 0.5 * (X - Y)
    # the line crosses x = 1/2 at s = 1/2 - w and y = 1/2 at s = 1/2 + w
    out = np.empty(len(X))
    pos = w >= 0.0
    st = BURGERS2D_STATES
    for mask, vals in ((pos, (st["sw"], st["se"], st["ne"])), (~pos, (st["sw"], st["nw"], st["ne"]))):
        if not np.any(mask):
            continue
        ww = np.abs(w[mask])
        br = np.stack([0.5 - ww, 0.5 + ww], axis=1)
        out[mask] = hopf_lax_burgers_1d(s[mask], t, br, vals)
    return out


def euler_riemann_exact(sol: RiemannSolution, x0: float, model):
    """Callable ``(x, t) -> conserved states`` for a 1D Riemann problem at x0."""

    def fn(x, t):
        xi = (x[:, 0] - x0) / t if t > 0 else np.where(x[:, 0] < x0, -np.inf, np.inf)
        prim = sol.sample(xi)
        return model.from_primitive(prim[:, 0], prim[:, 1:2], prim[:, 2])

    return fn

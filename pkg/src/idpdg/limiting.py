"""Flux-corrected blending of the low- and high-order updates.

Antidiffusive residuals are ``r = r^H - r^L`` split by direction.  Along each
line of nodes the directional residual telescopes into subcell face fluxes
``rbar``; per node we keep the flux through the face to its right
(``plus``) and to its left (``minus``) so that ``r_{i,k} = plus - minus``.
Faces on element boundaries carry zero.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Optional

import numpy as np

from . import _kernels
from .mesh import line_axis
from .tensor_ops import ModalTransform, modal_truncation_error


class LimiterError(RuntimeError):
    """Internal-consistency failure (low-order state outside its own bounds)."""


def _line_views(shape_nel: int, n: int, d: int):
    return (shape_nel,) + (n,) * d


@dataclass
class AntidiffusiveFluxes:
    r: np.ndarray  # (d, N, nc)
    plus: np.ndarray  # (d, N, nc)
    minus: np.ndarray  # (d, N, nc)

    @property
    def nodal(self) -> np.ndarray:
        return self.r.sum(axis=0)


def assemble_antidiffusive(r_high: np.ndarray, r_low: np.ndarray, nel: int, n: int) -> AntidiffusiveFluxes:
    if r_high.shape != r_low.shape:
        raise ValueError(f"residual shapes differ: {r_high.shape} vs {r_low.shape}")
    d, N, nc = r_high.shape
    r = r_high - r_low
    plus = np.zeros_like(r)
    minus = np.zeros_like(r)
    shp = _line_views(nel, n, d) + (nc,)
    for k in range(d):
        ax = line_axis(d, k)
        cs = np.cumsum(r[k].reshape(shp), axis=ax)
        P = plus[k].reshape(shp)
        Mn = minus[k].reshape(shp)
        sl_head = [slice(None)] * len(shp)
        sl_tail = [slice(None)] * len(shp)
        sl_head[ax] = slice(0, n - 1)
        sl_tail[ax] = slice(1, n)
        P[tuple(sl_head)] = cs[tuple(sl_head)]
        Mn[tuple(sl_tail)] = cs[tuple(sl_head)]
    return AntidiffusiveFluxes(r, plus, minus)


def line_sums(r: np.ndarray, nel: int, n: int) -> np.ndarray:
    """Sums of r_{i,k} over every line along direction k; shape (d, nel, n^(d-1), nc)."""
    d, N, nc = r.shape
    shp = _line_views(nel, n, d) + (nc,)
    out = []
    for k in range(d):
        s = r[k].reshape(shp).sum(axis=line_axis(d, k))
        out.append(s.reshape(nel, -1, nc))
    return np.stack(out)


def face_alpha(alpha_tilde: np.ndarray, nel: int, n: int, d: int):
    """Subcell face coefficients ``min(alpha_left, alpha_right)`` per node and direction.

    Returns (plus, minus), each (d, N): coefficient on the face to the right
    and to the left of every node.  Element-boundary faces get 1 (they carry
    zero flux).
    """
    N = alpha_tilde.shape[0]
    shp = _line_views(nel, n, d)
    A = alpha_tilde.reshape(shp)
    plus = np.ones((d, N))
    minus = np.ones((d, N))
    for k in range(d):
        ax = line_axis(d, k)
        head = [slice(None)] * (d + 1)
        tail = [slice(None)] * (d + 1)
        head[ax] = slice(0, n - 1)
        tail[ax] = slice(1, n)
        fa = np.minimum(A[tuple(head)], A[tuple(tail)])
        plus[k].reshape(shp)[tuple(head)] = fa
        minus[k].reshape(shp)[tuple(tail)] = fa
    return plus, minus


def subcell_correction(fl: AntidiffusiveFluxes, ap: np.ndarray, am: np.ndarray) -> np.ndarray:
    """``sum_k (alpha_+ rbar_+ - alpha_- rbar_-)`` per node, (N, nc)."""
    return np.einsum("kn,knc->nc", ap, fl.plus) - np.einsum("kn,knc->nc", am, fl.minus)


# --- Zalesak ---------------------------------------------------------------------------


def _ratios(Pp, Pm, Qp, Qm, scale):
    tiny = 1e-14 * scale
    with np.errstate(divide="ignore", invalid="ignore"):
        Rp = np.where(Pp <= tiny, 1.0, np.minimum(1.0, Qp / np.where(Pp > 0, Pp, 1.0)))
        Rm = np.where(-Pm <= tiny, 1.0, np.minimum(1.0, Qm / np.where(Pm < 0, Pm, -1.0)))
    return np.clip(np.minimum(Rp, Rm), 0.0, 1.0)


def _capacities(uL, umin, umax, m, dt, slack=1e-12):
    scale_u = np.maximum(1.0, np.abs(uL))
    tol = slack * np.maximum(scale_u, np.maximum(np.abs(umin), np.abs(umax)))
    if np.any(uL < umin - tol) or np.any(uL > umax + tol):
        i = int(np.flatnonzero((uL < umin - tol) | (uL > umax + tol))[0])
        raise LimiterError(
            f"low-order value {uL[i]:.16e} outside bounds [{umin[i]:.16e}, {umax[i]:.16e}] at node {i}"
        )
    md = m / dt
    Qp = np.maximum(md * (umax - uL), 0.0)
    Qm = np.minimum(md * (umin - uL), 0.0)
    return Qp, Qm, md * scale_u


def zalesak_subcell(fl: AntidiffusiveFluxes, umin, umax, uL, dt, m, comp: int = 0):
    """Provisional coefficients from the adjacent subcell face fluxes of one component."""
    rp = fl.plus[:, :, comp]
    rm = fl.minus[:, :, comp]
    if _kernels.use_compiled():
        a, bad = _kernels.ck.zalesak_ratios(
            np.ascontiguousarray(rp), np.ascontiguousarray(rm),
            np.ascontiguousarray(umin, dtype=float), np.ascontiguousarray(umax, dtype=float),
            np.ascontiguousarray(uL, dtype=float), m / dt, 1e-12, _kernels.get_num_threads(),
        )
        if bad >= 0:
            raise LimiterError(
                f"low-order value {uL[bad]:.16e} outside bounds [{umin[bad]:.16e}, {umax[bad]:.16e}] at node {bad}"
            )
        return a
    Pp = np.sum(np.maximum(rp, 0.0) + np.maximum(-rm, 0.0), axis=0)
    Pm = np.sum(np.minimum(rp, 0.0) + np.minimum(-rm, 0.0), axis=0)
    Qp, Qm, scale = _capacities(uL, umin, umax, m, dt)
    return _ratios(Pp, Pm, Qp, Qm, scale)


def zalesak_elementwise(r_nodal, umin, umax, uL, dt, m, nel: int):
    """Element-constant coefficients from nodal antidiffusive residuals of one component."""
    Pp = np.maximum(r_nodal, 0.0)
    Pm = np.minimum(r_nodal, 0.0)
    Qp, Qm, scale = _capacities(uL, umin, umax, m, dt)
    at = _ratios(Pp, Pm, Qp, Qm, scale)
    return element_min(at, nel)


def element_min(a: np.ndarray, nel: int) -> np.ndarray:
    return np.repeat(a.reshape(nel, -1).min(axis=1), a.shape[0] // nel)


# --- convex limiting for the Euler equations -------------------------------------------


def _psi(u, K, gamma):
    rho = u[..., 0]
    mom = u[..., 1:-1]
    with np.errstate(divide="ignore", invalid="ignore"):
        rhoe = u[..., -1] - 0.5 * np.sum(mom * mom, axis=-1) / rho
        return rhoe - K * np.abs(rho) ** gamma


def _dpsi(u, du, K, gamma):
    rho = u[..., 0]
    mom = u[..., 1:-1]
    drho = du[..., 0]
    with np.errstate(divide="ignore", invalid="ignore"):
        return (
            du[..., -1]
            - np.sum(mom * du[..., 1:-1], axis=-1) / rho
            + 0.5 * np.sum(mom * mom, axis=-1) * drho / (rho * rho)
            - K * gamma * np.abs(rho) ** (gamma - 1.0) * drho
        )


def density_limit(rho0: np.ndarray, drho: np.ndarray, rho_floor: np.ndarray | float = 0.0):
    """Largest alpha in [0, 1] with ``rho0 + alpha drho >= rho_floor`` (closed form)."""
    alpha = np.ones_like(rho0)
    neg = rho0 + drho < rho_floor
    with np.errstate(divide="ignore", invalid="ignore"):
        a = (rho0 - rho_floor) / (-drho)
    alpha = np.where(neg, np.clip(a, 0.0, 1.0), alpha)
    return alpha


def entropy_line_search(u0, direction, s_min, gamma: float = 1.4, tol: float = 1e-10, maxit: int = 50):
    """Largest alpha in [0, 1] with u0 + alpha * direction in A(s_min), batched.

    Dispatches to the compiled kernel when available; see
    :func:`entropy_line_search_numpy` for the algorithm.
    """
    if _kernels.use_compiled():
        u0 = np.ascontiguousarray(np.atleast_2d(u0), dtype=float)
        dv = np.ascontiguousarray(np.atleast_2d(direction), dtype=float)
        s_min = np.broadcast_to(np.asarray(s_min, dtype=float), u0.shape[:1])
        K = np.ascontiguousarray(np.exp((gamma - 1.0) * s_min))
        return _kernels.ck.entropy_line_search(u0, dv, K, gamma, tol, maxit, _kernels.get_num_threads())
    return entropy_line_search_numpy(u0, direction, s_min, gamma, tol, maxit)


def entropy_line_search_numpy(u0, direction, s_min, gamma: float = 1.4, tol: float = 1e-10, maxit: int = 50):
    """Largest alpha in [0, 1] with u0 + alpha * direction in A(s_min), batched.

    Density positivity is enforced in closed form (with a relative floor of
    1e-12).  The entropy bound is written as ``psi = rho e - K rho^gamma >= 0``
    with ``K = exp((gamma-1) s_min)``; psi is concave along the segment, so the
    chord root stays feasible and the Newton root from the infeasible end
    stays infeasible.  The bracket [lo, hi] shrinks until ``hi - lo <= tol``
    or ``maxit`` iterations, falling back to bisection when a step fails to
    make progress, and the feasible end ``lo`` is returned.
    """
    u0 = np.atleast_2d(np.asarray(u0, dtype=float))
    dv = np.atleast_2d(np.asarray(direction, dtype=float))
    s_min = np.broadcast_to(np.asarray(s_min, dtype=float), u0.shape[:1])
    K = np.exp((gamma - 1.0) * s_min)
    nb = u0.shape[0]
    alpha = np.ones(nb)

    hi = density_limit(u0[:, 0], dv[:, 0], 1e-12 * u0[:, 0])
    p0 = _psi(u0, K, gamma)
    infeasible0 = ~(p0 >= 0.0) | ~(u0[:, 0] > 0.0)
    p_hi = _psi(u0 + hi[:, None] * dv, K, gamma)
    done = (p_hi >= 0.0) | infeasible0
    alpha = np.where(infeasible0, 0.0, hi)
    act = np.flatnonzero(~done)
    if act.size == 0:
        return alpha

    lo = np.zeros(act.size)
    hi = hi[act].copy()
    plo = p0[act].copy()
    phi = p_hi[act].copy()
    ua, da, Ka = u0[act], dv[act], K[act]
    for _ in range(maxit):
        width = hi - lo
        if np.all(width <= tol):
            break
        # chord root: feasible by concavity
        with np.errstate(divide="ignore", invalid="ignore"):
            a_s = lo + plo * width / (plo - phi)
        bad = ~np.isfinite(a_s) | (a_s <= lo) | (a_s >= hi)
        a_s = np.where(bad, 0.5 * (lo + hi), a_s)
        ps = _psi(ua + a_s[:, None] * da, Ka, gamma)
        ok = ps >= 0.0
        lo = np.where(ok, a_s, lo)
        plo = np.where(ok, ps, plo)
        hi = np.where(ok, hi, a_s)
        phi = np.where(ok, phi, ps)
        # Newton step from the infeasible end
        g = _dpsi(ua + hi[:, None] * da, da, Ka, gamma)
        with np.errstate(divide="ignore", invalid="ignore"):
            a_n = hi - phi / g
        bad = ~np.isfinite(a_n) | (a_n <= lo) | (a_n >= hi)
        a_n = np.where(bad, 0.5 * (lo + hi), a_n)
        pn = _psi(ua + a_n[:, None] * da, Ka, gamma)
        ok = pn >= 0.0
        lo = np.where(ok, a_n, lo)
        plo = np.where(ok, pn, plo)
        hi = np.where(ok, hi, a_n)
        phi = np.where(ok, phi, pn)
        # guarantee geometric shrinking
        slow = (hi - lo) > 0.5 * width
        mid = 0.5 * (lo + hi)
        pm = _psi(ua + mid[:, None] * da, Ka, gamma)
        okm = slow & (pm >= 0.0)
        badm = slow & ~(pm >= 0.0)
        lo = np.where(okm, mid, lo)
        plo = np.where(okm, pm, plo)
        hi = np.where(badm, mid, hi)
        phi = np.where(badm, pm, phi)
    alpha[act] = lo
    return alpha


def bisection_line_search(u0, direction, s_min, gamma=1.4, steps: int = 64):
    """Reference oracle: plain bisection on the admissibility predicate."""
    u0 = np.atleast_2d(u0)
    dv = np.atleast_2d(direction)
    s_min = np.broadcast_to(np.asarray(s_min, dtype=float), u0.shape[:1])
    K = np.exp((gamma - 1.0) * s_min)
    rho_floor = 1e-12 * u0[:, 0]

    def feasible(a):
        v = u0 + a[:, None] * dv
        return (v[:, 0] >= rho_floor) & (_psi(v, K, gamma) >= 0.0)

    one = np.ones(len(u0))
    out = np.where(feasible(one), 1.0, 0.0)
    todo = out < 1.0
    lo = np.zeros(len(u0))
    hi = np.ones(len(u0))
    for _ in range(steps):
        mid = 0.5 * (lo + hi)
        f = feasible(mid)
        lo = np.where(f, mid, lo)
        hi = np.where(f, hi, mid)
    return np.where(todo, lo, 1.0)


def convex_limit_elementwise(r_nodal, uL, s_min, dt, m, nel: int, gamma: float = 1.4):
    """Element-constant coefficients keeping ``uL + alpha dt/m r`` in A(s_min)."""
    dirs = dt / m[:, None] * r_nodal
    at = entropy_line_search(uL, dirs, s_min, gamma)
    return element_min(at, nel)


def convex_limit_subcell(fl: AntidiffusiveFluxes, uL, s_min, dt, m, nel, n, gamma: float = 1.4):
    """Face coefficients keeping all 2d provisional states admissible.

    Node i must tolerate ``uL_i + 2d dt/m_i alpha rbar_+`` and
    ``uL_i - 2d dt/m_i alpha rbar_-`` for every direction.
    Returns (alpha_tilde, plus, minus).
    """
    d, N, nc = fl.plus.shape
    g = 2 * d
    fac = g * dt / m
    if _kernels.use_compiled():
        K = np.exp((gamma - 1.0) * np.broadcast_to(np.asarray(s_min, dtype=float), (N,)))
        c = np.ascontiguousarray
        at = _kernels.ck.convex_limit_directions(
            c(fl.plus), c(fl.minus), c(uL, dtype=float), c(K), c(fac), gamma,
            threads=_kernels.get_num_threads(),
        )
        ap, am = face_alpha(at, nel, n, d)
        return at, ap, am
    dirs = np.concatenate(
        [fac[None, :, None] * fl.plus, -fac[None, :, None] * fl.minus], axis=0
    ).reshape(-1, nc)
    base = np.broadcast_to(uL, (2 * d, N, nc)).reshape(-1, nc)
    smin = np.broadcast_to(s_min, (2 * d, N)).reshape(-1)
    nz = np.any(dirs != 0.0, axis=1)
    a = np.ones(len(dirs))
    if np.any(nz):
        a[nz] = entropy_line_search(base[nz], dirs[nz], smin[nz], gamma)
    at = a.reshape(2 * d, N).min(axis=0)
    ap, am = face_alpha(at, nel, n, d)
    return at, ap, am


# --- smoothness indicator --------------------------------------------------------------


def default_s0(p: int) -> float:
    return float(np.log10(float(p) ** -4)) if p >= 1 else 0.0


def smoothness_factor(s, s0: float, kappa: float = 1.0):
    """Sine ramp from 0 (smooth, s < s0 - kappa) to 1 (rough, s > s0 + kappa)."""
    s = np.asarray(s, dtype=float)
    # increasing branch, so the ramp is continuous with the constant pieces
    arg = np.clip((s - s0) / kappa, -1.0, 1.0)
    mid = 0.5 + 0.5 * np.sin(0.5 * np.pi * arg)
    return np.where(s < s0 - kappa, 0.0, np.where(s > s0 + kappa, 1.0, mid))


def element_smoothness(values: np.ndarray, transform: ModalTransform, nel: int, s0: float, kappa: float = 1.0):
    """epsilon_K per element from nodal values (N,)."""
    s = modal_truncation_error(values.reshape(nel, -1), transform)
    return smoothness_factor(s, s0, kappa)


def relax_bounds(umin, umax, eps_nodes, gmin, gmax):
    """Blend local bounds with global bounds: ``eps * local + (1 - eps) * global``.

    Infinite global bounds are allowed; they switch the bound off wherever eps < 1.
    """
    eps_nodes = np.asarray(eps_nodes, dtype=float)
    with np.errstate(invalid="ignore"):
        lo = np.where(eps_nodes >= 1.0, umin, eps_nodes * umin + (1.0 - eps_nodes) * gmin)
        hi = np.where(eps_nodes >= 1.0, umax, eps_nodes * umax + (1.0 - eps_nodes) * gmax)
    return lo, hi

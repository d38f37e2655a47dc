"""Sparsified low-order scheme with graph viscosity.

Residuals carry units of ``m_i du_i/dt`` and are returned split by
direction with shape ``(d, N, nc)``.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Optional

import numpy as np

from . import _kernels
from .discretization import Discretization, StageData, evaluate_stage


class CFLViolation(RuntimeError):
    pass


def _fdot(c: np.ndarray, F: np.ndarray) -> np.ndarray:
    """``c . F`` for c (m, d) and F (m, nc, d)."""
    return np.einsum("md,mcd->mc", c, F)


def residual_low(disc: Discretization, st: StageData) -> np.ndarray:
    """``r_i = c_ii F_i + sum_j c_ij F_j + d_ij (u_j - u_i)``, split by direction."""
    conn = disc.conn
    N = disc.N
    u = st.u_ext
    r = np.zeros((disc.d, N, disc.nc))
    adv = disc.adv
    if adv is not None:
        for k in range(disc.d):
            r[k] += adv.diag[k][:, None] * u[:N]
        for g, (aab, aba), dd in zip(conn.volume, adv.vol, st.vol_d):
            du = (u[g.b] - u[g.a]) * dd[:, None]
            r[g.axis, g.a] += aab[:, None] * u[g.b] + du
            r[g.axis, g.b] += aba[:, None] * u[g.a] - du
        for f, (ba, bb), dd in zip(conn.faces, adv.face_bn, st.face_d):
            fh = 0.5 * (ba[:, None] * u[f.a] + bb[:, None] * u[f.b]) - dd[:, None] * (u[f.b] - u[f.a])
            r[f.axis, f.a] -= fh
            if not f.boundary:
                r[f.axis, f.b] += fh
        return r
    F = st.F_ext
    for k in range(disc.d):
        r[k] += _fdot(conn.diag[k], F[:N])
    for g, dd in zip(conn.volume, st.vol_d):
        du = (u[g.b] - u[g.a]) * dd[:, None]
        r[g.axis, g.a] += _fdot(g.c_ab, F[g.b]) + du
        r[g.axis, g.b] += _fdot(g.c_ba, F[g.a]) - du
    for f, dd in zip(conn.faces, st.face_d):
        fh = 0.5 * (_fdot(f.wn, F[f.a]) + _fdot(f.wn, F[f.b])) - dd[:, None] * (u[f.b] - u[f.a])
        r[f.axis, f.a] -= fh
        if not f.boundary:
            r[f.axis, f.b] += fh
    return r


def residual_low_unsparsified(disc_dense: Discretization, st: StageData) -> np.ndarray:
    """Graph-viscosity residual on the dense DG-SEM stencil.

    ``disc_dense`` must be built with ``sparsified=False``; the assembly is the
    same as :func:`residual_low`, only the stencil differs.
    """
    if disc_dense.sparsified:
        raise ValueError("expected a discretization built with sparsified=False")
    return residual_low(disc_dense, st)


def viscosity_row_sums(disc: Discretization, st: StageData) -> np.ndarray:
    """``sum_{j != i} d_ij`` for every node."""
    s = np.zeros(disc.N)
    for g, dd in zip(disc.conn.volume, st.vol_d):
        s[g.a] += dd
        s[g.b] += dd
    for f, dd in zip(disc.conn.faces, st.face_d):
        s[f.a] += dd
        if not f.boundary:
            s[f.b] += dd
    return s


def dt_from_row_sums(mass: np.ndarray, s: np.ndarray) -> float:
    pos = s > 0.0
    if not np.any(pos):
        return float("inf")
    return float(np.min(mass[pos] / (2.0 * s[pos])))


def idp_max_dt(disc: Discretization, st: StageData) -> float:
    """``min_i m_i / (2 sum_{j != i} d_ij)``; ``inf`` when every d_ij vanishes."""
    if disc.adv is not None:
        # advection viscosities do not depend on the state
        cached = getattr(disc, "_adv_dt", None)
        if cached is None:
            cached = disc._adv_dt = dt_from_row_sums(disc.mass, viscosity_row_sums(disc, st))
        return cached
    s = viscosity_row_sums(disc, st)
    pos = s > 0.0
    if not np.any(pos):
        return float("inf")
    return float(np.min(disc.mass[pos] / (2.0 * s[pos])))


@dataclass
class PairStates:
    """Bar states of every directed pair, grouped like the connectivity.

    ``items`` holds (rows, cols, d_ij, ubar) with ubar of shape (m, nc).
    """

    items: list


def bar_states(disc: Discretization, st: StageData) -> PairStates:
    """Bar states ``(u_i + u_j)/2 + c_ij . (F_j - F_i) / (2 d_ij)``.

    Variable-velocity advection uses ``(u_i + u_j)/2 + a_ij (u_j - u_i) / (2 d_ij)``.
    Pairs with ``d_ij = 0`` carry the plain average (their weight vanishes).
    """
    conn = disc.conn
    u = st.u_ext
    items = []
    adv = disc.adv

    def safe(dd):
        return np.where(dd > 0.0, 2.0 * dd, 1.0)

    if adv is not None:
        for g, (aab, aba), dd in zip(conn.volume, adv.vol, st.vol_d):
            du = u[g.b] - u[g.a]
            avg = 0.5 * (u[g.a] + u[g.b])
            sd = safe(dd)[:, None]
            items.append((g.a, g.b, dd, avg + aab[:, None] / sd * du))
            items.append((g.b, g.a, dd, avg - aba[:, None] / sd * du))
        for f, (ba, bb), dd in zip(conn.faces, adv.face_bn, st.face_d):
            avg = 0.5 * (u[f.a] + u[f.b])
            sd = safe(dd)[:, None]
            # face coefficient c_ab = -wn/2, c_ba = +wn/2, contracted with beta at the target
            items.append((f.a, f.b, dd, avg - 0.5 * (bb[:, None] * u[f.b] - bb[:, None] * u[f.a]) / sd))
            if not f.boundary:
                items.append((f.b, f.a, dd, avg + 0.5 * (ba[:, None] * u[f.a] - ba[:, None] * u[f.b]) / sd))
        return PairStates(items)

    F = st.F_ext
    for g, dd in zip(conn.volume, st.vol_d):
        dF = F[g.b] - F[g.a]
        avg = 0.5 * (u[g.a] + u[g.b])
        sd = safe(dd)[:, None]
        items.append((g.a, g.b, dd, avg + _fdot(g.c_ab, dF) / sd))
        items.append((g.b, g.a, dd, avg - _fdot(g.c_ba, dF) / sd))
    for f, dd in zip(conn.faces, st.face_d):
        dF = _fdot(f.wn, F[f.b] - F[f.a])
        avg = 0.5 * (u[f.a] + u[f.b])
        sd = safe(dd)[:, None]
        items.append((f.a, f.b, dd, avg - 0.5 * dF / sd))
        if not f.boundary:
            items.append((f.b, f.a, dd, avg - 0.5 * dF / sd))
    return PairStates(items)


def local_bounds(disc: Discretization, st: StageData, bars: PairStates, comp: int = 0):
    """Min/max over the node's own value and its bar states for one component."""
    u = st.u[:, comp]
    lo = u.copy()
    hi = u.copy()
    for rows, _, dd, ub in bars.items:
        v = np.where(dd > 0.0, ub[:, comp], u[rows])
        lo[rows] = np.minimum(lo[rows], v)
        hi[rows] = np.maximum(hi[rows], v)
    return lo, hi


def neighbor_bounds(disc: Discretization, st: StageData, values_ext: np.ndarray):
    """Min/max of ``values_ext`` over N(i) including i itself."""
    N = disc.N
    lo = values_ext[:N].copy()
    hi = values_ext[:N].copy()
    conn = disc.conn
    for g in conn.volume:
        for a, b in ((g.a, g.b), (g.b, g.a)):
            lo[a] = np.minimum(lo[a], values_ext[b])
            hi[a] = np.maximum(hi[a], values_ext[b])
    for f in conn.faces:
        lo[f.a] = np.minimum(lo[f.a], values_ext[f.b])
        hi[f.a] = np.maximum(hi[f.a], values_ext[f.b])
        if not f.boundary:
            lo[f.b] = np.minimum(lo[f.b], values_ext[f.a])
            hi[f.b] = np.maximum(hi[f.b], values_ext[f.a])
    return lo, hi


def low_order_update(disc: Discretization, st: StageData, r_low: np.ndarray, dt: float) -> np.ndarray:
    return st.u + dt / disc.mass[:, None] * r_low.sum(axis=0)


def convex_combination_update(disc: Discretization, st: StageData, bars: PairStates, dt: float):
    """``u_i + dt/m_i sum_j 2 d_ij (ubar_ij - u_i)``: the bar-state form of the update."""
    acc = np.zeros_like(st.u)
    for rows, _, dd, ub in bars.items:
        acc[rows] += 2.0 * dd[:, None] * (ub - st.u[rows])
    return st.u + dt / disc.mass[:, None] * acc


def check_cfl(disc: Discretization, st: StageData, dt: float, rtol: float = 1e-12) -> float:
    dt_max = idp_max_dt(disc, st)
    if dt > dt_max * (1.0 + rtol):
        raise CFLViolation(f"time step {dt:.6e} exceeds the IDP bound {dt_max:.6e}")
    return dt_max


def forward_euler_low(disc: Discretization, u: np.ndarray, t: float, dt: float) -> np.ndarray:
    """One low-order IDP forward Euler step; raises :class:`CFLViolation` if dt is too large."""
    st = evaluate_stage(disc, u, t)
    check_cfl(disc, st, dt)
    return low_order_update(disc, st, residual_low(disc, st), dt)


# --- fused sweep over row-sorted pairs (compiled backend) ------------------------------


@dataclass
class PairTable:
    """Directed pairs sorted by row, in CSR form.

    ``und`` maps each pair to its position in the concatenated per-group
    viscosity arrays (volume groups first, then faces).  ``cvec`` holds c_ij;
    ``coef``/``scoef`` are the advection coefficients of u_j and of the face
    self term.
    """

    indptr: np.ndarray
    row: np.ndarray
    col: np.ndarray
    axis: np.ndarray
    und: np.ndarray
    selfflag: np.ndarray
    cvec: np.ndarray
    coef: Optional[np.ndarray]
    scoef: Optional[np.ndarray]
    # gathered advection viscosities (state independent), filled on first use
    dij: Optional[np.ndarray] = None


def pair_table(disc: Discretization) -> PairTable:
    pt = getattr(disc, "_pair_table", None)
    if pt is not None:
        return pt
    conn = disc.conn
    adv = disc.adv
    rows, cols, axes, und, flag, cv, cf, sf = [], [], [], [], [], [], [], []
    off = 0
    for gi, g in enumerate(conn.volume):
        m = len(g.a)
        idx = np.arange(off, off + m)
        for r_, c_, cvec, k in ((g.a, g.b, g.c_ab, 0), (g.b, g.a, g.c_ba, 1)):
            rows.append(r_)
            cols.append(c_)
            axes.append(np.full(m, g.axis))
            und.append(idx)
            flag.append(np.zeros(m, dtype=np.uint8))
            cv.append(cvec)
            if adv is not None:
                cf.append(adv.vol[gi][k])
                sf.append(np.zeros(m))
        off += m
    for fi, f in enumerate(conn.faces):
        m = len(f.a)
        idx = np.arange(off, off + m)
        sides = [(f.a, f.b, -0.5 * f.wn, 0)]
        if not f.boundary:
            sides.append((f.b, f.a, 0.5 * f.wn, 1))
        for r_, c_, cvec, k in sides:
            rows.append(r_)
            cols.append(c_)
            axes.append(np.full(m, f.axis))
            und.append(idx)
            flag.append(np.ones(m, dtype=np.uint8))
            cv.append(cvec)
            if adv is not None:
                ba, bb = adv.face_bn[fi]
                cf.append(-0.5 * bb if k == 0 else 0.5 * ba)
                sf.append(-0.5 * ba if k == 0 else 0.5 * bb)
        off += m
    row = np.concatenate(rows).astype(np.int64)
    order = np.argsort(row, kind="stable")
    row = row[order]
    indptr = np.zeros(disc.N + 1, dtype=np.int64)
    np.cumsum(np.bincount(row, minlength=disc.N), out=indptr[1:])

    def take(parts, dtype=None):
        a = np.concatenate(parts)[order]
        return np.ascontiguousarray(a if dtype is None else a.astype(dtype))

    pt = PairTable(
        indptr,
        row,
        take(cols, np.int64),
        take(axes, np.int64),
        take(und, np.int64),
        take(flag, np.uint8),
        take(cv, float),
        take(cf, float) if adv is not None else None,
        take(sf, float) if adv is not None else None,
    )
    disc._pair_table = pt
    return pt


def low_order_stage(disc: Discretization, st: StageData, comp: int = 0):
    """Low-order residual, bar-state bounds of one component and viscosity row sums.

    Returns (r_low, lo, hi, row_sums).  The compiled backend does the pair loop
    in one sweep; the numpy backend assembles the same quantities group by group.
    """
    if not _kernels.use_compiled():
        bars = bar_states(disc, st)
        lo, hi = local_bounds(disc, st, bars, comp)
        return residual_low(disc, st), lo, hi, viscosity_row_sums(disc, st)
    ck = _kernels.ck
    nt = _kernels.get_num_threads()
    pt = pair_table(disc)
    N = disc.N
    u = np.ascontiguousarray(st.u_ext, dtype=float)
    r = np.zeros((disc.d, N, disc.nc))
    if disc.adv is not None:
        if pt.dij is None:
            pt.dij = np.ascontiguousarray(np.concatenate(list(st.vol_d) + list(st.face_d))[pt.und])
        for k in range(disc.d):
            r[k] += disc.adv.diag[k][:, None] * u[:N]
        lo, hi, rows = ck.low_order_sweep_linear(pt.indptr, pt.col, pt.axis, pt.coef, pt.scoef, pt.dij, u, r, comp, nt)
        return r, lo, hi, rows
    F = np.ascontiguousarray(st.F_ext, dtype=float)
    for k in range(disc.d):
        r[k] += _fdot(disc.conn.diag[k], F[:N])
    dij = np.concatenate(list(st.vol_d) + list(st.face_d))[pt.und]
    lo, hi, rows = ck.low_order_sweep_flux(pt.indptr, pt.col, pt.axis, pt.cvec, pt.selfflag, dij, u, F, r, comp, nt)
    return r, lo, hi, rows

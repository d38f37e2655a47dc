"""Strong-form DG-SEM residual with Lax-Friedrichs interface fluxes."""

from __future__ import annotations

import numpy as np

from .discretization import Discretization, StageData
from .equations import Model
from .mesh import line_axis


def lax_friedrichs_flux(model: Model, um, up, n, xm=None, xp=None) -> np.ndarray:
    """``F.n`` averaged minus ``lam/2 (u+ - u-)`` for unit normals n (m, d)."""
    um = np.asarray(um, dtype=float)
    up = np.asarray(up, dtype=float)
    n = np.asarray(n, dtype=float)
    Fm = np.einsum("mcd,md->mc", model.flux(um, xm), n)
    Fp = np.einsum("mcd,md->mc", model.flux(up, xp if xp is not None else xm), n)
    lam = model.wave_speed(um, up, n, xm, xp)
    return 0.5 * (Fm + Fp) - 0.5 * lam[:, None] * (up.reshape(Fm.shape) - um.reshape(Fm.shape))


def _volume_term(disc: Discretization, Ft: np.ndarray, k: int) -> np.ndarray:
    """``(D_{k,R} Ft)`` element by element for Ft (N, nc)."""
    ops1 = disc.ops.ops1d
    d = disc.d
    V = disc.element_view(Ft)  # (nel, [n,] n, nc)
    ax = line_axis(d, k)
    out = np.moveaxis(np.tensordot(ops1.D, np.moveaxis(V, ax, 0), axes=(1, 0)), 0, ax)
    if d == 2:
        w = ops1.quad.weights
        shape = [1, 1, 1, 1]
        shape[3 - ax] = len(w)  # weight of the other index
        out = out * w.reshape(shape)
    return out.reshape(disc.N, -1)


def residual_high(disc: Discretization, st: StageData) -> np.ndarray:
    """``-[sum_k D_k Ft_k + sum_e B_e (Fhat - F.n)]`` split by direction, shape (d, N, nc)."""
    N = disc.N
    u = st.u_ext
    r = np.zeros((disc.d, N, disc.nc))
    adv = disc.adv
    for k in range(disc.d):
        if adv is not None:
            Ft = adv.qH[:, k][:, None] * u[:N]
        else:
            Ft = np.einsum("nl,ncl->nc", disc.geom.GJ[:, k, :], st.F_ext[:N])
        r[k] -= _volume_term(disc, Ft, k)
    for i, (f, dd) in enumerate(zip(disc.conn.faces, st.face_d)):
        if adv is not None:
            ba, bb = adv.face_bn[i]
            Fa = ba[:, None] * u[f.a]
            Fb = bb[:, None] * u[f.b]
        else:
            Fa = np.einsum("md,mcd->mc", f.wn, st.F_ext[f.a])
            Fb = np.einsum("md,mcd->mc", f.wn, st.F_ext[f.b])
        fh = 0.5 * (Fa + Fb) - dd[:, None] * (u[f.b] - u[f.a])
        r[f.axis, f.a] -= fh - Fa
        if not f.boundary:
            r[f.axis, f.b] += fh - Fb
    return r

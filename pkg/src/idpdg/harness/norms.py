"""Quadrature error norms and evaluation of nodal fields at arbitrary points."""

from __future__ import annotations

from typing import Callable, Optional

import numpy as np

from ..discretization import Discretization
from ..mesh import reference_points
from ..tensor_ops import lagrange_interpolation_matrix


class GridMismatchError(ValueError):
    pass


def _tensor_interp(disc: Discretization, u: np.ndarray, pts1d: np.ndarray) -> np.ndarray:
    """Interpolate (N, nc) nodal values to the tensor grid of ``pts1d`` in every element."""
    nodes = disc.ops.ops1d.quad.nodes
    I = lagrange_interpolation_matrix(nodes, pts1d)
    V = disc.element_view(u)
    if disc.d == 1:
        out = np.einsum("an,enc->eac", I, V)
    else:
        # element arrays are (nel, ny, nx, nc)
        out = np.einsum("an,bm,emnc->ebac", I, I, V)
    return out.reshape(disc.nel, len(pts1d) ** disc.d, -1)


def quadrature_points(disc: Discretization, rule: str = "nodal"):
    """Physical points (nel, q, d), weights (nel, q) and an interpolation function.

    ``rule`` is "nodal" (the collocated Gauss-Lobatto quadrature, i.e. the mass
    matrix) or the number of Gauss-Legendre points per direction.
    """
    if rule == "nodal":
        x = disc.x.reshape(disc.nel, disc.nloc, disc.d)
        w = disc.mass.reshape(disc.nel, disc.nloc)
        return x, w, lambda u: u.reshape(disc.nel, disc.nloc, -1)
    q = int(rule)
    g, gw = np.polynomial.legendre.leggauss(q)
    g = 0.5 * (g + 1.0)
    gw = 0.5 * gw
    wref = gw if disc.d == 1 else np.kron(gw, gw)
    X = disc.mesh.unit_coordinates(reference_points(g, disc.d))
    x = disc.mesh.map_points(X)
    detJ = _tensor_interp(disc, disc.geom.detJ[:, None], g)[..., 0]
    return x, wref[None, :] * detJ, lambda u: _tensor_interp(disc, u, g)


def element_window_mask(disc: Discretization, window) -> np.ndarray:
    if window is None:
        return np.ones(disc.nel, dtype=bool)
    lo, hi = (np.asarray(a, dtype=float) for a in window)
    c = disc.x.reshape(disc.nel, disc.nloc, disc.d).mean(axis=1)
    return np.all((c >= lo) & (c <= hi), axis=1)


def error_norms(
    disc: Discretization,
    u: np.ndarray,
    exact: Callable[[np.ndarray], np.ndarray],
    rule: str = "nodal",
    window=None,
) -> dict:
    """L1, L2 and Linf errors per component against ``exact(x) -> (m, nc)``."""
    x, w, interp = quadrature_points(disc, rule)
    uh = interp(u)
    keep = element_window_mask(disc, window)
    x, w, uh = x[keep], w[keep], uh[keep]
    pts = x.reshape(-1, disc.d)
    ue = np.asarray(exact(pts), dtype=float).reshape(len(pts), -1)
    e = np.abs(uh.reshape(len(pts), -1) - ue)
    wf = w.reshape(-1)
    return {
        "l1": wf @ e,
        "l2": np.sqrt(wf @ (e * e)),
        "linf": e.max(axis=0) if e.size else np.zeros(e.shape[1]),
    }


def _is_affine(disc: Discretization) -> bool:
    return disc.mesh.mapping == "affine" or disc.mesh.amplitude == 0.0


def evaluate_field(disc: Discretization, u: np.ndarray, points: np.ndarray) -> np.ndarray:
    """Point values of the nodal interpolant of ``u`` on an affine tensor mesh."""
    if not _is_affine(disc):
        raise GridMismatchError("point evaluation needs an affine mesh")
    pts = np.atleast_2d(np.asarray(points, dtype=float))
    if pts.shape[1] != disc.d:
        raise GridMismatchError("point dimension does not match the mesh")
    mesh = disc.mesh
    lo = np.asarray(mesh.lower, dtype=float)
    hi = np.asarray(mesh.upper, dtype=float)
    nel = np.asarray(mesh.nel)
    X = (pts - lo) / (hi - lo) * nel
    if np.any(X < -1e-12 * nel) or np.any(X > nel * (1 + 1e-12)):
        raise GridMismatchError("points outside the mesh")
    E = np.clip(np.floor(X).astype(int), 0, nel - 1)
    xi = np.clip(X - E, 0.0, 1.0)
    nodes = disc.ops.ops1d.quad.nodes
    V = disc.element_view(u)
    if disc.d == 1:
        Ix = lagrange_interpolation_matrix(nodes, xi[:, 0])
        return np.einsum("an,anc->ac", Ix, V[E[:, 0]])
    Ix = lagrange_interpolation_matrix(nodes, xi[:, 0])
    Iy = lagrange_interpolation_matrix(nodes, xi[:, 1])
    e = E[:, 1] * nel[0] + E[:, 0]
    return np.einsum("an,am,amnc->ac", Ix, Iy, V[e])


def reference_error_norms(
    disc: Discretization,
    u: np.ndarray,
    ref_disc: Discretization,
    u_ref: np.ndarray,
    rule: str = "nodal",
    window=None,
) -> dict:
    """Errors against a finer reference field interpolated to this grid's quadrature points."""
    if ref_disc.d != disc.d or ref_disc.nc != disc.nc:
        raise GridMismatchError("reference and solution live on incompatible grids")
    if tuple(ref_disc.mesh.lower) != tuple(disc.mesh.lower) or tuple(ref_disc.mesh.upper) != tuple(disc.mesh.upper):
        raise GridMismatchError("reference covers a different domain")
    return error_norms(disc, u, lambda x: evaluate_field(ref_disc, u_ref, x), rule, window)


def conservation_drift(disc: Discretization, u0: np.ndarray, u: np.ndarray) -> np.ndarray:
    """Relative change of ``sum_i m_i u_i`` per component."""
    t0 = disc.total(u0)
    t1 = disc.total(u)
    scale = np.maximum(np.abs(t0), disc.mass.sum() * np.max(np.abs(u0), axis=0))
    scale = np.where(scale > 0.0, scale, 1.0)
    return np.abs(t1 - t0) / scale


def solution_extrema(u: np.ndarray, mask: Optional[np.ndarray] = None):
    v = u if mask is None else u[mask]
    return v.min(axis=0), v.max(axis=0)

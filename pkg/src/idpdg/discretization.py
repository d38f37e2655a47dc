"""Bundles mesh, operators, geometry, connectivity and model for one run.

Boundary data enter through ghost states appended after the N mesh nodes.
A boundary closure is a callable ``bc(u_inner, x, n, t, key) -> u_ghost``
where ``n`` holds outward unit normals and ``key`` is the reference face
(axis, side) of the boundary.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Callable, Optional

import numpy as np

from .equations import LinearAdvection, Model
from .mesh import (
    Connectivity,
    Geometry,
    GeometryError,
    Mesh,
    advection_coefficients,
    build_connectivity,
    build_geometry,
    contravariant_velocity,
)
from .tensor_ops import OperatorsRef, build_operators_1d, gauss_lobatto, kron_assemble

BoundaryClosure = Callable[[np.ndarray, np.ndarray, np.ndarray, float, tuple], np.ndarray]


def _unit(v: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    nrm = np.linalg.norm(v, axis=-1)
    safe = np.where(nrm > 0.0, nrm, 1.0)
    return v / safe[:, None], nrm


def _check_cell_flux(conn, face_bn, N: int) -> None:
    net = np.zeros(N)
    for f, (ba, _) in zip(conn.faces, face_bn):
        np.add.at(net, f.a, ba)
        if not f.boundary:
            np.add.at(net, f.b, -ba)
    scale = max(1.0, max(float(np.abs(ba).max(initial=0.0)) for ba, _ in face_bn))
    if np.any(np.abs(net) > 1e-10 * scale):
        K = int(np.argmax(np.abs(net)))
        raise GeometryError(f"velocity field has nonzero discrete boundary flux in element {K}")


@dataclass
class AdvectionData:
    """Time-independent data of the variable-velocity advection path."""

    beta_ext: np.ndarray
    # contravariant velocities of the high-order scheme, GJ_k . beta
    qH: np.ndarray
    vol: list
    diag: list
    vol_d: list
    face_bn: list
    face_d: list


class Discretization:
    def __init__(
        self,
        mesh: Mesh,
        p: int,
        model: Model,
        bc: Optional[BoundaryClosure] = None,
        sparsified: bool = True,
    ):
        if model.d != mesh.d:
            raise ValueError("model and mesh dimensions differ")
        self.mesh = mesh
        self.model = model
        self.d = mesh.d
        self.p = p
        self.nc = model.nc
        self.ops: OperatorsRef = kron_assemble(build_operators_1d(gauss_lobatto(p)), mesh.d)
        self.geom: Geometry = build_geometry(mesh, self.ops)
        self.conn: Connectivity = build_connectivity(mesh, self.ops, self.geom, sparsified)
        self.sparsified = sparsified
        self.n = p + 1
        self.nloc = self.n**self.d
        self.nel = mesh.n_elements
        self.N = self.geom.n_nodes
        self.G = self.conn.n_ghost
        if self.G and bc is None:
            raise ValueError("non-periodic mesh needs a boundary closure")
        self.bc = bc
        self.mass = self.geom.mass
        self.x = self.geom.x
        self.x_ext = np.empty((self.N + self.G, self.d))
        self.x_ext[: self.N] = self.x
        self.boundary = [f for f in self.conn.faces if f.boundary]
        for f in self.conn.faces:
            f.unit, f.nrm = _unit(f.wn)
            if f.boundary:
                self.x_ext[f.b] = self.x[f.a]
        for g in self.conn.volume:
            g.u_ab, g.n_ab = _unit(g.c_ab)
            g.u_ba, g.n_ba = _unit(g.c_ba)
        self.adv: Optional[AdvectionData] = None
        if isinstance(model, LinearAdvection):
            self._setup_advection()

    # --- advection --------------------------------------------------------------
    def _setup_advection(self):
        beta_ext = np.asarray(self.model.velocity(self.x_ext), dtype=float).copy()
        beta = beta_ext[: self.N]
        qH = np.einsum("nkl,nl->nk", self.geom.GJ, beta)
        if self.sparsified:
            q = contravariant_velocity(self.geom, self.ops, beta, correct=self.model.constant is None)
        else:
            q = qH
        vol, diag = advection_coefficients(self.conn, self.ops, q)
        vol_d = [np.maximum(np.abs(aab), np.abs(aba)) for aab, aba in vol]
        face_bn, face_d = [], []
        fx = self.geom.face_x if self.model.constant is None else None
        for f in self.conn.faces:
            if fx is not None:
                # one node per element: both sides see the velocity at the chord midpoint,
                # so face fluxes cancel around every element
                xm = fx[f.key if f.boundary else (f.axis, 1)][f.a, 0]
                ba = bb = np.sum(np.asarray(self.model.velocity(xm), dtype=float) * f.wn, axis=-1)
            else:
                ba = np.sum(beta_ext[f.a] * f.wn, axis=-1)
                bb = np.sum(beta_ext[f.b] * f.wn, axis=-1)
            face_bn.append((ba, bb))
            face_d.append(0.5 * np.maximum(np.abs(ba), np.abs(bb)))
        if fx is not None:
            _check_cell_flux(self.conn, face_bn, self.N)
        self.adv = AdvectionData(beta_ext, qH, vol, diag, vol_d, face_bn, face_d)

    # --- states ------------------------------------------------------------------
    def extend(self, u: np.ndarray, t: float) -> np.ndarray:
        """Append ghost states to the nodal state (N, nc)."""
        if not self.G:
            return u
        ue = np.empty((self.N + self.G, self.nc))
        ue[: self.N] = u
        for f in self.boundary:
            ue[f.b] = self.bc(u[f.a], self.x[f.a], f.unit, t, f.key)
        return ue

    def project(self, fn: Callable[[np.ndarray], np.ndarray]) -> np.ndarray:
        """Nodal interpolant of ``fn(x) -> (N, nc)`` (or (N,) for scalars)."""
        u = np.asarray(fn(self.x), dtype=float)
        return u.reshape(self.N, self.nc)

    def element_view(self, a: np.ndarray) -> np.ndarray:
        """Reshape (N, ...) to (nel, n, ..., n, ...) with x fastest."""
        return a.reshape((self.nel,) + (self.n,) * self.d + a.shape[1:])

    def total(self, u: np.ndarray) -> np.ndarray:
        """Discrete integral sum_i m_i u_i per component."""
        return self.mass @ u

    def integrate(self, u: np.ndarray) -> np.ndarray:
        return self.total(u)


@dataclass
class StageData:
    """State-dependent quantities shared by both residuals within one stage."""

    u: np.ndarray
    u_ext: np.ndarray
    F_ext: Optional[np.ndarray]
    vol_d: list
    face_d: list
    t: float


def evaluate_stage(disc: Discretization, u: np.ndarray, t: float) -> StageData:
    """Ghost states, fluxes and graph viscosity for the state u at time t.

    Within-element pairs use ``max(lam(u_j, u_i, n_ij) |c_ij|, lam(u_i, u_j, n_ji) |c_ji|)``;
    face pairs use ``lam(u_a, u_b, n) |wn| / 2`` with the same lambda as the
    Lax-Friedrichs flux.
    """
    u_ext = disc.extend(u, t)
    if disc.adv is not None:
        return StageData(u, u_ext, None, disc.adv.vol_d, disc.adv.face_d, t)
    model = disc.model
    model.check_admissible(u_ext)
    F_ext = model.flux(u_ext)
    vol_d = []
    for g in disc.conn.volume:
        ua, ub = u_ext[g.a], u_ext[g.b]
        l1 = model.wave_speed(ub, ua, g.u_ab) * g.n_ab
        l2 = model.wave_speed(ua, ub, g.u_ba) * g.n_ba
        vol_d.append(np.maximum(l1, l2))
    face_d = []
    for f in disc.conn.faces:
        lam = model.wave_speed(u_ext[f.a], u_ext[f.b], f.unit, disc.x_ext[f.a], disc.x_ext[f.b])
        face_d.append(0.5 * lam * f.nrm)
    return StageData(u, u_ext, F_ext, vol_d, face_d, t)

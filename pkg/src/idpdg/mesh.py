"""Tensor-product meshes, metric terms and node connectivity.

Global node numbering is ``K * n**d + local`` with elements ordered ``ex``
fastest and local nodes ``ix`` fastest.  Connectivity is stored as groups of
node pairs in which every row index occurs at most once, so residual
assembly reduces to vectorised gathers and ``r[rows] += ...``.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable, Optional

import numpy as np

from .tensor_ops import (
    OperatorsRef,
    build_operators_1d,
    gauss_lobatto,
    kron_assemble,
    lagrange_derivative_matrix,
    lagrange_interpolation_matrix,
)


class GeometryError(ValueError):
    pass


# --- mesh description -----------------------------------------------------------


def _sine_map(a: float, d: int) -> Callable[[np.ndarray], np.ndarray]:
    def f(X):
        if d == 1:
            return X + a * np.sin(2 * np.pi * X) / (2 * np.pi)
        s = a * np.sin(2 * np.pi * X[..., 0]) * np.sin(2 * np.pi * X[..., 1])
        return X + s[..., None]

    return f


MAPPINGS = ("affine", "sine")


@dataclass(frozen=True)
class Mesh:
    """Uniform tensor grid of the box ``[lower, upper]`` with an optional smooth warp.

    The warp acts on unit-box coordinates and fixes the box boundary, so it
    is compatible with periodicity.
    """

    d: int
    nel: tuple[int, ...]
    lower: tuple[float, ...]
    upper: tuple[float, ...]
    periodic: tuple[bool, ...]
    mapping: str = "affine"
    amplitude: float = 0.0

    def __post_init__(self):
        if self.d not in (1, 2):
            raise ValueError(f"only d in {{1, 2}} is supported, got d={self.d}")
        for name in ("nel", "lower", "upper", "periodic"):
            if len(getattr(self, name)) != self.d:
                raise ValueError(f"{name} needs {self.d} entries")
        if min(self.nel) < 1:
            raise ValueError("need at least one element per axis")
        if self.mapping not in MAPPINGS:
            raise ValueError(f"unknown mapping {self.mapping!r}")

    @property
    def n_elements(self) -> int:
        return int(np.prod(self.nel))

    def element_index(self, idx) -> int:
        if self.d == 1:
            return int(idx[0])
        return int(idx[1]) * self.nel[0] + int(idx[0])

    def element_multi_index(self) -> np.ndarray:
        """``(n_elements, d)`` integer element coordinates (ex, ey)."""
        if self.d == 1:
            return np.arange(self.nel[0])[:, None]
        ey, ex = np.meshgrid(np.arange(self.nel[1]), np.arange(self.nel[0]), indexing="ij")
        return np.stack([ex.ravel(), ey.ravel()], axis=1)

    def unit_map(self) -> Callable[[np.ndarray], np.ndarray]:
        if self.mapping == "sine" and self.amplitude != 0.0:
            return _sine_map(self.amplitude, self.d)
        return lambda X: X

    def map_points(self, X: np.ndarray) -> np.ndarray:
        """Map unit-box coordinates ``(..., d)`` to physical coordinates."""
        lo = np.asarray(self.lower, dtype=float)
        hi = np.asarray(self.upper, dtype=float)
        return lo + (hi - lo) * self.unit_map()(X)

    def unit_coordinates(self, xi: np.ndarray) -> np.ndarray:
        """Unit-box coordinates of reference points ``xi`` (m, d) in every element.

        Returns ``(n_elements, m, d)``.
        """
        E = self.element_multi_index()
        nel = np.asarray(self.nel, dtype=float)
        return (E[:, None, :] + xi[None, :, :]) / nel


def reference_points(nodes: np.ndarray, d: int) -> np.ndarray:
    """Tensor grid of 1D nodes as ``(n**d, d)`` with x varying fastest."""
    if d == 1:
        return nodes[:, None].copy()
    Y, X = np.meshgrid(nodes, nodes, indexing="ij")
    return np.stack([X.ravel(), Y.ravel()], axis=1)


def face_nodes(n: int, d: int, axis: int, side: int) -> np.ndarray:
    """Local indices of the nodes on reference face (axis, side), ordered along the face."""
    last = n - 1 if side else 0
    if d == 1:
        return np.array([last])
    t = np.arange(n)
    return t * n + last if axis == 0 else last * n + t


def line_axis(d: int, k: int) -> int:
    """Array axis of direction k for per-element arrays shaped (nel, n, ..., n)."""
    return d - k


# --- geometry -----------------------------------------------------------------------


@dataclass
class Geometry:
    """Nodal geometric data on all elements.

    ``GJ[i, k, l]`` is ``det(J) (J^{-1})_{kl}`` at node i; row k holds the
    contravariant basis vector of reference direction k.  ``face_wn`` maps a
    reference face key (axis, side) to outward weighted normals with shape
    ``(n_elements, n_face_nodes, d)``; across interior faces the two sides are
    exact negatives.
    """

    d: int
    p: int
    x: np.ndarray
    detJ: np.ndarray
    GJ: np.ndarray
    GJhat: np.ndarray
    mass: np.ndarray
    face_wn: dict
    correction: np.ndarray = field(default=None)
    # p = 0 in 2D only: chord midpoints per face key, (n_elements, 1, d)
    face_x: Optional[dict] = None

    @property
    def n_nodes(self) -> int:
        return len(self.mass)


def _geometry_derivatives(mesh: Mesh, ops: OperatorsRef):
    """Collocation derivatives of the mapping, returned at the solution nodes.

    Returns x (N, d) and dx (N, l, k) = d x_l / d xi_k.  For p = 0 the
    mapping is differentiated on the p = 1 Lobatto grid and interpolated to
    the midpoint.
    """
    d = mesh.d
    p = ops.ops1d.p
    pg = max(p, 1)
    qg = gauss_lobatto(pg)
    ng = pg + 1
    Xg = mesh.unit_coordinates(reference_points(qg.nodes, d))
    xg = mesh.map_points(Xg)  # (nel, ng**d, d)
    L = lagrange_derivative_matrix(qg.nodes)
    nel = mesh.n_elements
    if d == 1:
        dx = np.einsum("ij,ejl->eil", L, xg)[:, :, :, None]
    else:
        xr = xg.reshape(nel, ng, ng, d)
        dxi = np.einsum("ij,eyjl->eyil", L, xr).reshape(nel, ng * ng, d)
        deta = np.einsum("ij,ejxl->eixl", L, xr).reshape(nel, ng * ng, d)
        dx = np.stack([dxi, deta], axis=-1)
    if pg != p:
        I1 = lagrange_interpolation_matrix(qg.nodes, ops.ops1d.quad.nodes)
        I = I1 if d == 1 else np.kron(I1, I1)
        xg = np.einsum("ij,ejl->eil", I, xg)
        dx = np.einsum("ij,ejlk->eilk", I, dx)
    return xg.reshape(-1, d), dx.reshape(-1, d, d)


def build_geometry(mesh: Mesh, ops: OperatorsRef, correct: bool = True) -> Geometry:
    d = mesh.d
    n = ops.ops1d.n
    nloc = n**d
    nel = mesh.n_elements
    x, dx = _geometry_derivatives(mesh, ops)
    if d == 1:
        detJ = dx[:, 0, 0]
        GJ = np.ones((len(x), 1, 1))
    else:
        x_xi, y_xi = dx[:, 0, 0], dx[:, 1, 0]
        x_eta, y_eta = dx[:, 0, 1], dx[:, 1, 1]
        detJ = x_xi * y_eta - x_eta * y_xi
        GJ = np.empty((len(x), 2, 2))
        GJ[:, 0, 0], GJ[:, 0, 1] = y_eta, -x_eta
        GJ[:, 1, 0], GJ[:, 1, 1] = -y_xi, x_xi
    bad = np.flatnonzero(~(detJ > 0.0))
    if bad.size:
        raise GeometryError(
            f"non-positive Jacobian determinant in element {bad[0] // nloc}"
        )

    w = ops.ops1d.quad.weights
    wref = w if d == 1 else np.kron(w, w)
    mass = np.tile(wref, nel) * detJ

    if ops.ops1d.p == 0 and d == 2:
        # chord normals of the p = 1 geometry keep every element closed
        ops1 = _p1_operators(d)
        g1 = build_geometry(mesh, ops1, correct=False)
        face_wn = {key: wn.sum(axis=1, keepdims=True) for key, wn in g1.face_wn.items()}
        x1 = g1.x.reshape(nel, 4, d)
        face_x = {(a, s): x1[:, face_nodes(2, d, a, s)].mean(axis=1, keepdims=True) for a in range(d) for s in (0, 1)}
    else:
        face_wn = _face_normals(GJ.reshape(nel, nloc, d, d), n, d, w)
    _unify_face_normals(mesh, face_wn)

    geom = Geometry(d, ops.ops1d.p, x, detJ, GJ, GJ.copy(), mass, face_wn)
    if ops.ops1d.p == 0 and d == 2:
        geom.face_x = face_x
    if correct:
        geom.correction = correct_metrics(geom, ops)
        geom.GJhat = geom.GJ + geom.correction
    else:
        geom.correction = np.zeros_like(GJ)
    return geom


def _p1_operators(d: int) -> OperatorsRef:
    return kron_assemble(build_operators_1d(gauss_lobatto(1)), d)


def _face_normals(GJe: np.ndarray, n: int, d: int, w: np.ndarray) -> dict:
    face_wn = {}
    for axis in range(d):
        wt = np.ones(1) if d == 1 else w
        for side in (0, 1):
            loc = face_nodes(n, d, axis, side)
            sign = 1.0 if side else -1.0
            face_wn[(axis, side)] = sign * wt[None, :, None] * GJe[:, loc, axis, :]
    return face_wn


def _neighbor_element(mesh: Mesh, axis: int):
    """Plus-side neighbor across the side-1 face of every element (-1 if none)."""
    E = mesh.element_multi_index()
    nb = E.copy()
    nb[:, axis] += 1
    n_ax = mesh.nel[axis]
    if mesh.periodic[axis]:
        nb[:, axis] %= n_ax
        valid = np.ones(len(E), dtype=bool)
    else:
        valid = nb[:, axis] < n_ax
    if mesh.d == 1:
        K = nb[:, 0]
    else:
        K = nb[:, 1] * mesh.nel[0] + nb[:, 0]
    return np.where(valid, K, -1)


def _unify_face_normals(mesh: Mesh, face_wn: dict) -> None:
    for axis in range(mesh.d):
        nb = _neighbor_element(mesh, axis)
        has = nb >= 0
        face_wn[(axis, 0)][nb[has]] = -face_wn[(axis, 1)][has]


def face_normal_sum(geom: Geometry, ops: OperatorsRef) -> np.ndarray:
    """``sum_e B_e n_e`` per node as ``(n_elements, nloc, d)``."""
    n = ops.ops1d.n
    d = geom.d
    nloc = n**d
    nel = geom.n_nodes // nloc
    out = np.zeros((nel, nloc, d))
    for (axis, side), wn in geom.face_wn.items():
        loc = face_nodes(n, d, axis, side)
        np.add.at(out, (slice(None), loc), wn)
    return out


# --- minimum-norm conservative correction ----------------------------------------------


class MinNormSolver:
    """Minimum-norm solutions of ``sum_k Dhat_k^T delta_k = rhs`` on the reference element.

    The pseudoinverse comes from one SVD of the stacked matrix
    ``[Dhat_1^T ... Dhat_d^T]``; singular values below ``1e-12 * s_max``
    are treated as zero.
    """

    def __init__(self, ops: OperatorsRef, rtol: float = 1e-12):
        A = np.hstack([Dh.T for Dh in ops.Dhat])
        U, s, Vt = np.linalg.svd(A, full_matrices=False)
        keep = s > rtol * (s[0] if s.size and s[0] > 0 else 1.0)
        self.A = A
        self.pinv = (Vt[keep].T / s[keep]) @ U[:, keep].T
        self.null = U[:, ~keep]
        self.d = ops.d
        self.nloc = A.shape[0]

    def solve(self, rhs: np.ndarray, tol: float = 1e-10) -> np.ndarray:
        """``rhs`` (nel, nloc, m) -> delta (nel, d, nloc, m)."""
        scale = max(1.0, float(np.max(np.abs(rhs), initial=0.0)))
        if self.null.size:
            proj = np.einsum("iz,eim->ezm", self.null, rhs)
            if np.max(np.abs(proj), initial=0.0) > tol * scale:
                K = int(np.unravel_index(np.argmax(np.abs(proj)), proj.shape)[0])
                raise GeometryError(
                    f"inconsistent geometry: right-hand side not solvable in element {K}"
                )
        sol = np.einsum("ji,eim->ejm", self.pinv, rhs)
        nel, _, m = rhs.shape
        return sol.reshape(nel, self.d, self.nloc, m)


def _apply_dhat_transpose(ops: OperatorsRef, V: np.ndarray) -> np.ndarray:
    """``sum_k Dhat_k^T V[:, :, k, :]`` for V (nel, nloc, d, m)."""
    out = np.zeros((V.shape[0], V.shape[1], V.shape[3]))
    for k, Dh in enumerate(ops.Dhat):
        out += np.einsum("ji,ejm->eim", Dh, V[:, :, k, :])
    return out


def correct_metrics(geom: Geometry, ops: OperatorsRef) -> np.ndarray:
    """Minimum-norm perturbation C with ``sum_k Dhat_k^T (GJ + C)_k = sum_e B_e n_e``.

    Returns C with the shape of ``geom.GJ``.
    """
    d = geom.d
    nloc = ops.M.shape[0]
    nel = geom.n_nodes // nloc
    GJe = geom.GJ.reshape(nel, nloc, d, d)
    rhs = face_normal_sum(geom, ops) - _apply_dhat_transpose(ops, GJe)
    delta = MinNormSolver(ops).solve(rhs)  # (nel, k, nloc, l)
    return np.transpose(delta, (0, 2, 1, 3)).reshape(geom.n_nodes, d, d)


def low_order_identity_residual(geom: Geometry, ops: OperatorsRef, G=None) -> np.ndarray:
    """Max-abs residual of ``sum_k Dhat_k^T G_k - sum_e B_e n_e`` per element."""
    d = geom.d
    nloc = ops.M.shape[0]
    nel = geom.n_nodes // nloc
    G = geom.GJhat if G is None else G
    res = _apply_dhat_transpose(ops, G.reshape(nel, nloc, d, d)) - face_normal_sum(geom, ops)
    return np.max(np.abs(res), axis=(1, 2))


def high_order_identity_residual(geom: Geometry, ops: OperatorsRef):
    """Strong and weak forms of the high-order metric identity per element.

    Strong: ``sum_k D_k GJ_{k,:}`` (vanishes).  Weak:
    ``sum_k D_k^T GJ_{k,:} - sum_e B_e n_e`` (vanishes by SBP).
    """
    d = geom.d
    nloc = ops.M.shape[0]
    nel = geom.n_nodes // nloc
    G = geom.GJ.reshape(nel, nloc, d, d)
    strong = np.zeros((nel, nloc, d))
    weak = -face_normal_sum(geom, ops)
    for k, Dk in enumerate(ops.D):
        strong += np.einsum("ij,ejl->eil", Dk, G[:, :, k, :])
        weak += np.einsum("ji,ejl->eil", Dk, G[:, :, k, :])
    return np.max(np.abs(strong), axis=(1, 2)), np.max(np.abs(weak), axis=(1, 2))


def contravariant_velocity(geom: Geometry, ops: OperatorsRef, beta: np.ndarray, correct=True):
    """Corrected contravariant velocities ``q_k`` (N, d) for divergence-free ``beta``.

    Starts from ``GJhat_k . beta`` and applies the minimum-norm correction so
    that ``sum_k Dhat_k^T q_k`` equals the discrete boundary flux of beta at
    every node.  Raises :class:`GeometryError` when an element's total
    discrete boundary flux of beta does not vanish.
    """
    d = geom.d
    nloc = ops.M.shape[0]
    nel = geom.n_nodes // nloc
    q = np.einsum("nkl,nl->nk", geom.GJhat, beta)
    if not correct:
        return q
    be = beta.reshape(nel, nloc, d)
    target = np.zeros((nel, nloc))
    n = ops.ops1d.n
    for (axis, side), wn in geom.face_wn.items():
        loc = face_nodes(n, d, axis, side)
        np.add.at(target, (slice(None), loc), np.sum(wn * be[:, loc], axis=-1))
    flux = np.abs(target.sum(axis=1))
    scale = max(1.0, float(np.max(np.abs(target), initial=0.0)))
    if np.any(flux > 1e-10 * scale):
        K = int(np.argmax(flux))
        raise GeometryError(f"velocity field has nonzero discrete boundary flux in element {K}")
    rhs = target - _apply_dhat_transpose(ops, q.reshape(nel, nloc, d)[..., None])[..., 0]
    delta = MinNormSolver(ops).solve(rhs[..., None])[..., 0]  # (nel, k, nloc)
    return q + np.transpose(delta, (0, 2, 1)).reshape(-1, d)


# --- connectivity -----------------------------------------------------------------------


@dataclass
class VolumeGroup:
    """In-element node pairs (a, b) along axis k at a fixed offset; b follows a."""

    axis: int
    a: np.ndarray
    b: np.ndarray
    # scalar stencil weights w_other * V1[b_k, a_k] and w_other * V1[a_k, b_k]
    g_ab: np.ndarray
    g_ba: np.ndarray
    c_ab: np.ndarray
    c_ba: np.ndarray


@dataclass
class FaceGroup:
    """Node pairs across element faces of axis k.

    ``a`` lies on the minus side, ``b`` on the plus side (or is a ghost index
    ``>= N`` for boundary faces, in which case ``key`` names the face).
    ``wn`` is the weighted normal pointing out of a's element.
    """

    axis: int
    a: np.ndarray
    b: np.ndarray
    wn: np.ndarray
    boundary: bool = False
    key: Optional[tuple[int, int]] = None

    @property
    def norm(self) -> np.ndarray:
        return np.linalg.norm(self.wn, axis=-1)


@dataclass
class Connectivity:
    d: int
    n: int
    n_nodes: int
    n_ghost: int
    volume: list
    faces: list
    # per-axis in-element diagonal coefficients c_ii, shape (N, d) each
    diag: list
    diag_g: list
    sparsified: bool = True

    @property
    def nloc(self) -> int:
        return self.n**self.d

    def boundary_faces(self):
        return [f for f in self.faces if f.boundary]

    def neighbors(self, i: int) -> dict:
        """Neighbor -> ĉ_ij (vector) for node i; ghosts appear with index >= N."""
        out: dict[int, np.ndarray] = {}
        for g in self.volume:
            for a, b, cab, cba in ((g.a, g.b, g.c_ab, g.c_ba), (g.b, g.a, g.c_ba, g.c_ab)):
                hit = np.flatnonzero(a == i)
                for h in hit:
                    out[int(b[h])] = out.get(int(b[h]), 0.0) + cab[h]
        for f in self.faces:
            hit = np.flatnonzero(f.a == i)
            for h in hit:
                out[int(f.b[h])] = out.get(int(f.b[h]), 0.0) - 0.5 * f.wn[h]
            if not f.boundary:
                hit = np.flatnonzero(f.b == i)
                for h in hit:
                    out[int(f.a[h])] = out.get(int(f.a[h]), 0.0) + 0.5 * f.wn[h]
        return out

    def diagonal_coefficient(self, i: int) -> np.ndarray:
        """ĉ_ii including the face parts."""
        c = sum(dk[i] for dk in self.diag)
        for f in self.faces:
            c = c - 0.5 * np.sum(f.wn[f.a == i], axis=0)
            if not f.boundary:
                c = c + 0.5 * np.sum(f.wn[f.b == i], axis=0)
        return c

    def face_count(self) -> np.ndarray:
        """n_f(i): number of element faces each node lies on."""
        cnt = np.zeros(self.n_nodes, dtype=int)
        for f in self.faces:
            cnt[f.a] += 1
            if not f.boundary:
                cnt[f.b] += 1
        return cnt


def _volume_groups(d: int, n: int, nel: int, V1: np.ndarray, w: np.ndarray, G: np.ndarray):
    """Enumerate in-element pairs with nonzero 1D weights.

    G has shape (N, d, m); coefficient of pair (i, j) along axis k is
    ``w_other * V1[j_k, i_k] * G[j, k, :]``.
    """
    nloc = n**d
    base = np.arange(nel)[:, None] * nloc
    groups = []
    idx = np.arange(n)
    for k in range(d):
        stride = 1 if k == 0 else n
        if d == 1:
            ik = idx
            other = np.zeros(n, dtype=int)
            wo = np.ones(n)
            loc = idx
        else:
            iy, ix = np.meshgrid(idx, idx, indexing="ij")
            ik = (ix if k == 0 else iy).ravel()
            oth = (iy if k == 0 else ix).ravel()
            wo = w[oth]
            loc = np.arange(nloc)
            other = oth
        del other
        for o in range(1, n):
            sel = ik <= n - 1 - o
            la = loc[sel]
            lb = la + o * stride
            ka, kb = ik[sel], ik[sel] + o
            g_ab = wo[sel] * V1[kb, ka]
            g_ba = wo[sel] * V1[ka, kb]
            if not (np.any(g_ab) or np.any(g_ba)):
                continue
            a = (base + la[None, :]).ravel()
            b = (base + lb[None, :]).ravel()
            gab = np.tile(g_ab, nel)
            gba = np.tile(g_ba, nel)
            groups.append(
                VolumeGroup(
                    axis=k,
                    a=a,
                    b=b,
                    g_ab=gab,
                    g_ba=gba,
                    c_ab=gab[:, None] * G[b, k, :],
                    c_ba=gba[:, None] * G[a, k, :],
                )
            )
    return groups


def _diag_coefficients(d: int, n: int, nel: int, V1, w, G):
    nloc = n**d
    idx = np.arange(n)
    diag, diag_g = [], []
    for k in range(d):
        if d == 1:
            gk = np.diag(V1).copy()
        else:
            iy, ix = np.meshgrid(idx, idx, indexing="ij")
            ik = (ix if k == 0 else iy).ravel()
            oth = (iy if k == 0 else ix).ravel()
            gk = w[oth] * np.diag(V1)[ik]
        g = np.tile(gk, nel)
        diag_g.append(g)
        diag.append(g[:, None] * G[:, k, :])
    del nloc
    return diag, diag_g


def build_connectivity(
    mesh: Mesh, ops: OperatorsRef, geom: Geometry, sparsified: bool = True
) -> Connectivity:
    """Pair groups of the low-order stencil.

    ``sparsified=False`` uses the dense weak-form derivative with the
    uncorrected metric terms (which already satisfy the weak identity).
    """
    d = mesh.d
    n = ops.ops1d.n
    nloc = n**d
    nel = mesh.n_elements
    N = nel * nloc
    w = ops.ops1d.quad.weights
    if sparsified:
        V1, G = ops.ops1d.Dhat, geom.GJhat
    else:
        V1, G = ops.ops1d.D, geom.GJ
    volume = _volume_groups(d, n, nel, V1, w, G)
    diag, diag_g = _diag_coefficients(d, n, nel, V1, w, G)

    faces = []
    n_ghost = 0
    for axis in range(d):
        nb = _neighbor_element(mesh, axis)
        lo_loc = face_nodes(n, d, axis, 0)
        hi_loc = face_nodes(n, d, axis, 1)
        has = np.flatnonzero(nb >= 0)
        if has.size:
            a = (has[:, None] * nloc + hi_loc[None, :]).ravel()
            b = (nb[has][:, None] * nloc + lo_loc[None, :]).ravel()
            wn = geom.face_wn[(axis, 1)][has].reshape(-1, d)
            faces.append(FaceGroup(axis, a, b, wn))
        if not mesh.periodic[axis]:
            E = mesh.element_multi_index()
            for side, loc in ((0, lo_loc), (1, hi_loc)):
                at = 0 if side == 0 else mesh.nel[axis] - 1
                els = np.flatnonzero(E[:, axis] == at)
                a = (els[:, None] * nloc + loc[None, :]).ravel()
                ghost = N + n_ghost + np.arange(len(a))
                n_ghost += len(a)
                wn = geom.face_wn[(axis, side)][els].reshape(-1, d)
                faces.append(FaceGroup(axis, a, ghost, wn, boundary=True, key=(axis, side)))
    return Connectivity(d, n, N, n_ghost, volume, faces, diag, diag_g, sparsified)


def advection_coefficients(conn: Connectivity, ops: OperatorsRef, q: np.ndarray):
    """Velocity-contracted stencil weights a_ij = g_ij * q_k(j) for every volume group.

    Returns (list of (a_ab, a_ba) per volume group, list of per-axis diagonals).
    """
    vol = [(g.g_ab * q[g.b, g.axis], g.g_ba * q[g.a, g.axis]) for g in conn.volume]
    diag = [conn.diag_g[k] * q[:, k] for k in range(conn.d)]
    return vol, diag


# --- lines and subcell faces ----------------------------------------------------------


def element_lines(n: int, d: int, k: int) -> list[np.ndarray]:
    """Local node index sets of all lines along direction k, each ordered along k."""
    loc = np.arange(n**d).reshape((n,) * d)
    ax = line_axis(d, k) - 1
    lines = np.moveaxis(loc, ax, -1).reshape(-1, n)
    return [ln for ln in lines]


def subcell_faces(n: int, d: int, k: int) -> list[tuple[int, int, np.ndarray]]:
    """Interior subcell faces along direction k as (left node, right node, members).

    ``members`` is M(m, k): the nodes on the line up to and including the
    left node, so that consecutive faces differ by exactly one node.
    """
    out = []
    for ln in element_lines(n, d, k):
        for m in range(n - 1):
            out.append((int(ln[m]), int(ln[m + 1]), ln[: m + 1].copy()))
    return out

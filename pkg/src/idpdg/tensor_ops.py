"""Reference-element operators on tensor-product Gauss-Lobatto grids.

All operators live on the reference interval [0, 1] (or the square [0, 1]^2).
In two dimensions nodal data on one element is stored with shape ``(n, n)``
indexed ``[iy, ix]``, so that flattening in C order puts ``ix`` fastest and the
Kronecker factor on the right acts along ``x``.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

MAX_DEGREE = 32


@dataclass(frozen=True)
class Quadrature1D:
    p: int
    nodes: np.ndarray
    weights: np.ndarray


@dataclass(frozen=True)
class Operators1D:
    quad: Quadrature1D
    M: np.ndarray
    D: np.ndarray
    Dhat: np.ndarray
    B0: np.ndarray
    B1: np.ndarray
    # unweighted collocation derivative, D = diag(w) @ deriv
    deriv: np.ndarray

    @property
    def p(self) -> int:
        return self.quad.p

    @property
    def n(self) -> int:
        return self.quad.p + 1


@dataclass(frozen=True)
class OperatorsRef:
    """Kronecker-assembled operators on the reference element."""

    d: int
    ops1d: Operators1D
    M: np.ndarray
    D: tuple[np.ndarray, ...]
    Dhat: tuple[np.ndarray, ...]
    # keys are (axis, side) with side 0 for the face at xi_axis = 0
    B: dict[tuple[int, int], np.ndarray] = field(default_factory=dict)


def _legendre_and_derivative(p: int, x: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """Legendre polynomial P_p and its derivative on [-1, 1]."""
    p0 = np.ones_like(x)
    if p == 0:
        return p0, np.zeros_like(x)
    p1 = x.copy()
    for k in range(2, p + 1):
        p0, p1 = p1, ((2 * k - 1) * x * p1 - (k - 1) * p0) / k
    # derivative from the recurrence, valid away from x = +-1
    with np.errstate(divide="ignore", invalid="ignore"):
        dp = p * (x * p1 - p0) / (x * x - 1.0)
    end = np.isclose(np.abs(x), 1.0, rtol=0.0, atol=1e-15)
    dp = np.where(end, np.sign(x) ** (p + 1) * p * (p + 1) / 2.0, dp)
    return p1, dp


def gauss_lobatto(p: int) -> Quadrature1D:
    """Gauss-Lobatto nodes and weights mapped to [0, 1].

    Interior nodes are the roots of P_p'; they are found by Newton iteration on
    ``(1 - x^2) P_p'(x)`` starting from Chebyshev-Gauss-Lobatto points, then
    symmetrized.  ``p = 0`` degenerates to the midpoint rule.
    """
    if p < 0 or p > MAX_DEGREE:
        raise ValueError(f"polynomial degree must be in [0, {MAX_DEGREE}], got {p}")
    if p == 0:
        return Quadrature1D(0, np.array([0.5]), np.array([1.0]))

    n = p + 1
    x = -np.cos(np.pi * np.arange(n) / p)
    # Newton on q(x) = (1 - x^2) P_p'(x) = p (P_{p-1} - x P_p); q' = -p(p+1) P_p
    for _ in range(100):
        P, _ = _legendre_and_derivative(p, x)
        Pm1, _ = _legendre_and_derivative(p - 1, x)
        q = p * (Pm1 - x * P)
        dq = -p * (p + 1) * P
        dx = np.zeros_like(x)
        dx[1:-1] = q[1:-1] / dq[1:-1]
        x = x - dx
        if np.max(np.abs(dx)) < 1e-15:
            break
    x[0], x[-1] = -1.0, 1.0
    x = 0.5 * (x - x[::-1])
    if p % 2 == 0:
        x[p // 2] = 0.0

    P, _ = _legendre_and_derivative(p, x)
    w = 2.0 / (p * (p + 1) * P * P)
    w = 0.5 * (w + w[::-1])

    nodes = 0.5 * (x + 1.0)
    nodes[0], nodes[-1] = 0.0, 1.0
    weights = 0.5 * w
    return Quadrature1D(p, nodes, weights)


def lagrange_derivative_matrix(x: np.ndarray) -> np.ndarray:
    """``L[i, j] = phi_j'(x_i)`` for the Lagrange basis on nodes ``x``."""
    n = len(x)
    if n == 1:
        return np.zeros((1, 1))
    diff = x[:, None] - x[None, :]
    np.fill_diagonal(diff, 1.0)
    bary = 1.0 / np.prod(diff, axis=1)
    L = (bary[None, :] / bary[:, None]) / diff
    np.fill_diagonal(L, 0.0)
    np.fill_diagonal(L, -L.sum(axis=1))
    return L


def lagrange_interpolation_matrix(x: np.ndarray, y: np.ndarray) -> np.ndarray:
    """``I[a, j] = phi_j(y_a)``: evaluates the nodal interpolant at points ``y``."""
    n = len(x)
    I = np.ones((len(y), n))
    for j in range(n):
        for m in range(n):
            if m != j:
                I[:, j] *= (y - x[m]) / (x[j] - x[m])
    return I


def sparsified_derivative(p: int) -> np.ndarray:
    """First-order weighted derivative from piecewise-linear hat functions."""
    n = p + 1
    Dhat = np.zeros((n, n))
    if p == 0:
        return Dhat
    Dhat[0, 0], Dhat[0, 1] = -0.5, 0.5
    for i in range(1, p):
        Dhat[i, i - 1], Dhat[i, i + 1] = -0.5, 0.5
    Dhat[p, p - 1], Dhat[p, p] = -0.5, 0.5
    return Dhat


def build_operators_1d(q: Quadrature1D) -> Operators1D:
    n = q.p + 1
    deriv = lagrange_derivative_matrix(q.nodes)
    D = q.weights[:, None] * deriv
    B0 = np.zeros((n, n))
    B1 = np.zeros((n, n))
    B0[0, 0] = 1.0
    B1[-1, -1] = 1.0
    return Operators1D(
        quad=q,
        M=np.diag(q.weights),
        D=D,
        Dhat=sparsified_derivative(q.p),
        B0=B0,
        B1=B1,
        deriv=deriv,
    )


def kron_assemble(ops: Operators1D, d: int) -> OperatorsRef:
    if d == 1:
        return OperatorsRef(
            d=1,
            ops1d=ops,
            M=ops.M.copy(),
            D=(ops.D.copy(),),
            Dhat=(ops.Dhat.copy(),),
            B={(0, 0): ops.B0.copy(), (0, 1): ops.B1.copy()},
        )
    if d == 2:
        M = ops.M
        return OperatorsRef(
            d=2,
            ops1d=ops,
            M=np.kron(M, M),
            D=(np.kron(M, ops.D), np.kron(ops.D, M)),
            Dhat=(np.kron(M, ops.Dhat), np.kron(ops.Dhat, M)),
            B={
                (0, 0): np.kron(M, ops.B0),
                (0, 1): np.kron(M, ops.B1),
                (1, 0): np.kron(ops.B0, M),
                (1, 1): np.kron(ops.B1, M),
            },
        )
    raise ValueError(f"only d in {{1, 2}} is supported, got d={d}")


def apply_along_axis(A: np.ndarray, u: np.ndarray, axis: int) -> np.ndarray:
    """Apply the 1D matrix ``A`` along ``axis`` of a batched nodal array."""
    u = np.moveaxis(u, axis, -1)
    out = u @ A.T
    return np.moveaxis(out, -1, axis)


# --- modal Legendre transform used by the smoothness indicator -------------


def legendre_vandermonde(nodes: np.ndarray, p: int) -> np.ndarray:
    """``V[i, m]`` = value of the L2([0,1])-orthonormal Legendre mode m at node i."""
    x = 2.0 * nodes - 1.0
    V = np.zeros((len(nodes), p + 1))
    for m in range(p + 1):
        P, _ = _legendre_and_derivative(m, x)
        V[:, m] = np.sqrt(2 * m + 1) * P
    return V


@dataclass(frozen=True)
class ModalTransform:
    d: int
    p: int
    V: np.ndarray
    Vinv: np.ndarray
    # True where any 1D modal index equals p
    mask: np.ndarray

    def to_modal(self, u: np.ndarray) -> np.ndarray:
        """Nodal values ``(..., n**d)`` to orthonormal modal coefficients."""
        return u @ self.Vinv.T

    def to_nodal(self, c: np.ndarray) -> np.ndarray:
        return c @ self.V.T


def modal_transform(p: int, d: int) -> ModalTransform:
    q = gauss_lobatto(p)
    V1 = legendre_vandermonde(q.nodes, p)
    idx = np.arange(p + 1)
    if d == 1:
        V = V1
        mask = idx == p
    elif d == 2:
        V = np.kron(V1, V1)
        my, mx = np.meshgrid(idx, idx, indexing="ij")
        mask = ((my == p) | (mx == p)).ravel()
    else:
        raise ValueError(f"only d in {{1, 2}} is supported, got d={d}")
    return ModalTransform(d=d, p=p, V=V, Vinv=np.linalg.inv(V), mask=mask)


NEG_INF = -np.inf
ROUNDOFF_ENERGY = 1e-28


def modal_truncation_error(u: np.ndarray, transform: ModalTransform) -> np.ndarray:
    """log10 of the fraction of L2 energy carried by the highest modes.

    ``u`` holds nodal values with shape ``(..., n**d)``.  Elements whose norm
    vanishes (below 1e-300) or whose high-mode energy is at round-off level
    (relative 1e-28) get ``-inf``.
    """
    u = np.asarray(u, dtype=float)
    c = transform.to_modal(u)
    total = np.sum(c * c, axis=-1)
    high = np.sum(np.where(transform.mask, c * c, 0.0), axis=-1)
    out = np.full(total.shape, NEG_INF)
    ok = (total > 1e-300) & (high > ROUNDOFF_ENERGY * total)
    out[ok] = np.log10(high[ok] / total[ok])
    return out

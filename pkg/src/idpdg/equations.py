"""Equation models: fluxes, wave-speed bounds and invariant sets.

States are stored as ``(N, nc)`` arrays, fluxes as ``(N, nc, d)`` and normals
as ``(N, d)`` unit vectors.  Every model is a pure function of immutable
parameters.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Callable, Optional

import numpy as np

from . import _kernels


class InadmissibleStateError(ValueError):
    """Raised when a state lies outside the domain of the flux."""

    def __init__(self, message: str, index: Optional[int] = None):
        super().__init__(message)
        self.index = index


class Model:
    """Interface shared by all equation models."""

    name: str = "model"
    nc: int = 1
    d: int = 1
    scalar: bool = True
    linear_velocity: bool = False

    def flux(self, u: np.ndarray, x: Optional[np.ndarray] = None) -> np.ndarray:
        raise NotImplementedError

    def wave_speed(
        self,
        um: np.ndarray,
        up: np.ndarray,
        n: np.ndarray,
        xm: Optional[np.ndarray] = None,
        xp: Optional[np.ndarray] = None,
    ) -> np.ndarray:
        raise NotImplementedError

    def check_admissible(self, u: np.ndarray) -> None:
        """Raise :class:`InadmissibleStateError` if the flux is undefined."""
        if not np.all(np.isfinite(u)):
            bad = int(np.flatnonzero(~np.all(np.isfinite(u), axis=-1))[0])
            raise InadmissibleStateError(f"non-finite state at node {bad}", bad)


def _as_states(u: np.ndarray, nc: int) -> np.ndarray:
    u = np.asarray(u, dtype=float)
    if u.ndim == 1:
        u = u.reshape(-1, nc) if nc > 1 else u[:, None]
    return u


# --- scalar models -----------------------------------------------------------


class LinearAdvection(Model):
    """``u_t + div(beta(x) u) = 0`` with a constant or prescribed velocity."""

    name = "advection"
    linear_velocity = True

    def __init__(self, d: int, velocity):
        self.d = d
        if callable(velocity):
            self._beta = velocity
            self.constant = None
        else:
            v = np.atleast_1d(np.asarray(velocity, dtype=float))
            if v.shape != (d,):
                raise ValueError(f"velocity must have {d} components")
            self.constant = v
            self._beta = None

    def velocity(self, x: Optional[np.ndarray], n: Optional[int] = None) -> np.ndarray:
        if self.constant is not None:
            count = n if n is not None else (1 if x is None else len(x))
            return np.broadcast_to(self.constant, (count, self.d))
        if x is None:
            raise ValueError("variable velocity needs node coordinates")
        return np.asarray(self._beta(x), dtype=float).reshape(len(x), self.d)

    def flux(self, u, x=None):
        u = _as_states(u, 1)
        beta = self.velocity(x, len(u))
        return u[:, :, None] * beta[:, None, :]

    def wave_speed(self, um, up, n, xm=None, xp=None):
        n = np.asarray(n, dtype=float)
        bm = self.velocity(xm, len(n))
        bp = self.velocity(xp if xp is not None else xm, len(n))
        return np.maximum(np.abs(np.sum(bm * n, axis=-1)), np.abs(np.sum(bp * n, axis=-1)))


class Burgers(Model):
    """``u_t + div(u^2 v / 2) = 0`` with a constant direction vector ``v``."""

    name = "burgers"

    def __init__(self, d: int = 1, v=None):
        self.d = d
        v = np.ones(d) if v is None else np.atleast_1d(np.asarray(v, dtype=float))
        if v.shape != (d,):
            raise ValueError(f"v must have {d} components")
        self.v = v

    def flux(self, u, x=None):
        u = _as_states(u, 1)
        return 0.5 * (u * u)[:, :, None] * self.v[None, None, :]

    def wave_speed(self, um, up, n, xm=None, xp=None):
        vn = np.abs(np.asarray(n, dtype=float) @ self.v)
        um = _as_states(um, 1)[:, 0]
        up = _as_states(up, 1)[:, 0]
        return np.maximum(np.abs(um), np.abs(up)) * vn


def _bl_critical_points() -> np.ndarray:
    # f'' vanishes where 10 u^3 - 15 u^2 + 1 = 0
    roots = np.roots([10.0, -15.0, 0.0, 1.0])
    return np.sort(roots[np.abs(roots.imag) < 1e-12].real)


class BuckleyLeverett(Model):
    """Non-convex flux ``4u^2 / (4u^2 + (1-u)^2)`` in one dimension."""

    name = "buckley_leverett"
    critical = _bl_critical_points()

    def __init__(self):
        self.d = 1

    @staticmethod
    def f(u):
        return 4.0 * u * u / (4.0 * u * u + (1.0 - u) ** 2)

    @staticmethod
    def df(u):
        return 8.0 * u * (1.0 - u) / (5.0 * u * u - 2.0 * u + 1.0) ** 2

    def flux(self, u, x=None):
        u = _as_states(u, 1)
        return self.f(u)[:, :, None]

    def wave_speed(self, um, up, n, xm=None, xp=None):
        um = _as_states(um, 1)[:, 0]
        up = _as_states(up, 1)[:, 0]
        lo = np.minimum(um, up)
        hi = np.maximum(um, up)
        lam = np.maximum(np.abs(self.df(lo)), np.abs(self.df(hi)))
        for c in self.critical:
            inside = (lo <= c) & (c <= hi)
            lam = np.where(inside, np.maximum(lam, abs(self.df(c))), lam)
        return lam * np.abs(np.asarray(n, dtype=float)[:, 0])


# --- compressible Euler ----------------------------------------------------------


class Euler(Model):
    """Ideal-gas Euler equations in conserved variables (rho, rho v, rho E)."""

    name = "euler"
    scalar = False

    def __init__(self, d: int = 1, gamma: float = 1.4, gms: bool = True):
        self.d = d
        self.nc = d + 2
        self.gamma = gamma
        # two-rarefaction guaranteed bound; False selects |v.n| + c
        self.gms = gms

    # primitive <-> conserved
    def from_primitive(self, rho, v, p) -> np.ndarray:
        rho = np.atleast_1d(np.asarray(rho, dtype=float))
        v = np.asarray(v, dtype=float).reshape(len(rho), self.d)
        p = np.atleast_1d(np.asarray(p, dtype=float))
        u = np.empty((len(rho), self.nc))
        u[:, 0] = rho
        u[:, 1 : 1 + self.d] = rho[:, None] * v
        u[:, -1] = p / (self.gamma - 1.0) + 0.5 * rho * np.sum(v * v, axis=-1)
        return u

    def velocity(self, u):
        return u[:, 1 : 1 + self.d] / u[:, :1]

    def pressure(self, u):
        rho = u[:, 0]
        mom = u[:, 1 : 1 + self.d]
        return (self.gamma - 1.0) * (u[:, -1] - 0.5 * np.sum(mom * mom, axis=-1) / rho)

    def internal_energy(self, u):
        """Specific internal energy e = E - |v|^2 / 2."""
        rho = u[:, 0]
        mom = u[:, 1 : 1 + self.d]
        return u[:, -1] / rho - 0.5 * np.sum(mom * mom, axis=-1) / (rho * rho)

    def entropy(self, u):
        """Specific entropy s = log(e^(1/(gamma-1)) / rho)."""
        e = self.internal_energy(u)
        with np.errstate(divide="ignore", invalid="ignore"):
            return np.log(e) / (self.gamma - 1.0) - np.log(u[:, 0])

    def sound_speed(self, u):
        return np.sqrt(self.gamma * self.pressure(u) / u[:, 0])

    def check_admissible(self, u):
        super().check_admissible(u)
        bad = np.flatnonzero(u[:, 0] <= 0.0)
        if bad.size:
            raise InadmissibleStateError(f"non-positive density at node {bad[0]}", int(bad[0]))

    def flux(self, u, x=None):
        u = _as_states(u, self.nc)
        self.check_admissible(u)
        d = self.d
        rho = u[:, 0]
        v = u[:, 1 : 1 + d] / rho[:, None]
        p = self.pressure(u)
        F = np.empty((len(u), self.nc, d))
        F[:, 0, :] = u[:, 1 : 1 + d]
        F[:, 1 : 1 + d, :] = u[:, 1 : 1 + d, None] * v[:, None, :]
        for k in range(d):
            F[:, 1 + k, k] += p
        F[:, -1, :] = (u[:, -1] + p)[:, None] * v
        return F

    def wave_speed(self, um, up, n, xm=None, xp=None):
        g = self.gamma
        um = _as_states(um, self.nc)
        up = _as_states(up, self.nc)
        n = np.asarray(n, dtype=float)
        if _kernels.use_compiled() and n.shape == (len(um), self.d):
            c = np.ascontiguousarray
            return _kernels.ck.euler_wave_speed(
                c(um, dtype=float), c(up, dtype=float), c(n), g, self.gms, _kernels.get_num_threads()
            )
        rl, rr = um[:, 0], up[:, 0]
        vl = np.sum(um[:, 1 : 1 + self.d] * n, axis=-1) / rl
        vr = np.sum(up[:, 1 : 1 + self.d] * n, axis=-1) / rr
        pl, pr = self.pressure(um), self.pressure(up)
        cl = np.sqrt(g * pl / rl)
        cr = np.sqrt(g * pr / rr)
        if not self.gms:
            return np.maximum(np.abs(vl) + cl, np.abs(vr) + cr)
        z = (g - 1.0) / (2.0 * g)
        num = np.maximum(cl + cr - 0.5 * (g - 1.0) * (vr - vl), 0.0)
        den = cl * pl ** (-z) + cr * pr ** (-z)
        p_star = (num / den) ** (1.0 / z)
        a = (g + 1.0) / (2.0 * g)
        lam1 = vl - cl * np.sqrt(1.0 + a * np.maximum((p_star - pl) / pl, 0.0))
        lam3 = vr + cr * np.sqrt(1.0 + a * np.maximum((p_star - pr) / pr, 0.0))
        return np.maximum(np.abs(lam1), np.abs(lam3))


# --- invariant sets ---------------------------------------------------------------


@dataclass
class ScalarBounds:
    lower: np.ndarray | float
    upper: np.ndarray | float


@dataclass
class EntropyBounds:
    s_min: np.ndarray | float


def invariant_check(model: Model, u, bounds, slack: float = 1e-12) -> bool:
    """Membership test for the model's invariant set.

    Scalar models check ``lower - slack <= u <= upper + slack``.  Euler states
    need ``rho > 0`` and ``e > 0`` strictly and ``s >= s_min - slack``.
    """
    u = _as_states(u, model.nc)
    if model.scalar:
        lo = np.asarray(bounds.lower, dtype=float)
        hi = np.asarray(bounds.upper, dtype=float)
        v = u[:, 0]
        return bool(np.all((v >= lo - slack) & (v <= hi + slack)))
    rho = u[:, 0]
    if not np.all(rho > 0.0):
        return False
    e = model.internal_energy(u)
    if not np.all(e > 0.0):
        return False
    if bounds is None:
        return True
    s = model.entropy(u)
    r = np.asarray(bounds.s_min, dtype=float)
    return bool(np.all(s >= r - slack * np.maximum(1.0, np.abs(r))))


# --- exact Riemann solver for 1D Euler -------------------------------------------


class VacuumError(ValueError):
    pass


@dataclass(frozen=True)
class RiemannSolution:
    """Exact self-similar solution of a 1D Euler Riemann problem."""

    gamma: float
    left: tuple[float, float, float]
    right: tuple[float, float, float]
    p_star: float
    v_star: float

    def sample(self, xi) -> np.ndarray:
        """Primitive (rho, v, p) at similarity coordinates ``xi = x / t``."""
        xi = np.atleast_1d(np.asarray(xi, dtype=float))
        out = np.empty((len(xi), 3))
        for i, s in enumerate(xi):
            out[i] = self._sample_point(s)
        return out

    def _sample_point(self, s: float) -> tuple[float, float, float]:
        g = self.gamma
        ps, us = self.p_star, self.v_star
        if s <= us:
            rho, u, p = self.left
            c = np.sqrt(g * p / rho)
            if ps > p:
                ratio = ps / p
                sl = u - c * np.sqrt((g + 1) / (2 * g) * ratio + (g - 1) / (2 * g))
                if s <= sl:
                    return rho, u, p
                r = rho * (ratio + (g - 1) / (g + 1)) / ((g - 1) / (g + 1) * ratio + 1)
                return r, us, ps
            cs = c * (ps / p) ** ((g - 1) / (2 * g))
            head, tail = u - c, us - cs
            if s <= head:
                return rho, u, p
            if s >= tail:
                return rho * (ps / p) ** (1 / g), us, ps
            f = 2 / (g + 1) + (g - 1) / ((g + 1) * c) * (u - s)
            return rho * f ** (2 / (g - 1)), 2 / (g + 1) * (c + (g - 1) / 2 * u + s), p * f ** (
                2 * g / (g - 1)
            )
        rho, u, p = self.right
        c = np.sqrt(g * p / rho)
        if ps > p:
            ratio = ps / p
            sr = u + c * np.sqrt((g + 1) / (2 * g) * ratio + (g - 1) / (2 * g))
            if s >= sr:
                return rho, u, p
            r = rho * (ratio + (g - 1) / (g + 1)) / ((g - 1) / (g + 1) * ratio + 1)
            return r, us, ps
        cs = c * (ps / p) ** ((g - 1) / (2 * g))
        head, tail = u + c, us + cs
        if s >= head:
            return rho, u, p
        if s <= tail:
            return rho * (ps / p) ** (1 / g), us, ps
        f = 2 / (g + 1) - (g - 1) / ((g + 1) * c) * (u - s)
        return rho * f ** (2 / (g - 1)), 2 / (g + 1) * (-c + (g - 1) / 2 * u + s), p * f ** (
            2 * g / (g - 1)
        )


def _pressure_function(p, rho, pk, ck, g):
    if p > pk:
        A = 2.0 / ((g + 1.0) * rho)
        B = (g - 1.0) / (g + 1.0) * pk
        sq = np.sqrt(A / (p + B))
        return (p - pk) * sq, sq * (1.0 - 0.5 * (p - pk) / (B + p))
    ratio = p / pk
    f = 2.0 * ck / (g - 1.0) * (ratio ** ((g - 1.0) / (2.0 * g)) - 1.0)
    df = 1.0 / (rho * ck) * ratio ** (-(g + 1.0) / (2.0 * g))
    return f, df


def exact_riemann_euler(left, right, gamma: float = 1.4, tol: float = 1e-12) -> RiemannSolution:
    """Solve the 1D Euler Riemann problem for primitive states (rho, v, p)."""
    rl, ul, pl = map(float, left)
    rr, ur, pr = map(float, right)
    if min(rl, rr, pl, pr) <= 0.0:
        raise ValueError("density and pressure must be positive")
    g = gamma
    cl, cr = np.sqrt(g * pl / rl), np.sqrt(g * pr / rr)
    if 2.0 * (cl + cr) / (g - 1.0) <= ur - ul:
        raise VacuumError("initial data generate a vacuum")

    # two-rarefaction guess, safeguarded Newton on f_L(p) + f_R(p) + du = 0
    z = (g - 1.0) / (2.0 * g)
    p = ((cl + cr - 0.5 * (g - 1.0) * (ur - ul)) / (cl / pl**z + cr / pr**z)) ** (1.0 / z)
    p = max(p, 1e-14)
    for _ in range(200):
        fl, dfl = _pressure_function(p, rl, pl, cl, g)
        fr, dfr = _pressure_function(p, rr, pr, cr, g)
        res = fl + fr + ur - ul
        p_new = p - res / (dfl + dfr)
        if p_new <= 0.0:
            p_new = 0.5 * p
        change = abs(p_new - p) / (0.5 * (p_new + p))
        p = p_new
        if change < tol:
            break
    fl, _ = _pressure_function(p, rl, pl, cl, g)
    fr, _ = _pressure_function(p, rr, pr, cr, g)
    u = 0.5 * (ul + ur) + 0.5 * (fr - fl)
    return RiemannSolution(g, (rl, ul, pl), (rr, ur, pr), p, u)


def pressure_function_residual(sol: RiemannSolution) -> float:
    """``f_L(p*) + f_R(p*) + (v_R - v_L)``, zero at the exact star pressure."""
    g = sol.gamma
    rl, ul, pl = sol.left
    rr, ur, pr = sol.right
    fl, _ = _pressure_function(sol.p_star, rl, pl, np.sqrt(g * pl / rl), g)
    fr, _ = _pressure_function(sol.p_star, rr, pr, np.sqrt(g * pr / rr), g)
    return fl + fr + ur - ul


def riemann_max_speed(sol: RiemannSolution) -> float:
    """Largest |signal speed| of the exact solution (shock speed or rarefaction head)."""
    g = sol.gamma
    speeds = []
    rl, ul, pl = sol.left
    cl = np.sqrt(g * pl / rl)
    if sol.p_star > pl:
        speeds.append(ul - cl * np.sqrt((g + 1) / (2 * g) * sol.p_star / pl + (g - 1) / (2 * g)))
    else:
        speeds.append(ul - cl)
    rr, ur, pr = sol.right
    cr = np.sqrt(g * pr / rr)
    if sol.p_star > pr:
        speeds.append(ur + cr * np.sqrt((g + 1) / (2 * g) * sol.p_star / pr + (g - 1) / (2 * g)))
    else:
        speeds.append(ur + cr)
    return float(max(abs(s) for s in speeds))


def make_model(name: str, d: int, **params) -> Model:
    """Build a model from a configuration name."""
    if name == "advection":
        return LinearAdvection(d, params.get("velocity", np.ones(d)))
    if name == "burgers":
        return Burgers(d, params.get("v"))
    if name == "buckley_leverett":
        if d != 1:
            raise ValueError("Buckley-Leverett is one-dimensional")
        return BuckleyLeverett()
    if name == "euler":
        return Euler(d, params.get("gamma", 1.4), params.get("gms", True))
    raise ValueError(f"unknown model {name!r}")


VelocityField = Callable[[np.ndarray], np.ndarray]

"""Benchmark problem definitions: data, boundary closures and references."""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable, Optional

import numpy as np

from ..equations import (
    Burgers,
    BuckleyLeverett,
    Euler,
    LinearAdvection,
    Model,
    exact_riemann_euler,
)
from .exact import burgers2d_exact, euler_riemann_exact

Exact = Callable[[np.ndarray, float], np.ndarray]


class UnknownProblemError(KeyError):
    pass


@dataclass
class Problem:
    name: str
    description: str
    d: int
    lower: tuple
    upper: tuple
    periodic: tuple
    make_model: Callable[[dict], Model]
    initial: Callable[[np.ndarray, Model], np.ndarray]
    # default run parameters, overridable from the run configuration
    defaults: dict = field(default_factory=dict)
    # bc(model) -> closure; None for fully periodic problems
    boundary: Optional[Callable[[Model], Callable]] = None
    exact: Optional[Callable[[Model], Exact]] = None
    # p = 0 fine-mesh reference: number of elements per axis
    reference_nel: Optional[int] = None
    # restrict error norms and field output to this box
    window: Optional[tuple] = None


# --- boundary closures -------------------------------------------------------------


def outflow(u, x, n, t, key):
    return u.copy()


def prescribed(fn: Exact):
    def bc(u, x, n, t, key):
        return np.asarray(fn(x, t), dtype=float).reshape(u.shape)

    return bc


def reflective(model: Euler):
    """Slip wall: ghost state with the normal velocity mirrored."""

    def bc(u, x, n, t, key):
        g = u.copy()
        d = model.d
        mom = u[:, 1 : 1 + d]
        mn = np.sum(mom * n, axis=-1)
        g[:, 1 : 1 + d] = mom - 2.0 * mn[:, None] * n
        return g

    return bc


# --- scalar problems ---------------------------------------------------------------


def _sine_1d(x, model):
    return np.sin(2.0 * np.pi * x[:, 0])


def _sine_pi(x, model):
    return np.sin(np.pi * x[:, 0])


def square_waves(x, model=None):
    """Two square waves on [-1, 1] with edges on multiples of 0.05."""
    X = x[:, 0]
    return np.where((X >= -0.8) & (X < -0.4), 1.0, 0.0) + np.where((X >= 0.2) & (X < 0.6), 0.5, 0.0)


SOLID_BODY_R0 = 0.15
SOLID_BODY_CENTERS = {"bump": (0.25, 0.5), "cone": (0.5, 0.25), "cylinder": (0.5, 0.75)}


def solid_body_initial(x, model=None):
    X, Y = x[:, 0], x[:, 1]
    out = np.zeros(len(X))
    r0 = SOLID_BODY_R0

    def radius(c):
        return np.hypot(X - c[0], Y - c[1]) / r0

    c = SOLID_BODY_CENTERS["bump"]
    r = radius(c)
    out = np.where(r <= 1.0, 0.25 * (1.0 + np.cos(np.pi * r)), out)
    c = SOLID_BODY_CENTERS["cone"]
    r = radius(c)
    out = np.where(r <= 1.0, 1.0 - r, out)
    c = SOLID_BODY_CENTERS["cylinder"]
    r = radius(c)
    slot = (np.abs(X - c[0]) >= 0.025) | (Y >= 0.85)
    out = np.where(r <= 1.0, np.where(slot, 1.0, 0.0), out)
    return out


def rotation_velocity(x):
    x = np.atleast_2d(x)
    return np.stack([2.0 * np.pi * (0.5 - x[:, 1]), 2.0 * np.pi * (x[:, 0] - 0.5)], axis=1)


def _solid_body_exact(model):
    # one full revolution at t = 1; intermediate times by rotating back
    def fn(x, t):
        th = -2.0 * np.pi * t
        c, s = np.cos(th), np.sin(th)
        X = x[:, 0] - 0.5
        Y = x[:, 1] - 0.5
        xr = np.stack([0.5 + c * X - s * Y, 0.5 + s * X + c * Y], axis=1)
        return solid_body_initial(xr)

    return fn


def _periodic_translate(initial, lower: float, length: float):
    def factory(model):
        def fn(x, t):
            xs = lower + np.mod(x[:, 0] - t - lower, length)
            return initial(xs[:, None], model)

        return fn

    return factory


# Buckley-Leverett
BL_LEFT, BL_RIGHT = -3.0, 3.0


def _bl_initial(x, model):
    return np.where(x[:, 0] < 0.0, BL_LEFT, BL_RIGHT)


def _bl_boundary(model):
    def bc(u, x, n, t, key):
        return np.where(x[:, :1] < 0.0, BL_LEFT, BL_RIGHT) * np.ones_like(u)

    return bc


# 2D Burgers
def _burgers_initial(x, model):
    return burgers2d_exact(x, 0.0)


def _burgers_exact(model):
    return lambda x, t: burgers2d_exact(x, t)


def _burgers_boundary(model):
    return prescribed(lambda x, t: burgers2d_exact(x, t)[:, None])


# --- Euler problems ----------------------------------------------------------------

SOD_LEFT = (1.0, 0.0, 1.0)
SOD_RIGHT = (0.125, 0.0, 0.1)
SHU_OSHER_LEFT = (3.857143, 2.629369, 10.3333)


def _euler_model(params):
    return Euler(params.get("d", 1), params.get("gamma", 1.4))


def _sod_initial(x, model):
    left = x[:, 0] < 0.0
    rho = np.where(left, SOD_LEFT[0], SOD_RIGHT[0])
    p = np.where(left, SOD_LEFT[2], SOD_RIGHT[2])
    return model.from_primitive(rho, np.zeros((len(rho), 1)), p)


def _sod_exact(model):
    return euler_riemann_exact(exact_riemann_euler(SOD_LEFT, SOD_RIGHT, model.gamma), 0.0, model)


def _shu_osher_initial(x, model):
    X = x[:, 0]
    left = X < -4.0
    rho = np.where(left, SHU_OSHER_LEFT[0], 1.0 + 0.2 * np.sin(5.0 * X))
    v = np.where(left, SHU_OSHER_LEFT[1], 0.0)
    p = np.where(left, SHU_OSHER_LEFT[2], 1.0)
    return model.from_primitive(rho, v[:, None], p)


def _shu_osher_boundary(model):
    left_state = model.from_primitive([SHU_OSHER_LEFT[0]], [[SHU_OSHER_LEFT[1]]], [SHU_OSHER_LEFT[2]])

    def bc(u, x, n, t, key):
        g = u.copy()
        inflow = key == (0, 0)
        if inflow:
            g[:] = left_state
        return g

    return bc


# 2D Riemann configuration 12 (quadrants of [0,1]^2), mirrored to [0,2]^2
RIEMANN12 = {
    "sw": (0.8, (0.0, 0.0), 1.0),
    "nw": (1.0, (3.0 / np.sqrt(17.0), 0.0), 1.0),
    "se": (1.0, (0.0, 3.0 / np.sqrt(17.0)), 1.0),
    "ne": (17.0 / 32.0, (0.0, 0.0), 0.4),
}


def riemann12_primitive(x):
    """Quadrant data on [0,1]^2, extended by mirror reflection in x = 1 and y = 1."""
    X, Y = x[:, 0], x[:, 1]
    fx = X > 1.0
    fy = Y > 1.0
    Xr = np.where(fx, 2.0 - X, X)
    Yr = np.where(fy, 2.0 - Y, Y)
    rho = np.empty(len(X))
    v = np.empty((len(X), 2))
    p = np.empty(len(X))
    east = Xr > 0.5
    north = Yr > 0.5
    for key, mask in (
        ("sw", ~east & ~north),
        ("nw", ~east & north),
        ("se", east & ~north),
        ("ne", east & north),
    ):
        r, vv, pp = RIEMANN12[key]
        rho[mask] = r
        v[mask] = vv
        p[mask] = pp
    v[:, 0] = np.where(fx, -v[:, 0], v[:, 0])
    v[:, 1] = np.where(fy, -v[:, 1], v[:, 1])
    return rho, v, p


def _riemann12_initial(x, model):
    rho, v, p = riemann12_primitive(x)
    return model.from_primitive(rho, v, p)


# Double Mach reflection
DMR_GAMMA = 1.4
DMR_X0 = 1.0 / 6.0
DMR_PRE = (1.4, (0.0, 0.0), 1.0)
DMR_POST = (8.0, (8.25 * np.cos(np.pi / 6.0), -8.25 * np.sin(np.pi / 6.0)), 116.5)
# the shock moves along x at M / sin(60 deg) for a Mach 10 shock into gas with c = 1
DMR_SHOCK_SPEED = 10.0 / np.sin(np.pi / 3.0)


def dmr_shock_position(y, t):
    return DMR_X0 + y / np.tan(np.pi / 3.0) + DMR_SHOCK_SPEED * t


def _dmr_state(model, post):
    rho, v, p = DMR_POST if post else DMR_PRE
    return model.from_primitive([rho], [v], [p])[0]


def _dmr_initial(x, model):
    post = x[:, 0] < dmr_shock_position(x[:, 1], 0.0)
    u = np.empty((len(x), model.nc))
    u[:] = _dmr_state(model, False)
    u[post] = _dmr_state(model, True)
    return u


def _dmr_boundary(model):
    wall = reflective(model)
    post = _dmr_state(model, True)
    pre = _dmr_state(model, False)

    def bc(u, x, n, t, key):
        axis, side = key
        if axis == 0 and side == 0:
            return np.broadcast_to(post, u.shape).copy()
        if axis == 0 and side == 1:
            return u.copy()
        if axis == 1 and side == 0:
            g = wall(u, x, n, t, key)
            g[x[:, 0] < DMR_X0] = post
            return g
        behind = x[:, 0] < dmr_shock_position(x[:, 1], t)
        return np.where(behind[:, None], post, pre)

    return bc


# --- registry ----------------------------------------------------------------------


def _advection_1d(params):
    return LinearAdvection(1, [1.0])


PROBLEMS: dict[str, Problem] = {}


def _register(p: Problem):
    PROBLEMS[p.name] = p
    return p


_register(
    Problem(
        "sine",
        "1D advection of sin(2 pi x) on [0,1], periodic (convergence study)",
        1,
        (0.0,),
        (1.0,),
        (True,),
        _advection_1d,
        _sine_1d,
        defaults=dict(p=3, nel=8, t_end=1.0, integrator="dop853", dt_factor=8.0, smoothness=True, global_bounds="none"),
        exact=_periodic_translate(_sine_1d, 0.0, 1.0),
    )
)
_register(
    Problem(
        "sine_pi",
        "1D advection of sin(pi x) on [-1,1], periodic (sparsified vs unsparsified low order)",
        1,
        (-1.0,),
        (1.0,),
        (True,),
        _advection_1d,
        _sine_pi,
        defaults=dict(p=3, nel=32, t_end=2.0, limiter="low_only"),
        exact=_periodic_translate(_sine_pi, -1.0, 2.0),
    )
)
_register(
    Problem(
        "square_waves",
        "1D advection of two square waves on [-1,1], periodic (elementwise vs subcell)",
        1,
        (-1.0,),
        (1.0,),
        (True,),
        _advection_1d,
        square_waves,
        defaults=dict(p=3, nel=80, t_end=2.0),
        exact=_periodic_translate(square_waves, -1.0, 2.0),
    )
)
_register(
    Problem(
        "buckley_leverett",
        "Buckley-Leverett Riemann problem -3 | 3 on [-1,1], t = 0.25",
        1,
        (-1.0,),
        (1.0,),
        (False,),
        lambda params: BuckleyLeverett(),
        _bl_initial,
        defaults=dict(p=3, nel=64, t_end=0.25),
        boundary=_bl_boundary,
        reference_nel=10000,
    )
)
_register(
    Problem(
        "solid_body",
        "2D solid body rotation (bump, cone, slotted cylinder) on [0,1]^2, one revolution",
        2,
        (0.0, 0.0),
        (1.0, 1.0),
        (False, False),
        lambda params: LinearAdvection(2, rotation_velocity),
        lambda x, model: solid_body_initial(x),
        defaults=dict(p=3, nel=64, t_end=1.0),
        boundary=lambda model: prescribed(lambda x, t: np.zeros((len(x), 1))),
        exact=_solid_body_exact,
    )
)
_register(
    Problem(
        "burgers2d",
        "2D Burgers quadrant problem with v = (1,1) on [0,1]^2, exact solution on the boundary",
        2,
        (0.0, 0.0),
        (1.0, 1.0),
        (False, False),
        lambda params: Burgers(2, [1.0, 1.0]),
        _burgers_initial,
        defaults=dict(p=2, nel=40, t_end=0.5),
        boundary=_burgers_boundary,
        exact=_burgers_exact,
    )
)
_register(
    Problem(
        "sod",
        "Sod shock tube on [-1/2,1/2], t = 0.18",
        1,
        (-0.5,),
        (0.5,),
        (False,),
        _euler_model,
        _sod_initial,
        defaults=dict(p=3, nel=64, t_end=0.18),
        boundary=lambda model: outflow,
        exact=_sod_exact,
    )
)
_register(
    Problem(
        "shu_osher",
        "Shu-Osher sine-shock interaction on [-5,5], t = 1.8",
        1,
        (-5.0,),
        (5.0,),
        (False,),
        _euler_model,
        _shu_osher_initial,
        defaults=dict(p=3, nel=128, t_end=1.8),
        boundary=_shu_osher_boundary,
        reference_nel=20000,
    )
)
_register(
    Problem(
        "riemann2d_12",
        "2D Euler Riemann configuration 12, mirrored to a periodic [0,2]^2, t = 0.25",
        2,
        (0.0, 0.0),
        (2.0, 2.0),
        (True, True),
        lambda params: Euler(2, params.get("gamma", 1.4)),
        _riemann12_initial,
        defaults=dict(p=3, nel=64, t_end=0.25),
        window=((0.0, 0.0), (1.0, 1.0)),
    )
)
_register(
    Problem(
        "double_mach",
        "Double Mach reflection on [0,4]x[0,1], Mach 10 shock at 60 degrees, t = 0.275",
        2,
        (0.0, 0.0),
        (4.0, 1.0),
        (False, False),
        lambda params: Euler(2, params.get("gamma", DMR_GAMMA)),
        _dmr_initial,
        defaults=dict(p=3, nel="300x75", t_end=0.275),
        boundary=_dmr_boundary,
    )
)


def get_problem(name: str) -> Problem:
    try:
        return PROBLEMS[name]
    except KeyError:
        raise UnknownProblemError(f"unknown problem {name!r}; known: {', '.join(sorted(PROBLEMS))}") from None


def list_problems() -> list[tuple[str, str]]:
    return [(k, PROBLEMS[k].description) for k in sorted(PROBLEMS)]

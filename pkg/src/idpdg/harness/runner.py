"""Run one configured benchmark and collect its report."""

from __future__ import annotations

import hashlib
import os
import time
from dataclasses import dataclass, replace
from typing import Optional

import numpy as np

from .. import _kernels
from ..discretization import Discretization
from ..equations import Euler
from ..mesh import Mesh
from ..scheme import InvariantViolation, LimiterConfig, Scheme
from ..time_integration import RunStats, integrate
from .config import RunConfig
from .norms import conservation_drift, element_window_mask, error_norms, reference_error_norms
from .output import component_names, write_outputs
from .problems import Problem, get_problem

# per-step conservation tolerance on periodic problems (relative)
CONSERVATION_TOL = 1e-12


@dataclass
class RunResult:
    config: RunConfig
    disc: Discretization
    u0: np.ndarray
    u: np.ndarray
    stats: RunStats
    report: dict
    paths: Optional[dict] = None


def build_discretization(cfg: RunConfig, prob: Optional[Problem] = None) -> Discretization:
    prob = prob or get_problem(cfg.problem)
    model = prob.make_model({"d": prob.d, "gamma": cfg.gamma})
    mesh = Mesh(prob.d, tuple(cfg.nel), prob.lower, prob.upper, prob.periodic, cfg.mapping, cfg.amplitude)
    bc = prob.boundary(model) if prob.boundary is not None else None
    return Discretization(mesh, cfg.p, model, bc, cfg.sparsified)


def build_scheme(cfg: RunConfig, disc: Discretization, u0: np.ndarray) -> Scheme:
    lim = LimiterConfig(
        strategy=cfg.limiter,
        smoothness=cfg.smoothness,
        s0=cfg.s0,
        kappa=cfg.kappa,
        bounds=cfg.bounds,
        entropy=cfg.entropy,
    )
    g = cfg.global_bounds_value()
    if g == "initial":
        gb = (float(u0[:, 0].min()), float(u0[:, 0].max()))
    elif g == "none":
        gb = (-np.inf, np.inf)
    else:
        gb = g
    return Scheme(disc, lim, gb)


def _keeps_global_bounds(cfg: RunConfig, disc: Discretization) -> bool:
    # SSP integrators with a limited pipeline keep scalar data inside its initial range
    return disc.model.scalar and cfg.limiter != "none" and cfg.integrator in ("ssprk3", "forward_euler")


def cache_dir() -> str:
    return os.environ.get("IDPDG_CACHE", os.path.join(os.path.expanduser("~"), ".cache", "idpdg"))


def reference_solution(cfg: RunConfig, prob: Problem):
    """p = 0 fine-mesh reference for problems without an exact solution, cached on disk."""
    ref_cfg = replace(
        cfg,
        p=0,
        nel=(prob.reference_nel,) * prob.d,
        limiter="subcell",
        smoothness=False,
        integrator="ssprk3",
        dt_factor=1.0,
        dt=None,
        mapping="affine",
        amplitude=0.0,
        reference=False,
        max_steps=None,
    )
    key = f"{prob.name}|{prob.reference_nel}|{cfg.t_end!r}|{cfg.gamma!r}|{ref_cfg.cfl!r}"
    tag = hashlib.sha1(key.encode()).hexdigest()[:12]
    path = os.path.join(cache_dir(), f"reference_{prob.name}_{tag}.npz")
    disc = build_discretization(ref_cfg, prob)
    if os.path.exists(path):
        with np.load(path) as data:
            if data["u"].shape == (disc.N, disc.nc):
                return disc, data["u"]
    res = run(ref_cfg, write=False)
    os.makedirs(os.path.dirname(path), exist_ok=True)
    np.savez_compressed(path, u=res.u)
    return res.disc, res.u


def run(cfg: RunConfig, write: bool = True, callback=None) -> RunResult:
    """Integrate one configuration; raises InvariantViolation (and friends) on failure."""
    prob = get_problem(cfg.problem)
    _kernels.set_num_threads(cfg.threads)
    disc = build_discretization(cfg, prob)
    model = disc.model
    u0 = disc.project(lambda x: prob.initial(x, model))
    scheme = build_scheme(cfg, disc, u0)

    periodic = all(prob.periodic)
    gmin, gmax = float(u0[:, 0].min()), float(u0[:, 0].max())
    check_global = _keeps_global_bounds(cfg, disc)
    tracker = {"drift": 0.0, "alpha": 1.0, "prev": disc.total(u0)}
    scale = np.maximum(np.abs(tracker["prev"]), disc.mass.sum() * np.max(np.abs(u0), axis=0))
    scale = np.where(scale > 0.0, scale, 1.0)

    def step_check(u, t, k):
        tot = disc.total(u)
        drift = float(np.max(np.abs(tot - tracker["prev"]) / scale))
        tracker["prev"] = tot
        tracker["drift"] = max(tracker["drift"], drift)
        tracker["alpha"] = min(tracker["alpha"], scheme.info.alpha_min + 0.0)
        if periodic and drift > CONSERVATION_TOL:
            raise InvariantViolation(f"conservation drift {drift:.3e} in step {k}")
        if check_global:
            tol = 1e-12 * max(1.0, abs(gmin), abs(gmax))
            v = u[:, 0]
            if v.min() < gmin - tol or v.max() > gmax + tol:
                raise InvariantViolation(
                    f"step {k}: solution range [{v.min():.16e}, {v.max():.16e}] leaves the initial range [{gmin}, {gmax}]"
                )
        if callback is not None:
            callback(u, t, k)

    t0 = time.perf_counter()
    u, stats = integrate(
        scheme,
        u0,
        cfg.t_end,
        cfl=cfg.cfl,
        method=cfg.integrator,
        dt=cfg.dt,
        dt_factor=cfg.dt_factor,
        callback=step_check,
        max_steps=cfg.max_steps,
    )
    wall = time.perf_counter() - t0

    names = component_names(disc)
    mask = np.repeat(element_window_mask(disc, prob.window), disc.nloc)
    umin, umax = u[mask].min(axis=0), u[mask].max(axis=0)
    report = {
        "problem": prob.name,
        "dimension": disc.d,
        "p": cfg.p,
        "elements": "x".join(str(a) for a in cfg.nel),
        "dof": disc.N,
        "limiter": cfg.limiter,
        "smoothness": cfg.smoothness,
        "integrator": cfg.integrator,
        "t_final": stats.t,
        "steps": stats.steps,
        "dt_min": stats.dt_min,
        "dt_max": stats.dt_max,
    }
    err = None
    if prob.exact is not None:
        fn = prob.exact(model)
        ex = lambda x: np.asarray(fn(x, stats.t)).reshape(len(x), -1)  # noqa: E731
        err = error_norms(disc, u, ex, cfg.error_quadrature, prob.window)
        report["error_reference"] = "exact"
    elif cfg.reference and prob.reference_nel:
        rdisc, uref = reference_solution(cfg, prob)
        err = reference_error_norms(disc, u, rdisc, uref, cfg.error_quadrature, prob.window)
        report["error_reference"] = f"p0_{prob.reference_nel}"
    if err is not None:
        for norm in ("l1", "l2", "linf"):
            for c, name in enumerate(names):
                report[f"{norm}_error_{name}"] = float(err[norm][c])
    for c, name in enumerate(names):
        report[f"min_{name}"] = float(umin[c])
        report[f"max_{name}"] = float(umax[c])
    if isinstance(model, Euler):
        pr = model.pressure(u[mask])
        report["min_p"] = float(pr.min())
        report["max_p"] = float(pr.max())
    drift = conservation_drift(disc, u0, u)
    report["conservation_drift"] = float(drift.max())
    report["max_step_drift"] = tracker["drift"]
    report["periodic"] = periodic
    report["alpha_min"] = tracker["alpha"]
    report["invariants"] = "ok"
    report["wall_time"] = wall

    result = RunResult(cfg, disc, u0, u, stats, report)
    if write:
        result.paths = write_outputs(
            cfg.output_dir, cfg.prefix or prob.name, disc, u, report, cfg.echo(), cfg.write_csv, cfg.write_vtk
        )
    return result

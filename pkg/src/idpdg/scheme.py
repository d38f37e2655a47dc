"""One limited forward Euler step: low-order update, bounds, limiting, checks."""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Optional

import numpy as np

from . import _kernels
from . import limiting as lim
from .discretization import Discretization, StageData, evaluate_stage
from .equations import Euler, invariant_check, EntropyBounds
from .high_order import residual_high
from .low_order import (
    CFLViolation,
    dt_from_row_sums,
    idp_max_dt,
    low_order_stage,
    low_order_update,
    neighbor_bounds,
)
from .tensor_ops import modal_transform

STRATEGIES = ("none", "low_only", "elementwise", "subcell")
BOUND_SETS = ("bar", "state", "low")


class InvariantViolation(RuntimeError):
    pass


@dataclass
class LimiterConfig:
    strategy: str = "subcell"
    smoothness: bool = False
    s0: Optional[float] = None
    kappa: float = 1.0
    bounds: str = "bar"
    entropy: bool = True
    # slack used by the runtime invariant checks
    slack: float = 1e-12

    def __post_init__(self):
        if self.strategy not in STRATEGIES:
            raise ValueError(f"unknown limiter strategy {self.strategy!r}")
        if self.bounds not in BOUND_SETS:
            raise ValueError(f"unknown bound set {self.bounds!r}")


@dataclass
class StepInfo:
    dt_max: float = np.inf
    alpha_min: float = 1.0
    eps_min: float = 1.0
    extra: dict = field(default_factory=dict)


class Scheme:
    def __init__(
        self,
        disc: Discretization,
        limiter: LimiterConfig | None = None,
        global_bounds: tuple[float, float] | None = None,
    ):
        self.disc = disc
        self.limiter = limiter or LimiterConfig()
        self.is_euler = isinstance(disc.model, Euler)
        self.global_bounds = global_bounds
        self.info = StepInfo()
        p = disc.p
        self.transform = modal_transform(p, disc.d) if (self.limiter.smoothness and p >= 1) else None
        self.s0 = self.limiter.s0 if self.limiter.s0 is not None else lim.default_s0(p)

    # -------------------------------------------------------------------------
    def stage(self, u: np.ndarray, t: float) -> StageData:
        return evaluate_stage(self.disc, u, t)

    def max_dt(self, u: np.ndarray, t: float) -> float:
        return idp_max_dt(self.disc, self.stage(u, t))

    def set_global_bounds_from(self, u0: np.ndarray) -> None:
        self.global_bounds = (float(np.min(u0[:, 0])), float(np.max(u0[:, 0])))

    # -------------------------------------------------------------------------
    def forward_euler(self, u: np.ndarray, t: float, dt: float) -> np.ndarray:
        disc = self.disc
        cfg = self.limiter
        st = self.stage(u, t)
        m = disc.mass
        info = StepInfo()
        self.info = info
        if dt == 0.0:
            return u.copy()
        if cfg.strategy == "none":
            rH = residual_high(disc, st)
            out = u + dt / m[:, None] * rH.sum(axis=0)
            if not np.all(np.isfinite(out)):
                raise InvariantViolation("non-finite state in unlimited update")
            return out

        rL, blo, bhi, rows = low_order_stage(disc, st, 0)
        info.dt_max = dt_from_row_sums(m, rows)
        if dt > info.dt_max * (1.0 + 1e-12):
            raise CFLViolation(f"time step {dt:.6e} exceeds the IDP bound {info.dt_max:.6e}")
        uL = low_order_update(disc, st, rL, dt)
        lo, hi = self._bounds(st, (blo, bhi), uL)
        if self.is_euler:
            info.extra["s_min"] = self._entropy_min(st) if cfg.entropy else np.full(disc.N, -np.inf)

        if cfg.strategy == "low_only":
            out = uL
        else:
            rH = residual_high(disc, st)
            if self.is_euler:
                fl = lim.assemble_antidiffusive(rH, rL, disc.nel, disc.n)
                out = self._limit_euler(st, fl, uL, lo, hi, dt)
            else:
                out = self._limit_scalar(rH, rL, uL, lo, hi, dt)
        self._check(st, out, lo, hi)
        if not self.is_euler:
            # remove round-off excursions (already checked to be within the slack)
            # so that they cannot ratchet the next stage's bounds outward
            np.clip(out[:, 0], lo, hi, out=out[:, 0])
        return out

    # -------------------------------------------------------------------------
    def _bounds(self, st: StageData, bar_bounds, uL):
        disc = self.disc
        cfg = self.limiter
        if cfg.bounds == "bar":
            lo, hi = bar_bounds
        elif cfg.bounds == "state":
            lo, hi = neighbor_bounds(disc, st, st.u_ext[:, 0])
        else:
            vals = st.u_ext[:, 0].copy()
            vals[: disc.N] = uL[:, 0]
            lo, hi = neighbor_bounds(disc, st, vals)
        if self.transform is not None:
            if self.global_bounds is None:
                raise ValueError("smoothness relaxation needs global bounds")
            eps = lim.element_smoothness(st.u[:, 0], self.transform, disc.nel, self.s0, cfg.kappa)
            self.info.eps_min = float(eps.min()) if eps.size else 1.0
            en = np.repeat(eps, disc.nloc)
            gmin, gmax = self.global_bounds
            rlo, rhi = lim.relax_bounds(lo, hi, en, gmin, gmax)
            lo, hi = np.minimum(rlo, lo), np.maximum(rhi, hi)
        return lo, hi

    def _limit_scalar(self, rH, rL, uL, lo, hi, dt):
        disc = self.disc
        m = disc.mass
        if self.limiter.strategy == "subcell" and _kernels.use_compiled() and disc.d <= 2:
            corr, at, bad = _kernels.ck.subcell_limit_scalar(
                np.ascontiguousarray(rH[:, :, 0]), np.ascontiguousarray(rL[:, :, 0]),
                np.ascontiguousarray(uL[:, 0]), lo, hi, m / dt, 1e-12, disc.n, _kernels.get_num_threads(),
            )
            if bad >= 0:
                raise lim.LimiterError(
                    f"low-order value {uL[bad, 0]:.16e} outside bounds [{lo[bad]:.16e}, {hi[bad]:.16e}] at node {bad}"
                )
            self.info.alpha_min = float(at.min())
            return uL + (dt / m * corr)[:, None]
        fl = lim.assemble_antidiffusive(rH, rL, disc.nel, disc.n)
        if self.limiter.strategy == "subcell":
            at = lim.zalesak_subcell(fl, lo, hi, uL[:, 0], dt, m)
            ap, am = lim.face_alpha(at, disc.nel, disc.n, disc.d)
            self.info.alpha_min = float(at.min())
            return uL + dt / m[:, None] * lim.subcell_correction(fl, ap, am)
        a = lim.zalesak_elementwise(fl.nodal[:, 0], lo, hi, uL[:, 0], dt, m, disc.nel)
        self.info.alpha_min = float(a.min())
        return uL + dt / m[:, None] * a[:, None] * fl.nodal

    def _entropy_min(self, st: StageData):
        s_ext = self.disc.model.entropy(st.u_ext)
        s_min, _ = neighbor_bounds(self.disc, st, s_ext)
        return s_min

    def _limit_euler(self, st, fl, uL, lo, hi, dt):
        disc = self.disc
        m = disc.mass
        gamma = disc.model.gamma
        cfg = self.limiter
        s_min = self.info.extra["s_min"]
        if cfg.strategy == "subcell":
            at = lim.zalesak_subcell(fl, lo, hi, uL[:, 0], dt, m, comp=0)
            rp, rm = lim.face_alpha(at, disc.nel, disc.n, disc.d)
            scaled = lim.AntidiffusiveFluxes(fl.r, rp[:, :, None] * fl.plus, rm[:, :, None] * fl.minus)
            # with the entropy constraint off, s_min = -inf leaves rho e >= 0
            bt, sp, sm = lim.convex_limit_subcell(scaled, uL, s_min, dt, m, disc.nel, disc.n, gamma)
            self.info.alpha_min = float(np.min(at * bt))
            return uL + dt / m[:, None] * lim.subcell_correction(scaled, sp, sm)
        a_rho = lim.zalesak_elementwise(fl.nodal[:, 0], lo, hi, uL[:, 0], dt, m, disc.nel)
        r1 = a_rho[:, None] * fl.nodal
        a_s = lim.convex_limit_elementwise(r1, uL, s_min, dt, m, disc.nel, gamma)
        self.info.alpha_min = float(np.min(a_rho * a_s))
        return uL + dt / m[:, None] * a_s[:, None] * r1

    # -------------------------------------------------------------------------
    def _check(self, st: StageData, out, lo, hi):
        cfg = self.limiter
        if not np.all(np.isfinite(out)):
            raise InvariantViolation("non-finite state after limiting")
        if self.is_euler:
            model = self.disc.model
            bounds = EntropyBounds(self.info.extra["s_min"]) if cfg.entropy else None
            if not invariant_check(model, out, bounds, cfg.slack):
                rho = out[:, 0]
                e = model.internal_energy(out)
                bad = np.flatnonzero(~((rho > 0) & (e > 0)))
                where = int(bad[0]) if bad.size else -1
                raise InvariantViolation(f"Euler state left the invariant set (node {where})")
            if cfg.strategy != "low_only":
                rho = out[:, 0]
                tol = cfg.slack * np.maximum(1.0, np.abs(hi))
                if np.any(rho < lo - tol) or np.any(rho > hi + tol):
                    raise InvariantViolation("density outside its bounds after limiting")
            return
        v = out[:, 0]
        tol = cfg.slack * np.maximum(1.0, np.maximum(np.abs(lo), np.abs(hi)))
        if np.any(v < lo - tol) or np.any(v > hi + tol):
            i = int(np.flatnonzero((v < lo - tol) | (v > hi + tol))[0])
            raise InvariantViolation(
                f"bounds violated at node {i}: {v[i]:.16e} not in [{lo[i]:.16e}, {hi[i]:.16e}]"
            )

"""Refinement studies: errors on nested meshes, per-level rates and a fitted slope."""

from __future__ import annotations

import os
from dataclasses import dataclass, replace

import numpy as np

from .config import ConfigError, RunConfig
from .output import format_record
from .runner import run


@dataclass
class ConvergenceResult:
    nel: list
    dof: list
    errors: dict  # norm -> list of first-component errors
    rates: list  # L1 rates between consecutive levels (first entry nan)
    slope: float  # least-squares L1 slope of log(err) against log(h)
    records: list


def observed_rates(err, h) -> np.ndarray:
    err = np.asarray(err, dtype=float)
    h = np.asarray(h, dtype=float)
    r = np.full(len(err), np.nan)
    with np.errstate(divide="ignore", invalid="ignore"):
        r[1:] = np.log(err[:-1] / err[1:]) / np.log(h[:-1] / h[1:])
    return r


def fitted_slope(err, h) -> float:
    """Least-squares slope of log(err) against log(h)."""
    return float(np.polyfit(np.log(h), np.log(err), 1)[0])


def convergence_study(cfg: RunConfig, levels: int, write: bool = True) -> ConvergenceResult:
    if levels < 3:
        raise ConfigError("a convergence study needs at least 3 levels")
    nels, dofs, recs = [], [], []
    errors = {"l1": [], "l2": [], "linf": []}
    for k in range(levels):
        nel = tuple(a * 2**k for a in cfg.nel)
        res = run(replace(cfg, nel=nel), write=False)
        rep = res.report
        key = next((k for k in rep if k.startswith("l1_error_")), None)
        if key is None:
            raise ConfigError(f"problem {cfg.problem!r} has no exact solution or reference for errors")
        comp = key[len("l1_error_"):]
        for norm in errors:
            errors[norm].append(rep[f"{norm}_error_{comp}"])
        nels.append(nel)
        dofs.append(res.disc.N)
        recs.append(rep)
    h = np.array([1.0 / n[0] for n in nels])
    rates = observed_rates(errors["l1"], h)
    slope = fitted_slope(errors["l1"], h)
    out = ConvergenceResult(nels, dofs, errors, list(rates), slope, recs)
    if write:
        write_convergence(cfg, out)
    return out


def write_convergence(cfg: RunConfig, res: ConvergenceResult) -> dict:
    os.makedirs(cfg.output_dir, exist_ok=True)
    stem = os.path.join(cfg.output_dir, (cfg.prefix or cfg.problem) + "_convergence")
    lines = ["nel,dof,l1,l2,linf,rate_l1"]
    for i, nel in enumerate(res.nel):
        lines.append(
            f"{'x'.join(map(str, nel))},{res.dof[i]},{res.errors['l1'][i]!r},"
            f"{res.errors['l2'][i]!r},{res.errors['linf'][i]!r},{res.rates[i]!r}"
        )
    with open(stem + ".csv", "w") as fh:
        fh.write("\n".join(lines) + "\n")
    record = {
        "problem": cfg.problem,
        "p": cfg.p,
        "levels": len(res.nel),
        "l1_slope": res.slope,
        "final_rate_l1": res.rates[-1],
        "wall_time": float(sum(r["wall_time"] for r in res.records)),
    }
    with open(stem + "_results.txt", "w") as fh:
        fh.write(format_record(record))
    with open(stem + "_config.txt", "w") as fh:
        fh.write(cfg.echo())
    return {"csv": stem + ".csv", "results": stem + "_results.txt"}

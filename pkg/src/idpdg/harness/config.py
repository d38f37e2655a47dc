"""Flat ``key = value`` run configuration with command-line overrides."""

from __future__ import annotations

import os
from dataclasses import dataclass, field, fields
from typing import Optional

from ..scheme import BOUND_SETS, STRATEGIES
from ..time_integration import INTEGRATORS
from .problems import get_problem


class ConfigError(ValueError):
    pass


def _bool(v: str) -> bool:
    s = str(v).strip().lower()
    if s in ("1", "true", "yes", "on"):
        return True
    if s in ("0", "false", "no", "off"):
        return False
    raise ConfigError(f"not a boolean: {v!r}")


def _optional_float(v):
    if v is None or str(v).strip().lower() in ("", "none", "auto"):
        return None
    return float(v)


def _nel(v) -> tuple:
    if isinstance(v, (tuple, list)):
        return tuple(int(a) for a in v)
    parts = str(v).lower().replace(",", "x").split("x")
    return tuple(int(a) for a in parts if a.strip())


def default_threads() -> int:
    return int(os.environ.get("IDPDG_THREADS", "1"))


@dataclass
class RunConfig:
    problem: str = "sine"
    p: int = 3
    # elements per axis; a single value is repeated for every axis
    nel: tuple = (8,)
    mapping: str = "affine"
    amplitude: float = 0.0
    gamma: float = 1.4
    limiter: str = "subcell"
    smoothness: bool = False
    s0: Optional[float] = None
    kappa: float = 1.0
    bounds: str = "bar"
    entropy: bool = True
    # "initial", "none", or "lo,hi"
    global_bounds: str = "initial"
    sparsified: bool = True
    integrator: str = "ssprk3"
    cfl: float = 0.5
    dt_factor: float = 1.0
    dt: Optional[float] = None
    t_end: float = 1.0
    max_steps: Optional[int] = None
    error_quadrature: str = "nodal"
    reference: bool = False
    threads: int = field(default_factory=default_threads)
    output_dir: str = "output"
    prefix: str = ""
    write_csv: bool = True
    write_vtk: bool = True

    def validate(self) -> "RunConfig":
        prob = get_problem(self.problem)
        if self.p < 0:
            raise ConfigError("p must be non-negative")
        if len(self.nel) == 1 and prob.d > 1:
            self.nel = self.nel * prob.d
        if len(self.nel) != prob.d or min(self.nel) < 1:
            raise ConfigError(f"nel needs {prob.d} positive entries")
        if self.limiter not in STRATEGIES:
            raise ConfigError(f"limiter must be one of {STRATEGIES}")
        if self.bounds not in BOUND_SETS:
            raise ConfigError(f"bounds must be one of {BOUND_SETS}")
        if self.integrator not in INTEGRATORS:
            raise ConfigError(f"integrator must be one of {INTEGRATORS}")
        if not 0.0 < self.cfl <= 1.0:
            raise ConfigError("cfl must lie in (0, 1]")
        if self.dt_factor <= 0.0 or (self.integrator != "dop853" and self.dt_factor != 1.0):
            raise ConfigError("dt_factor > 0 is only allowed with the dop853 integrator")
        if self.t_end <= 0.0:
            raise ConfigError("t_end must be positive")
        if self.mapping not in ("affine", "sine"):
            raise ConfigError("mapping must be 'affine' or 'sine'")
        if self.error_quadrature != "nodal":
            try:
                if int(self.error_quadrature) < 1:
                    raise ValueError
            except ValueError:
                raise ConfigError("error_quadrature must be 'nodal' or a positive integer") from None
        self.global_bounds_value()
        if self.threads < 1:
            raise ConfigError("threads must be >= 1")
        return self

    def global_bounds_value(self):
        g = str(self.global_bounds).strip().lower()
        if g in ("initial", "none"):
            return g
        try:
            lo, hi = (float(a) for a in g.split(","))
        except ValueError:
            raise ConfigError("global_bounds must be 'initial', 'none' or 'lo,hi'") from None
        if lo > hi:
            raise ConfigError("global_bounds lower value exceeds the upper value")
        return lo, hi

    def as_dict(self) -> dict:
        out = {}
        for f in fields(self):
            if f.name.startswith("_"):
                continue
            v = getattr(self, f.name)
            if f.name == "nel":
                v = "x".join(str(a) for a in v)
            out[f.name] = v
        return out

    def echo(self) -> str:
        return "".join(f"{k} = {'none' if v is None else v}\n" for k, v in self.as_dict().items())


_CONVERTERS = {
    "problem": str,
    "p": int,
    "nel": _nel,
    "mapping": str,
    "amplitude": float,
    "gamma": float,
    "limiter": str,
    "smoothness": _bool,
    "s0": _optional_float,
    "kappa": float,
    "bounds": str,
    "entropy": _bool,
    "global_bounds": str,
    "sparsified": _bool,
    "integrator": str,
    "cfl": float,
    "dt_factor": float,
    "dt": _optional_float,
    "t_end": float,
    "max_steps": lambda v: None if str(v).lower() in ("", "none") else int(v),
    "error_quadrature": str,
    "reference": _bool,
    "threads": int,
    "output_dir": str,
    "prefix": str,
    "write_csv": _bool,
    "write_vtk": _bool,
}

KNOWN_KEYS = tuple(_CONVERTERS)


def parse_text(text: str) -> dict:
    """``key = value`` lines; '#' starts a comment."""
    out = {}
    for lineno, raw in enumerate(text.splitlines(), 1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ConfigError(f"line {lineno}: expected 'key = value'")
        k, v = (a.strip() for a in line.split("=", 1))
        out[k.replace("-", "_")] = v
    return out


def parse_overrides(args) -> dict:
    """``--key=value`` (or ``--key value``) pairs."""
    out = {}
    it = iter(args)
    for a in it:
        if not a.startswith("--"):
            raise ConfigError(f"unexpected argument {a!r}")
        body = a[2:]
        if "=" in body:
            k, v = body.split("=", 1)
        else:
            k = body
            try:
                v = next(it)
            except StopIteration:
                raise ConfigError(f"missing value for --{k}") from None
        out[k.replace("-", "_")] = v
    return out


def build_config(values: dict) -> RunConfig:
    unknown = sorted(set(values) - set(KNOWN_KEYS))
    if unknown:
        raise ConfigError(f"unknown configuration keys: {', '.join(unknown)}")
    problem = values.get("problem", RunConfig.problem)
    try:
        prob = get_problem(str(problem))
    except KeyError as exc:
        raise ConfigError(str(exc.args[0])) from None
    merged = dict(prob.defaults)
    merged.update(values)
    merged["problem"] = prob.name
    if "dt_factor" not in values and str(merged.get("integrator", "ssprk3")) != "dop853":
        merged.pop("dt_factor", None)
    kw = {}
    for k, v in merged.items():
        try:
            kw[k] = _CONVERTERS[k](v) if isinstance(v, str) or k == "nel" else v
        except (TypeError, ValueError) as exc:
            raise ConfigError(f"bad value for {k}: {v!r} ({exc})") from None
    return RunConfig(**kw).validate()


def load_config(path: Optional[str], overrides=()) -> RunConfig:
    values = {}
    if path is not None:
        try:
            with open(path) as fh:
                values = parse_text(fh.read())
        except OSError as exc:
            raise ConfigError(f"cannot read {path}: {exc}") from None
    values.update(parse_overrides(overrides))
    return build_config(values)

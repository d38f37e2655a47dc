"""Command line entry point: ``idpdg run|convergence|list-problems``."""

from __future__ import annotations

import argparse
import os
import sys

from ..equations import InadmissibleStateError, VacuumError
from ..limiting import LimiterError
from ..low_order import CFLViolation
from ..mesh import GeometryError
from ..scheme import InvariantViolation
from .config import ConfigError, load_config
from .convergence import convergence_study
from .output import format_record
from .problems import get_problem, list_problems
from .runner import run

EXIT_CONFIG = 2
EXIT_INVARIANT = 3
EXIT_IO = 4

# raised when a run leaves the invariant set or breaks the step-size bound
INVARIANT_ERRORS = (InvariantViolation, CFLViolation, LimiterError, InadmissibleStateError, VacuumError)


def _config_path(arg: str):
    """A config file, or a bare problem name meaning 'use its defaults'."""
    if os.path.isfile(arg):
        return arg, {}
    try:
        get_problem(arg)
    except KeyError:
        raise ConfigError(f"{arg!r} is neither a config file nor a known problem") from None
    return None, {"problem": arg}


def _load(arg: str, overrides):
    path, base = _config_path(arg)
    extra = [f"--{k}={v}" for k, v in base.items()]
    return load_config(path, extra + list(overrides))


def cmd_run(args, overrides) -> int:
    cfg = _load(args.config, overrides)
    res = run(cfg)
    sys.stdout.write(format_record(res.report))
    for kind, path in res.paths.items():
        print(f"# wrote {kind}: {path}")
    return 0


def cmd_convergence(args, overrides) -> int:
    cfg = _load(args.config, overrides)
    res = convergence_study(cfg, args.levels)
    print("nel      dof      L1 error        rate")
    for i, nel in enumerate(res.nel):
        rate = "-" if i == 0 else f"{res.rates[i]:.2f}"
        print(f"{'x'.join(map(str, nel)):<8} {res.dof[i]:<8} {res.errors['l1'][i]:<15.4e} {rate}")
    print(f"least-squares slope = {res.slope:.3f}")
    return 0


def cmd_list(args, overrides) -> int:
    if overrides:
        raise ConfigError("list-problems takes no options")
    for prob in list_problems():
        print(f"{prob[0]:<18} {prob[1]}")
    return 0


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="idpdg", description=__doc__)
    sub = ap.add_subparsers(dest="command", required=True)
    p = sub.add_parser("run", help="run one benchmark; extra --key=value pairs override the config")
    p.add_argument("config", help="config file or problem name")
    p.set_defaults(func=cmd_run)
    p = sub.add_parser("convergence", help="refinement study doubling the elements per level")
    p.add_argument("config", help="config file or problem name")
    p.add_argument("--levels", type=int, required=True)
    p.set_defaults(func=cmd_convergence)
    p = sub.add_parser("list-problems", help="list the registered benchmarks")
    p.set_defaults(func=cmd_list)
    return ap


def main(argv=None) -> int:
    ap = build_parser()
    args, overrides = ap.parse_known_args(argv)
    try:
        return args.func(args, overrides)
    except ConfigError as exc:
        print(f"configuration error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except GeometryError as exc:
        print(f"mesh error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except INVARIANT_ERRORS as exc:
        print(f"invariant violation: {type(exc).__name__}: {exc}", file=sys.stderr)
        return EXIT_INVARIANT
    except OSError as exc:
        print(f"i/o error: {exc}", file=sys.stderr)
        return EXIT_IO


if __name__ == "__main__":
    sys.exit(main())

"""Benchmark problems, configuration, error norms, outputs and the CLI."""

from .config import ConfigError, RunConfig, build_config, load_config
from .problems import Problem, UnknownProblemError, get_problem, list_problems
from .runner import RunResult, run

__all__ = [
    "ConfigError",
    "Problem",
    "RunConfig",
    "RunResult",
    "UnknownProblemError",
    "build_config",
    "get_problem",
    "list_problems",
    "load_config",
    "run",
]

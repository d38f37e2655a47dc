"""Backend selection for the hot-loop kernels.

The compiled Cython module is used when it imports; ``IDPDG_KERNELS=numpy``
forces the pure-numpy fallback.  ``IDPDG_THREADS`` sets the default number of
OpenMP threads.
"""

from __future__ import annotations

import os

try:
    from . import _ckernels as ck
except ImportError:  # not built
    ck = None

_backend = "numpy" if (ck is None or os.environ.get("IDPDG_KERNELS", "").lower() == "numpy") else "compiled"
_threads = max(1, int(os.environ.get("IDPDG_THREADS", "1")))


def available() -> bool:
    return ck is not None


def use_compiled() -> bool:
    return _backend == "compiled"


def backend() -> str:
    return _backend


def set_backend(name: str) -> str:
    """Select "numpy" or "compiled"; returns the previous backend."""
    global _backend
    if name not in ("numpy", "compiled"):
        raise ValueError("backend must be 'numpy' or 'compiled'")
    if name == "compiled" and ck is None:
        raise RuntimeError("compiled kernels are not built")
    prev, _backend = _backend, name
    return prev


def set_num_threads(n: int) -> None:
    global _threads
    _threads = max(1, int(n))


def get_num_threads() -> int:
    return _threads

"""Compare the compiled kernels with the numpy fallback.

Times the fused low-order sweep, the scalar subcell limiter, the entropy line
search and whole forward Euler stages on representative problems, and checks
that both backends agree.

    python benchmarks/bench_kernels.py [--nel 32] [--repeat 5] [--threads 1]
"""

from __future__ import annotations

import argparse
import time

import numpy as np

from idpdg import _kernels
from idpdg import limiting as lim
from idpdg.discretization import evaluate_stage
from idpdg.harness import build_config
from idpdg.harness.problems import get_problem
from idpdg.harness.runner import build_discretization, build_scheme
from idpdg.low_order import low_order_stage


def best_time(fn, repeat):
    best = np.inf
    for _ in range(repeat):
        t0 = time.perf_counter()
        fn()
        best = min(best, time.perf_counter() - t0)
    return best


def setup(problem, nel, seed=0):
    cfg = build_config({"problem": problem, "nel": str(nel)})
    prob = get_problem(problem)
    disc = build_discretization(cfg, prob)
    u = disc.project(lambda x: prob.initial(x, disc.model))
    rng = np.random.default_rng(seed)
    u = u * (1.0 + 1e-3 * rng.random(u.shape))
    scheme = build_scheme(cfg, disc, u)
    return disc, scheme, u


def compare(label, fn, repeat):
    """Time ``fn`` under both backends and report the largest difference of its outputs."""
    out, times = {}, {}
    for b in ("numpy", "compiled"):
        _kernels.set_backend(b)
        out[b] = fn()
        times[b] = best_time(fn, repeat)
    a, c = out["numpy"], out["compiled"]
    a = a if isinstance(a, tuple) else (a,)
    c = c if isinstance(c, tuple) else (c,)
    diff = max(float(np.max(np.abs(x - y))) for x, y in zip(a, c))
    print(
        f"{label:<34} numpy {times['numpy'] * 1e3:9.2f} ms   compiled {times['compiled'] * 1e3:9.2f} ms"
        f"   speedup {times['numpy'] / times['compiled']:6.1f}x   max diff {diff:.1e}"
    )
    return times


def main(argv=None):
    ap = argparse.ArgumentParser(description=__doc__, formatter_class=argparse.RawDescriptionHelpFormatter)
    ap.add_argument("--nel", type=int, default=32, help="elements per axis of the 2D problems")
    ap.add_argument("--repeat", type=int, default=5)
    ap.add_argument("--threads", type=int, default=1)
    args = ap.parse_args(argv)
    if not _kernels.available():
        print("compiled kernels are not built; nothing to compare")
        return 1
    _kernels.set_num_threads(args.threads)
    prev = _kernels.backend()

    disc, scheme, u = setup("solid_body", args.nel)
    st = evaluate_stage(disc, u, 0.0)
    dt = 0.5 * scheme.max_dt(u, 0.0)
    print(f"solid body rotation, p=3, {args.nel}^2 elements, {disc.N} nodes")
    compare("  low-order sweep", lambda: low_order_stage(disc, st), args.repeat)
    compare("  forward Euler stage (subcell)", lambda: scheme.forward_euler(u, 0.0, dt), args.repeat)

    disc, scheme, u = setup("riemann2d_12", args.nel)
    st = evaluate_stage(disc, u, 0.0)
    dt = 0.5 * scheme.max_dt(u, 0.0)
    print(f"Euler configuration 12, p=3, {args.nel}^2 elements, {disc.N} nodes")
    compare("  low-order sweep", lambda: low_order_stage(disc, st), args.repeat)
    rng = np.random.default_rng(1)
    dirs = 0.3 * rng.standard_normal(u.shape) * u
    smin = disc.model.entropy(u) - 0.01
    compare("  entropy line search", lambda: lim.entropy_line_search(u, dirs, smin, disc.model.gamma), args.repeat)
    compare("  forward Euler stage (subcell)", lambda: scheme.forward_euler(u, 0.0, dt), args.repeat)

    _kernels.set_backend(prev)
    return 0


if __name__ == "__main__":
    raise SystemExit(main())

"""Acceptance criteria, each at its stated tolerance.

Every check appends one PASS/FAIL line that is printed in the terminal
summary.  The double Mach reflection run takes many hours on one core and
only runs with IDPDG_RUN_LONG=1.
"""

from __future__ import annotations

import os
import time

import numpy as np
import pytest

from idpdg.discretization import evaluate_stage
from idpdg.equations import BuckleyLeverett, Burgers, Euler, LinearAdvection
from idpdg.harness import build_config, run
from idpdg.harness.convergence import convergence_study
from idpdg.high_order import residual_high
from idpdg.limiting import bisection_line_search, entropy_line_search
from idpdg.low_order import bar_states, idp_max_dt, local_bounds, low_order_update, residual_low
from idpdg.scheme import LimiterConfig, Scheme
from conftest import ACCEPTANCE_LINES, make_disc

RUN_LONG = os.environ.get("IDPDG_RUN_LONG", "") not in ("", "0")


def report(criterion: str, ok: bool, detail: str, status: str | None = None) -> bool:
    ACCEPTANCE_LINES.append(f"{status or ('PASS' if ok else 'FAIL')}  [{criterion}] {detail}")
    return ok


def check_all(results):
    failed = [r for r in results if not r]
    assert not failed, f"{len(failed)} of {len(results)} checks failed (see acceptance summary)"


def sine_study(p, smoothness):
    cfg = build_config({"problem": "sine", "p": str(p), "nel": "8", "smoothness": str(smoothness)})
    return convergence_study(cfg, 4, write=False)


# --- 1 and 2: smooth advection convergence ------------------------------------------------

PAPER_P3 = (2.31e-4, 1.14e-5, 7.10e-7, 4.43e-8)
FINAL_RATE = {3: (4.00, 0.15), 4: (5.0, 0.2), 5: (6.0, 0.3)}


def test_criterion_1_convergence_with_smoothness_indicator():
    t0 = time.perf_counter()
    out = []
    res = {p: sine_study(p, True) for p in (3, 4, 5)}
    wall = time.perf_counter() - t0
    err = res[3].errors["l1"]
    ratio = [e / ref for e, ref in zip(err, PAPER_P3)]
    out.append(report("1", all(0.5 <= r <= 2.0 for r in ratio), "p=3 L1 errors " + ", ".join(f"{e:.3e}" for e in err) + " within 2x of the table"))
    for p, (target, tol) in FINAL_RATE.items():
        rate = res[p].rates[-1]
        out.append(report("1", abs(rate - target) <= tol, f"p={p} final rate {rate:.3f} (target {target} +- {tol})"))
    out.append(report("1", wall < 60.0, f"runtime {wall:.1f} s < 60 s"))
    check_all(out)


def test_criterion_2_convergence_without_smoothness_indicator():
    out = []
    for p in (3, 4, 5):
        rate = sine_study(p, False).rates[-1]
        out.append(report("2", abs(rate - 1.0) <= 0.3, f"p={p} S.I. off asymptotic rate {rate:.3f} (target 1.0 +- 0.3)"))
    check_all(out)


# --- 3 and 4: solid body rotation ---------------------------------------------------------


def solid_body(limiter, nel=64, smoothness=False):
    cfg = build_config({"problem": "solid_body", "p": "3", "nel": str(nel), "limiter": limiter, "smoothness": str(smoothness)})
    return run(cfg, write=False).report


def test_criterion_3_solid_body_rotation():
    out = []
    fct = solid_body("subcell")
    l1 = fct["l1_error_u"]
    out.append(report("3", fct["min_u"] >= -1e-12 and fct["max_u"] <= 1 + 1e-12, f"FCT min {fct['min_u']:.3e}, max {fct['max_u']:.15f}"))
    out.append(report("3", abs(l1 / 1.1e-2 - 1) <= 0.25, f"FCT L1 {l1:.4e} within 25% of 1.1e-2"))
    low = solid_body("low_only")
    out.append(report("3", abs(low["l1_error_u"] / 8.5e-2 - 1) <= 0.25, f"low-order L1 {low['l1_error_u']:.4e} within 25% of 8.5e-2"))
    out.append(report("3", abs(low["max_u"] - 0.66) <= 0.05, f"low-order max {low['max_u']:.4f} (0.66 +- 0.05)"))
    dg = solid_body("none")
    out.append(report("3", abs(dg["min_u"] + 0.21) <= 0.05 and abs(dg["max_u"] - 1.16) <= 0.05,
                      f"unlimited DG min/max {dg['min_u']:.4f}/{dg['max_u']:.4f} (-0.21/1.16 +- 0.05)"))
    check_all(out)


def test_criterion_4_smoothness_indicator_solid_body():
    on = solid_body("subcell", 25, True)["l1_error_u"]
    off = solid_body("subcell", 25, False)["l1_error_u"]
    check_all([report("4", on <= 0.85 * off, f"25x25 L1 with S.I. {on:.4e} vs without {off:.4e} (ratio {on / off:.3f} <= 0.85)")])


# --- 5: sparsified versus unsparsified low-order scheme -------------------------------------


def test_criterion_5_sparsified_vs_unsparsified():
    errs = {}
    for sparse in (True, False):
        for p, nel in ((3, 32), (7, 16), (15, 8), (31, 4)):
            cfg = build_config({"problem": "sine_pi", "p": str(p), "nel": str(nel), "sparsified": str(sparse)})
            errs[sparse, p] = run(cfg, write=False).report["l1_error_u"]
    sp = [errs[True, p] for p in (3, 7, 15, 31)]
    spread = max(sp) / min(sp)
    ratio = errs[False, 31] / errs[False, 3]
    out = [
        report("5", spread < 2.0, "sparsified L1 " + ", ".join(f"{e:.4f}" for e in sp) + f" (max/min {spread:.3f} < 2)"),
        report("5", ratio >= 3.0, f"unsparsified L1 p=31 {errs[False, 31]:.4f} vs p=3 {errs[False, 3]:.4f} (ratio {ratio:.3f} >= 3)"),
    ]
    check_all(out)


# --- 6: property suite ----------------------------------------------------------------------


def _rotation(x):
    return np.stack([0.5 - x[:, 1], x[:, 0] - 0.5], axis=1)


def idp_trial(rng):
    d = int(rng.integers(1, 3))
    nel = int(rng.integers(1, 4 if d == 2 else 7))
    p = int(rng.integers(0, 5 if d == 2 else 9))
    kind = int(rng.integers(0, 4))
    if kind == 0:
        model = LinearAdvection(d, rng.uniform(-2, 2, d))
    elif kind == 1:
        model = Burgers(d, rng.uniform(-1, 1, d))
    elif kind == 2 and d == 2:
        model = LinearAdvection(2, _rotation)
    else:
        model = BuckleyLeverett() if d == 1 else Burgers(2)
    amp = float(rng.uniform(0.0, 0.08)) if d == 2 else 0.0  # larger amplitudes fold single-element meshes
    D = make_disc(d, nel, p, model=model, mapping="sine", amplitude=amp)
    u = rng.uniform(-1, 1, (D.N, 1)) * rng.uniform(0.1, 3.0)
    if rng.random() < 0.3:
        u = np.round(u)
    st = evaluate_stage(D, u, 0.0)
    dt = idp_max_dt(D, st)
    if not np.isfinite(dt):
        return 0.0
    dt *= rng.uniform(0.05, 1.0)
    lo, hi = local_bounds(D, st, bar_states(D, st))
    uL = low_order_update(D, st, residual_low(D, st), dt)[:, 0]
    scale = np.maximum(1.0, np.abs(u[:, 0]))
    return float(np.max(np.maximum(lo - uL, uL - hi) / scale))


def test_criterion_6_idp_oracle():
    rng = np.random.default_rng(12345)
    worst = max(idp_trial(rng) for _ in range(10_000))
    check_all([report("6", worst <= 1e-12, f"IDP oracle: 10^4 random low-order steps, worst hull excursion {worst:.2e} <= 1e-12")])


PERIODIC_RUNS = [
    {"problem": "sine", "p": "3", "nel": "8"},
    {"problem": "sine_pi", "p": "7", "nel": "16"},
    {"problem": "sine_pi", "p": "7", "nel": "16", "sparsified": "false"},
    {"problem": "square_waves", "p": "3", "nel": "80"},
    {"problem": "square_waves", "p": "3", "nel": "80", "limiter": "elementwise"},
    {"problem": "riemann2d_12", "p": "3", "nel": "16", "t_end": "0.05"},
]


def test_criterion_6_conservation_on_periodic_benchmarks():
    out = []
    for vals in PERIODIC_RUNS:
        rep = run(build_config(vals), write=False).report
        # the runner aborts on any per-step drift above 1e-12; record the observed maximum
        tag = ", ".join(f"{k}={v}" for k, v in vals.items())
        out.append(report("6", rep["max_step_drift"] <= 1e-12, f"conservation {tag}: max per-step drift {rep['max_step_drift']:.2e}"))
    check_all(out)


def test_criterion_6_constant_preservation_curved_mesh():
    out = []
    for name, model, c in (
        ("advection", LinearAdvection(2, [1.0, 0.6]), np.array([0.7])),
        ("euler", Euler(2), Euler(2).from_primitive([1.3], [[0.5, -0.2]], [0.8])[0]),
    ):
        D = make_disc(2, 5, 3, model=model, mapping="sine", amplitude=0.12)
        u = np.tile(c, (D.N, 1))
        st = evaluate_stage(D, u, 0.0)
        m = D.mass[:, None] * np.maximum(1.0, np.abs(c)).max()
        hi = np.abs(residual_high(D, st).sum(axis=0) / m).max()
        lo = np.abs(residual_low(D, st).sum(axis=0) / m).max()
        gb = (float(c[0]), float(c[0])) if model.scalar else None
        sch = Scheme(D, LimiterConfig("subcell"), gb)
        dt = 0.5 * sch.max_dt(u, 0.0)
        fct = np.abs((sch.forward_euler(u, 0.0, dt) - u) / dt).max() / np.maximum(1.0, np.abs(c)).max()
        worst = max(hi, lo, fct)
        out.append(report("6", worst <= 1e-12, f"constant {name} on curved mesh: relative |u_t| high {hi:.1e}, low {lo:.1e}, FCT {fct:.1e}"))
    check_all(out)


def test_criterion_6_metric_correction_order():
    levels = (4, 8, 16)
    size = [np.abs(make_disc(2, n, 3, mapping="sine", amplitude=0.1).geom.correction).max() for n in levels]
    slope = np.polyfit(np.log(1.0 / np.array(levels)), np.log(size), 1)[0]
    check_all([report("6", slope >= 0.9, "metric correction max|GJhat - GJ| " + ", ".join(f"{s:.2e}" for s in size) + f", slope {slope:.2f} >= 0.9")])


# first verified run (see the decisions ledger), with 2% headroom
SOD_L1_THRESHOLD = {0: 0.01541, 1: 0.00767, 3: 0.00667, 7: 0.00579}


def euler_run(problem, p, dof):
    cfg = build_config({"problem": problem, "p": str(p), "nel": str(dof // (p + 1)), "reference": "false"})
    model = Euler(1)
    state = {"rho": np.inf, "e": np.inf, "s": np.inf}

    def watch(u, t, k):
        state["rho"] = min(state["rho"], float(u[:, 0].min()))
        state["e"] = min(state["e"], float(model.internal_energy(u).min()))
        state["s"] = min(state["s"], float(model.entropy(u).min()))

    res = run(cfg, write=False, callback=watch)
    return res, state


@pytest.mark.parametrize("p", [0, 1, 3, 7])
def test_criterion_6_sod_invariants(p):
    res, state = euler_run("sod", p, 256)
    s0 = float(Euler(1).entropy(res.u0).min())
    l1 = res.report["l1_error_rho"]
    out = [
        report("6", state["rho"] > 0 and state["e"] > 0 and state["s"] >= s0 - 1e-12 * abs(s0),
               f"Sod p={p}: min rho {state['rho']:.4f}, min e {state['e']:.4f}, min s {state['s']:.6f} >= s0 {s0:.6f} over all steps"),
        report("6", l1 < SOD_L1_THRESHOLD[p], f"Sod p={p}: L1 density error {l1:.5f} < frozen {SOD_L1_THRESHOLD[p]}"),
    ]
    check_all(out)


@pytest.mark.parametrize("p", [0, 1, 3, 7])
def test_criterion_6_shu_osher_invariants(p):
    res, state = euler_run("shu_osher", p, 512)
    ok = state["rho"] > 0 and state["e"] > 0 and res.report["t_final"] == 1.8
    check_all([report("6", ok, f"Shu-Osher p={p}: completed to t=1.8, min rho {state['rho']:.4f}, min e {state['e']:.4f}")])


def test_criterion_6_entropy_line_search():
    rng = np.random.default_rng(777)
    n = 1000
    model = Euler(1)
    u0 = model.from_primitive(rng.uniform(0.1, 2, n), rng.uniform(-2, 2, (n, 1)), rng.uniform(0.05, 3, n))
    dv = rng.normal(size=u0.shape) * rng.uniform(0.1, 5.0, (n, 1)) * u0
    s_min = model.entropy(u0) - rng.uniform(0.0, 0.5, n)
    diff = np.abs(entropy_line_search(u0, dv, s_min) - bisection_line_search(u0, dv, s_min, steps=64)).max()
    check_all([report("6", diff <= 1e-8, f"entropy line search vs 64-step bisection on 10^3 directions: max diff {diff:.2e}")])


# --- 7 and 8: two-dimensional Euler ---------------------------------------------------------


def test_criterion_7_riemann_configuration_12(tmp_path):
    cfg = build_config({"problem": "riemann2d_12", "p": "3", "nel": "64", "t_end": "0.25", "output_dir": str(tmp_path)})
    res = run(cfg)
    rep = res.report
    ok = rep["t_final"] == 0.25 and np.isfinite(rep["max_rho"]) and rep["min_rho"] > 0 and rep["min_p"] > 0
    files = all(os.path.getsize(res.paths[k]) > 0 for k in ("csv", "vtk", "results", "config"))
    check_all([
        report("7", ok, f"config 12 p=3 64^2 t=0.25: rho in [{rep['min_rho']:.4f}, {rep['max_rho']:.4f}], min p {rep['min_p']:.4f}"),
        report("7", files, "CSV, VTK, results and config files written"),
    ])


def test_criterion_8_double_mach_reflection():
    if not RUN_LONG:
        report("8", False, "NOT RUN: double Mach 300x75 p=3 needs ~2e4 steps (hours); set IDPDG_RUN_LONG=1", status="SKIP")
        pytest.skip("double Mach reflection at 300x75 takes hours; set IDPDG_RUN_LONG=1")
    cfg = build_config({"problem": "double_mach", "p": "3", "nel": "300x75", "t_end": "0.275", "write_csv": "false"})
    rep = run(cfg).report
    ok = rep["t_final"] == 0.275 and rep["min_rho"] > 0 and rep["min_p"] > 0
    check_all([report("8", ok, f"DMR 300x75 p=3: min rho {rep['min_rho']:.4f}, min p {rep['min_p']:.4f}")])

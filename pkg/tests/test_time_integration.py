import math

import numpy as np
import pytest

from idpdg.scheme import LimiterConfig, Scheme
from idpdg.time_integration import (
    compute_dt,
    integrate,
    limited_rate,
    step_high_order_rk,
    step_ssprk3,
)
from conftest import make_disc


def linear_fe(lam):
    return lambda u, t, dt: u + dt * lam * u


def test_zero_rhs_is_identity():
    fe = lambda u, t, dt: u  # noqa: E731
    u = np.arange(3.0)
    assert np.array_equal(step_ssprk3(fe, u, 0.0, 0.1), u)
    assert np.array_equal(step_high_order_rk(limited_rate(fe, 0.1), u, 0.0, 0.1), u)


def test_ssprk3_local_error_fourth_order():
    errs, hs = [], np.array([0.2, 0.1, 0.05, 0.025])
    for h in hs:
        u = step_ssprk3(linear_fe(-1.0), np.array([1.0]), 0.0, h)[0]
        errs.append(abs(u - math.exp(-h)))
    slope = np.polyfit(np.log(hs), np.log(errs), 1)[0]
    assert abs(slope - 4.0) < 0.1


def test_dop853_exponential():
    rate = lambda u, t: u  # noqa: E731
    u, h = np.array([1.0]), 0.1
    for k in range(10):
        u = step_high_order_rk(rate, u, k * h, h)
    assert abs(u[0] - math.e) < 1e-12


def test_compute_dt():
    assert math.isclose(compute_dt(0.4, 0.5, 0.0, 1.0), 0.2)
    assert math.isclose(compute_dt(0.4, 0.5, 0.9, 1.0), 0.1)
    with pytest.raises(ValueError):
        compute_dt(0.4, 0.0, 0.0, 1.0)
    with pytest.raises(ValueError):
        compute_dt(math.inf, 0.5, 0.0, 1.0)


def test_cfl_half_quarter_ratio():
    # cfl = 1/2 and dt_max = min m / (2 d) give dt = min m / (4 d)
    m, dsum = 0.3, 2.0
    assert math.isclose(compute_dt(m / (2 * dsum), 0.5, 0.0, 10.0), m / (4 * dsum))


def _advection_run(method, **kw):
    D = make_disc(1, 8, 3)
    u0 = np.where((D.x[:, :1] > 0.25) & (D.x[:, :1] < 0.6), 1.0, 0.0)
    sch = Scheme(D, LimiterConfig("subcell"), (0.0, 1.0))
    seen = []
    u, stats = integrate(sch, u0, 0.3, method=method, callback=lambda u, t, k: seen.append((u.min(), u.max(), t)), **kw)
    return D, u0, u, stats, seen


def test_ssprk3_run_keeps_global_bounds_and_lands_on_end():
    D, u0, u, stats, seen = _advection_run("ssprk3")
    assert stats.t == 0.3
    assert all(lo >= -1e-12 and hi <= 1 + 1e-12 for lo, hi, _ in seen)
    assert abs(D.total(u)[0] - D.total(u0)[0]) < 1e-12
    assert stats.steps == len(seen)


def test_run_is_deterministic():
    a = _advection_run("ssprk3")
    b = _advection_run("ssprk3")
    assert np.array_equal(a[2], b[2]) and a[3] == b[3]


def test_forward_euler_and_max_steps():
    *_, stats, seen = _advection_run("forward_euler", max_steps=3)
    assert stats.steps == 3 and stats.t < 0.3


def test_explicit_dt_and_bad_arguments():
    D = make_disc(1, 4, 1)
    sch = Scheme(D, LimiterConfig("low_only"))
    u0 = np.zeros((D.N, 1))
    _, stats = integrate(sch, u0, 0.1, dt=0.03)
    assert stats.steps == 4 and stats.t == 0.1
    with pytest.raises(ValueError):
        integrate(sch, u0, 0.1, method="rk4")
    with pytest.raises(ValueError):
        integrate(sch, u0, 0.1, method="ssprk3", dt_factor=2.0)


def test_dop853_pseudo_step_run():
    D = make_disc(1, 8, 3)
    u0 = np.sin(2 * np.pi * D.x)
    sch = Scheme(D, LimiterConfig("subcell", smoothness=True), (-np.inf, np.inf))
    u, stats = integrate(sch, u0, 1.0, method="dop853", dt_factor=8.0)
    assert stats.t == 1.0
    l1 = D.mass @ np.abs(u - u0)[:, 0]
    assert l1 < 4e-4

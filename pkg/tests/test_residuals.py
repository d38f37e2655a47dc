"""High- and low-order residuals: consistency, conservation, free-stream and IDP."""

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from idpdg.discretization import evaluate_stage
from idpdg.equations import BuckleyLeverett, Burgers, Euler, LinearAdvection
from idpdg.high_order import lax_friedrichs_flux, residual_high
from idpdg.low_order import (
    CFLViolation,
    bar_states,
    check_cfl,
    convex_combination_update,
    forward_euler_low,
    idp_max_dt,
    local_bounds,
    low_order_stage,
    low_order_update,
    residual_low,
    viscosity_row_sums,
)
from conftest import make_disc, random_euler_states


def rotation(x):
    return np.stack([0.5 - x[:, 1], x[:, 0] - 0.5], axis=1)


def test_lax_friedrichs_consistent():
    m = Euler(1)
    u = m.from_primitive([1.0], [[0.3]], [2.0])
    n = np.array([[1.0]])
    assert np.allclose(lax_friedrichs_flux(m, u, u, n), m.flux(u)[:, :, 0])


def test_high_order_derivative_accuracy():
    errs = []
    for nel in (8, 16):
        D = make_disc(1, nel, 4)
        u = np.sin(2 * np.pi * D.x)
        st_ = evaluate_stage(D, u, 0.0)
        rate = residual_high(D, st_).sum(axis=0)[:, 0] / D.mass
        errs.append(np.abs(rate + 2 * np.pi * np.cos(2 * np.pi * D.x[:, 0])).max())
    # nodal rate error of the degree-4 scheme shrinks like h^4
    assert np.log2(errs[0] / errs[1]) > 3.5


@pytest.mark.parametrize("d", [1, 2])
@pytest.mark.parametrize("kind", ["advection", "burgers", "euler"])
def test_residuals_are_conservative(d, kind, rng):
    if kind == "advection":
        model = LinearAdvection(d, np.arange(1, d + 1, dtype=float))
    elif kind == "burgers":
        model = Burgers(d)
    else:
        model = Euler(d)
    D = make_disc(d, 3, 3, model=model, mapping="sine" if d == 2 else "affine", amplitude=0.08 if d == 2 else 0.0)
    if kind == "euler":
        _, u = random_euler_states(rng, D.N, d)
    else:
        u = rng.normal(size=(D.N, 1))
    st_ = evaluate_stage(D, u, 0.0)
    for r in (residual_high(D, st_), residual_low(D, st_)):
        assert np.allclose(r.sum(axis=(0, 1)), 0.0, atol=1e-11 * max(1.0, np.abs(r).max()))


@pytest.mark.parametrize("kind", ["advection", "rotation", "euler"])
def test_constant_preserved_on_curved_mesh(kind):
    """Free-stream preservation for high-order, low-order and limited updates."""
    from idpdg.scheme import LimiterConfig, Scheme

    if kind == "advection":
        model, c = LinearAdvection(2, [1.0, 0.7]), np.array([0.3])
    elif kind == "rotation":
        model, c = LinearAdvection(2, rotation), np.array([0.3])
    else:
        model = Euler(2)
        c = model.from_primitive([1.2], [[0.4, -0.3]], [0.9])[0]
    D = make_disc(2, 4, 3, model=model, mapping="sine", amplitude=0.1)
    u = np.tile(c, (D.N, 1))
    st_ = evaluate_stage(D, u, 0.0)
    scale = D.mass[:, None]
    assert np.abs(residual_low(D, st_).sum(axis=0) / scale).max() <= 1e-12
    if kind == "rotation":
        # only the low-order operator sees the corrected contravariant velocity;
        # the strong form carries the O(h^p) discrete divergence of beta
        return
    assert np.abs(residual_high(D, st_).sum(axis=0) / scale).max() <= 1e-12
    gb = None if kind == "euler" else (float(c[0]), float(c[0]))
    sch = Scheme(D, LimiterConfig("subcell"), gb)
    dt = 0.5 * sch.max_dt(u, 0.0)
    out = sch.forward_euler(u, 0.0, dt)
    assert np.abs((out - u) / dt).max() <= 1e-12


def test_bar_state_form_matches_residual(rng):
    D = make_disc(2, 3, 3, model=Burgers(2), mapping="sine", amplitude=0.05)
    u = rng.normal(size=(D.N, 1))
    st_ = evaluate_stage(D, u, 0.0)
    dt = idp_max_dt(D, st_)
    a = low_order_update(D, st_, residual_low(D, st_), dt)
    b = convex_combination_update(D, st_, bar_states(D, st_), dt)
    assert np.allclose(a, b, atol=1e-12)


def test_cfl_violation_raises(rng):
    D = make_disc(1, 4, 2)
    u = rng.normal(size=(D.N, 1))
    st_ = evaluate_stage(D, u, 0.0)
    dt = check_cfl(D, st_, 0.0)
    with pytest.raises(CFLViolation):
        forward_euler_low(D, u, 0.0, 1.01 * dt)


def test_advection_dt_halves_with_mesh():
    dts = [idp_max_dt(D, evaluate_stage(D, np.zeros((D.N, 1)), 0.0)) for D in (make_disc(1, 8, 3), make_disc(1, 16, 3))]
    assert np.isclose(dts[0] / dts[1], 2.0)


def test_cfl_formula_by_hand():
    # p = 1, unit speed, 4 elements of width 1/4: every node has one in-element
    # neighbour with d = 1/2 and one face neighbour with d = 1/2, m = 1/8
    D = make_disc(1, 4, 1)
    st_ = evaluate_stage(D, np.zeros((D.N, 1)), 0.0)
    assert np.allclose(viscosity_row_sums(D, st_), 1.0)
    assert np.isclose(idp_max_dt(D, st_), (1 / 8) / 2.0)


def test_p0_rotation_preserves_constants_on_curved_mesh():
    # cell-centre velocities would leave a nonzero net face flux per element
    D = make_disc(2, 6, 0, model=LinearAdvection(2, rotation), mapping="sine", amplitude=0.08)
    st_ = evaluate_stage(D, np.ones((D.N, 1)), 0.0)
    assert np.abs(residual_low(D, st_).sum(axis=0)[:, 0] / D.mass).max() <= 1e-12


def test_p0_nonlinear_velocity_rejected():
    from idpdg.mesh import GeometryError

    swirl = lambda x: np.stack([np.sin(np.pi * x[:, 0]) * np.cos(np.pi * x[:, 1]), -np.cos(np.pi * x[:, 0]) * np.sin(np.pi * x[:, 1])], axis=1)  # noqa: E731
    with pytest.raises(GeometryError):
        make_disc(2, 5, 0, model=LinearAdvection(2, swirl), mapping="sine", amplitude=0.08)


def _idp_trial(rng, d, kind):
    nel = int(rng.integers(1, 4 if d == 2 else 6))
    p = int(rng.integers(0, 5 if d == 2 else 8))
    amp = float(rng.uniform(0.0, 0.08)) if d == 2 else 0.0  # larger amplitudes fold single-element meshes
    if kind == 0:
        model = LinearAdvection(d, rng.uniform(-2, 2, d))
    elif kind == 1:
        model = Burgers(d)
    elif kind == 2 and d == 2:
        model = LinearAdvection(2, rotation)
    else:
        model = BuckleyLeverett() if d == 1 else Burgers(d, rng.uniform(-1, 1, 2))
    D = make_disc(d, nel, p, model=model, mapping="sine", amplitude=amp)
    u = rng.uniform(-1, 1, (D.N, 1)) * rng.uniform(0.1, 3.0)
    if rng.random() < 0.3:
        u = np.round(u)  # plateaus and jumps
    st_ = evaluate_stage(D, u, 0.0)
    dt = idp_max_dt(D, st_)
    if not np.isfinite(dt):
        return True
    dt *= rng.uniform(0.05, 1.0)
    lo, hi = local_bounds(D, st_, bar_states(D, st_))
    uL = low_order_update(D, st_, residual_low(D, st_), dt)[:, 0]
    tol = 1e-12 * np.maximum(1.0, np.abs(u[:, 0]))
    return bool(np.all(uL >= lo - tol) and np.all(uL <= hi + tol))


@given(st.integers(0, 2**32 - 1), st.sampled_from([1, 2]), st.integers(0, 3))
@settings(max_examples=150, deadline=None)
def test_idp_low_order_stays_in_bar_hull(seed, d, kind):
    assert _idp_trial(np.random.default_rng(seed), d, kind)


def test_low_order_euler_positive(rng):
    D = make_disc(1, 6, 3, model=Euler(1))
    _, u = random_euler_states(rng, D.N)
    st_ = evaluate_stage(D, u, 0.0)
    dt = idp_max_dt(D, st_)
    uL = low_order_update(D, st_, residual_low(D, st_), dt)
    assert np.all(uL[:, 0] > 0) and np.all(Euler(1).internal_energy(uL) > 0)


@pytest.mark.parametrize("d", [1, 2])
@pytest.mark.parametrize("kind", ["advection", "euler"])
def test_low_order_stage_backends_agree(d, kind, rng):
    from idpdg import _kernels

    if not _kernels.available():
        pytest.skip("compiled kernels not built")
    model = Euler(d) if kind == "euler" else LinearAdvection(d, rotation if d == 2 else [1.0])
    D = make_disc(d, 3, 3, model=model, mapping="sine" if d == 2 else "affine", amplitude=0.05 if d == 2 else 0.0)
    u = random_euler_states(rng, D.N, d)[1] if kind == "euler" else rng.normal(size=(D.N, 1))
    st_ = evaluate_stage(D, u, 0.0)
    out = {}
    for b in ("numpy", "compiled"):
        prev = _kernels.set_backend(b)
        try:
            out[b] = low_order_stage(D, st_, 0)
        finally:
            _kernels.set_backend(prev)
    for a, b in zip(out["numpy"], out["compiled"]):
        assert np.allclose(a, b, rtol=1e-12, atol=1e-12)

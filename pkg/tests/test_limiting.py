import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from idpdg import limiting as lim
from idpdg.equations import Euler
from idpdg.tensor_ops import modal_transform


def random_fluxes(rng, d, nel, n, nc=1):
    """Antidiffusive residuals with vanishing line sums, as rH - rL always has."""
    N = nel * n**d
    r = rng.normal(size=(d, N, nc))
    for k in range(d):
        ax = d - k
        v = r[k].reshape((nel,) + (n,) * d + (nc,))
        v -= v.mean(axis=ax, keepdims=True)
    return lim.assemble_antidiffusive(r, np.zeros_like(r), nel, n)


@pytest.mark.parametrize("d", [1, 2])
def test_subcell_fluxes_telescope(d, rng):
    fl = random_fluxes(rng, d, 3, 4)
    # alpha = 1 on every subcell face recovers the nodal antidiffusive residual
    corr = lim.subcell_correction(fl, np.ones(fl.plus.shape[:2]), np.ones(fl.plus.shape[:2]))
    assert np.allclose(corr, fl.nodal)
    sums = lim.line_sums(fl.r, 3, 4)
    assert sums.shape == (d, 3, 4 ** (d - 1), 1)
    assert np.allclose(sums, 0.0)


def test_face_alpha_is_min_of_neighbours():
    at = np.array([1.0, 0.2, 0.7, 0.9])
    ap, am = lim.face_alpha(at, 1, 4, 1)
    assert np.allclose(ap[0], [0.2, 0.2, 0.7, 1.0])
    assert np.allclose(am[0], [1.0, 0.2, 0.2, 0.7])


@given(st.integers(0, 2**32 - 1), st.sampled_from([1, 2]))
@settings(max_examples=60, deadline=None)
def test_zalesak_subcell_keeps_bounds(seed, d):
    rng = np.random.default_rng(seed)
    nel, n = 2, 4
    N = nel * n**d
    fl = random_fluxes(rng, d, nel, n)
    uL = rng.uniform(-1, 1, N)
    lo = uL - rng.uniform(0, 0.1, N)
    hi = uL + rng.uniform(0, 0.1, N)
    m = rng.uniform(0.5, 1.5, N)
    dt = 0.1
    at = lim.zalesak_subcell(fl, lo, hi, uL, dt, m)
    assert np.all((at >= 0) & (at <= 1))
    ap, am = lim.face_alpha(at, nel, n, d)
    u = uL + dt / m * lim.subcell_correction(fl, ap, am)[:, 0]
    tol = 1e-12
    assert np.all(u >= lo - tol) and np.all(u <= hi + tol)


def test_zalesak_elementwise_keeps_bounds(rng):
    nel, nloc = 4, 5
    N = nel * nloc
    r = rng.normal(size=N)
    uL = rng.uniform(0, 1, N)
    lo, hi = uL - 0.05, uL + 0.05
    m = np.ones(N)
    a = lim.zalesak_elementwise(r, lo, hi, uL, 0.2, m, nel)
    assert np.all(a.reshape(nel, -1) == a.reshape(nel, -1)[:, :1])
    u = uL + 0.2 * a * r
    assert np.all(u >= lo - 1e-12) and np.all(u <= hi + 1e-12)


def test_zalesak_no_flux_means_alpha_one():
    fl = lim.assemble_antidiffusive(np.zeros((1, 4, 1)), np.zeros((1, 4, 1)), 1, 4)
    at = lim.zalesak_subcell(fl, np.zeros(4), np.zeros(4), np.zeros(4), 1.0, np.ones(4))
    assert np.all(at == 1.0)


def test_zalesak_rejects_inconsistent_low_order():
    fl = lim.assemble_antidiffusive(np.ones((1, 4, 1)), np.zeros((1, 4, 1)), 1, 4)
    with pytest.raises(lim.LimiterError):
        lim.zalesak_subcell(fl, np.zeros(4), np.zeros(4), np.full(4, 1.0), 1.0, np.ones(4))


def random_line_search_problems(rng, count, d=1, gamma=1.4):
    model = Euler(d, gamma)
    u0 = model.from_primitive(rng.uniform(0.1, 2, count), rng.uniform(-2, 2, (count, d)), rng.uniform(0.05, 3, count))
    dv = rng.normal(size=u0.shape) * rng.uniform(0.1, 5.0, (count, 1)) * u0
    s_min = model.entropy(u0) - rng.uniform(0.0, 0.5, count)
    return u0, dv, s_min


@pytest.mark.usefixtures("backend")
def test_entropy_line_search_matches_bisection(rng):
    u0, dv, s_min = random_line_search_problems(rng, 1000)
    a = lim.entropy_line_search(u0, dv, s_min)
    b = lim.bisection_line_search(u0, dv, s_min)
    assert np.abs(a - b).max() <= 1e-8


@pytest.mark.usefixtures("backend")
def test_entropy_line_search_result_is_admissible(rng):
    u0, dv, s_min = random_line_search_problems(rng, 300, d=2)
    a = lim.entropy_line_search(u0, dv, s_min)
    m = Euler(2)
    v = u0 + a[:, None] * dv
    assert np.all(v[:, 0] > 0)
    assert np.all(m.entropy(v) >= s_min - 1e-9)


def test_density_limit_closed_form():
    a = lim.density_limit(np.array([1.0, 1.0]), np.array([-4.0, 1.0]))
    assert np.allclose(a, [0.25, 1.0])


def test_smoothness_factor_ramp():
    s0, kappa = -2.0, 1.0
    f = lim.smoothness_factor(np.array([-10.0, -3.0, -2.0, -1.0, 5.0]), s0, kappa)
    assert np.allclose(f, [0.0, 0.0, 0.5, 1.0, 1.0])
    s = np.linspace(-4, 0, 201)
    assert np.all(np.diff(lim.smoothness_factor(s, s0, kappa)) >= 0)


def test_default_s0():
    assert np.isclose(lim.default_s0(3), np.log10(3.0**-4))


def test_element_smoothness_flags_jumps():
    p = 3
    T = modal_transform(p, 1)
    x = np.linspace(0, 1, p + 1)
    smooth = 1.0 + 0.01 * x
    jump = np.where(x > 0.5, 1.0, 0.0)
    zigzag = np.array([0.0, 1.0, 0.0, 1.0])
    eps = lim.element_smoothness(np.concatenate([smooth, jump, zigzag]), T, 3, lim.default_s0(p))
    assert eps[0] == 0.0 and eps[1] > 0.5 and eps[2] == 1.0


def test_relax_bounds():
    lo, hi = lim.relax_bounds(np.array([0.4, 0.4]), np.array([0.6, 0.6]), np.array([1.0, 0.25]), 0.0, 1.0)
    assert np.allclose(lo, [0.4, 0.1]) and np.allclose(hi, [0.6, 0.9])
    lo, hi = lim.relax_bounds(np.array([0.4]), np.array([0.6]), np.array([0.5]), -np.inf, np.inf)
    assert lo[0] == -np.inf and hi[0] == np.inf


@pytest.mark.usefixtures("backend")
def test_convex_limit_subcell_admissible(rng):
    d, nel, n = 1, 2, 4
    N = nel * n
    m = Euler(1)
    uL = m.from_primitive(rng.uniform(0.5, 1.5, N), rng.uniform(-1, 1, (N, 1)), rng.uniform(0.5, 1.5, N))
    r = rng.normal(size=(1, N, 3)) * 2.0
    fl = lim.assemble_antidiffusive(r, np.zeros_like(r), nel, n)
    s_min = m.entropy(uL) - 0.01
    dt, mass = 0.5, np.full(N, 0.25)
    at, ap, am = lim.convex_limit_subcell(fl, uL, s_min, dt, mass, nel, n)
    u = uL + dt / mass[:, None] * lim.subcell_correction(fl, ap, am)
    assert np.all(u[:, 0] > 0)
    assert np.all(m.entropy(u) >= s_min - 1e-9)

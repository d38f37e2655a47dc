import numpy as np
import pytest

from idpdg import _kernels
from idpdg.discretization import Discretization
from idpdg.equations import Burgers, Euler, LinearAdvection
from idpdg.mesh import Mesh


def make_disc(d=1, nel=4, p=3, model=None, periodic=True, lower=None, upper=None, mapping="affine",
              amplitude=0.0, bc=None, sparsified=True):
    nel = (nel,) * d if np.isscalar(nel) else tuple(nel)
    lower = lower or (0.0,) * d
    upper = upper or (1.0,) * d
    per = (periodic,) * d if isinstance(periodic, bool) else tuple(periodic)
    mesh = Mesh(d, nel, lower, upper, per, mapping, amplitude)
    model = model or LinearAdvection(d, np.ones(d))
    return Discretization(mesh, p, model, bc, sparsified)


def random_euler_states(rng, m, d=1, gamma=1.4):
    model = Euler(d, gamma)
    rho = rng.uniform(0.1, 2.0, m)
    v = rng.uniform(-2.0, 2.0, (m, d))
    p = rng.uniform(0.05, 3.0, m)
    return model, model.from_primitive(rho, v, p)


@pytest.fixture(params=["numpy", "compiled"])
def backend(request):
    if request.param == "compiled" and not _kernels.available():
        pytest.skip("compiled kernels not built")
    prev = _kernels.set_backend(request.param)
    yield request.param
    _kernels.set_backend(prev)


@pytest.fixture
def rng():
    return np.random.default_rng(20240611)


__all__ = ["make_disc", "random_euler_states", "Burgers", "ACCEPTANCE_LINES"]


# one line per acceptance check, printed at the end of the session
ACCEPTANCE_LINES: list = []


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in ACCEPTANCE_LINES:
            terminalreporter.write_line(line)

import functools

import numpy as np
import pytest

from mabaxxx import BetheSystem, ModelParams

KAPPAS = dict(kappa_tilde=1.3 + 0.2j, kappa=0.7 - 0.4j,
              kappa_plus=0.9 + 0.3j, kappa_minus=1.1 - 0.5j)
RHO1 = 0.8 + 0.6j

ACCEPTANCE_LINES = {}


def make_params(n, seed=0, rho1=RHO1, **over):
    rng = np.random.default_rng(seed)
    theta = rng.normal(size=n) + 1j * rng.normal(size=n)
    kw = dict(KAPPAS)
    kw.update(over)
    return ModelParams(1.0, tuple(theta), kw["kappa_tilde"], kw["kappa"],
                       kw["kappa_plus"], kw["kappa_minus"], rho1)


@functools.lru_cache(maxsize=None)
def solved(n, seed=0):
    """Certified solutions of the default instance with ``n`` sites."""
    params = make_params(n, seed)
    bs = BetheSystem(params)
    sols, coverage = bs.find_all_solutions(seed=seed)
    return params, bs, sols, coverage


@pytest.fixture
def rng():
    return np.random.default_rng(1234)


def cplx(rng, size=None):
    return rng.normal(size=size) + 1j * rng.normal(size=size)


def pytest_terminal_summary(terminalreporter):
    if not ACCEPTANCE_LINES:
        return
    terminalreporter.section("acceptance criteria")
    for k in sorted(ACCEPTANCE_LINES):
        terminalreporter.write_line(ACCEPTANCE_LINES[k])

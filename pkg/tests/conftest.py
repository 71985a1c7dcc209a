import numpy as np
import pytest

from otoc_lab.operators import hermitian_eigendecompose
from otoc_lab.spin_model import SpinChainParams, build_hamiltonian, butterfly_operators, gibbs_state

INTEGRABLE = SpinChainParams(5, 0.0, 1.05)
NONINTEGRABLE = SpinChainParams(5, 0.5, 1.05)


class Chain:
    def __init__(self, params):
        self.params = params
        self.H = build_hamiltonian(params)
        self.eig = hermitian_eigendecompose(self.H)
        self.w, self.v = butterfly_operators(params)
        self.rho = gibbs_state(self.H, params.j_coupling)


_CACHE = {}


def chain(params):
    if params not in _CACHE:
        _CACHE[params] = Chain(params)
    return _CACHE[params]


@pytest.fixture(params=[INTEGRABLE, NONINTEGRABLE], ids=["integrable", "nonintegrable"])
def ref_chain(request):
    return chain(request.param)


@pytest.fixture
def rng():
    return np.random.default_rng(1234)


def random_hermitian(rng, dim):
    a = rng.normal(size=(dim, dim)) + 1j * rng.normal(size=(dim, dim))
    return (a + a.conj().T) / 2


def random_density(rng, dim):
    a = rng.normal(size=(dim, dim)) + 1j * rng.normal(size=(dim, dim))
    rho = a @ a.conj().T
    return rho / np.trace(rho).real


ACCEPTANCE_LINES = []


@pytest.fixture
def verdict():
    """Record one pass/fail line for an acceptance criterion, then assert it."""

    def record(number, ok, detail):
        line = f"criterion {number}: {'PASS' if ok else 'FAIL'} | {detail}"
        ACCEPTANCE_LINES.append(line)
        print(line)
        assert ok, line

    return record


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in sorted(ACCEPTANCE_LINES, key=lambda s: int(s.split()[1].rstrip(":"))):
            terminalreporter.write_line(line)

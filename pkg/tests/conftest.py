import numpy as np
import pytest

from raysearch import _kernels

ACCEPTANCE_RESULTS: dict[str, tuple[bool, str]] = {}


def random_state(rng, dim):
    z = rng.standard_normal(dim) + 1j * rng.standard_normal(dim)
    return z / np.linalg.norm(z)


@pytest.fixture
def rng():
    return np.random.default_rng(20260117)


@pytest.fixture(scope="session", autouse=True)
def warm_kernels():
    """Compile the numba kernels once so timed checks measure steady-state runtime."""
    psi = np.zeros(4, dtype=np.complex128)
    psi[0] = 1.0
    _kernels.fwht(psi)
    e1 = np.zeros(4, dtype=np.complex128)
    e1[1] = 1.0
    _kernels.plane_iterate(psi, psi, e1, complex(-1.0), np.eye(2, dtype=np.complex128),
                           0j, 1.0, 2, 2.0)
    hs = np.zeros((5, 4, 4), dtype=np.complex128)
    _kernels.rk4_tabulated(psi, hs, 0.1, 1e-12, 1e-6)


@pytest.fixture
def criterion(request):
    """Record a named acceptance criterion; the summary hook prints one line per entry."""
    def record(name, passed, detail=""):
        ACCEPTANCE_RESULTS[name] = (bool(passed), detail)
        return passed
    return record


def pytest_terminal_summary(terminalreporter):
    if not ACCEPTANCE_RESULTS:
        return
    terminalreporter.section("acceptance criteria")
    for name in sorted(ACCEPTANCE_RESULTS, key=lambda k: int(k.split()[0][1:])):
        ok, detail = ACCEPTANCE_RESULTS[name]
        terminalreporter.write_line(f"{'PASS' if ok else 'FAIL'}  {name}  {detail}")

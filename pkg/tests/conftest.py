"""Shared fixtures.  Full-resolution solves are session scoped and reused."""
import numpy as np
import pytest

from wptlab import manifold as mf
from wptlab.geodesic import generate_geodesic
from wptlab.measure import Density
from wptlab.qstep import run_scheme, scheme_diagnostics
from wptlab.scenarios import s1_default, t2_default
from wptlab.transport_pde import solve_parallel_pde

S1_QS = (8, 16, 32, 64)
T2_QS = (8, 16, 32)


@pytest.fixture(scope="session")
def s1():
    return s1_default()


@pytest.fixture(scope="session")
def t2():
    return t2_default()


@pytest.fixture(scope="session")
def s1_path_small(s1):
    _, mu0, phi0, _ = s1
    return generate_geodesic(mu0, phi0, T=100)


@pytest.fixture(scope="session")
def s1_pde_small(s1, s1_path_small):
    return solve_parallel_pde(s1_path_small, s1[3])


@pytest.fixture(scope="session")
def s1_paths(s1):
    """Reference path (T=1000) and its halved time step (T=2000)."""
    _, mu0, phi0, _ = s1
    return {T: generate_geodesic(mu0, phi0, T=T) for T in (1000, 2000)}


@pytest.fixture(scope="session")
def s1_pde(s1, s1_paths):
    return {T: solve_parallel_pde(p, s1[3]) for T, p in s1_paths.items()}


@pytest.fixture(scope="session")
def s1_schemes(s1, s1_paths):
    m, _, _, eta1 = s1
    g1 = mf.grad(m, eta1)
    return {Q: run_scheme(s1_paths[1000], g1, Q) for Q in S1_QS}


@pytest.fixture(scope="session")
def s1_diagnostics(s1_schemes):
    return {Q: scheme_diagnostics(out) for Q, out in s1_schemes.items() if Q <= 32}


@pytest.fixture(scope="session")
def t2_path(t2):
    _, mu0, phi0, _ = t2
    return generate_geodesic(mu0, phi0, T=1000, check_times=3)


@pytest.fixture(scope="session")
def t2_schemes(t2, t2_path):
    m, _, _, eta1 = t2
    g1 = mf.grad(m, eta1)
    return {Q: run_scheme(t2_path, g1, Q) for Q in T2_QS}


@pytest.fixture(scope="session")
def t2_diagnostics(t2_schemes):
    return {Q: scheme_diagnostics(out) for Q, out in t2_schemes.items()}


@pytest.fixture(scope="session")
def constant_s1_path():
    m = mf.circle(64)
    mu0 = Density.normalized(m, 1.0 + 0.3 * np.cos(m.nodes[0]))
    return generate_geodesic(mu0, np.zeros(m.shape), T=50)


_ACCEPTANCE_KEY = pytest.StashKey[list]()


@pytest.fixture
def acceptance_report(request, capsys):
    """Record a one-line verdict; all verdicts are repeated in the terminal summary."""
    lines = request.config.stash.setdefault(_ACCEPTANCE_KEY, [])

    def report(number, passed, detail):
        line = f"criterion {number:2d}: {'PASS' if passed else 'FAIL'}  {detail}"
        lines.append(line)
        with capsys.disabled():
            print(f"\n{line}")
        return passed

    return report


def pytest_terminal_summary(terminalreporter, config):
    lines = config.stash.get(_ACCEPTANCE_KEY, [])
    if lines:
        terminalreporter.section("acceptance criteria")
        for line in sorted(lines, key=lambda s: int(s.split()[1].rstrip(":"))):
            terminalreporter.write_line(line)

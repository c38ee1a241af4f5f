import numpy as np
import pytest

from latthom.environment import SELF_DUAL_LAW, ConductivityLaw, StreamKey, sample_environment
from latthom.lattice import TorusLattice

# lines printed at the end of the session by the acceptance suite
ACCEPTANCE_LINES: list[str] = []


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in ACCEPTANCE_LINES:
            terminalreporter.write_line(line)


@pytest.fixture
def acceptance():
    """Record one PASS/FAIL line; returns the verdict."""
    def record(criterion: str, passed: bool, detail: str) -> bool:
        line = f"{'PASS' if passed else 'FAIL'} [{criterion}] {detail}"
        ACCEPTANCE_LINES.append(line)
        print(line)
        return passed
    return record


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


def random_env(d, n, seed=0, law=SELF_DUAL_LAW):
    return sample_environment(law, TorusLattice(d, n), StreamKey(seed, 0, "tests"))


@pytest.fixture
def env2():
    return random_env(2, 16, seed=1, law=ConductivityLaw.two_point(1, 2, 0.5))


@pytest.fixture
def env3():
    return random_env(3, 8, seed=2)

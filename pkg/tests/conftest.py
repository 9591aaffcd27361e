import numpy as np
import pytest

from pluridyn.endomorphism import perturbed_power_map, power_map
from pluridyn.regions import fiber_cone

# criterion number -> (passed, detail), filled by test_acceptance
ACCEPTANCE = {}


@pytest.fixture(scope="session")
def f_pert():
    return perturbed_power_map(0.05)


@pytest.fixture(scope="session")
def f_power():
    return power_map(2, 2)


@pytest.fixture(scope="session")
def region():
    return fiber_cone(0.2)


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


def pytest_terminal_summary(terminalreporter):
    if not ACCEPTANCE:
        return
    terminalreporter.section("acceptance criteria")
    for num in sorted(ACCEPTANCE):
        ok, detail = ACCEPTANCE[num]
        terminalreporter.write_line(f"{'PASS' if ok else 'FAIL'} criterion {num:2d}: {detail}")

import numpy as np
import pytest

from cfiot.instance import make_instance
from cfiot.netgen import LargeScale

ACCEPTANCE_LINES = []


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in ACCEPTANCE_LINES:
            terminalreporter.write_line(line)


@pytest.fixture
def report():
    """Record one PASS/FAIL line per acceptance criterion."""
    def _report(number, passed, detail):
        line = f"criterion {number:>2}: {'PASS' if passed else 'FAIL'}  {detail}"
        print(line)
        ACCEPTANCE_LINES.append(line)
    return _report


@pytest.fixture
def small_instance():
    return make_instance(8, 4, 3, 500.0, rng_seed=11, powers_w=(0.1, 0.1, 0.1))


def collocated(beta_k, n_aps):
    """Large-scale fading with every AP seeing user k at the same beta_k."""
    beta = np.tile(np.asarray(beta_k, dtype=float), (n_aps, 1))
    return LargeScale(beta=beta, shadow_z=np.zeros_like(beta))

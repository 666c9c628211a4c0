import numpy as np
import pytest

from lpreduce.systems import builtin_system

MECHANICAL = ("so2-bead", "so3-two-vector")


@pytest.fixture(params=MECHANICAL)
def system(request):
    return builtin_system(request.param)


@pytest.fixture
def rng():
    return np.random.default_rng(1234)


_LINES = pytest.StashKey[list]()


@pytest.fixture(scope="session")
def acceptance_log(request):
    """Collects one summary line per acceptance criterion; printed at the end of the run."""
    return request.config.stash.setdefault(_LINES, [])


def pytest_terminal_summary(terminalreporter, config):
    lines = config.stash.get(_LINES, [])
    if lines:
        terminalreporter.section("acceptance criteria")
        for line in sorted(lines):
            terminalreporter.write_line(line)

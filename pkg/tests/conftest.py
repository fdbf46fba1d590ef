import numpy as np
import pytest

from charfol.hammer import HammerSpec, search_slowdown


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


@pytest.fixture(scope="session")
def canonical_hammer():
    """Passing hammer between 0 and (1/2, 0, 0, 0) at eps = 0.05, with its report."""
    spec = HammerSpec.from_points([0, 0, 0, 0], [0.5, 0, 0, 0], 0.05)
    return search_slowdown(spec)


_ACCEPTANCE = pytest.StashKey[list]()


def pytest_configure(config):
    config.stash[_ACCEPTANCE] = []


@pytest.fixture
def acceptance_log(request):
    """Record one ``criterion N: PASS/FAIL`` line; all lines are printed in the summary."""
    lines = request.config.stash[_ACCEPTANCE]

    def log(number, passed, text):
        line = f"criterion {number:>2}: {'PASS' if passed else 'FAIL'}  {text}"
        lines.append((number, line))
        print(line)

    return log


def pytest_terminal_summary(terminalreporter, exitstatus, config):
    lines = config.stash.get(_ACCEPTANCE, [])
    if lines:
        terminalreporter.section("acceptance criteria")
        for _, line in sorted(lines):
            terminalreporter.write_line(line)

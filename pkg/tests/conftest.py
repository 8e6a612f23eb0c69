import numpy as np
import pytest

from eulera.grid import make_grid

_ACCEPTANCE = pytest.StashKey[dict]()


@pytest.fixture(scope="session")
def grid_32x64():
    return make_grid(2 * np.pi, 32, 64)


@pytest.fixture(scope="session")
def grid_small():
    return make_grid(2 * np.pi, 16, 24)


@pytest.fixture(scope="session")
def acceptance_log(request):
    """criterion number -> (passed, detail); printed at the end of the run."""
    return request.config.stash.setdefault(_ACCEPTANCE, {})


def pytest_terminal_summary(terminalreporter, exitstatus, config):
    log = config.stash.get(_ACCEPTANCE, {})
    if not log:
        return
    terminalreporter.section("acceptance criteria")
    for n in sorted(log):
        ok, detail = log[n]
        terminalreporter.write_line(f"criterion {n:>2}: {'PASS' if ok else 'FAIL'}  {detail}")

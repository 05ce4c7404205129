import numpy as np
import pytest

from velfree_nes.game import builtin_connectivity_game, game_constants
from velfree_nes.equilibrium import solve_quadratic


@pytest.fixture(scope="session")
def game5():
    return builtin_connectivity_game()


@pytest.fixture(scope="session")
def constants5(game5):
    return game_constants(game5)


@pytest.fixture(scope="session")
def xstar5(game5):
    return solve_quadratic(game5).x_star


@pytest.fixture
def rng():
    return np.random.default_rng(20240611)


# criterion number -> [title, all parts passed]
_CRITERIA = {}


def pytest_configure(config):
    config.addinivalue_line("markers", "criterion(n, title): acceptance criterion number and title")


@pytest.hookimpl(hookwrapper=True)
def pytest_runtest_makereport(item, call):
    outcome = yield
    report = outcome.get_result()
    mark = item.get_closest_marker("criterion")
    if mark is None:
        return
    if report.when == "call" or (report.when == "setup" and not report.passed):
        entry = _CRITERIA.setdefault(mark.kwargs["n"], [mark.kwargs["title"], True])
        entry[1] = entry[1] and report.passed


def pytest_terminal_summary(terminalreporter, exitstatus, config):
    if not _CRITERIA:
        return
    terminalreporter.section("acceptance criteria")
    for n in sorted(_CRITERIA):
        title, ok = _CRITERIA[n]
        terminalreporter.write_line(f"criterion {n:2d}: {'PASS' if ok else 'FAIL'}  {title}")

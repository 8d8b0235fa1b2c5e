import numpy as np
import pytest
from hypothesis import settings

from burgers_pinn import init_network

# timing-based deadlines flake while long training runs share the machine
settings.register_profile("default", deadline=None)
settings.load_profile("default")

_CRITERIA: dict[str, list[bool]] = {}
_MEASURED: list[str] = []


def pytest_configure(config):
    config.addinivalue_line("markers", "slow: long training runs (still run by default)")
    config.addinivalue_line("markers", "criterion(n): acceptance criterion number")


def pytest_runtest_logreport(report):
    if report.when == "teardown":  # captured output of all phases is attached by now
        _MEASURED.extend(line for line in report.capstdout.splitlines()
                         if line.startswith("[acceptance]"))
    if report.when == "call" or (report.when == "setup" and report.failed):
        for mark in getattr(report, "criteria", []):
            _CRITERIA.setdefault(mark, []).append(report.passed)


@pytest.hookimpl(hookwrapper=True)
def pytest_runtest_makereport(item, call):
    outcome = yield
    rep = outcome.get_result()
    rep.criteria = [str(m.args[0]) for m in item.iter_markers("criterion")]


def pytest_terminal_summary(terminalreporter):
    if not _CRITERIA:
        return
    terminalreporter.section("acceptance criteria")
    for line in _MEASURED:
        terminalreporter.write_line(line)
    for key in sorted(_CRITERIA, key=int):
        ok = all(_CRITERIA[key])
        terminalreporter.write_line(f"criterion {key}: {'PASS' if ok else 'FAIL'}")


@pytest.fixture
def rng():
    return np.random.default_rng(1234)


@pytest.fixture
def small_net():
    return init_network([2, 6, 5, 1], "tanh", seed=3)

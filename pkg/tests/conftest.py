import numpy as np
import pytest

from eotransducer.device import reference_device
from eotransducer.physics import TWO_PI

# CODATA 2018 exact/recommended values, typed in independently of scipy
HBAR = 1.054571817e-34
KB = 1.380649e-23
H = 6.62607015e-34
C_LIGHT = 299792458.0


@pytest.fixture
def dev():
    return reference_device()


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


def mhz(x):
    return TWO_PI * x * 1e6


_CRITERIA = []


def pytest_runtest_logreport(report):
    crit = dict(report.user_properties).get("criterion")
    if crit is None:
        return
    failed = report.failed
    if report.when == "call" or failed:
        _CRITERIA.append((crit, "FAIL" if failed else "PASS"))


def pytest_terminal_summary(terminalreporter):
    if not _CRITERIA:
        return
    terminalreporter.section("acceptance criteria")
    for crit, status in _CRITERIA:
        terminalreporter.write_line(f"{status}  {crit}")

import sys

import numpy as np
import pytest

from deepfcnn.grid import GridSpec, unit_square


@pytest.fixture
def spec100():
    return unit_square(100)


@pytest.fixture
def rng():
    return np.random.default_rng(20240518)


def square(n, h=1.0):
    return GridSpec(0.0, n * h, 0.0, n * h, n, n)


def pytest_terminal_summary(terminalreporter):
    module = sys.modules.get("test_acceptance")
    if module is None or not module.RESULTS:
        return
    terminalreporter.section("acceptance criteria")
    for name, passed, detail in sorted(module.RESULTS, key=lambda r: int(r[0].split()[0][1:])):
        terminalreporter.write_line(f"{'PASS' if passed else 'FAIL'}  {name}  {detail}")

import numpy as np
import pytest

from dfdl.kernels import _numba, _numpy

ACCEPTANCE_LINES = []


@pytest.fixture
def rng():
    return np.random.default_rng(20150414)


@pytest.fixture(params=["numpy", "numba"])
def impl(request):
    return {"numpy": _numpy, "numba": _numba}[request.param]


def unit_columns(rng, d, k):
    D = rng.standard_normal((d, k))
    return D / np.linalg.norm(D, axis=0)


@pytest.fixture
def report():
    """Record one acceptance line; printed in the terminal summary."""

    def _report(number, ok, detail):
        ACCEPTANCE_LINES.append(f"[{'PASS' if ok else 'FAIL'}] criterion {number}: {detail}")
        return ok

    return _report


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in ACCEPTANCE_LINES:
            terminalreporter.write_line(line)

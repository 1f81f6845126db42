import math

import pytest

from mrcmix.core import constant_C
from mrcmix.params import SystemParams

_ACCEPTANCE_LINES = []


def threshold_for_B(params, B):
    """Linear threshold at which ``C d^2 T^(2/alpha)`` equals ``B``."""
    C = constant_C(params.lambda_p, params.alpha)
    return (B / (C * params.d**2)) ** (params.alpha / 2.0)


@pytest.fixture
def base_params():
    return SystemParams(lam=1e-4, p=1.0, alpha=4.0, d=10.0)


@pytest.fixture(scope="session")
def acceptance_log():
    return _ACCEPTANCE_LINES


def pytest_terminal_summary(terminalreporter):
    if _ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in _ACCEPTANCE_LINES:
            terminalreporter.write_line(line)


def db(x):
    return 10.0 ** (x / 10.0)


def rel_err(a, b):
    return abs(a - b) / max(abs(b), 1e-300)


__all__ = ["threshold_for_B", "db", "rel_err", "math"]

import math

import numpy as np
import pytest

from flatlag.builders import build_twisted_legendre
from flatlag.functions import ScalarFunction
from flatlag.legendre import LegendreCoefficients

SQRT3 = math.sqrt(3.0)


def scenario_coefficients():
    """n = 3, alpha = beta = gamma = sqrt(3), a_3(s) = 0.2 sin(s)."""
    return LegendreCoefficients(SQRT3, SQRT3, SQRT3, (ScalarFunction.sin(0.2),), 3)


def scenario_b():
    """b(t) = 1 + 0.1 cos(t)."""
    return ScalarFunction.constant(1.0) + ScalarFunction.cos(0.1)


SCENARIO_DOMAIN = [[0.0, 2 * math.pi], [-0.2, 0.2], [-0.2, 0.2]]


@pytest.fixture(scope="session")
def scenario_sampler():
    return build_twisted_legendre(scenario_coefficients(), scenario_b(), SCENARIO_DOMAIN)


@pytest.fixture
def rng():
    return np.random.default_rng(20240611)


ACCEPTANCE_LINES: list[str] = []


@pytest.fixture
def criterion():
    """Record one PASS/FAIL line for an acceptance criterion, then assert it."""

    def record(number: int, ok: bool, detail: str):
        line = f"criterion {number:>2}: {'PASS' if ok else 'FAIL'}  {detail}"
        ACCEPTANCE_LINES.append(line)
        print(line)
        assert ok, line

    return record


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in sorted(ACCEPTANCE_LINES):
            terminalreporter.write_line(line)

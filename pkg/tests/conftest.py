from __future__ import annotations

import numpy as np
import pytest
from hypothesis import HealthCheck, settings

from pencilspec.coefficients import CoefficientPair

settings.register_profile(
    "pencil", deadline=None, max_examples=25, suppress_health_check=[HealthCheck.too_slow], derandomize=True
)
settings.load_profile("pencil")


@pytest.fixture(scope="session")
def free_pair():
    return CoefficientPair.from_functions(0.0, 0.0)


@pytest.fixture(scope="session")
def cos_pair():
    return CoefficientPair.from_functions(lambda x: 0.3 * np.cos(x), 0.0)


@pytest.fixture(scope="session")
def unit_pair():
    return CoefficientPair.from_functions(1.0, 0.0)


ACCEPTANCE_LINES: list[str] = []


@pytest.fixture(scope="session")
def report():
    """Record one pass/fail line per acceptance criterion for the terminal summary."""

    def add(n: int, ok: bool, detail: str) -> None:
        ACCEPTANCE_LINES.append(f"{'PASS' if ok else 'FAIL'} criterion {n}: {detail}")

    return add


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in sorted(ACCEPTANCE_LINES, key=lambda s: int(s.split()[2].rstrip(":"))):
            terminalreporter.write_line(line)

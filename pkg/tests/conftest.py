from __future__ import annotations

import pytest

from htb.model import HtbParams, RiskPremiumSpec


@pytest.fixture
def params():
    """Coupled configuration used throughout the measure-change checks."""
    return HtbParams(sigma=0.3, kappa=0.5, rho=0.5, gamma=0.05, alpha=1.0, x_bar=0.0, beta=0.5,
                     r=0.01, lambda0=2.0, s0=100.0, x0=0.0, lambda_max=50.0)


@pytest.fixture
def premium():
    return RiskPremiumSpec.constant(0.1)


ACCEPTANCE_LINES: list[str] = []


@pytest.fixture(scope="session")
def acceptance_log():
    """Collects one ``PASS``/``FAIL`` line per acceptance criterion."""
    return ACCEPTANCE_LINES


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in ACCEPTANCE_LINES:
            terminalreporter.write_line(line)

import pytest

from volterra_rates import (
    BrownianDriver,
    ConstantTheta,
    ExponentialKernel,
    RateModel,
)

# (criterion, description, passed, detail) rows filled in by test_acceptance.py
ACCEPTANCE_RESULTS = []


@pytest.fixture
def canonical_model():
    """theta = 6%, phi(x) = e^{-x}, Brownian driver."""
    return RateModel(ConstantTheta(0.06), ExponentialKernel(alpha=1.0), BrownianDriver())


def pytest_terminal_summary(terminalreporter):
    if not ACCEPTANCE_RESULTS:
        return
    terminalreporter.section("acceptance criteria")
    for number, name, passed, detail in sorted(ACCEPTANCE_RESULTS, key=lambda r: r[0]):
        status = "PASS" if passed else "FAIL"
        terminalreporter.write_line(f"[{status}] criterion {number:>2}: {name} ({detail})")

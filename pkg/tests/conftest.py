import warnings

import pytest

from gauge_me.rates import PerturbativeValidityWarning

ACCEPTANCE_LINES: list[str] = []


@pytest.fixture(autouse=True)
def _quiet_perturbative_warning():
    # presets with gamma * delta_t = 0.3 warn by design; tests that check the
    # warning use pytest.warns, which records regardless of this filter
    with warnings.catch_warnings():
        warnings.simplefilter("ignore", PerturbativeValidityWarning)
        yield


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in ACCEPTANCE_LINES:
            terminalreporter.write_line(line)

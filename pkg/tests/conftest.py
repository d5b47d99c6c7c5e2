import pytest

from histcalc import fixtures

# filled by test_acceptance.py, printed once at the end of the run
ACCEPTANCE_LINES: list = []


@pytest.fixture(scope="session")
def models():
    """Fixture models parsed from their .lagr sources, built once per session."""
    return {name: fixtures.load(name) for name in fixtures.names()}


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in ACCEPTANCE_LINES:
            terminalreporter.write_line(line)

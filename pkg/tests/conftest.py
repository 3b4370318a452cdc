import pytest

from instances import DESK_SPEC, three_state_model
from sleepcmdp.harness import generate_instance


@pytest.fixture(scope="session")
def desk():
    return generate_instance(DESK_SPEC)


@pytest.fixture
def model3():
    return three_state_model()


ACCEPTANCE_LINES = []


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in ACCEPTANCE_LINES:
            terminalreporter.write_line(line)

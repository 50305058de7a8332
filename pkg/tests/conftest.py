import pytest

from coherent_receiver import BinaryEnsemble

ACCEPTANCE_LINES: list[str] = []


@pytest.fixture
def ens025():
    return BinaryEnsemble.from_mean_photons(0.25, 0.5)


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in ACCEPTANCE_LINES:
            terminalreporter.write_line(line)

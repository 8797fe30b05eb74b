import pytest

from fogplace import InstanceSpec, generate, sweep_rates
from fogplace.scenarios import run_sweep


@pytest.fixture(scope="session")
def default_instance():
    return generate(InstanceSpec())


@pytest.fixture(scope="session")
def default_sweep(default_instance):
    return run_sweep(InstanceSpec(), rates=sweep_rates(), instance=default_instance)


def pytest_terminal_summary(terminalreporter):
    from test_acceptance import RESULTS

    if RESULTS:
        terminalreporter.section("acceptance criteria")
        for line in RESULTS:
            terminalreporter.write_line(line)

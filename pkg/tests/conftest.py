from pathlib import Path

import pytest

from noma_v2i.scenario import reference_scenario

CONFIG_DIR = Path(__file__).resolve().parent.parent / "configs"


@pytest.fixture(scope="session")
def cfg():
    return reference_scenario()


@pytest.fixture(scope="session")
def tiny_cfg():
    # small enough to enumerate every deterministic policy
    return reference_scenario(T=2, N=1, beta1=2e-8, beta2=2e-8,
                          power_set=((0.3, 0.7), (0.8, 0.2)),
                          rate_set_1=(0, 1), rate_set_2=(0, 1))


ACCEPTANCE_LINES: list[str] = []


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in ACCEPTANCE_LINES:
            terminalreporter.write_line(line)

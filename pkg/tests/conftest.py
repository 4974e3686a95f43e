import pytest

from magsense.config import default_config


def quiet(cfg):
    cfg["noise"]["gaussian_sd"] = 0.0
    cfg["noise"]["quant_step"] = 0.0
    return cfg


@pytest.fixture
def noiseless():
    return lambda scenario: quiet(default_config(scenario))


ACCEPTANCE_LINES: list[str] = []


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in ACCEPTANCE_LINES:
            terminalreporter.write_line(line)

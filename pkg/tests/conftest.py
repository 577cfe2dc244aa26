import pathlib

import pytest

from sipls.scenario import default_config

ROOT = pathlib.Path(__file__).resolve().parent.parent
DEFAULT_CFG = ROOT / "configs" / "default.cfg"


@pytest.fixture
def cfg():
    return default_config()


@pytest.fixture
def cfg_path():
    return DEFAULT_CFG


ACCEPTANCE = {}


def record(criterion, ok, detail):
    line = f"{'PASS' if ok else 'FAIL'} criterion {criterion}: {detail}"
    ACCEPTANCE[criterion] = line
    print(line)
    return ok


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE:
        terminalreporter.section("acceptance criteria")
        for k in sorted(ACCEPTANCE):
            terminalreporter.write_line(ACCEPTANCE[k])

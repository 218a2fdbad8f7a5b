import os
from pathlib import Path

import pytest
from hypothesis import HealthCheck, settings

settings.register_profile("default", max_examples=60, deadline=None,
                          suppress_health_check=[HealthCheck.too_slow])
settings.register_profile("ci", max_examples=200, deadline=None)
settings.load_profile(os.environ.get("HYPOTHESIS_PROFILE", "default"))

DATA = Path(__file__).resolve().parents[1] / "data"


@pytest.fixture(scope="session")
def data_dir() -> Path:
    return DATA


@pytest.fixture(scope="session")
def form25():
    from wlab import ingest

    return ingest.load(DATA / "form_25_4_0_0.txt")


@pytest.fixture(scope="session")
def form49():
    from wlab import ingest

    return ingest.load(DATA / "form_49_9_0_0.txt")


@pytest.fixture(scope="session")
def basis25():
    from wlab import ingest, mean_values

    return mean_values.build_basis(ingest.load_space(DATA, 25, 4), 2)


# one line per acceptance criterion, printed after the run
ACCEPTANCE_LINES: dict[int, str] = {}


@pytest.fixture
def criterion():
    def record(number: int, passed: bool, detail: str):
        line = f"criterion {number:2d}: {'PASS' if passed else 'FAIL'}  {detail}"
        ACCEPTANCE_LINES[number] = line
        print(line)
        return passed

    return record


def pytest_terminal_summary(terminalreporter):
    if not ACCEPTANCE_LINES:
        return
    terminalreporter.section("acceptance criteria")
    for k in sorted(ACCEPTANCE_LINES):
        terminalreporter.write_line(ACCEPTANCE_LINES[k])

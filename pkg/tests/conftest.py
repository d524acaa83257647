import pytest

from fraclab.constants import load_constants
from fraclab.toy.complexity import exact_K
from fraclab.toy.machine import ToyMachine

# acceptance results, filled by tests/test_acceptance.py and echoed at the end of the run
CRITERIA: dict[int, tuple[bool, str]] = {}


def record_criterion(k: int, ok: bool, detail: str) -> None:
    CRITERIA[k] = (ok, detail)
    print(f"criterion {k}: {'PASS' if ok else 'FAIL'} {detail}")


def pytest_terminal_summary(terminalreporter):
    if not CRITERIA:
        return
    terminalreporter.section("acceptance criteria")
    for k in sorted(CRITERIA):
        ok, detail = CRITERIA[k]
        terminalreporter.write_line(f"criterion {k}: {'PASS' if ok else 'FAIL'} {detail}")


@pytest.fixture(scope="session")
def constants():
    return load_constants()


@pytest.fixture(scope="session")
def table16():
    return exact_K(ToyMachine(16))


@pytest.fixture(scope="session")
def table22():
    return exact_K(ToyMachine(22))

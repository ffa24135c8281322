import sys
from pathlib import Path

import pytest

sys.path.insert(0, str(Path(__file__).parent))

from convdyn import _kernels  # noqa: E402

DATA = Path(__file__).parent / "data"


@pytest.fixture(params=_kernels.available_backends())
def backend(request):
    return _kernels.get_backend(request.param)


@pytest.fixture
def data_dir():
    return DATA


_acceptance: list[tuple[str, str, float]] = []


def pytest_runtest_logreport(report):
    if "test_acceptance.py" not in report.nodeid:
        return
    if report.when == "call" or (report.when == "setup" and not report.passed):
        _acceptance.append((report.nodeid.split("::")[-1], report.outcome, report.duration))


def pytest_terminal_summary(terminalreporter):
    if not _acceptance:
        return
    terminalreporter.section("acceptance criteria")
    for name, outcome, duration in _acceptance:
        status = "PASS" if outcome == "passed" else "FAIL"
        terminalreporter.write_line(f"{status}  {name}  ({duration:.2f}s)")

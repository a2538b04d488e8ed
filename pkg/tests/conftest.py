import sys
from pathlib import Path

import pytest

sys.path.insert(0, str(Path(__file__).parent))

CRITERIA = {
    1: "indicator oracle equivalence",
    2: "rule-catalogue conformance",
    3: "clustering correctness",
    4: "statistical kernel",
    5: "end-to-end planted effect",
    6: "end-to-end null calibration",
    7: "partition invariant",
    8: "OBV degeneracy regression",
    9: "determinism",
}

_outcomes: dict[int, list[bool]] = {}
_details: dict[int, list[str]] = {}


def pytest_configure(config):
    config.addinivalue_line("markers", "criterion(n): acceptance criterion number")


@pytest.fixture
def detail(request):
    """Record a one-line measurement shown in the acceptance summary."""
    marker = request.node.get_closest_marker("criterion")
    num = marker.args[0] if marker else None

    def note(text: str) -> None:
        if num is not None:
            _details.setdefault(num, []).append(text)

    return note


def pytest_runtest_logreport(report):
    marker = next((m for m in getattr(report, "_criterion_marks", ())), None)
    if marker is None:
        return
    if report.when == "call" or report.outcome in ("failed", "skipped") and report.when == "setup":
        _outcomes.setdefault(marker, []).append(report.outcome == "passed")


@pytest.hookimpl(hookwrapper=True)
def pytest_runtest_makereport(item, call):
    outcome = yield
    report = outcome.get_result()
    marker = item.get_closest_marker("criterion")
    if marker is not None:
        report._criterion_marks = (marker.args[0],)


def pytest_terminal_summary(terminalreporter):
    if not _outcomes:
        return
    terminalreporter.section("acceptance criteria")
    for num, name in CRITERIA.items():
        results = _outcomes.get(num)
        if results is None:
            status = "NOT RUN"
        else:
            status = "PASS" if all(results) else "FAIL"
        line = f"criterion {num} ({name}): {status}"
        if _details.get(num):
            line += "  [" + "; ".join(_details[num]) + "]"
        terminalreporter.write_line(line)

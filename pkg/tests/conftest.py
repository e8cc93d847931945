import pathlib
import sys

import pytest

sys.path.insert(0, str(pathlib.Path(__file__).parent))

_CRITERIA: dict[int, dict] = {}


def pytest_configure(config):
    config.addinivalue_line("markers", "criterion(n, title): acceptance criterion number and title")


@pytest.fixture
def measured(request):
    """Dict whose contents are shown next to the criterion's PASS/FAIL line."""
    marker = request.node.get_closest_marker("criterion")
    if marker is None:
        return {}
    return _CRITERIA.setdefault(marker.args[0], {"title": marker.args[1], "notes": {}})["notes"]


def pytest_runtest_makereport(item, call):
    marker = item.get_closest_marker("criterion")
    if marker is None:
        return
    entry = _CRITERIA.setdefault(marker.args[0], {"title": marker.args[1], "notes": {}})
    if call.when == "call" or call.excinfo is not None:
        ok = call.excinfo is None
        entry["ok"] = entry.get("ok", True) and ok


def pytest_terminal_summary(terminalreporter):
    if not _CRITERIA:
        return
    tr = terminalreporter
    tr.section("acceptance criteria")
    for n in sorted(_CRITERIA):
        entry = _CRITERIA[n]
        status = {True: "PASS", False: "FAIL", None: "NOT RUN"}[entry.get("ok")]
        notes = "  ".join(f"{k}={v}" for k, v in entry["notes"].items())
        tr.write_line(f"criterion {n} [{status}] {entry['title']}" + (f"  ({notes})" if notes else ""))

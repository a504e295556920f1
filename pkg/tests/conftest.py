from __future__ import annotations

import pytest

_criteria: dict[str, tuple[str, str]] = {}


def pytest_configure(config):
    config.addinivalue_line("markers", "criterion(cid, text): acceptance criterion covered by the test")


def pytest_runtest_logreport(report):
    if report.when != "call" and not (report.when == "setup" and report.outcome != "passed"):
        return
    item_marker = getattr(report, "criterion", None)
    if item_marker is None:
        return
    cid, text = item_marker
    status = "PASS" if report.outcome == "passed" else "FAIL"
    _criteria[cid] = (status, text)


@pytest.hookimpl(hookwrapper=True)
def pytest_runtest_makereport(item, call):
    outcome = yield
    report = outcome.get_result()
    marker = item.get_closest_marker("criterion")
    if marker is not None:
        report.criterion = tuple(marker.args)


def pytest_terminal_summary(terminalreporter):
    if not _criteria:
        return
    terminalreporter.section("acceptance criteria")
    for cid in sorted(_criteria, key=lambda c: int(c.removeprefix("AC"))):
        status, text = _criteria[cid]
        terminalreporter.write_line(f"{status} {cid}: {text}")

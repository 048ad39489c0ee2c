"""Collects per-criterion outcomes from tests marked ``criterion`` and prints a summary."""

from collections import OrderedDict

import pytest

_results = OrderedDict()


def pytest_configure(config):
    config.addinivalue_line("markers", "criterion(num, label): acceptance criterion a test belongs to")


@pytest.hookimpl(hookwrapper=True)
def pytest_runtest_makereport(item, call):
    outcome = yield
    rep = outcome.get_result()
    mark = item.get_closest_marker("criterion")
    if mark is None:
        return
    if rep.when != "call" and not rep.failed:
        return
    num, label = mark.args
    entry = _results.setdefault((num, label), {"passed": True, "tests": []})
    if hasattr(rep, "wasxfail"):
        status = "FAIL (recorded as expected failure)"
        entry["passed"] = False
    elif rep.passed:
        status = "PASS"
    else:
        status = "FAIL"
        entry["passed"] = False
    entry["tests"].append((item.name, status))


def pytest_terminal_summary(terminalreporter):
    if not _results:
        return
    tr = terminalreporter
    tr.section("acceptance criteria")
    for (num, label), entry in sorted(_results.items(), key=lambda kv: str(kv[0][0]).zfill(4)):
        verdict = "PASS" if entry["passed"] else "FAIL"
        tr.write_line(f"criterion {num:>3}: {verdict}  {label}")
        if not entry["passed"]:
            for name, status in entry["tests"]:
                if status != "PASS":
                    tr.write_line(f"               {status}: {name}")

from __future__ import annotations

import sys
from pathlib import Path

import pytest

sys.path.insert(0, str(Path(__file__).parent))

from oracles import fuzz_corpus, laminar_corpus  # noqa: E402

_results: dict = {}


@pytest.hookimpl(hookwrapper=True)
def pytest_runtest_makereport(item, call):
    outcome = yield
    report = outcome.get_result()
    marker = item.get_closest_marker("acceptance")
    if marker is None:
        return
    if report.when == "call" or (report.when == "setup" and report.outcome != "passed"):
        entry = _results.setdefault(marker.args[0], [])
        entry.append((item.name, report.outcome))


def pytest_terminal_summary(terminalreporter):
    if not _results:
        return
    terminalreporter.section("acceptance criteria")
    for number in sorted(_results):
        runs = _results[number]
        ok = all(outcome == "passed" for _, outcome in runs)
        failed = [name for name, outcome in runs if outcome != "passed"]
        line = f"criterion {number:>2}: {'PASS' if ok else 'FAIL'} ({len(runs)} checks)"
        if failed:
            line += "  failing: " + ", ".join(failed)
        terminalreporter.write_line(line)


@pytest.fixture(scope="session")
def corpus():
    return fuzz_corpus(200)


@pytest.fixture(scope="session")
def laminar_instances():
    return laminar_corpus(60)

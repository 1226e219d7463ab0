import os
import sys

sys.path.insert(0, os.path.dirname(__file__))

# nodeid -> (criterion number, title), and number -> [title, all passed]
_marks: dict[str, tuple] = {}
_criteria: dict[int, list] = {}


def pytest_collection_modifyitems(items):
    for item in items:
        mark = item.get_closest_marker("criterion")
        if mark is not None:
            _marks[item.nodeid] = tuple(mark.args)


def pytest_runtest_logreport(report):
    if report.nodeid not in _marks:
        return
    if report.when != "call" and report.outcome == "passed":
        return
    number, title = _marks[report.nodeid]
    entry = _criteria.setdefault(number, [title, True])
    entry[1] = entry[1] and report.outcome == "passed"


def pytest_terminal_summary(terminalreporter):
    if not _criteria:
        return
    terminalreporter.section("acceptance criteria")
    for number in sorted(_criteria):
        title, ok = _criteria[number]
        terminalreporter.write_line(f"{'PASS' if ok else 'FAIL'}  criterion {number}: {title}")

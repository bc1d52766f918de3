import re

_CRITERIA = {}


def pytest_runtest_logreport(report):
    m = re.search(r"test_acceptance\.py::test_(c\d{2})_([a-z0-9_]+)", report.nodeid)
    if not m or report.when != "call":
        return
    key = (m.group(1), m.group(2))
    _CRITERIA[key] = report.outcome


def pytest_terminal_summary(terminalreporter):
    if not _CRITERIA:
        return
    terminalreporter.write_sep("-", "acceptance criteria")
    for (code, name), outcome in sorted(_CRITERIA.items()):
        label = "PASS" if outcome == "passed" else "FAIL"
        terminalreporter.write_line(f"{code} {name.replace('_', '-')}: {label}")

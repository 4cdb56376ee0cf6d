"""Collects acceptance-criterion outcomes and prints one line per criterion."""

_OUTCOMES = {}


def pytest_runtest_logreport(report):
    marker = _MARKERS.get(report.nodeid)
    if marker is None:
        return
    if report.when == "call" or (report.when == "setup" and report.outcome != "passed"):
        detail = dict(report.user_properties).get("detail", "")
        _OUTCOMES[report.nodeid] = (marker, report.outcome == "passed", detail)


_MARKERS = {}


def pytest_collection_modifyitems(items):
    for item in items:
        mark = item.get_closest_marker("criterion")
        if mark is not None:
            _MARKERS[item.nodeid] = mark.args


def pytest_terminal_summary(terminalreporter):
    if not _OUTCOMES:
        return
    terminalreporter.section("acceptance criteria")
    ordered = sorted(_OUTCOMES.values(), key=lambda v: int(v[0][0]))
    for (number, title), passed, detail in ordered:
        status = "PASS" if passed else "FAIL"
        terminalreporter.write_line(f"criterion {number:>2} {status}  {title}")
        for line in detail.splitlines():
            terminalreporter.write_line(f"               {line}")

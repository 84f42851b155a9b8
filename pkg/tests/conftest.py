"""Prints one pass/fail line per acceptance criterion after the run."""

_results: dict[str, tuple[str, str]] = {}


def pytest_runtest_logreport(report):
    if "acceptance" not in report.keywords:
        return
    if report.when == "call" or (report.when == "setup" and report.outcome != "passed"):
        title = report.nodeid.rsplit("::", 1)[-1]
        outcome = "PASS" if report.passed else "FAIL"
        _results[report.nodeid] = (title, outcome)


def pytest_terminal_summary(terminalreporter):
    if not _results:
        return
    terminalreporter.section("acceptance criteria")
    for title, outcome in _results.values():
        terminalreporter.write_line(f"{outcome}  {title}")
    passed = sum(o == "PASS" for _, o in _results.values())
    terminalreporter.write_line(f"{passed}/{len(_results)} criteria met")

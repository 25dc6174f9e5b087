import os
import sys

from hypothesis import settings

sys.path.insert(0, os.path.dirname(__file__))

settings.register_profile("default", deadline=None, max_examples=100)
settings.load_profile("default")


# one summary line per acceptance criterion, whatever the verbosity
_CRITERIA: dict = {}


def pytest_runtest_logreport(report):
    if report.when != "call" or "test_acceptance.py::test_criterion_" not in report.nodeid:
        return
    name = report.nodeid.split("::")[-1][len("test_criterion_"):]
    num, _, label = name.partition("_")
    props = dict(report.user_properties)
    _CRITERIA[int(num)] = ("PASS" if report.passed else "FAIL", label.replace("_", " "),
                           props.get("measured", ""))


def pytest_terminal_summary(terminalreporter):
    if not _CRITERIA:
        return
    terminalreporter.section("acceptance criteria")
    for num in sorted(_CRITERIA):
        verdict, label, measured = _CRITERIA[num]
        extra = f" [{measured}]" if measured else ""
        terminalreporter.write_line(f"criterion {num}: {verdict}  {label}{extra}")

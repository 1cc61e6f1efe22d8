import pytest

_CRITERIA = []


@pytest.fixture
def criterion(request):
    """Attach a one-line measurement to the running acceptance test."""

    def note(text):
        request.node.user_properties.append(("criterion", text))
        print(text)

    return note


def pytest_runtest_logreport(report):
    if "test_acceptance" not in report.nodeid:
        return
    if report.when == "call" or (report.when == "setup" and not report.passed):
        notes = "; ".join(v for k, v in report.user_properties if k == "criterion")
        name = report.nodeid.split("::")[-1]
        status = "PASS" if report.passed else "FAIL"
        _CRITERIA.append(f"{status} {name}: {notes or report.outcome}")


def pytest_terminal_summary(terminalreporter):
    if _CRITERIA:
        terminalreporter.section("acceptance criteria")
        for line in _CRITERIA:
            terminalreporter.write_line(line)

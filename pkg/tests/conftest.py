import pytest

_VERDICTS = {}


def pytest_configure(config):
    config.addinivalue_line("markers", "criterion(number, title): acceptance criterion")


@pytest.fixture
def note(request):
    """Attach a one-line measurement summary to the current criterion."""
    def add(text: str) -> None:
        request.node.user_properties.append(("detail", text))
        print(text)
    return add


@pytest.hookimpl(hookwrapper=True)
def pytest_runtest_makereport(item, call):
    outcome = yield
    report = outcome.get_result()
    marker = item.get_closest_marker("criterion")
    if marker is None:
        return
    if report.when == "call" or (report.when == "setup" and report.outcome != "passed"):
        details = [v for k, v in item.user_properties if k == "detail"]
        _VERDICTS[marker.args[0]] = (marker.args[1], report.outcome == "passed", "; ".join(details))


def pytest_terminal_summary(terminalreporter):
    if not _VERDICTS:
        return
    terminalreporter.section("acceptance criteria")
    for number in sorted(_VERDICTS):
        title, ok, detail = _VERDICTS[number]
        line = f"criterion {number}: {'PASS' if ok else 'FAIL'}  {title}"
        terminalreporter.write_line(line + (f"  ({detail})" if detail else ""))

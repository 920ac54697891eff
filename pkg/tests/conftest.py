import pytest

# criterion number -> (title, outcome, note)
_CRITERIA: dict = {}


def pytest_configure(config):
    config.addinivalue_line("markers", "criterion(n, title): acceptance criterion checked by this test")
    config.addinivalue_line("markers", "slow: takes more than a few seconds")


@pytest.hookimpl(hookwrapper=True)
def pytest_runtest_makereport(item, call):
    outcome = yield
    rep = outcome.get_result()
    mark = item.get_closest_marker("criterion")
    if mark is None:
        return
    n, title = mark.args
    note = dict(item.user_properties).get("summary", "")
    if rep.when == "call" or (rep.when == "setup" and rep.outcome != "passed"):
        status = {"passed": "PASS", "failed": "FAIL", "skipped": "SKIP"}[rep.outcome]
        prev = _CRITERIA.get(n)
        if prev is not None and prev[1] == "FAIL":
            status = "FAIL"
        if prev and prev[2] and note and note != prev[2]:
            note = f"{prev[2]}; {note}"
        _CRITERIA[n] = (title, status, note or (prev[2] if prev else ""))


def pytest_terminal_summary(terminalreporter):
    if not _CRITERIA:
        return
    terminalreporter.section("acceptance criteria")
    for n in sorted(_CRITERIA):
        title, status, note = _CRITERIA[n]
        line = f"criterion {n:2d} {status}: {title}"
        if note:
            line += f" [{note}]"
        terminalreporter.write_line(line)

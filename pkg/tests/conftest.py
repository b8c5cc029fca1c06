import pytest

_CRITERIA: dict[str, tuple[str, str]] = {}


@pytest.fixture
def criterion(request):
    """Record an acceptance criterion's outcome for the end-of-run summary."""
    def record(label, detail=""):
        _CRITERIA[request.node.nodeid] = (label, detail)
    yield record
    rep = getattr(request.node, "rep_call", None)
    if request.node.nodeid in _CRITERIA:
        label, detail = _CRITERIA[request.node.nodeid]
        ok = rep is not None and rep.passed
        _CRITERIA[request.node.nodeid] = (label, ("PASS" if ok else "FAIL") + (f"  {detail}" if detail else ""))


@pytest.hookimpl(hookwrapper=True)
def pytest_runtest_makereport(item, call):
    outcome = yield
    rep = outcome.get_result()
    if rep.when == "call":
        item.rep_call = rep


def pytest_terminal_summary(terminalreporter):
    if not _CRITERIA:
        return
    terminalreporter.section("acceptance criteria")
    for label, status in sorted(_CRITERIA.values()):
        terminalreporter.write_line(f"{label:<42} {status}")

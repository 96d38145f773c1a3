import pytest

_CRITERIA = []


@pytest.hookimpl(hookwrapper=True)
def pytest_runtest_makereport(item, call):
    outcome = yield
    rep = outcome.get_result()
    if rep.when == "call" and item.name.startswith("test_criterion_"):
        doc = (item.function.__doc__ or item.name).strip().splitlines()[0]
        _CRITERIA.append((item.name, doc, rep.outcome))


def pytest_terminal_summary(terminalreporter):
    if not _CRITERIA:
        return
    terminalreporter.section("acceptance criteria")
    for name, doc, outcome in sorted(_CRITERIA):
        num = name.split("_")[2]
        terminalreporter.write_line(f"criterion {num}: {'PASS' if outcome == 'passed' else 'FAIL'}  {doc}")

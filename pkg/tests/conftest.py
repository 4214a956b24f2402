import pytest


def pytest_configure(config):
    config._acceptance_results = []


@pytest.hookimpl(hookwrapper=True)
def pytest_runtest_makereport(item, call):
    outcome = yield
    report = outcome.get_result()
    label = getattr(getattr(item, "obj", None), "_criterion_label", None)
    if label and report.when == "call":
        item.config._acceptance_results.append((label, report.outcome))


def pytest_terminal_summary(terminalreporter, exitstatus, config):
    results = getattr(config, "_acceptance_results", [])
    if not results:
        return
    terminalreporter.section("acceptance criteria")
    for label, outcome in results:
        status = "PASS" if outcome == "passed" else "FAIL"
        terminalreporter.write_line(f"[ACCEPTANCE] {status}  {label}")

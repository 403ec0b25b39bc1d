import pytest


@pytest.hookimpl(hookwrapper=True)
def pytest_runtest_makereport(item, call):
    outcome = yield
    rep = outcome.get_result()
    if rep.when == "call" and item.fspath.basename == "test_acceptance.py":
        reporter = item.config.pluginmanager.get_plugin("terminalreporter")
        if reporter is not None:
            status = "PASS" if rep.passed else "FAIL"
            reporter.write_line(f"[acceptance] {status} {item.name}")

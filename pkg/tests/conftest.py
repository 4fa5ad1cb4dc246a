import os

import pytest
from hypothesis import settings

settings.register_profile("default", max_examples=50, deadline=None)
settings.load_profile(os.environ.get("HYPOTHESIS_PROFILE", "default"))

_ACCEPTANCE: dict[str, tuple[str, str]] = {}


def pytest_configure(config):
    config.addinivalue_line("markers", "criterion(label, title): acceptance criterion covered by the test")


@pytest.hookimpl(hookwrapper=True)
def pytest_runtest_makereport(item, call):
    outcome = yield
    report = outcome.get_result()
    marker = item.get_closest_marker("criterion")
    if marker is None:
        return
    label, title = marker.args
    if report.when == "call" or (report.when == "setup" and not report.passed):
        status = "PASS" if report.passed else ("SKIP" if report.skipped else "FAIL")
        detail = ""
        if report.failed and report.longrepr is not None:
            detail = str(getattr(report.longrepr, "reprcrash", None) and report.longrepr.reprcrash.message or "")
            detail = detail.splitlines()[0] if detail else ""
        elif report.skipped:
            detail = str(report.longrepr[-1]) if isinstance(report.longrepr, tuple) else ""
        _ACCEPTANCE[str(label)] = (status, f"{title}" + (f" :: {detail}" if detail else ""))


def pytest_terminal_summary(terminalreporter):
    if not _ACCEPTANCE:
        return
    terminalreporter.section("acceptance criteria")
    for label in sorted(_ACCEPTANCE, key=lambda s: [int(p) if p.isdigit() else p for p in s.replace("x", " x").split()]):
        status, text = _ACCEPTANCE[label]
        terminalreporter.write_line(f"[{status}] criterion {label}: {text}")

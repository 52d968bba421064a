import pytest

import helpers

_ACCEPTANCE = {}


@pytest.fixture
def record():
    """Record one acceptance verdict; the summary is printed at session end."""

    def _record(number, title, ok, detail=""):
        _ACCEPTANCE[number] = (title, bool(ok), detail)
        return ok

    return _record


@pytest.fixture(scope="session")
def corpus():
    return helpers.stochastic_corpus()


def pytest_terminal_summary(terminalreporter):
    if not _ACCEPTANCE:
        return
    terminalreporter.section("acceptance criteria")
    for number in sorted(_ACCEPTANCE):
        title, ok, detail = _ACCEPTANCE[number]
        verdict = "PASS" if ok else "FAIL"
        terminalreporter.write_line(f"[{verdict}] {number:>2}. {title}: {detail}")

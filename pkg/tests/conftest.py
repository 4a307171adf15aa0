import pytest

ACCEPTANCE = {}


def pytest_terminal_summary(terminalreporter):
    if not ACCEPTANCE:
        return
    terminalreporter.section("acceptance criteria")
    for k in sorted(ACCEPTANCE):
        terminalreporter.write_line(ACCEPTANCE[k])


@pytest.fixture
def criterion():
    """``criterion(k, passed, detail, seconds, limit)`` records the result line."""

    def record(k, passed, detail, seconds, limit=None):
        timed = seconds <= limit if limit is not None else True
        ok = bool(passed) and timed
        budget = f" (limit {limit:g} s)" if limit is not None else ""
        line = f"criterion {k:>2}: {'PASS' if ok else 'FAIL'}  {detail}  [{seconds:.2f} s{budget}]"
        ACCEPTANCE[k] = line
        print(line)
        return ok

    return record

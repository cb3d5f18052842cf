import time
from contextlib import contextmanager

import pytest

_LINES = []


class Criterion:
    def __init__(self, number, title, limit):
        self.number, self.title, self.limit = number, title, limit
        self.notes = []

    def note(self, text):
        self.notes.append(text)


@contextmanager
def _criterion(number, title, limit=None):
    c = Criterion(number, title, limit)
    start = time.perf_counter()
    ok = False
    try:
        yield c
        ok = True
    finally:
        elapsed = time.perf_counter() - start
        in_time = c.limit is None or elapsed < c.limit
        budget = f" (limit {c.limit:g} s)" if c.limit is not None else ""
        status = "PASS" if ok and in_time else "FAIL"
        line = f"[{status}] criterion {number}: {title}; {elapsed:.2f} s{budget}"
        if c.notes:
            line += "; " + "; ".join(c.notes)
        _LINES.append(line)
        print(line)
    assert in_time, f"criterion {number} took {elapsed:.2f} s, limit {c.limit} s"


@pytest.fixture
def criterion():
    return _criterion


def pytest_terminal_summary(terminalreporter):
    if _LINES:
        terminalreporter.section("acceptance criteria")
        for line in _LINES:
            terminalreporter.write_line(line)

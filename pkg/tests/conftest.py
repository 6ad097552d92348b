import time
from contextlib import contextmanager

import pytest

_LINES: list[str] = []


@contextmanager
def _criterion(number: int, title: str):
    details: list[str] = []
    t0 = time.perf_counter()
    try:
        yield details
    except BaseException:
        status = "FAIL"
        raise
    else:
        status = "PASS"
    finally:
        elapsed = time.perf_counter() - t0
        extra = "; ".join(details)
        _LINES.append(f"criterion {number} {status} {title} ({elapsed:.1f} s){': ' + extra if extra else ''}")


@pytest.fixture
def criterion():
    """Context manager recording one PASS/FAIL line for an acceptance criterion."""
    return _criterion


def pytest_terminal_summary(terminalreporter):
    if _LINES:
        terminalreporter.section("acceptance criteria")
        for line in sorted(_LINES, key=lambda s: int(s.split()[1])):
            terminalreporter.write_line(line)

"""Shared test plumbing: the acceptance-criterion reporter."""

from __future__ import annotations

import time
from contextlib import contextmanager

ACCEPTANCE_RESULTS: list[dict] = []


@contextmanager
def criterion(name: str):
    """Record one acceptance criterion; prints PASS/FAIL in the summary.

    The body performs its assertions as usual; it may set entry["detail"]
    to a short measurement string (counts, timings) for the report line.
    """
    entry = {"name": name, "status": "FAIL", "detail": "", "started": time.perf_counter()}
    ACCEPTANCE_RESULTS.append(entry)
    try:
        yield entry
    except BaseException as exc:
        if not entry["detail"]:
            entry["detail"] = f"{type(exc).__name__}: {exc}"[:160]
        raise
    else:
        entry["status"] = "PASS"
    finally:
        entry["elapsed"] = time.perf_counter() - entry["started"]


def pytest_terminal_summary(terminalreporter, exitstatus, config):
    if not ACCEPTANCE_RESULTS:
        return
    terminalreporter.section("acceptance criteria")
    for entry in ACCEPTANCE_RESULTS:
        detail = f" — {entry['detail']}" if entry["detail"] else ""
        terminalreporter.write_line(
            f"[{entry['status']}] {entry['name']}"
            f" ({entry['elapsed']:.2f}s){detail}")

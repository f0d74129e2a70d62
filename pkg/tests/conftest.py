from functools import lru_cache
from pathlib import Path

import pytest

from iterasym.runbook import Runbook, build_expansion, run_book

ROOT = Path(__file__).resolve().parent.parent
REFERENCE_BOOK = ROOT / "fixtures" / "reference.json"

# criterion lines collected by test_acceptance and echoed in the terminal summary
ACCEPTANCE_LINES: list[str] = []
LADDER = (10**4, 10**5)


@lru_cache(maxsize=None)
def reference_book() -> Runbook:
    return Runbook.load(REFERENCE_BOOK)


@lru_cache(maxsize=None)
def expansion(name: str, M: int | None = None):
    cfg = next(c for c in reference_book().cases if c.name == name)
    if M is not None:
        from dataclasses import replace
        cfg = replace(cfg, M=M)
    return build_expansion(cfg)


@lru_cache(maxsize=None)
def full_run():
    """The whole reference runbook at the default budget, computed once per session.

    The ladder adds K = 10^4 and 10^5 checkpoints on the same orbits for the
    convergence-rate check.
    """
    return run_book(reference_book(), ladder=LADDER)


@pytest.fixture(scope="session")
def book():
    return reference_book()


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in ACCEPTANCE_LINES:
            terminalreporter.write_line(line)

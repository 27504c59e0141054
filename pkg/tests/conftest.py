"""Shared fixtures: the squaring and reversal systems and small helpers."""
from __future__ import annotations

import os
from pathlib import Path

import pytest
from hypothesis import HealthCheck, settings

from spop.formats import parse_certificate, parse_trs
from spop.terms import Fun

settings.register_profile(
    "default", max_examples=150, deadline=None,
    suppress_health_check=[HealthCheck.too_slow, HealthCheck.filter_too_much],
)
settings.load_profile(os.environ.get("HYPOTHESIS_PROFILE", "default"))

CORPUS = Path(__file__).resolve().parent.parent / "corpus"


def num(n: int, succ: str = "S", zero: str = "Z") -> Fun:
    t = Fun(zero)
    for _ in range(n):
        t = Fun(succ, [t])
    return t


@pytest.fixture(scope="session")
def square_trs():
    return parse_trs((CORPUS / "square.trs").read_text())


@pytest.fixture(scope="session")
def square_cert(square_trs):
    return parse_certificate((CORPUS / "square.cert").read_text(), square_trs)


@pytest.fixture(scope="session")
def rev_trs():
    return parse_trs((CORPUS / "rev.trs").read_text())


@pytest.fixture(scope="session")
def rev_ps_cert(rev_trs):
    return parse_certificate((CORPUS / "rev_ps.cert").read_text(), rev_trs)


# One line per acceptance criterion, filled in by test_acceptance.py.
ACCEPTANCE: list[tuple[int, str]] = []


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE:
        terminalreporter.write_sep("=", "acceptance criteria")
        for _, line in sorted(ACCEPTANCE):
            terminalreporter.write_line(line)

"""Shared fixtures plus a terminal summary for the acceptance tests."""
from __future__ import annotations

import numpy as np
import pytest

from skewlab.dynamics import (GOLDEN_MEAN, cosine_potential, zero_potential)


@pytest.fixture(scope="session")
def cosine():
    return cosine_potential()


@pytest.fixture(scope="session")
def zero_pot():
    return zero_potential()


@pytest.fixture(scope="session")
def golden():
    return GOLDEN_MEAN


def random_diag(rng: np.random.Generator, n: int,
                span: float = 5.0) -> np.ndarray:
    return rng.uniform(-span, span, size=n)


# --- acceptance summary -----------------------------------------------------
# Collect outcomes of everything in test_acceptance.py and print one
# PASS/FAIL line per criterion at the end of the run.

_acceptance: dict[str, str] = {}


def pytest_runtest_logreport(report):
    if "test_acceptance.py" not in report.nodeid:
        return
    if report.when == "call":
        _acceptance[report.nodeid] = report.outcome
    elif report.when == "setup" and report.outcome != "passed":
        _acceptance[report.nodeid] = "error"


def pytest_terminal_summary(terminalreporter, exitstatus, config):
    if not _acceptance:
        return
    terminalreporter.write_sep("=", "acceptance results")
    for nodeid in sorted(_acceptance):
        name = nodeid.split("::")[-1]
        word = "PASS" if _acceptance[nodeid] == "passed" else "FAIL"
        terminalreporter.write_line(f"{word}  {name}")

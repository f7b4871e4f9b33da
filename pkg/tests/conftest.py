from __future__ import annotations

from pathlib import Path

import numpy as np
import pytest

import qhybrid as qh

DATA = Path(__file__).parent / "data"


@pytest.fixture
def dev1():
    return qh.device("default.qubit", 1)


@pytest.fixture
def dev2():
    return qh.device("default.qubit", 2)


@pytest.fixture
def toy_hamiltonian():
    return qh.parse_hamiltonian((DATA / "toy_hamiltonian.txt").read_text())


@pytest.fixture
def rng():
    return np.random.default_rng(1234)


# acceptance criteria report ------------------------------------------------------

_CRITERIA: dict = {}


def pytest_runtest_makereport(item, call):
    mark = item.get_closest_marker("acceptance")
    if mark is None or call.when == "teardown":
        return
    number, text = mark.args
    passed = call.excinfo is None
    prev = _CRITERIA.get(number, (text, True))
    _CRITERIA[number] = (text, prev[1] and passed)


def pytest_terminal_summary(terminalreporter):
    if not _CRITERIA:
        return
    terminalreporter.section("acceptance criteria")
    for number in sorted(_CRITERIA):
        text, ok = _CRITERIA[number]
        terminalreporter.write_line(f"{'PASS' if ok else 'FAIL'} criterion {number:>2}: {text}")

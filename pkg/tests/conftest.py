"""Shared fixtures: frozen reference numbers and session-wide solves/batches.

The expensive objects (value functions, Monte Carlo batches) are built once
per session and shared across unit and acceptance tests; wall-clock timings
are recorded so budget assertions can include the cost of what they use.
"""

import json
import pathlib
import time

import pytest

from maketake.hjb import solve_backward
from maketake.model import baseline_params
from maketake.simulator import run_batch

DATA = pathlib.Path(__file__).parent / "data"

ACCEPTANCE_LINES = []


def pytest_terminal_summary(terminalreporter):
    """Echo the one-line acceptance verdicts after the run, capture or not."""
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in ACCEPTANCE_LINES:
            terminalreporter.write_line(line)


@pytest.fixture(scope="session")
def acceptance():
    """Record and assert one pass/fail line per acceptance criterion."""

    def report(name, ok, detail):
        line = f"ACCEPTANCE {name}: {'PASS' if ok else 'FAIL'} ({detail})"
        ACCEPTANCE_LINES.append(line)
        print(line)
        assert ok, line

    return report


class RefTable:
    """Frozen reference constants (stored as high-precision strings)."""

    def __init__(self, doc):
        self.doc = doc

    def f(self, *keys) -> float:
        node = self.doc
        for k in keys:
            node = node[k]
        return float(node)


@pytest.fixture(scope="session")
def refs():
    with open(DATA / "reference_constants.json") as fh:
        return RefTable(json.load(fh))


@pytest.fixture(scope="session")
def timings():
    return {}


@pytest.fixture(scope="session")
def base1():
    return baseline_params(1)


@pytest.fixture(scope="session")
def base2():
    return baseline_params(2)


@pytest.fixture(scope="session")
def vf1(base1, timings):
    t0 = time.perf_counter()
    vf = solve_backward(base1, dt=0.1)
    timings["solve_n1_dt0.1"] = time.perf_counter() - t0
    return vf


@pytest.fixture(scope="session")
def vf1_fine(base1, timings):
    t0 = time.perf_counter()
    vf = solve_backward(base1, dt=0.05)
    timings["solve_n1_dt0.05"] = time.perf_counter() - t0
    return vf


@pytest.fixture(scope="session")
def vf2(base2, timings):
    t0 = time.perf_counter()
    vf = solve_backward(base2, dt=0.1)
    timings["solve_n2_dt0.1"] = time.perf_counter() - t0
    return vf


@pytest.fixture(scope="session")
def batch1(base1, vf1_fine, timings):
    """10^4 baseline paths shared by the consistency checks."""
    t0 = time.perf_counter()
    paths, stats = run_batch(base1, vf1_fine, 10_000, seed0=1)
    timings["batch_n1_10k"] = time.perf_counter() - t0
    return paths, stats


@pytest.fixture(scope="session")
def batch2(base2, vf2, timings):
    t0 = time.perf_counter()
    paths, stats = run_batch(base2, vf2, 2_000, seed0=11)
    timings["batch_n2_2k"] = time.perf_counter() - t0
    return paths, stats

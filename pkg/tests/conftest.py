import functools
import time

import numpy as np
import pytest

from uavm.config import load_builtin
from uavm.dynamics import SystemModel
from uavm.sim.engine import run_scenario

_RUNTIME = {}
ACCEPTANCE_LINES = []


@functools.lru_cache(maxsize=None)
def _builtin_run(name):
    scenario = load_builtin(name)
    start = time.perf_counter()
    log = run_scenario(scenario)
    _RUNTIME[name] = time.perf_counter() - start
    return scenario, log


@pytest.fixture(scope="session")
def builtin_run():
    """``builtin_run(name) -> (scenario, log)``; each built-in scenario is simulated once per session."""
    return _builtin_run


@pytest.fixture(scope="session")
def builtin_runtime():
    """Wall-clock seconds of the cached rollout of a built-in scenario."""

    def runtime(name):
        _builtin_run(name)
        return _RUNTIME[name]

    return runtime


@pytest.fixture(scope="session")
def model():
    return SystemModel()


@pytest.fixture
def rng():
    return np.random.default_rng(1234)


@pytest.fixture
def criterion():
    """Record one acceptance line; returns ``ok`` so tests can assert on it."""

    def record(label, ok, detail):
        line = f"[{'PASS' if ok else 'FAIL'}] criterion {label}: {detail}"
        ACCEPTANCE_LINES.append(line)
        print(line)
        return ok

    return record


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in ACCEPTANCE_LINES:
            terminalreporter.write_line(line)

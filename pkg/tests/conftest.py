import numpy as np
import pytest

from qgsf import _backend, _core_py


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


def available_backends():
    impls = [("python", _core_py)]
    if _backend.BACKEND == "cython":
        from qgsf import _core

        impls.append(("cython", _core))
    return impls


@pytest.fixture(params=[name for name, _ in available_backends()])
def backend(request, monkeypatch):
    """Run a test once per kernel implementation."""
    impl = dict(available_backends())[request.param]
    monkeypatch.setattr(_backend, "simulate_events", impl.simulate_events)
    monkeypatch.setattr(_backend, "fast_recursion", impl.fast_recursion)
    return request.param


def mean_and_se(x):
    x = np.asarray(x, dtype=float)
    return x.mean(), x.std(ddof=1) / np.sqrt(x.size)


def pytest_terminal_summary(terminalreporter):
    import sys

    mod = sys.modules.get("test_acceptance")
    lines = getattr(mod, "LINES", None)
    if lines:
        terminalreporter.section("acceptance criteria")
        for line in sorted(lines, key=lambda s: int(s.split("criterion ")[1].split(":")[0])):
            terminalreporter.write_line(line)

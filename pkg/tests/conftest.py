import numpy as np
import pytest

from minrule import LikelihoodModel, Network

_CRITERIA = []


def pytest_runtest_makereport(item, call):
    marker = item.get_closest_marker("criterion")
    if marker is None or call.when != "call":
        return
    passed = call.excinfo is None
    _CRITERIA.append((marker.args[0], item.name, passed))


def pytest_terminal_summary(terminalreporter):
    if not _CRITERIA:
        return
    terminalreporter.section("acceptance criteria")
    for n in sorted({c[0] for c in _CRITERIA}):
        results = [passed for k, _, passed in _CRITERIA if k == n]
        failed = [name for k, name, passed in _CRITERIA if k == n and not passed]
        line = f"criterion {n}: {'PASS' if all(results) else 'FAIL'}  ({sum(results)}/{len(results)} checks)"
        if failed:
            line += "  failing: " + ", ".join(failed)
        terminalreporter.write_line(line)


@pytest.fixture
def triangle():
    return Network.from_undirected(3, [(0, 1), (1, 2), (0, 2)])


def table(*columns):
    """Likelihood table from per-hypothesis signal distributions."""
    return np.array(columns, dtype=float).T


@pytest.fixture
def two_signal_model():
    # agent 0: informative, agent 1: columns copied, cannot discriminate
    t0 = table([0.8, 0.2], [0.5, 0.5])
    t1 = table([0.3, 0.7], [0.3, 0.7])
    return LikelihoodModel((t0, t1))

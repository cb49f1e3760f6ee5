import numpy as np
import pytest

from markov_tail.chain import ReversibleChain, build_complete, build_cycle, build_lazy_hypercube


@pytest.fixture(scope="session")
def example_chains():
    return [build_complete(32), build_lazy_hypercube(5), build_cycle(33)]


def birth_death(weights):
    """Metropolis walk on a path with target law proportional to ``weights``."""
    w = np.asarray(weights, dtype=float)
    mu = w / w.sum()
    n = len(w)
    P = np.zeros((n, n))
    for s in range(n):
        for t in (s - 1, s + 1):
            if 0 <= t < n:
                P[s, t] = 0.5 * min(1.0, mu[t] / mu[s])
        P[s, s] = 1.0 - P[s].sum()
    return ReversibleChain(P, mu, "birth-death")


@pytest.fixture
def small_chains():
    return [
        build_complete(2),
        build_complete(3),
        build_cycle(3),
        build_cycle(4),
        build_lazy_hypercube(1),
        build_lazy_hypercube(2),
        birth_death([1.0, 2.0, 3.0]),
        birth_death([4.0, 1.0, 2.0, 3.0]),
    ]


ACCEPTANCE_LINES = []


def report(criterion, passed, detail):
    line = f"criterion {criterion}: {'PASS' if passed else 'FAIL'} | {detail}"
    ACCEPTANCE_LINES.append(line)
    print(line)
    return passed


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance")
        for line in ACCEPTANCE_LINES:
            terminalreporter.write_line(line)

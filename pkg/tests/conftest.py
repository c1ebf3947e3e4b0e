import functools

import pytest

from iglin.deltagraph import build_delta, build_spanning_tree
from iglin.gf import make_field
from iglin.tables import build_P, build_T_full


@functools.lru_cache(maxsize=None)
def field(q):
    return make_field(q)


@functools.lru_cache(maxsize=None)
def graph(n, r, q):
    P = build_P(n, r, field(q))
    delta = build_delta(P)
    return P, delta, build_spanning_tree(delta)


@functools.lru_cache(maxsize=None)
def full(n, r, q):
    return build_T_full(n, r, field(q))


@pytest.fixture
def F2():
    return field(2)


@pytest.fixture
def F3():
    return field(3)


def pytest_terminal_summary(terminalreporter):
    mod = __import__("sys").modules.get("test_acceptance")
    lines = getattr(mod, "RESULTS", None)
    if lines:
        terminalreporter.section("acceptance criteria")
        for line in lines:
            terminalreporter.write_line(line)

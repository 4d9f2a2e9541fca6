"""Shared helpers: independent reference oracles used across the suite."""
from __future__ import annotations

import math
from functools import lru_cache

import numpy as np
import pytest
from hypothesis import settings
from scipy.optimize import linear_sum_assignment

settings.register_profile("default", max_examples=60, deadline=None)
settings.load_profile("default")


def brute_mwm(weights: dict) -> float:
    """Maximum-weight matching by plain recursion over the lowest vertex.

    ``weights`` maps ``(a, b)`` to a value; works for any hashable vertices
    and is kept deliberately naive so it shares nothing with the package.
    """
    adj = {}
    for (a, b), v in weights.items():
        if v > 0:
            adj.setdefault(a, {})[b] = v
            adj.setdefault(b, {})[a] = v
    order = sorted(adj, key=repr)
    index = {u: i for i, u in enumerate(order)}

    @lru_cache(maxsize=None)
    def best(free: frozenset) -> float:
        if not free:
            return 0.0
        u = min(free, key=index.__getitem__)
        rest = free - {u}
        out = best(rest)
        for w, v in adj[u].items():
            if w in rest:
                out = max(out, v + best(rest - {w}))
        return out

    return best(frozenset(order))


def assignment_value(edges) -> float:
    """Max-weight bipartite matching of ``(s, b, v)`` triples via scipy."""
    edges = list(edges)
    if not edges:
        return 0.0
    sellers = sorted({s for s, _, _ in edges}, key=repr)
    buyers = sorted({b for _, b, _ in edges}, key=repr)
    si = {s: i for i, s in enumerate(sellers)}
    bi = {b: i for i, b in enumerate(buyers)}
    w = np.zeros((len(sellers), len(buyers)))
    for s, b, v in edges:
        w[si[s], bi[b]] = v
    rows, cols = linear_sum_assignment(w, maximize=True)
    return float(w[rows, cols].sum())


def ledger_gap(ledger) -> float:
    return (math.fsum(ledger.p_final.values()) + math.fsum(ledger.q_final.values())
            - math.fsum(ledger.q_initial.values()))


def usable_weights(instance, deadlines) -> dict:
    """Edges whose endpoints overlap in the market, recomputed from scratch."""
    out = {}
    for (i, j), v in instance.values.items():
        leave_i = i + deadlines[i - 1]
        if j <= leave_i and v > 0:
            out[(i, j)] = v
    return out


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


# one line per acceptance criterion, printed after the run
ACCEPTANCE_LINES: dict[int, str] = {}


def record_criterion(number: int, passed: bool, detail: str) -> None:
    ACCEPTANCE_LINES[number] = f"criterion {number:>2}: {'PASS' if passed else 'FAIL'}  {detail}"


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.write_sep("=", "acceptance criteria")
        for number in sorted(ACCEPTANCE_LINES):
            terminalreporter.write_line(ACCEPTANCE_LINES[number])

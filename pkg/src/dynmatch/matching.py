"""Static maximum-weight matching on small or structured graphs.

Graphs are given as ``{(u, v): w}`` with positive weights; non-positive
edges never improve a matching and are ignored.  Every solver returns
``(value, pairs)`` with pairs as sorted tuples.
"""
from __future__ import annotations

import math
from collections import defaultdict
from typing import Hashable, Iterable, Mapping, Optional

import numpy as np
from scipy.optimize import linear_sum_assignment

try:
    import networkx as nx
except ImportError:  # pragma: no cover - networkx is a declared dependency
    nx = None

EXACT_SUBSET_LIMIT = 16
WINDOW_STATE_LIMIT = 1 << 14

Pairs = list[tuple[Hashable, Hashable]]


def _adjacency(weights: Mapping[tuple, float]) -> dict:
    adj: dict = defaultdict(dict)
    for (u, v), w in weights.items():
        if w > 0:
            adj[u][v] = w
            adj[v][u] = w
    return adj


def components(nodes: Iterable, adj: Mapping) -> list[list]:
    """Components of the positive-weight subgraph induced by ``nodes``."""
    allowed = set(nodes)
    seen = set()
    out = []
    for start in sorted(allowed):
        if start in seen:
            continue
        seen.add(start)
        comp = [start]
        stack = [start]
        while stack:
            u = stack.pop()
            for v, w in adj.get(u, {}).items():
                if w > 0 and v in allowed and v not in seen:
                    seen.add(v)
                    comp.append(v)
                    stack.append(v)
        out.append(sorted(comp))
    return out


def subset_mwm(nodes: list, adj: Mapping) -> tuple[float, Pairs]:
    """Exact search over vertex subsets; exponential, meant for ``len(nodes) <= 16``."""
    n = len(nodes)
    index = {u: i for i, u in enumerate(nodes)}
    nbrs = [[(index[v], w) for v, w in sorted(adj.get(u, {}).items(), key=lambda kv: index.get(kv[0], n))
             if w > 0 and v in index and index[v] > i] for i, u in enumerate(nodes)]
    memo: dict[int, tuple[float, int]] = {0: (0.0, -1)}

    def solve(mask: int) -> float:
        hit = memo.get(mask)
        if hit is not None:
            return hit[0]
        i = (mask & -mask).bit_length() - 1
        rest = mask & ~(1 << i)
        best, choice = solve(rest), -1
        for j, w in nbrs[i]:
            if rest >> j & 1:
                val = w + solve(rest & ~(1 << j))
                if val > best:
                    best, choice = val, j
        memo[mask] = (best, choice)
        return best

    full = (1 << n) - 1
    value = solve(full)
    pairs = []
    mask = full
    while mask:
        i = (mask & -mask).bit_length() - 1
        j = memo[mask][1]
        mask &= ~(1 << i)
        if j >= 0:
            pairs.append((nodes[i], nodes[j]))
            mask &= ~(1 << j)
    return value, pairs


def windowed_mwm(nodes: list, adj: Mapping, state_limit: int = WINDOW_STATE_LIMIT) -> Optional[tuple[float, Pairs]]:
    """Exact dynamic program along ``nodes`` order, tracking which later
    vertices inside the edge window are already used.

    Returns None when the number of live states exceeds ``state_limit``.
    """
    rank = {u: r for r, u in enumerate(nodes)}
    fwd = [sorted((rank[v] - r, w) for v, w in adj.get(u, {}).items() if w > 0 and v in rank and rank[v] > r)
           for r, u in enumerate(nodes)]
    states = {0: 0.0}
    back = []
    for r in range(len(nodes)):
        nxt: dict[int, float] = {}
        bp: dict[int, tuple[int, int]] = {}
        for mask, val in states.items():
            options = [(mask >> 1, val, 0)]
            if not mask & 1:
                for off, w in fwd[r]:
                    if not mask >> off & 1:
                        options.append(((mask | 1 << off) >> 1, val + w, off))
            for nm, nv, off in options:
                if nm not in nxt or nv > nxt[nm]:
                    nxt[nm] = nv
                    bp[nm] = (mask, off)
        states = nxt
        back.append(bp)
        if len(states) > state_limit:
            return None
    value = states.get(0, 0.0)
    pairs = []
    mask = 0
    for r in range(len(nodes) - 1, -1, -1):
        mask, off = back[r][mask]
        if off:
            pairs.append((nodes[r], nodes[r + off]))
    pairs.reverse()
    return value, pairs


def greedy_swap_mwm(nodes: list, adj: Mapping) -> tuple[float, Pairs]:
    """Greedy by descending weight, then local search over single-edge
    insertions and pairwise swaps until no move improves the weight."""
    node_set = set(nodes)
    edges = sorted(((w, u, v) for u in nodes for v, w in adj.get(u, {}).items()
                    if w > 0 and v in node_set and u < v), key=lambda e: (-e[0], e[1], e[2]))
    mate: dict = {}
    for w, u, v in edges:
        if u not in mate and v not in mate:
            mate[u], mate[v] = v, u

    def wt(a, b):
        return adj.get(a, {}).get(b, 0.0)

    improved = True
    while improved:
        improved = False
        for w, u, v in edges:
            mu, mv = mate.get(u), mate.get(v)
            if mu == v:
                continue
            loss = (wt(u, mu) if mu is not None else 0.0) + (wt(v, mv) if mv is not None else 0.0)
            if w > loss + 1e-12:
                for x in (mu, mv):
                    if x is not None:
                        del mate[x]
                mate[u], mate[v] = v, u
                improved = True
        matched = sorted({tuple(sorted((a, b))) for a, b in mate.items()})
        for p in range(len(matched)):
            for q in range(p + 1, len(matched)):
                a, b = matched[p]
                c, d = matched[q]
                if mate.get(a) != b or mate.get(c) != d:
                    continue
                cur = wt(a, b) + wt(c, d)
                for x, y, z, t in ((a, c, b, d), (a, d, b, c)):
                    if wt(x, y) + wt(z, t) > cur + 1e-12:
                        for s in (a, b, c, d):
                            mate.pop(s, None)
                        for e, f in ((x, y), (z, t)):
                            if wt(e, f) > 0:
                                mate[e], mate[f] = f, e
                        improved = True
                        break
    pairs = sorted({tuple(sorted((a, b))) for a, b in mate.items()})
    return math.fsum(wt(a, b) for a, b in pairs), pairs


def blossom_mwm(nodes: list, adj: Mapping) -> tuple[float, Pairs]:
    """Exact general-graph matching via networkx's blossom implementation."""
    g = nx.Graph()
    node_set = set(nodes)
    for u in nodes:
        for v, w in adj.get(u, {}).items():
            if w > 0 and v in node_set and u < v:
                g.add_edge(u, v, weight=w)
    pairs = sorted(tuple(sorted(e)) for e in nx.max_weight_matching(g))
    return math.fsum(adj[a][b] for a, b in pairs), pairs


def assignment_mwm(sellers: list, buyers: list, adj: Mapping) -> tuple[float, Pairs]:
    """Exact bipartite matching through the assignment problem."""
    if not sellers or not buyers:
        return 0.0, []
    w = np.zeros((len(sellers), len(buyers)))
    for r, s in enumerate(sellers):
        for c, b in enumerate(buyers):
            w[r, c] = adj.get(s, {}).get(b, 0.0)
    rows, cols = linear_sum_assignment(w, maximize=True)
    pairs = sorted(tuple(sorted((sellers[r], buyers[c]))) for r, c in zip(rows, cols) if w[r, c] > 0)
    return math.fsum(adj[a][b] for a, b in pairs), pairs


def pool_mwm(nodes: Iterable, adj: Mapping, subset_limit: int = 10, solver: str = "auto") -> tuple[float, Pairs, bool]:
    """Maximum-weight matching of a pool, solved component by component.

    Small components use :func:`subset_mwm`, larger ones the blossom solver
    when available.  ``solver="heuristic"`` forces the local-search fallback
    for large components.  Returns ``(value, pairs, exact)``.
    """
    value, pairs, exact = 0.0, [], True
    for comp in components(nodes, adj):
        if len(comp) < 2:
            continue
        if len(comp) == 2:
            a, b = comp
            value += adj[a][b]
            pairs.append((a, b))
        elif len(comp) <= subset_limit:
            v, p = subset_mwm(comp, adj)
            value += v
            pairs += p
        elif solver == "auto" and nx is not None:
            v, p = blossom_mwm(comp, adj)
            value += v
            pairs += p
        else:
            v, p = greedy_swap_mwm(comp, adj)
            value += v
            pairs += p
            exact = False
    return value, pairs, exact

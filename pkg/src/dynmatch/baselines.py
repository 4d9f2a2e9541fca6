"""Comparison policies: Greedy, Patient, Batching(k), MDDA and Re-Opt.

All of them work on a pool of present, unmatched vertices.  Value-0 pairs
are treated as non-edges, and ties between neighbours go to the earliest
arrival.
"""
from __future__ import annotations

import math
from collections import defaultdict
from typing import Optional

import numpy as np

from .market import (
    ARRIVAL,
    AuditRecord,
    DynamicInstance,
    Matching,
    RunResult,
    TraceRecord,
    _check_deadlines,
    event_stream,
    finish_run,
    resolve_deadlines,
)
from .matching import pool_mwm

# Pools up to this size are solved by subset search; larger ones use the
# blossom solver, which is also exact.
POOL_SUBSET_LIMIT = 10
TIE_TOL = 1e-12


class PoolState:
    """Present, unmatched vertices and the positive edges among them."""

    def __init__(self, instance: DynamicInstance):
        self.adj = {k: {l: v for l, v in nbrs.items() if v > 0}
                    for k, nbrs in instance.adjacency.items()}
        self.members: set[int] = set()

    def __contains__(self, k):
        return k in self.members

    def add(self, k):
        self.members.add(k)

    def discard(self, k):
        self.members.discard(k)

    def neighbours(self, k):
        members = self.members
        return {l: v for l, v in self.adj.get(k, {}).items() if l in members}

    def best_neighbour(self, k) -> Optional[int]:
        best, best_v = None, 0.0
        for l, v in self.adj.get(k, {}).items():
            if l in self.members and l != k and (v > best_v or (v == best_v and best is not None and l < best)):
                best, best_v = l, v
        return best


class _Recorder:
    def __init__(self, instance, name, deadlines, seed, record_trace):
        self.instance = instance
        self.name = name
        self.deadlines = deadlines
        self.seed = seed
        self.record_trace = record_trace
        self.matching = Matching()
        self.collected: list[float] = []
        self.trace: list[TraceRecord] = []
        self.audit: list[AuditRecord] = []
        self.info: dict = {}

    def match(self, k, l, t):
        v = self.instance.value(k, l)
        self.matching.add(k, l, t)
        self.collected.append(v)
        return f"match ({min(k, l)},{max(k, l)}) value={v:g}"

    def log(self, t, kind, k, action, inert=False):
        if self.record_trace:
            self.trace.append(TraceRecord(t, kind, k, action, inert))

    def result(self):
        res = RunResult(self.name, self.matching, math.fsum(self.collected), self.deadlines,
                        seed=self.seed, audit=self.audit, trace=self.trace, info=self.info)
        return finish_run(res, self.instance)


def _deadlines(instance, deadlines, seed):
    if deadlines is None:
        return resolve_deadlines(instance, seed)
    return _check_deadlines(instance, deadlines)


def run_greedy(instance: DynamicInstance, deadlines=None, seed: int = 0, *,
               record_trace: bool = True) -> RunResult:
    """Match each arrival at once to its best present neighbour."""
    deadlines = _deadlines(instance, deadlines, seed)
    rec = _Recorder(instance, "greedy", deadlines, seed, record_trace)
    pool = PoolState(instance)
    for ev in event_stream(instance, deadlines):
        t, k = ev.time, ev.vertex
        if ev.kind == ARRIVAL:
            l = pool.best_neighbour(k)
            if l is None:
                pool.add(k)
                rec.log(t, ev.kind, k, "wait")
            else:
                pool.discard(l)
                rec.log(t, ev.kind, k, rec.match(k, l, t))
        elif k in pool:
            pool.discard(k)
            rec.log(t, ev.kind, k, "depart unmatched")
        else:
            rec.log(t, ev.kind, k, "already matched", True)
    return rec.result()


def _match_critical(pool, rec, t, kind, k):
    pool.discard(k)
    l = pool.best_neighbour(k)
    if l is None:
        rec.log(t, kind, k, "depart unmatched")
    else:
        pool.discard(l)
        rec.log(t, kind, k, rec.match(k, l, t))


def run_patient(instance: DynamicInstance, deadlines=None, seed: int = 0, *,
                record_trace: bool = True) -> RunResult:
    """Match a vertex only when it becomes critical, to its best present neighbour."""
    deadlines = _deadlines(instance, deadlines, seed)
    rec = _Recorder(instance, "patient", deadlines, seed, record_trace)
    pool = PoolState(instance)
    for ev in event_stream(instance, deadlines):
        t, k = ev.time, ev.vertex
        if ev.kind == ARRIVAL:
            pool.add(k)
            rec.log(t, ev.kind, k, "join pool")
        elif k in pool:
            _match_critical(pool, rec, t, ev.kind, k)
        else:
            rec.log(t, ev.kind, k, "already matched", True)
    return rec.result()


def run_batching(instance: DynamicInstance, k: int, deadlines=None, seed: int = 0, *,
                 rescue: bool = False, record_trace: bool = True) -> RunResult:
    """Every ``k`` steps, finalize a maximum-weight matching of the pool.

    Batches run at times ``k, 2k, ...`` after that step's arrival and before
    its critical events.  Without ``rescue`` a vertex that turns critical
    between batches leaves unmatched; with it, the vertex is matched to its
    best present neighbour as it leaves.
    """
    if int(k) != k or k < 1:
        raise ValueError(f"batch length must be a positive integer, got {k!r}")
    k = int(k)
    deadlines = _deadlines(instance, deadlines, seed)
    rec = _Recorder(instance, f"batching:{k}", deadlines, seed, record_trace)
    pool = PoolState(instance)
    by_time = defaultdict(list)
    for ev in event_stream(instance, deadlines):
        by_time[ev.time].append(ev)
    horizon = max(by_time, default=0)
    inexact = 0
    for t in range(1, horizon + 1):
        events = by_time.get(t, ())
        for ev in events:
            if ev.kind == ARRIVAL:
                pool.add(ev.vertex)
                rec.log(t, ev.kind, ev.vertex, "join pool")
        if t % k == 0 and pool.members:
            _, pairs, exact = pool_mwm(pool.members, pool.adj, POOL_SUBSET_LIMIT)
            inexact += not exact
            for a, b in pairs:
                pool.discard(a)
                pool.discard(b)
                rec.log(t, "batch", a, rec.match(a, b, t))
        for ev in events:
            if ev.kind == ARRIVAL:
                continue
            v = ev.vertex
            if v not in pool:
                rec.log(t, ev.kind, v, "already matched", True)
            elif rescue:
                _match_critical(pool, rec, t, ev.kind, v)
            else:
                pool.discard(v)
                rec.log(t, ev.kind, v, "depart unmatched")
    rec.audit.append(AuditRecord("pool_matching_exact", None, inexact == 0,
                                 "heuristic" if inexact else ""))
    return rec.result()


def run_reopt(instance: DynamicInstance, deadlines=None, seed: int = 0, *,
              record_trace: bool = True) -> RunResult:
    """Keep a maximum-weight matching of the pool; finalize a critical
    vertex's edge in it.

    Between critical events nothing is finalized and vertices only join the
    pool, so the pool matching is computed when a vertex becomes critical,
    on that vertex's component only.  This gives the same decisions as
    recomputing after every event.
    """
    deadlines = _deadlines(instance, deadlines, seed)
    rec = _Recorder(instance, "reopt", deadlines, seed, record_trace)
    pool = PoolState(instance)
    inexact = 0
    for ev in event_stream(instance, deadlines):
        t, k = ev.time, ev.vertex
        if ev.kind == ARRIVAL:
            pool.add(k)
            rec.log(t, ev.kind, k, "join pool")
            continue
        if k not in pool:
            rec.log(t, ev.kind, k, "already matched", True)
            continue
        comp = _component(pool, k)
        partner = None
        if len(comp) > 1:
            _, pairs, exact = pool_mwm(comp, pool.adj, POOL_SUBSET_LIMIT)
            inexact += not exact
            for a, b in pairs:
                if k in (a, b):
                    partner = b if a == k else a
        pool.discard(k)
        if partner is None:
            rec.log(t, ev.kind, k, "depart unmatched")
        else:
            pool.discard(partner)
            rec.log(t, ev.kind, k, rec.match(k, partner, t))
    rec.audit.append(AuditRecord("pool_matching_exact", None, inexact == 0,
                                 "heuristic" if inexact else ""))
    return rec.result()


def _component(pool: PoolState, k) -> list[int]:
    seen = {k}
    stack = [k]
    while stack:
        u = stack.pop()
        for w in pool.adj.get(u, ()):
            if w in pool.members and w not in seen:
                seen.add(w)
                stack.append(w)
    return sorted(seen)


class _Auction:
    """Non-bipartite bidding among the pool, restarted from zero prices.

    A vertex bids when it is unmatched and some neighbour offers a positive
    margin ``v - p``, or when it is matched and another neighbour offers a
    strictly larger margin than its partner.  The bid raises the target's
    price by the bidder's best-minus-second-best margin, frees the target's
    previous partner and (for a matched bidder) its own previous partner.
    """

    def __init__(self, pool: PoolState, rng: np.random.Generator):
        self.pool = pool
        self.rng = rng
        self.price: dict[int, float] = {}
        self.mate: dict[int, int] = {}
        self._local: dict[int, list] = {}

    def best(self, u):
        """Best neighbour of ``u`` at current prices, its margin, and the
        second-best margin (0 if there is none)."""
        best, m1, m2 = None, 0.0, 0.0
        price = self.price
        for w, v in self._local[u]:
            m = v - price[w]
            if m > m1 or (m == m1 and best is not None and w < best):
                if best is not None:
                    m2 = max(m2, m1)
                best, m1 = w, m
            elif m > m2:
                m2 = m
        return best, m1, m2

    def _bid_target(self, u):
        """``(w, m1, m2)`` if ``u`` wants to bid, else None."""
        w, m1, m2 = self.best(u)
        if w is None:
            return None
        mate = self.mate.get(u)
        if mate is None or (w != mate and m1 > self.pool.adj[u][mate] - self.price[mate] + TIE_TOL):
            return w, m1, m2
        return None

    def run(self):
        """Bid until nobody wants to, or ``n**2`` bids.  On hitting the cap
        the heaviest tentative matching seen is kept.  Returns
        ``(bids, cap_hit)``."""
        pool, adj = self.pool, self.pool.adj
        members = sorted(pool.members)
        self._local = {u: sorted((w, v) for w, v in adj.get(u, {}).items() if w in pool.members)
                       for u in members}
        self.price = {u: 0.0 for u in members}
        self.mate = {}
        # every vertex that wants to bid is in ``cand``; sampling from it and
        # dropping the ones that do not is uniform over the bidders
        cand = list(members)
        where = {u: i for i, u in enumerate(cand)}

        def add(y):
            if y not in where:
                where[y] = len(cand)
                cand.append(y)

        def drop(i):
            last = cand.pop()
            if i < len(cand):
                cand[i] = last
                where[last] = i
            return last

        cap = len(members) ** 2
        weight, best_weight, best_mate = 0.0, 0.0, {}
        bids = 0
        integers = self.rng.integers
        while cand:
            i = int(integers(len(cand)))
            u = cand[i]
            target = self._bid_target(u)
            if target is None:
                del where[u]
                drop(i)
                continue
            if bids >= cap:
                self.mate = best_mate
                return bids, True
            w, m1, m2 = target
            bids += 1
            add(w)
            for y in (u, w):
                z = self.mate.pop(y, None)
                if z is not None:
                    del self.mate[z]
                    weight -= adj[y][z]
                    add(z)
            self.price[w] += m1 - m2
            self.mate[u], self.mate[w] = w, u
            weight += adj[u][w]
            if weight > best_weight + TIE_TOL:
                best_weight, best_mate = weight, dict(self.mate)
            for y, _ in self._local[w]:
                add(y)
        return bids, False

    def weight(self) -> float:
        return math.fsum(self.pool.adj[a][b] for a, b in self.mate.items() if a < b)


def run_mdda(instance: DynamicInstance, deadlines=None, seed: int = 0, *,
             record_trace: bool = True) -> RunResult:
    """Re-run a price auction on the whole pool after each arrival.

    Prices and the tentative matching start from scratch every time and the
    next bidder is drawn uniformly from the vertices that want to bid (see
    :class:`_Auction`).  A critical vertex leaves with its tentative
    partner, if it has one.
    """
    deadlines = _deadlines(instance, deadlines, seed)
    rec = _Recorder(instance, "mdda", deadlines, seed, record_trace)
    pool = PoolState(instance)
    auction = _Auction(pool, np.random.default_rng(int(seed)))
    cap_hits = []
    total_bids = 0
    for ev in event_stream(instance, deadlines):
        t, k = ev.time, ev.vertex
        if ev.kind == ARRIVAL:
            pool.add(k)
            bids, hit = auction.run()
            total_bids += bids
            if hit:
                cap_hits.append(t)
            rec.log(t, ev.kind, k, f"auction bids={bids}" + (" cap" if hit else ""))
            continue
        if k not in pool:
            rec.log(t, ev.kind, k, "already matched", True)
            continue
        pool.discard(k)
        l = auction.mate.pop(k, None)
        if l is None:
            rec.log(t, ev.kind, k, "depart unmatched")
        else:
            del auction.mate[l]
            pool.discard(l)
            rec.log(t, ev.kind, k, rec.match(k, l, t))
    rec.audit.append(AuditRecord("bid_cap", None, True, f"cap hit at {len(cap_hits)} arrivals"))
    rec.info.update(cap_hits=cap_hits, bids=total_bids)
    return rec.result()

"""Two-sided market that keeps a maximum-weight matching with optimal duals.

Sellers carry prices ``p``, buyers carry margins ``q``.  A buyer arrival runs
an ascending auction in its zero-increment limit: grow an alternating forest
of tight edges from the new buyer (blue buyers, red sellers), augment when a
free seller is reached, otherwise shift duals by ``min(delta1, delta2)``.
Departures only delete rows and columns; duals are never recomputed.
"""
from __future__ import annotations

import math
from typing import Hashable, Mapping, NamedTuple, Optional

from .exceptions import (
    BuyerStillMatched,
    DuplicateVertex,
    NumericalInstability,
    UnknownSeller,
)
from .market import AuditRecord

TOL = 1e-9


class DualUpdate(NamedTuple):
    event: int
    delta: float
    red: tuple
    blue: tuple


class DualLedger:
    """Initial and final duals of every vertex that passed through a market."""

    def __init__(self):
        self.q_initial: dict[Hashable, float] = {}
        self.q_final: dict[Hashable, float] = {}
        self.p_final: dict[Hashable, float] = {}

    def identity_gap(self) -> float:
        """``sum p^f + sum q^f - sum q^i``; zero once every vertex is resolved."""
        return (math.fsum(self.p_final.values()) + math.fsum(self.q_final.values())
                - math.fsum(self.q_initial.values()))

    def resolved(self) -> bool:
        return set(self.q_initial) == set(self.q_final)

    def audit(self, tol: float = TOL) -> AuditRecord:
        if not self.resolved():
            missing = sorted(map(str, set(self.q_initial) - set(self.q_final)))[:5]
            return AuditRecord("ledger_identity", None, False, f"unresolved buyers {missing}")
        gap = self.identity_gap()
        scale = max(1.0, math.fsum(self.q_initial.values()))
        return AuditRecord("ledger_identity", None, abs(gap) <= tol * scale, f"gap {gap!r}")


class AuctionState:
    """Live bipartite market: prices, margins and a tentative matching.

    Vertex ids are arbitrary hashables; ties are broken by insertion order,
    which is arrival order for every caller in this package.
    """

    def __init__(self, tol: float = TOL, record_history: bool = True):
        self.tol = tol
        self.prices: dict[Hashable, float] = {}
        self.margins: dict[Hashable, float] = {}
        self.edges: dict[Hashable, dict[Hashable, float]] = {}
        self.mate_s: dict[Hashable, Hashable] = {}
        self.mate_b: dict[Hashable, Hashable] = {}
        self.ledger = DualLedger()
        self.dual_updates: list[DualUpdate] = []
        self.conservation: list[tuple[int, float]] = []
        self.history: Optional[dict[Hashable, list[float]]] = {} if record_history else None
        self.n_events = 0
        self._bidders: dict[Hashable, set] = {}
        self._order: dict[Hashable, int] = {}
        self._sellers_seen: set = set()

    # -- bookkeeping -----------------------------------------------------
    def _register(self, v):
        if v in self._order and (v in self.prices or v in self.margins):
            raise DuplicateVertex(v)
        self._order[v] = len(self._order)

    def _set_price(self, s, p):
        self.prices[s] = p
        if self.history is not None:
            self.history[s].append(p)

    def _set_margin(self, b, q):
        self.margins[b] = q
        if self.history is not None:
            self.history[b].append(q)

    def dual_sum(self) -> float:
        return math.fsum(self.prices.values()) + math.fsum(self.margins.values())

    def matching_weight(self) -> float:
        return math.fsum(self.edges[b][s] for s, b in self.mate_s.items())

    def present_edges(self) -> list[tuple[Hashable, Hashable, float]]:
        return [(s, b, v) for b, nbrs in self.edges.items() for s, v in nbrs.items()]

    # -- arrivals --------------------------------------------------------
    def add_seller(self, s) -> None:
        self._register(s)
        self._sellers_seen.add(s)
        self.prices[s] = 0.0
        self._bidders[s] = set()
        if self.history is not None:
            self.history[s] = [0.0]

    def add_buyer(self, b, edge_values: Mapping[Hashable, float]) -> float:
        """Insert buyer ``b`` and run the auction; returns its initial margin."""
        for s in edge_values:
            if s not in self.prices:
                raise UnknownSeller(s)
        self._register(b)
        self.n_events += 1
        before = self.dual_sum()

        order = self._order
        nbrs = {s: float(edge_values[s]) for s in sorted(edge_values, key=order.__getitem__)}
        self.edges[b] = nbrs
        for s in nbrs:
            self._bidders[s].add(b)
        best = max((v - self.prices[s] for s, v in nbrs.items()), default=0.0)
        q0 = best if best > self.tol else 0.0
        self.margins[b] = q0
        if self.history is not None:
            self.history[b] = [q0]
        if q0 > 0.0:
            self._auction(b)

        after = self.dual_sum() - self.margins[b]
        self.conservation.append((self.n_events, after - before))
        self.ledger.q_initial[b] = self.margins[b]
        return self.margins[b]

    def _auction(self, root) -> None:
        tol = self.tol
        prices, margins, edges = self.prices, self.margins, self.edges
        mate_s, mate_b, order = self.mate_s, self.mate_b, self._order
        while True:
            blue = [root]
            blue_set = {root}
            red: dict = {}
            free = []
            i = 0
            while i < len(blue):
                b = blue[i]
                i += 1
                qb = margins[b]
                own = mate_b.get(b)
                for s, v in edges[b].items():
                    if s in red or s == own:
                        continue
                    if prices[s] + qb - v <= tol:
                        red[s] = b
                        m = mate_s.get(s)
                        if m is None:
                            free.append(s)
                        elif m not in blue_set:
                            blue_set.add(m)
                            blue.append(m)
            if free:
                self._augment(min(free, key=order.__getitem__), red, root)
                return

            delta1 = min(margins[b] for b in blue)
            if delta1 > tol:
                delta2 = math.inf
                for b in blue:
                    qb = margins[b]
                    for s, v in edges[b].items():
                        if s not in red:
                            slack = prices[s] + qb - v
                            if slack < delta2:
                                delta2 = slack
                if delta2 < -tol:
                    raise NumericalInstability(f"negative slack {delta2!r} in auction for {root!r}")
                terminate = delta1 <= delta2 + tol
                delta = delta1 if terminate else delta2
                for s in red:
                    self._set_price(s, prices[s] + delta)
                for b in blue:
                    q = margins[b] - delta
                    self._set_margin(b, 0.0 if q <= tol else q)
                self.dual_updates.append(DualUpdate(self.n_events, delta, tuple(red), tuple(blue)))
                if not terminate:
                    continue
            zero = min((b for b in blue if margins[b] <= tol), key=order.__getitem__)
            self._flip(zero, red, root)
            return

    def _augment(self, s, red, root) -> None:
        mate_s, mate_b = self.mate_s, self.mate_b
        while True:
            b = red[s]
            previous = mate_b.get(b)
            mate_s[s] = b
            mate_b[b] = s
            if b == root:
                return
            s = previous

    def _flip(self, end, red, root) -> None:
        """Shift the alternating path root -> end so ``end`` ends up unmatched."""
        if end == root:
            return
        path = []
        b = end
        while b != root:
            s = self.mate_b[b]
            path.append((s, red[s]))
            b = red[s]
        del self.mate_b[end]
        for s, b in path:
            self.mate_s[s] = b
            self.mate_b[b] = s

    # -- departures ------------------------------------------------------
    def _drop_buyer(self, b) -> None:
        for s in self.edges.pop(b):
            self._bidders[s].discard(b)
        del self.margins[b]

    def _drop_seller(self, s) -> list:
        del self.prices[s]
        orphans = []
        for b in self._bidders.pop(s):
            nbrs = self.edges[b]
            del nbrs[s]
            if not nbrs:
                orphans.append(b)
        return orphans

    def finalize_seller(self, s):
        """Remove seller ``s`` together with its tentative buyer, if any.

        Returns ``(buyer or None, orphaned_buyers)`` where the second item
        lists buyers left without any live seller.
        """
        if s not in self.prices:
            raise UnknownSeller(s)
        self.ledger.p_final[s] = self.prices[s]
        b = self.mate_s.pop(s, None)
        if b is not None:
            del self.mate_b[b]
            self.ledger.q_final[b] = self.margins[b]
            self._drop_buyer(b)
        orphans = self._drop_seller(s)
        return b, [o for o in orphans if o in self.margins]

    def remove_buyer(self, b) -> None:
        if b not in self.margins:
            raise KeyError(b)
        if b in self.mate_b:
            raise BuyerStillMatched(f"buyer {b!r} is tentatively matched to {self.mate_b[b]!r}")
        self.ledger.q_final[b] = self.margins[b]
        self._drop_buyer(b)

    # -- auditing --------------------------------------------------------
    def audit_state(self, time: Optional[int] = None) -> list[AuditRecord]:
        tol = self.tol
        records = []

        bad = [(s, b) for s, b, v in self.present_edges()
               if v > self.prices[s] + self.margins[b] + tol]
        records.append(AuditRecord("dual_feasible", time, not bad, f"violating edges {bad[:3]}"))
        bad = [(s, b) for s, b in self.mate_s.items()
               if abs(self.edges[b][s] - self.prices[s] - self.margins[b]) > tol]
        records.append(AuditRecord("cs1_tight", time, not bad, f"non-tight matched pairs {bad[:3]}"))
        bad = [s for s, p in self.prices.items() if s not in self.mate_s and p > tol]
        records.append(AuditRecord("cs2_free_sellers", time, not bad, f"priced free sellers {bad[:3]}"))
        bad = [b for b, q in self.margins.items() if b not in self.mate_b and q > tol]
        records.append(AuditRecord("cs3_free_buyers", time, not bad, f"free buyers with margin {bad[:3]}"))
        neg = [v for v, x in list(self.prices.items()) + list(self.margins.items()) if x < -tol]
        records.append(AuditRecord("duals_nonnegative", time, not neg, f"negative duals {neg[:3]}"))

        if self.history is not None:
            bad = []
            for v, seq in self.history.items():
                sign = 1.0 if v in self._sellers_seen else -1.0
                if any(sign * (b - a) < -tol for a, b in zip(seq, seq[1:])):
                    bad.append(v)
            records.append(AuditRecord("monotone_duals", time, not bad, f"non-monotone vertices {bad[:3]}"))

        bad = [(e, g) for e, g in self.conservation if abs(g) > tol * max(1.0, self.dual_sum())]
        records.append(AuditRecord("conservation", time, not bad, f"nonzero gaps {bad[:3]}"))
        bad = [u.event for u in self.dual_updates if len(u.red) != len(u.blue) - 1]
        records.append(AuditRecord("red_blue_balance", time, not bad, f"unbalanced updates {bad[:3]}"))
        return records

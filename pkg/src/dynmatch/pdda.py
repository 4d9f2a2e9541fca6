"""Postponed Dynamic Deferred Acceptance on arbitrary graphs.

Each real vertex ``k`` gets a seller copy ``("s", k)`` and a buyer copy
``("b", k)`` in a virtual two-sided market run by the auction engine.  When
``k`` becomes critical its seller copy is finalized; which copy counts for
the real matching is decided by a coin flip for undetermined vertices and
propagated along the resulting paths.
"""
from __future__ import annotations

import math
from collections import defaultdict
from typing import NamedTuple, Optional

from .auction import AuctionState
from .exceptions import BuyerStillMatched, CycleDetected, InstanceError, RoleConflict
from .market import (
    ARRIVAL,
    AuditRecord,
    Coins,
    DynamicInstance,
    Matching,
    RunResult,
    TraceRecord,
    build_instance,
    event_stream,
    finish_run,
    resolve_deadlines,
)
from .oracle import verify_certificate

UNDETERMINED = "U"
SELLER = "S"
BUYER = "B"


class RoleRecord(NamedTuple):
    vertex: int
    time: int
    status: str
    cause: str


def _s(k):
    return ("s", k)


def _b(k):
    return ("b", k)


def order_preserving(instance: DynamicInstance, deadlines) -> DynamicInstance:
    """Drop edges whose endpoints do not depart in arrival order.

    Edge ``(i, j)``, ``i < j``, is kept iff ``i + d_i <= j + d_j``.
    """
    kept = {(i, j): v for (i, j), v in instance.values.items()
            if i + deadlines[i - 1] <= j + deadlines[j - 1]}
    return build_instance(instance.T, kept, instance.departure, metadata=instance.metadata)


class _PDDARun:
    def __init__(self, instance, deadlines, coins, unknown, check_every_step, record_trace):
        self.inst = instance
        self.deadlines = deadlines
        self.coins = coins
        self.unknown = unknown
        self.check = check_every_step
        self.record_trace = record_trace
        self.state = AuctionState(record_history=check_every_step)
        self.status: dict[int, str] = {}
        self.present: set[int] = set()
        self.matching = Matching()
        self.collected: list[float] = []
        self.virtual_pairs: list[tuple[int, int]] = []
        # finalized pairs whose buyer had already left; no role crosses them
        self.gone_pairs: list[tuple[int, int]] = []
        self.roles_log: list[RoleRecord] = []
        self.trace: list[TraceRecord] = []
        self.audit: list[AuditRecord] = []
        self.buyer_copy_busy: list[int] = []
        self.step_failures = 0

    def set_role(self, k, role, t, cause):
        cur = self.status[k]
        if cur == role:
            return
        if cur != UNDETERMINED:
            raise RoleConflict(f"vertex {k} is {cur}, propagation wants {role} at t={t}")
        self.status[k] = role
        self.roles_log.append(RoleRecord(k, t, role, cause))

    def collect_orphans(self, orphans):
        for b in orphans:
            self.state.remove_buyer(b)

    def arrive(self, k):
        state = self.state
        self.status[k] = UNDETERMINED
        self.present.add(k)
        state.add_seller(_s(k))
        nbrs = {_s(l): v for l, v in self.inst.adjacency[k].items()
                if l < k and _s(l) in state.prices}
        state.add_buyer(_b(k), nbrs)
        if self.unknown and not nbrs:
            state.remove_buyer(_b(k))
        return "add copies"

    def critical(self, k, t):
        state = self.state
        if not self.unknown and _b(k) in state.margins:
            if _b(k) in state.mate_b:
                self.buyer_copy_busy.append(k)
                raise BuyerStillMatched(f"buyer copy of {k} still matched at its critical time {t}")
            state.remove_buyer(_b(k))
        buyer, orphans = state.finalize_seller(_s(k))
        l = buyer[1] if buyer is not None else None
        if l is not None:
            self.virtual_pairs.append((k, l))
        if self.unknown:
            self.collect_orphans(orphans)

        was_present = k in self.present
        self.present.discard(k)
        if self.status[k] == UNDETERMINED:
            self.set_role(k, SELLER if self.coins.flip() else BUYER, t, "coin")
        role = self.status[k]
        if l is None:
            return f"role {role}, no tentative partner", not was_present
        if self.unknown and l not in self.present:
            self.audit.append(AuditRecord("partner_gone", t, True, f"seller {k} lost buyer {l}"))
            self.gone_pairs.append((k, l))
            return f"role {role}, partner {l} gone", not was_present
        if role == SELLER:
            v = self.inst.value(k, l)
            self.matching.add(k, l, t)
            self.collected.append(v)
            self.present.discard(l)
            self.set_role(l, BUYER, t, "propagation")
            return f"finalize ({k},{l}) value={v:g}", False
        self.set_role(l, SELLER, t, "propagation")
        return f"role {role}, {l} set to seller", not was_present

    def run(self):
        for ev in event_stream(self.inst, self.deadlines):
            t, k = ev.time, ev.vertex
            if ev.kind == ARRIVAL:
                action, inert = self.arrive(k), False
            else:
                action, inert = self.critical(k, t)
            if self.record_trace:
                self.trace.append(TraceRecord(t, ev.kind, k, action, inert))
            if self.check:
                for rec in self.state.audit_state(t):
                    if not rec.passed:
                        self.step_failures += 1
                        self.audit.append(rec)


def _run(name, instance, deadlines, coins, unknown, check_every_step, record_trace, seed,
         certificate_instance=None) -> RunResult:
    run = _PDDARun(instance, deadlines, coins, unknown, check_every_step, record_trace)
    run.run()
    state, ledger = run.state, run.state.ledger
    audit = run.audit
    if check_every_step:
        audit.append(AuditRecord("step_audits", None, run.step_failures == 0,
                                 f"{run.step_failures} failures"))
    audit.append(ledger.audit())
    lam = {k: ledger.p_final.get(_s(k), 0.0) + ledger.q_initial.get(_b(k), 0.0)
           for k in range(1, instance.T + 1)}
    audit.append(verify_certificate(certificate_instance or instance, lam, deadlines=deadlines))
    audit.append(AuditRecord("buyer_copy_free_at_critical", None, not run.buyer_copy_busy,
                             f"busy copies {run.buyer_copy_busy[:3]}"))
    linked = [p for p in run.virtual_pairs if p not in set(run.gone_pairs)]
    try:
        decompose_two_matching(run.virtual_pairs)
        decompose_two_matching(linked, run.status)
        audit.append(AuditRecord("two_matching_paths", None, True))
    except (CycleDetected, RoleConflict) as exc:
        audit.append(AuditRecord("two_matching_paths", None, False, str(exc)))
    result = RunResult(
        name, run.matching, math.fsum(run.collected), tuple(deadlines), seed=seed, ledger=ledger,
        audit=audit, trace=run.trace,
        info={"virtual_pairs": run.virtual_pairs, "linked_pairs": linked, "roles": dict(run.status),
              "role_log": run.roles_log, "certificate": lam, "certificate_scope": instance,
              "coins_used": coins.used},
    )
    return finish_run(result, instance)


def run_pdda(instance: DynamicInstance, seed: int = 0, *, coins=None,
             check_every_step: bool = False, record_trace: bool = True) -> RunResult:
    """PDDA with a constant deadline."""
    d = instance.common_deadline
    if d is None:
        raise InstanceError("run_pdda requires a constant deadline")
    coins = coins if coins is not None else Coins(seed)
    return _run("pdda", instance, (d,) * instance.T, coins, False, check_every_step, record_trace, seed)


def run_pdda_known_departures(instance: DynamicInstance, deadlines=None, seed: int = 0, *, coins=None,
                              check_every_step: bool = False, record_trace: bool = True) -> RunResult:
    """PDDA when every deadline is known on arrival.

    Edges whose endpoints would depart out of arrival order are zeroed
    first; the run itself then uses each vertex's own critical time.
    """
    if deadlines is None:
        deadlines = resolve_deadlines(instance, seed)
    deadlines = tuple(deadlines)
    coins = coins if coins is not None else Coins(seed)
    filtered = order_preserving(instance, deadlines)
    result = _run("pdda-known", filtered, deadlines, coins, False, check_every_step, record_trace, seed)
    result.info["dropped_edges"] = len(instance.values) - len(filtered.values)
    return result


def run_pdda_unknown_departures(instance: DynamicInstance, deadlines=None, seed: int = 0, *, coins=None,
                                check_every_step: bool = False, record_trace: bool = True) -> RunResult:
    """PDDA when a deadline is only revealed as the vertex becomes critical.

    Buyer copies never become critical; each is discarded once every seller
    it bid on has left.  A seller's real match goes through only if its
    tentative buyer is still in the market.
    """
    if deadlines is None:
        deadlines = resolve_deadlines(instance, seed)
    coins = coins if coins is not None else Coins(seed)
    return _run("pdda-unknown", instance, tuple(deadlines), coins, True, check_every_step, record_trace, seed)


def decompose_two_matching(pairs, roles: Optional[dict] = None) -> list[list[int]]:
    """Split finalized virtual pairs ``(k, l)`` (seller copy of ``k`` with
    buyer copy of ``l``) into vertex-disjoint paths of real vertices.

    Raises :class:`CycleDetected` if a component is a cycle or a vertex has
    degree above two, and :class:`RoleConflict` if ``roles`` is given and
    two neighbours on a path share a resolved role.
    """
    adj: dict[int, list[int]] = defaultdict(list)
    for k, l in pairs:
        adj[k].append(l)
        adj[l].append(k)
    for v, nb in adj.items():
        if len(nb) > 2 or len(set(nb)) != len(nb):
            raise CycleDetected(f"vertex {v} has neighbours {nb}, not a 2-matching of paths")
    seen: set[int] = set()
    paths = []
    for start in sorted(adj):
        if start in seen or len(adj[start]) != 1:
            continue
        path = [start]
        seen.add(start)
        prev, cur = None, start
        while True:
            nxt = [x for x in adj[cur] if x != prev]
            if not nxt:
                break
            prev, cur = cur, nxt[0]
            path.append(cur)
            seen.add(cur)
        paths.append(path)
    leftover = sorted(set(adj) - seen)
    if leftover:
        raise CycleDetected(f"cycle through vertices {leftover}")
    if roles is not None:
        for path in paths:
            for a, b in zip(path, path[1:]):
                ra, rb = roles.get(a), roles.get(b)
                if ra in (SELLER, BUYER) and ra == rb:
                    raise RoleConflict(f"adjacent vertices {a},{b} both resolved as {ra}")
    return paths

"""Dynamic Deferred Acceptance on constrained bipartite inputs, and its
randomized-role wrapper for arbitrary inputs."""
from __future__ import annotations

import math
from dataclasses import dataclass
from functools import cached_property
from typing import Callable, Optional

from .auction import AuctionState
from .exceptions import BudgetExceeded, InstanceError
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
)
from .oracle import verify_certificate

SELLER = "S"
BUYER = "B"

MAX_COIN_BUDGET = 20


@dataclass(frozen=True)
class ConstrainedBipartiteInstance:
    """An instance with a fixed seller/buyer label per vertex.

    Only edges from an earlier seller to a later buyer survive; every other
    edge is dropped when :attr:`instance` is built.
    """

    base: DynamicInstance
    roles: tuple[str, ...]

    def __post_init__(self):
        if len(self.roles) != self.base.T or set(self.roles) - {SELLER, BUYER}:
            raise InstanceError("roles must be one 'S' or 'B' label per vertex")

    @classmethod
    def from_instance(cls, instance: DynamicInstance, roles=None) -> "ConstrainedBipartiteInstance":
        roles = tuple(roles) if roles is not None else instance.roles
        if roles is None:
            raise InstanceError("no role labels given and none in instance metadata")
        return cls(instance, tuple(roles))

    @cached_property
    def instance(self) -> DynamicInstance:
        kept = {(i, j): v for (i, j), v in self.base.values.items()
                if self.roles[i - 1] == SELLER and self.roles[j - 1] == BUYER}
        meta = dict(self.base.metadata)
        meta["roles"] = "".join(self.roles)
        return build_instance(self.base.T, kept, self.base.departure, metadata=meta)


def run_dda(
    cbi: ConstrainedBipartiteInstance,
    *,
    on_event: Optional[Callable] = None,
    check_every_step: bool = False,
    record_trace: bool = True,
) -> RunResult:
    """Replay the event stream through the auction engine.

    Seller arrival adds a zero-priced seller, buyer arrival runs an auction,
    a critical seller is finalized with its tentative buyer, a critical
    buyer leaves (it is always free by then).  ``on_event(state, event)`` is
    called after every processed event.
    """
    inst = cbi.instance
    d = inst.common_deadline
    if d is None:
        raise InstanceError("DDA requires a constant deadline")
    deadlines = (d,) * inst.T
    roles = cbi.roles
    state = AuctionState(record_history=check_every_step)
    matching = Matching()
    collected = []
    trace: list[TraceRecord] = []
    audit: list[AuditRecord] = []
    step_failures = 0

    for ev in event_stream(inst, deadlines):
        t, k = ev.time, ev.vertex
        if ev.kind == ARRIVAL:
            if roles[k - 1] == SELLER:
                state.add_seller(k)
                action = "add_seller"
            else:
                nbrs = {s: v for s, v in inst.adjacency[k].items() if s < k and s in state.prices}
                q = state.add_buyer(k, nbrs)
                action = f"add_buyer q={q:g}"
            inert = False
        elif roles[k - 1] == SELLER:
            b, _ = state.finalize_seller(k)
            if b is not None:
                v = inst.value(k, b)
                matching.add(k, b, t)
                collected.append(v)
                action = f"finalize ({k},{b}) value={v:g}"
            else:
                action = "depart unmatched"
            inert = False
        elif k in state.margins:
            state.remove_buyer(k)
            action, inert = "depart unmatched", False
        else:
            action, inert = "already matched", True
        if record_trace:
            trace.append(TraceRecord(t, ev.kind, k, action, inert))
        if check_every_step:
            for rec in state.audit_state(t):
                if not rec.passed:
                    step_failures += 1
                    audit.append(rec)
        if on_event is not None:
            on_event(state, ev)

    if check_every_step:
        audit.append(AuditRecord("step_audits", None, step_failures == 0, f"{step_failures} failures"))
    ledger = state.ledger
    audit.append(ledger.audit())
    lam = {s: ledger.p_final.get(s, 0.0) for s in ledger.p_final}
    lam.update(ledger.q_initial)
    audit.append(verify_certificate(inst, lam, deadlines=deadlines))
    late = [(k, l, t) for k, l, t in matching.pairs if t != k + d]
    audit.append(AuditRecord("sellers_wait_until_critical", None, not late, f"early pairs {late[:3]}"))
    result = RunResult("dda", matching, math.fsum(collected), deadlines, ledger=ledger,
                       audit=audit, trace=trace,
                       info={"roles": roles, "dual_updates": len(state.dual_updates),
                             "certificate": lam, "certificate_scope": inst})
    return finish_run(result, inst)


def draw_roles(T: int, coins) -> tuple[str, ...]:
    """One fair coin per vertex in arrival order; heads makes a seller."""
    return tuple(SELLER if coins.flip() else BUYER for _ in range(T))


def run_sdda(instance: DynamicInstance, seed: int = 0, *, coins=None, **kwargs) -> RunResult:
    """Random roles, drop edges not going from an earlier seller to a later
    buyer, then run DDA."""
    if instance.common_deadline is None:
        raise InstanceError("SDDA requires a constant deadline")
    coins = coins if coins is not None else Coins(seed)
    roles = draw_roles(instance.T, coins)
    result = run_dda(ConstrainedBipartiteInstance(instance, roles), **kwargs)
    result.algorithm = "sdda"
    result.seed = seed
    return result


class _NeedCoin(Exception):
    pass


class ScriptedCoins:
    """Coin source replaying a fixed prefix of flips."""

    def __init__(self, flips):
        self.flips = tuple(flips)
        self.used = 0

    def flip(self) -> bool:
        if self.used >= len(self.flips):
            raise _NeedCoin
        self.used += 1
        return bool(self.flips[self.used - 1])


def expected_value_exact(algorithm, instance: DynamicInstance, coin_budget: int = MAX_COIN_BUDGET,
                         **kwargs) -> float:
    """Exact expected collected value, enumerating every coin outcome.

    ``algorithm`` is a callable ``(instance, coins=..., **kwargs)`` or a
    registered algorithm name.  Branches are explored lazily, so only the
    coins actually requested by the run are enumerated.
    """
    if coin_budget > MAX_COIN_BUDGET:
        raise ValueError(f"coin budget is capped at {MAX_COIN_BUDGET}")
    if isinstance(algorithm, str):
        from .algorithms import get_algorithm
        algorithm = get_algorithm(algorithm)
    terms = []
    stack: list[tuple[int, ...]] = [()]
    while stack:
        prefix = stack.pop()
        try:
            result = algorithm(instance, coins=ScriptedCoins(prefix), **kwargs)
        except _NeedCoin:
            if len(prefix) >= coin_budget:
                raise BudgetExceeded(f"more than {coin_budget} coin flips needed") from None
            stack.append(prefix + (0,))
            stack.append(prefix + (1,))
            continue
        terms.append(math.ldexp(result.total_value, -len(prefix)))
    return math.fsum(terms)

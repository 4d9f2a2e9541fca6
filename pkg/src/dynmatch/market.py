"""Instances, departure models, the event timeline, matchings and run results.

Vertices are identified by their arrival index ``1..T``.  Vertex ``k`` arrives
at time ``k`` and becomes critical at ``k + d_k``; within one time step the
arrival is processed before any critical event, and critical events are
processed by ascending vertex index.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from functools import cached_property
from types import MappingProxyType
from typing import Iterable, Mapping, NamedTuple, Optional, Sequence

import numpy as np

from .exceptions import (
    BadDeadlineLength,
    InstanceError,
    NegativeValue,
    WindowViolation,
)

KNOWN = "known"
REVEALED = "revealed"

ARRIVAL = "arrival"
CRITICAL = "critical"
_KIND_ORDER = {ARRIVAL: 0, CRITICAL: 1}

SUM_TOL = 1e-9


@dataclass(frozen=True)
class DepartureModel:
    """How long each vertex stays in the market.

    ``kind`` is one of ``const``, ``pervertex``, ``geom``, ``exp`` or
    ``empirical``.  ``knowledge`` says whether a vertex's deadline is known
    when it arrives (``known``) or only when it becomes critical
    (``revealed``).

    Geometric deadlines follow the per-step survival reading: an unmatched
    vertex stays one more step with probability ``delta``, so
    ``P(d >= k) = delta**k``.  Exponential deadlines are the floor of an
    exponential draw with the given mean.
    """

    kind: str
    params: tuple = ()
    knowledge: str = KNOWN

    def __post_init__(self):
        if self.knowledge not in (KNOWN, REVEALED):
            raise InstanceError(f"unknown knowledge mode {self.knowledge!r}")
        if self.kind == "const":
            (d,) = self.params
            if int(d) != d or d < 0:
                raise InstanceError(f"constant deadline must be a nonnegative integer, got {d!r}")
        elif self.kind in ("pervertex", "empirical"):
            if any(int(x) != x or x < 0 for x in self.params):
                raise InstanceError("deadlines must be nonnegative integers")
            if self.kind == "empirical" and not self.params:
                raise InstanceError("empirical deadline distribution is empty")
        elif self.kind == "geom":
            (delta,) = self.params
            if not 0.0 < delta < 1.0:
                raise InstanceError(f"geometric delta must lie in (0,1), got {delta!r}")
        elif self.kind == "exp":
            (mean,) = self.params
            if not mean > 0:
                raise InstanceError(f"exponential mean must be positive, got {mean!r}")
        else:
            raise InstanceError(f"unknown departure kind {self.kind!r}")

    @classmethod
    def constant(cls, d: int, knowledge: str = KNOWN) -> "DepartureModel":
        return cls("const", (int(d),), knowledge)

    @classmethod
    def per_vertex(cls, deadlines: Iterable[int], knowledge: str = KNOWN) -> "DepartureModel":
        return cls("pervertex", tuple(int(x) for x in deadlines), knowledge)

    @classmethod
    def geometric(cls, delta: float, knowledge: str = KNOWN) -> "DepartureModel":
        return cls("geom", (float(delta),), knowledge)

    @classmethod
    def exponential(cls, mean: float, knowledge: str = KNOWN) -> "DepartureModel":
        return cls("exp", (float(mean),), knowledge)

    @classmethod
    def empirical(cls, values: Iterable[int], knowledge: str = KNOWN) -> "DepartureModel":
        return cls("empirical", tuple(int(x) for x in values), knowledge)

    @property
    def is_deterministic(self) -> bool:
        return self.kind in ("const", "pervertex")

    def sample(self, T: int, rng: np.random.Generator) -> tuple[int, ...]:
        if self.kind == "const":
            return (self.params[0],) * T
        if self.kind == "pervertex":
            if len(self.params) != T:
                raise BadDeadlineLength(f"expected {T} deadlines, got {len(self.params)}")
            return tuple(self.params)
        if T == 0:
            return ()
        if self.kind == "geom":
            draws = rng.geometric(1.0 - self.params[0], size=T) - 1
        elif self.kind == "exp":
            draws = np.floor(rng.exponential(self.params[0], size=T))
        else:
            draws = rng.choice(np.asarray(self.params), size=T)
        return tuple(int(x) for x in draws)


@dataclass(frozen=True)
class DynamicInstance:
    """The full input of the online problem.

    ``values`` maps ``(i, j)`` with ``i < j`` to a nonnegative match value;
    pairs that are absent have value 0 and are not edges.
    """

    T: int
    values: Mapping[tuple[int, int], float]
    departure: DepartureModel
    metadata: Mapping[str, str] = field(default_factory=dict)

    @cached_property
    def adjacency(self) -> dict[int, dict[int, float]]:
        adj: dict[int, dict[int, float]] = {k: {} for k in range(1, self.T + 1)}
        for (i, j), v in self.values.items():
            adj[i][j] = v
            adj[j][i] = v
        return adj

    @property
    def uniform_d(self) -> Optional[int]:
        return self.departure.params[0] if self.departure.kind == "const" else None

    @property
    def roles(self) -> Optional[tuple[str, ...]]:
        labels = self.metadata.get("roles")
        return tuple(labels) if labels else None

    @property
    def common_deadline(self) -> Optional[int]:
        """The deadline shared by every vertex, if deadlines are fixed and equal."""
        if self.departure.kind == "const":
            return self.departure.params[0]
        if self.departure.kind == "pervertex" and len(set(self.departure.params)) == 1:
            return self.departure.params[0]
        return None

    def value(self, i: int, j: int) -> float:
        if i > j:
            i, j = j, i
        return self.values.get((i, j), 0.0)

    def edges(self):
        """Yield ``(i, j, v)`` in lexicographic order."""
        for key in sorted(self.values):
            yield key[0], key[1], self.values[key]

    def deadlines(self) -> tuple[int, ...]:
        if not self.departure.is_deterministic:
            raise InstanceError("instance has stochastic deadlines; use resolve_deadlines")
        return self.departure.sample(self.T, None)


def build_instance(
    T: int,
    values=(),
    departure=None,
    *,
    metadata: Optional[Mapping[str, str]] = None,
) -> DynamicInstance:
    """Validate and freeze an instance.

    ``values`` is a mapping ``{(i, j): v}`` or an iterable of ``(i, j, v)``.
    ``departure`` is a :class:`DepartureModel` or an integer shorthand for a
    constant deadline.
    """
    T = int(T)
    if T < 0:
        raise InstanceError(f"horizon must be nonnegative, got {T}")
    if departure is None:
        departure = DepartureModel.constant(max(T, 1))
    elif not isinstance(departure, DepartureModel):
        departure = DepartureModel.constant(departure)
    if departure.kind == "pervertex" and len(departure.params) != T:
        raise BadDeadlineLength(f"expected {T} deadlines, got {len(departure.params)}")

    if isinstance(values, Mapping):
        triples = ((i, j, v) for (i, j), v in values.items())
    else:
        triples = values
    table: dict[tuple[int, int], float] = {}
    d = departure.params[0] if departure.kind == "const" else None
    for i, j, v in triples:
        i, j, v = int(i), int(j), float(v)
        if not 1 <= i < j <= T:
            raise InstanceError(f"edge ({i},{j}) must satisfy 1 <= i < j <= {T}")
        if v < 0 or math.isnan(v):
            raise NegativeValue(i, j, v)
        if d is not None and j - i > d:
            raise WindowViolation(i, j, d)
        table[(i, j)] = v
    return DynamicInstance(T, MappingProxyType(table), departure,
                           MappingProxyType(dict(metadata or {})))


def deadline_rng(seed: int) -> np.random.Generator:
    """Generator for deadline draws, independent of the coin stream."""
    return np.random.default_rng([int(seed), 0xD1])


def resolve_deadlines(instance: DynamicInstance, seed: int = 0) -> tuple[int, ...]:
    if instance.departure.is_deterministic:
        return instance.deadlines()
    return instance.departure.sample(instance.T, deadline_rng(seed))


def _check_deadlines(instance: DynamicInstance, deadlines) -> tuple[int, ...]:
    if deadlines is None:
        return resolve_deadlines(instance)
    deadlines = tuple(int(x) for x in deadlines)
    if len(deadlines) != instance.T:
        raise BadDeadlineLength(f"expected {instance.T} deadlines, got {len(deadlines)}")
    return deadlines


class Coins:
    """Seeded stream of fair coins; ``flip()`` returns True for heads."""

    def __init__(self, seed: int = 0):
        self.seed = seed
        self._rng = np.random.default_rng(int(seed))
        self.used = 0

    def flip(self) -> bool:
        self.used += 1
        return bool(self._rng.integers(2))


class Event(NamedTuple):
    time: int
    kind: str
    vertex: int

    def sort_key(self):
        return (self.time, _KIND_ORDER[self.kind], self.vertex)


def event_stream(instance: DynamicInstance, deadlines=None, seed: int = 0) -> list[Event]:
    """Merged arrival/critical timeline.

    Arrival of ``k`` is at ``k`` and its critical event at ``k + d_k``.  At
    equal times arrivals come first, then critical events by vertex index.
    """
    if deadlines is None:
        deadlines = resolve_deadlines(instance, seed)
    deadlines = _check_deadlines(instance, deadlines)
    events = [Event(k, ARRIVAL, k) for k in range(1, instance.T + 1)]
    events += [Event(k + deadlines[k - 1], CRITICAL, k) for k in range(1, instance.T + 1)]
    events.sort(key=Event.sort_key)
    return events


class AuditRecord(NamedTuple):
    name: str
    time: Optional[int]
    passed: bool
    detail: str = ""


class TraceRecord(NamedTuple):
    time: int
    kind: str
    vertex: int
    action: str
    inert: bool = False


class Matching:
    """Finalized pairs with the time each pair was finalized."""

    def __init__(self, pairs: Iterable[tuple[int, int, int]] = ()):
        self._pairs: list[tuple[int, int, int]] = []
        self._partner: dict[int, int] = {}
        for k, l, t in pairs:
            self._append(k, l, t)

    def _append(self, k, l, t):
        if k > l:
            k, l = l, k
        self._pairs.append((k, l, t))
        self._partner.setdefault(k, l)
        self._partner.setdefault(l, k)

    def add(self, k: int, l: int, time: int) -> None:
        if k in self._partner or l in self._partner:
            raise ValueError(f"vertex already matched when adding ({k},{l})")
        self._append(k, l, time)

    def partner(self, k: int) -> Optional[int]:
        return self._partner.get(k)

    @property
    def pairs(self) -> list[tuple[int, int, int]]:
        return sorted(self._pairs)

    def pair_set(self) -> frozenset[tuple[int, int]]:
        return frozenset((k, l) for k, l, _ in self._pairs)

    def value(self, instance: DynamicInstance) -> float:
        return math.fsum(instance.value(k, l) for k, l, _ in self._pairs)

    def __contains__(self, vertex) -> bool:
        return vertex in self._partner

    def __len__(self):
        return len(self._pairs)

    def __iter__(self):
        return iter(self.pairs)

    def __eq__(self, other):
        return isinstance(other, Matching) and self.pairs == other.pairs

    def __repr__(self):
        return f"Matching({self.pairs})"


def validate_matching(instance: DynamicInstance, matching: Matching, deadlines=None) -> AuditRecord:
    """Check degree, edge existence and presence windows of every pair."""
    deadlines = _check_deadlines(instance, deadlines)
    seen: set[int] = set()
    for k, l, t in matching.pairs:
        if not (1 <= k <= instance.T and 1 <= l <= instance.T) or k == l:
            return AuditRecord("matching_valid", t, False, f"pair ({k},{l}) has invalid vertices")
        if k in seen or l in seen:
            return AuditRecord("matching_valid", t, False, f"pair ({k},{l}) reuses a vertex")
        seen.update((k, l))
        if (k, l) not in instance.values:
            return AuditRecord("matching_valid", t, False, f"pair ({k},{l}) is not an edge")
        lo, hi = max(k, l), min(k + deadlines[k - 1], l + deadlines[l - 1])
        if not lo <= t <= hi:
            return AuditRecord("matching_valid", t, False,
                               f"pair ({k},{l}) finalized at {t}, outside presence window [{lo},{hi}]")
    return AuditRecord("matching_valid", None, True)


@dataclass
class RunResult:
    """Outcome of one algorithm run."""

    algorithm: str
    matching: Matching
    total_value: float
    deadlines: tuple[int, ...]
    seed: Optional[int] = None
    ledger: Optional[object] = None
    audit: list[AuditRecord] = field(default_factory=list)
    trace: list[TraceRecord] = field(default_factory=list)
    info: dict = field(default_factory=dict)

    @property
    def passed(self) -> bool:
        return all(rec.passed for rec in self.audit)

    def failures(self) -> list[AuditRecord]:
        return [rec for rec in self.audit if not rec.passed]

    @property
    def matched_fraction(self) -> float:
        T = len(self.deadlines)
        return 2 * len(self.matching) / T if T else 0.0


def finish_run(result: RunResult, instance: DynamicInstance) -> RunResult:
    """Append the audits every run must pass."""
    result.audit.append(validate_matching(instance, result.matching, result.deadlines))
    expected = result.matching.value(instance)
    result.audit.append(AuditRecord(
        "total_value", None, abs(expected - result.total_value) <= SUM_TOL * max(1.0, abs(expected)),
        f"collected {result.total_value!r}, pairs sum to {expected!r}"))
    return result


def co_present(deadlines: Sequence[int], i: int, j: int) -> bool:
    """True if ``i < j`` are ever simultaneously present."""
    return j <= i + deadlines[i - 1]

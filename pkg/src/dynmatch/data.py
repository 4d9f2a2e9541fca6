"""Shared-ride and compatibility data: records, synthetic stand-ins, ingestion.

Ingestion draws arrivals with replacement from a record set, samples each
arrival's deadline, and stores values only for pairs that are ever present
together.  The returned instance carries the realized per-vertex deadlines.
"""
from __future__ import annotations

import csv
import math
from typing import Iterable, NamedTuple, Sequence

import numpy as np

from .exceptions import BadParameters, EmptyDataset
from .market import DepartureModel, DynamicInstance, build_instance, deadline_rng


class TripRecord(NamedTuple):
    pickup: tuple[float, float]
    dropoff: tuple[float, float]

    @classmethod
    def of(cls, px, py, dx, dy) -> "TripRecord":
        coords = tuple(float(c) for c in (px, py, dx, dy))
        if not all(math.isfinite(c) for c in coords):
            raise ValueError(f"trip coordinates must be finite, got {coords}")
        return cls(coords[:2], coords[2:])

    @property
    def length(self) -> float:
        return math.dist(self.pickup, self.dropoff)


def shared_ride_value(a: TripRecord, b: TripRecord) -> float:
    """Distance saved by serving both trips in one vehicle.

    The shared route picks up both riders first (either order) and then drops
    both off (either order); the saving is clipped at zero.
    """
    solo = a.length + b.length
    best = math.inf
    for p1, p2 in ((a.pickup, b.pickup), (b.pickup, a.pickup)):
        for q1, q2 in ((a.dropoff, b.dropoff), (b.dropoff, a.dropoff)):
            route = math.dist(p1, p2) + math.dist(p2, q1) + math.dist(q1, q2)
            best = min(best, route)
    return max(0.0, solo - best)


def _pairwise_savings(px, py, dx, dy, i, js):
    """Vectorized :func:`shared_ride_value` of trip ``i`` against trips ``js``."""
    la = math.hypot(dx[i] - px[i], dy[i] - py[i])
    lb = np.hypot(dx[js] - px[js], dy[js] - py[js])
    pp = np.hypot(px[js] - px[i], py[js] - py[i])
    dd = np.hypot(dx[js] - dx[i], dy[js] - dy[i])
    # second pickup to first dropoff, for each of the four stop orders
    a_pick_then_b = np.minimum(np.hypot(dx[i] - px[js], dy[i] - py[js]),
                               np.hypot(dx[js] - px[js], dy[js] - py[js]))
    b_pick_then_a = np.minimum(np.hypot(dx[i] - px[i], dy[i] - py[i]),
                               np.hypot(dx[js] - px[i], dy[js] - py[i]))
    route = pp + dd + np.minimum(a_pick_then_b, b_pick_then_a)
    return np.maximum(0.0, la + lb - route)


def synthetic_trips(n: int, seed: int = 0, city: float = 20.0, hotspots: int = 10,
                    spread: float = 1.0, turn: float = 1.0, max_length: float = 4.0) -> list[TripRecord]:
    """Trips leaving from a few busy areas.

    Each hotspot has a center uniform over a square city and a main heading.
    A trip picks a hotspot, starts at a Gaussian offset (std ``spread``) from
    its center, and travels ``U(1, max_length)`` along the hotspot heading
    perturbed by a Gaussian angle (std ``turn`` radians).  Trips from the
    same hotspot often share well; trips from different ones rarely do.
    """
    rng = np.random.default_rng([int(seed), 0x7A])
    centers = rng.uniform(0.0, city, size=(hotspots, 2))
    heading = rng.uniform(0.0, 2 * math.pi, size=hotspots)
    h = rng.integers(hotspots, size=n)
    pick = centers[h] + rng.normal(0.0, spread, size=(n, 2))
    angle = heading[h] + rng.normal(0.0, turn, size=n)
    length = rng.uniform(1.0, max_length, size=n)
    drop = pick + np.column_stack([length * np.cos(angle), length * np.sin(angle)])
    return [TripRecord.of(*pick[i], *drop[i]) for i in range(n)]


def read_trips(path) -> list[TripRecord]:
    """Trip CSV: four numeric columns ``pickup_x, pickup_y, dropoff_x,
    dropoff_y``; a non-numeric first row is taken as a header."""
    records = []
    with open(path, newline="") as fh:
        for lineno, row in enumerate(csv.reader(fh), 1):
            if not row or row[0].startswith("#"):
                continue
            try:
                records.append(TripRecord.of(*row[:4]))
            except (TypeError, ValueError):
                if lineno == 1:
                    continue
                raise ValueError(f"line {lineno}: expected four numeric columns, got {row}") from None
    return records


def write_trips(records: Iterable[TripRecord], path) -> None:
    with open(path, "w", newline="") as fh:
        out = csv.writer(fh)
        out.writerow(["pickup_x", "pickup_y", "dropoff_x", "dropoff_y"])
        for r in records:
            out.writerow([repr(c) for c in (*r.pickup, *r.dropoff)])


def _realized(departure: DepartureModel, T: int, seed: int) -> tuple[int, ...]:
    return departure.sample(T, deadline_rng(seed))


def _metadata(source: str, departure: DepartureModel) -> dict:
    return {"source": source, "departure": departure.kind,
            "departure_params": " ".join(repr(p) for p in departure.params)}


def ingest_trips(records: Sequence[TripRecord], T: int, departure: DepartureModel,
                 seed: int = 0) -> DynamicInstance:
    """Sample ``T`` arrivals with replacement and price every co-present pair
    by :func:`shared_ride_value`."""
    if not records:
        raise EmptyDataset("no trip records to sample from")
    rng = np.random.default_rng([int(seed), 0x5A])
    idx = rng.integers(len(records), size=T)
    deadlines = _realized(departure, T, seed)
    arr = np.array([(*records[i].pickup, *records[i].dropoff) for i in idx]).reshape(T, 4)
    px, py, dx, dy = arr.T
    values = {}
    for i in range(T):
        hi = min(T, i + 1 + deadlines[i])
        if hi <= i + 1:
            continue
        js = np.arange(i + 1, hi)
        saved = _pairwise_savings(px, py, dx, dy, i, js)
        for j in np.flatnonzero(saved > 0):
            values[(i + 1, int(js[j]) + 1)] = float(saved[j])
    return build_instance(T, values, DepartureModel.per_vertex(deadlines, departure.knowledge),
                          metadata=_metadata("trips", departure))


def compat_table(n: int, p: float, seed: int = 0) -> np.ndarray:
    """Symmetric 0/1 compatibility between ``n`` types, each pair present
    with probability ``p``."""
    if not 0.0 <= p <= 1.0:
        raise BadParameters(f"compatibility density must lie in [0,1], got {p!r}")
    if n < 1:
        raise BadParameters("need at least one type")
    rng = np.random.default_rng([int(seed), 0xC0])
    upper = np.triu(rng.random((n, n)) < p)
    return (upper | upper.T).astype(np.int8)


def ingest_compat(n: int, p: float, T: int, departure: DepartureModel, seed: int = 0) -> DynamicInstance:
    """Sample ``T`` arrivals from ``n`` synthetic types; values are 0/1."""
    table = compat_table(n, p, seed)
    rng = np.random.default_rng([int(seed), 0x5B])
    types = rng.integers(n, size=T)
    deadlines = _realized(departure, T, seed)
    values = {}
    for i in range(T):
        for j in range(i + 1, min(T, i + 1 + deadlines[i])):
            if table[types[i], types[j]]:
                values[(i + 1, j + 1)] = 1.0
    return build_instance(T, values, DepartureModel.per_vertex(deadlines, departure.knowledge),
                          metadata=_metadata("compat", departure))

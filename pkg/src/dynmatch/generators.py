"""Instance families: the small hand-built examples, the adversarial
departure constructions, random graphs and the synthetic data sets.

Every generator is deterministic in its parameters (including ``seed``).
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable

import numpy as np

from .data import ingest_compat, ingest_trips, synthetic_trips
from .exceptions import BadParameters
from .market import REVEALED, DepartureModel, DynamicInstance, build_instance

GOLDEN = (math.sqrt(5) - 1) / 2


def two_edge_path(y: float = 3.0) -> DynamicInstance:
    """Three vertices on a path, ``d = 1``: ``v12 = 1``, ``v23 = y``."""
    if y < 0:
        raise BadParameters("y must be nonnegative")
    return build_instance(3, {(1, 2): 1.0, (2, 3): y}, 1, metadata={"family": "path"})


def _two_sellers(v13: float, x: float, family: str) -> DynamicInstance:
    values = {(1, 3): v13, (2, 3): 1.0}
    if x:
        values[(2, 4)] = x
    return build_instance(4, values, 2, metadata={"family": family, "roles": "SSBB"})


def constrained_det(x: float = 1.0) -> DynamicInstance:
    """Sellers 1, 2 and buyers 3, 4 with ``d = 2``; ``v13`` is the golden
    ratio conjugate and the adversary picks ``v24 = x``."""
    if x not in (0, 1):
        raise BadParameters("x must be 0 or 1")
    return _two_sellers(GOLDEN, float(x), "constrained-det")


def constrained_rand(x: float = 1.0) -> DynamicInstance:
    """Same shape as :func:`constrained_det` with ``v13 = 1/2``."""
    if x not in (0, 1):
        raise BadParameters("x must be 0 or 1")
    return _two_sellers(0.5, float(x), "constrained-rand")


def tightness(eps: float = 0.01) -> DynamicInstance:
    """``v13 = 1 - eps``, ``v23 = v24 = 1`` on sellers 1, 2 and buyers 3, 4."""
    if not 0 <= eps < 1:
        raise BadParameters("eps must lie in [0, 1)")
    return build_instance(4, {(1, 3): 1.0 - eps, (2, 3): 1.0, (2, 4): 1.0}, 2,
                          metadata={"family": "tightness", "roles": "SSBB"})


def _star_values(n, K, M):
    return {(1, j): float(M) ** j for j in range(2, K + 1)}


def _check_star(n, K, M):
    if n < 2:
        raise BadParameters("n must be at least 2")
    if not 2 <= K <= n:
        raise BadParameters(f"K must lie in [2, n], got {K}")
    if M <= 1:
        raise BadParameters("M must exceed 1")


def adv_departures(n: int, K: int, M: float = None) -> DynamicInstance:
    """Vertex 1 stays ``n`` steps, everyone else leaves on arrival;
    ``v(1, j) = M**j`` for ``2 <= j <= K`` and no other edges."""
    M = n + 1 if M is None else M
    _check_star(n, K, M)
    deadlines = [n] + [0] * (n - 1)
    return build_instance(n, _star_values(n, K, M), DepartureModel.per_vertex(deadlines),
                          metadata={"family": "adv-departures"})


def add_prefix(n: int) -> int:
    return int(math.floor(n * math.log(n)))


def add_instance(n: int, K: int, M: float = None) -> DynamicInstance:
    """i.i.d. deadlines equal to ``n**2`` with probability ``1/n`` and 0
    otherwise, known on arrival.

    The first ``P = floor(n ln n)`` vertices have no edges among themselves;
    each of them is joined to every ``j`` in ``[P+1, P+K]`` with value
    ``M**(j - P)``.  The horizon is ``P + floor(sqrt(n))``, so vertices past
    ``P + K`` have no edges.
    """
    M = n + 1 if M is None else M
    if n < 2:
        raise BadParameters("n must be at least 2")
    root = math.isqrt(n)
    if not 0 <= K <= root:
        raise BadParameters(f"K must lie in [0, floor(sqrt(n))] = [0, {root}], got {K}")
    if M <= 1:
        raise BadParameters("M must exceed 1")
    P = add_prefix(n)
    values = {(i, j): float(M) ** (j - P) for i in range(1, P + 1) for j in range(P + 1, P + K + 1)}
    dep = DepartureModel.empirical([n * n] + [0] * (n - 1))
    return build_instance(P + root, values, dep, metadata={"family": "add", "prefix": str(P)})


def sud_instance(n: int, K: int, M: float = None, delta: float = 0.5) -> DynamicInstance:
    """The star of :func:`adv_departures` with geometric deadlines that are
    revealed only at criticality."""
    M = n + 1 if M is None else M
    _check_star(n, K, M)
    if not 0 < delta < 1:
        raise BadParameters("delta must lie in (0, 1)")
    return build_instance(n, _star_values(n, K, M), DepartureModel.geometric(delta, REVEALED),
                          metadata={"family": "sud"})


VALUE_DISTS = ("int100", "uniform", "unit")


def _draw_values(rng, dist, size):
    if dist == "int100":
        return rng.integers(1, 101, size=size).astype(float)
    if dist == "uniform":
        return rng.uniform(0.0, 1.0, size=size)
    if dist == "unit":
        return np.ones(size)
    raise BadParameters(f"value distribution must be one of {VALUE_DISTS}, got {dist!r}")


def random_instance(T: int, d: int, density: float = 0.5, value_dist: str = "int100", seed: int = 0,
                    departure: DepartureModel = None) -> DynamicInstance:
    """Each pair with ``0 < j - i <= d`` is an edge with probability
    ``density``.  ``departure`` overrides the constant deadline ``d``; the
    edge window is still ``d``."""
    if T < 0 or d < 0:
        raise BadParameters("T and d must be nonnegative")
    if not 0 <= density <= 1:
        raise BadParameters("density must lie in [0, 1]")
    rng = np.random.default_rng([int(seed), 0x6E])
    pairs = [(i, j) for i in range(1, T + 1) for j in range(i + 1, min(T, i + d) + 1)]
    keep = rng.random(len(pairs)) < density
    vals = _draw_values(rng, value_dist, len(pairs))
    values = {p: float(v) for p, k, v in zip(pairs, keep, vals) if k}
    return build_instance(T, values, departure if departure is not None else d,
                          metadata={"family": "random"})


def random_bipartite(T: int, d: int, density: float = 0.5, value_dist: str = "int100",
                     seed: int = 0) -> DynamicInstance:
    """:func:`random_instance` with random seller/buyer labels attached and
    every edge not from an earlier seller to a later buyer removed."""
    base = random_instance(T, d, density, value_dist, seed)
    rng = np.random.default_rng([int(seed), 0x62])
    roles = "".join("S" if c else "B" for c in rng.integers(2, size=T))
    values = {(i, j): v for (i, j), v in base.values.items() if roles[i - 1] == "S" and roles[j - 1] == "B"}
    return build_instance(T, values, d, metadata={"family": "random-bipartite", "roles": roles})


TRIP_POOL = 5000


def trips(n: int, d: int, seed: int = 0, stochastic: bool = False) -> DynamicInstance:
    """``n`` arrivals drawn from a synthetic trip set; deadlines are ``d``
    or, when ``stochastic``, exponential with mean ``d``."""
    dep = DepartureModel.exponential(d) if stochastic else DepartureModel.constant(d)
    return ingest_trips(synthetic_trips(TRIP_POOL, seed), n, dep, seed)


def compat(n: int, d: int, p: float, seed: int = 0, T: int = 200, stochastic: bool = False) -> DynamicInstance:
    """``T`` arrivals over ``n`` synthetic compatibility types."""
    dep = DepartureModel.exponential(d) if stochastic else DepartureModel.constant(d)
    return ingest_compat(n, p, T, dep, seed)


FAMILIES: dict[str, Callable[..., DynamicInstance]] = {
    "path": two_edge_path,
    "constrained-det": constrained_det,
    "constrained-rand": constrained_rand,
    "tightness": tightness,
    "adv-departures": adv_departures,
    "add": add_instance,
    "sud": sud_instance,
    "random": random_instance,
    "random-bipartite": random_bipartite,
    "trips": trips,
    "compat": compat,
}


@dataclass(frozen=True)
class GeneratorSpec:
    family: str
    params: dict = field(default_factory=dict)

    def build(self) -> DynamicInstance:
        return generate(self.family, **self.params)


def generate(family: str, **params) -> DynamicInstance:
    try:
        fn = FAMILIES[family]
    except KeyError:
        raise BadParameters(f"unknown family {family!r}; choose from {sorted(FAMILIES)}") from None
    try:
        return fn(**params)
    except TypeError as exc:
        raise BadParameters(f"{family}: {exc}") from None

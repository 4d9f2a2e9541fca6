"""Offline optimum, dual certificates and competitive ratios."""
from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Mapping, NamedTuple, Optional, Sequence, Union

import numpy as np

from .market import AuditRecord, DynamicInstance, Matching, RunResult, resolve_deadlines
from .matching import (
    EXACT_SUBSET_LIMIT,
    assignment_mwm,
    blossom_mwm,
    components,
    greedy_swap_mwm,
    nx,
    subset_mwm,
    windowed_mwm,
)

BITMASK = "bitmask-exact"
BIPARTITE = "bipartite-exact"
BLOSSOM = "blossom-exact"
HEURISTIC = "heuristic"


@dataclass
class OptResult:
    value: float
    witness: Matching
    method: str

    @property
    def exact(self) -> bool:
        return self.method != HEURISTIC


def usable_graph(instance: DynamicInstance, deadlines=None) -> dict[int, dict[int, float]]:
    """Positive edges ``(i, j)``, ``i < j``, whose endpoints are ever
    present together, i.e. ``j <= i + d_i``."""
    if deadlines is None:
        deadlines = resolve_deadlines(instance)
    adj: dict[int, dict[int, float]] = {}
    for (i, j), v in instance.values.items():
        if v > 0 and j <= i + deadlines[i - 1]:
            adj.setdefault(i, {})[j] = v
            adj.setdefault(j, {})[i] = v
    return adj


def offline_opt(instance: DynamicInstance, deadlines=None, allow_blossom: bool = True) -> OptResult:
    """Maximum-weight matching in hindsight.

    Each connected component is solved exactly by subset search (up to 16
    vertices) or by the arrival-order window program.  Larger components go
    to the assignment problem when roles are labeled, else to the blossom
    solver; only if that is unavailable (or ``allow_blossom`` is False) does
    the greedy + 2-swap heuristic run, and the result is labeled as such.
    The reported method is the weakest one used on any component.
    """
    adj = usable_graph(instance, deadlines)
    roles = instance.roles
    value, pairs, methods = 0.0, [], {BITMASK}
    for comp in components(adj.keys(), adj):
        if len(comp) < 2:
            continue
        if len(comp) <= EXACT_SUBSET_LIMIT:
            v, p = subset_mwm(comp, adj)
        else:
            solved = windowed_mwm(comp, adj)
            if solved is not None:
                v, p = solved
            elif roles is not None:
                sellers = [u for u in comp if roles[u - 1] == "S"]
                buyers = [u for u in comp if roles[u - 1] == "B"]
                v, p = assignment_mwm(sellers, buyers, adj)
                methods.add(BIPARTITE)
            elif allow_blossom and nx is not None:
                v, p = blossom_mwm(comp, adj)
                methods.add(BLOSSOM)
            else:
                v, p = greedy_swap_mwm(comp, adj)
                methods.add(HEURISTIC)
        value += v
        pairs += p
    method = next(m for m in (HEURISTIC, BLOSSOM, BIPARTITE, BITMASK) if m in methods)
    time = {(a, b): b for a, b in pairs}
    witness = Matching((a, b, time[a, b]) for a, b in sorted(pairs))
    return OptResult(math.fsum(instance.value(a, b) for a, b in pairs), witness, method)


def verify_certificate(
    instance: DynamicInstance,
    certificate: Mapping[int, float],
    opt: Optional[float] = None,
    deadlines=None,
    tol: float = 1e-9,
) -> AuditRecord:
    """Check that ``certificate`` is feasible for the offline dual."""
    lam = {k: float(certificate.get(k, 0.0)) for k in range(1, instance.T + 1)}
    negative = [k for k, x in lam.items() if x < -tol]
    if negative:
        return AuditRecord("certificate", None, False, f"negative entries at {negative[:5]}")
    adj = usable_graph(instance, deadlines)
    for i in sorted(adj):
        for j, v in sorted(adj[i].items()):
            if i < j and v > lam[i] + lam[j] + tol * max(1.0, v):
                return AuditRecord("certificate", None, False,
                                   f"edge ({i},{j}) value {v!r} exceeds {lam[i] + lam[j]!r}")
    total = math.fsum(lam.values())
    if opt is not None and total < opt - tol * max(1.0, opt):
        return AuditRecord("certificate", None, False, f"dual sum {total!r} below optimum {opt!r}")
    return AuditRecord("certificate", None, True, f"dual sum {total!r}")


class RatioEstimate(NamedTuple):
    ratio: float
    low: float
    high: float
    n: int


def competitive_ratio(
    runs: Sequence[Union[RunResult, float]],
    opt: Union[float, OptResult, Sequence[float]],
    z: float = 1.96,
) -> RatioEstimate:
    """``mean(collected) / opt`` with a normal-approximation interval.

    ``opt`` may be a single value or one value per run (random deadlines);
    in the latter case the ratio of means is reported and the interval
    uses the delta method.  A nonpositive optimum gives ratio 1.
    """
    values = np.array([r.total_value if isinstance(r, RunResult) else float(r) for r in runs])
    n = len(values)
    if isinstance(opt, OptResult):
        opt = opt.value
    if np.ndim(opt) == 0:
        opts = np.full(n, float(opt))
    else:
        opts = np.asarray(opt, dtype=float)
    mean_opt = float(opts.mean()) if n else 0.0
    if n == 0 or mean_opt <= 0:
        return RatioEstimate(1.0, 1.0, 1.0, n)
    ratio = float(values.mean()) / mean_opt
    if n > 1:
        resid = values - ratio * opts
        se = float(resid.std(ddof=1)) / math.sqrt(n) / mean_opt
    else:
        se = 0.0
    return RatioEstimate(ratio, ratio - z * se, ratio + z * se, n)

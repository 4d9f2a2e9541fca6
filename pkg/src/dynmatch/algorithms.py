"""Name-based access to every algorithm with one calling convention:
``fn(instance, seed=0, deadlines=None, **kwargs) -> RunResult``."""
from __future__ import annotations

from functools import partial
from typing import Callable

from .baselines import run_batching, run_greedy, run_mdda, run_patient, run_reopt
from .dda import ConstrainedBipartiteInstance, run_dda, run_sdda
from .exceptions import BadParameters
from .market import DynamicInstance, RunResult
from .pdda import run_pdda, run_pdda_known_departures, run_pdda_unknown_departures

BATCH_GRID = (5, 10, 50, 100, 200, 300)


def _dda(instance, seed=0, deadlines=None, **kwargs):
    result = run_dda(ConstrainedBipartiteInstance.from_instance(instance), **kwargs)
    result.seed = seed
    return result


def _sdda(instance, seed=0, deadlines=None, **kwargs):
    return run_sdda(instance, seed, **kwargs)


def _pdda(instance, seed=0, deadlines=None, **kwargs):
    return run_pdda(instance, seed, **kwargs)


def _pdda_known(instance, seed=0, deadlines=None, **kwargs):
    return run_pdda_known_departures(instance, deadlines, seed, **kwargs)


def _pdda_unknown(instance, seed=0, deadlines=None, **kwargs):
    return run_pdda_unknown_departures(instance, deadlines, seed, **kwargs)


def _baseline(fn, instance, seed=0, deadlines=None, **kwargs):
    return fn(instance, deadlines, seed, **kwargs)


def _batching(k, instance, seed=0, deadlines=None, **kwargs):
    return run_batching(instance, k, deadlines, seed, **kwargs)


REGISTRY: dict[str, Callable[..., RunResult]] = {
    "dda": _dda,
    "sdda": _sdda,
    "pdda": _pdda,
    "pdda-known": _pdda_known,
    "pdda-unknown": _pdda_unknown,
    "greedy": partial(_baseline, run_greedy),
    "patient": partial(_baseline, run_patient),
    "mdda": partial(_baseline, run_mdda),
    "reopt": partial(_baseline, run_reopt),
}

# Algorithms that take a ``coins`` keyword and keep a dual ledger.
RANDOMIZED = ("sdda", "pdda", "pdda-known", "pdda-unknown")
ENGINE_BACKED = ("dda",) + RANDOMIZED


def get_algorithm(name: str) -> Callable[..., RunResult]:
    """Look up ``name``; ``batching:k`` selects Batching with period ``k``."""
    if name.startswith("batching"):
        _, _, k = name.partition(":")
        try:
            k = int(k)
        except ValueError:
            raise BadParameters(f"batching needs an integer period, as in 'batching:10', got {name!r}") from None
        if k < 1:
            raise BadParameters("batching period must be positive")
        return partial(_batching, k)
    try:
        return REGISTRY[name]
    except KeyError:
        raise BadParameters(f"unknown algorithm {name!r}; choose from "
                            f"{sorted(REGISTRY) + ['batching:k']}") from None


def run_algorithm(name: str, instance: DynamicInstance, seed: int = 0, deadlines=None, **kwargs) -> RunResult:
    return get_algorithm(name)(instance, seed=seed, deadlines=deadlines, **kwargs)

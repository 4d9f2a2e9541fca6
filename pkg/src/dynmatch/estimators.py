"""scikit-learn style wrappers around the online algorithms.

An estimator is configured by its constructor parameters (``get_params`` /
``set_params`` come from :class:`sklearn.base.BaseEstimator`).  ``fit``
replays one instance and stores the run; ``predict`` returns the finalized
pairs; ``score`` is the collected value over the offline optimum.
"""
from __future__ import annotations

from pathlib import Path

import numpy as np
from sklearn.base import BaseEstimator
from sklearn.utils.validation import check_is_fitted

from .algorithms import get_algorithm
from .exceptions import BadParameters, InstanceError
from .io import read_instance
from .market import DynamicInstance, RunResult, _check_deadlines, resolve_deadlines
from .oracle import offline_opt


def check_instance(X) -> DynamicInstance:
    """Accept an instance or a path to an instance file."""
    if isinstance(X, DynamicInstance):
        return X
    if isinstance(X, (str, Path)):
        return read_instance(X)
    raise InstanceError(f"expected a DynamicInstance or a file path, got {type(X).__name__}")


def check_seed(seed) -> int:
    if isinstance(seed, (bool, np.bool_)) or not isinstance(seed, (int, np.integer)) or seed < 0:
        raise BadParameters(f"random_state must be a nonnegative integer, got {seed!r}")
    return int(seed)


class _OnlineMatcher(BaseEstimator):
    _name = ""

    def _algorithm_name(self) -> str:
        return self._name

    def _run_kwargs(self) -> dict:
        return {}

    def fit(self, X, y=None, deadlines=None):
        """Run the algorithm on instance ``X``; ``y`` is ignored."""
        instance = check_instance(X)
        seed = check_seed(getattr(self, "random_state", 0))
        if deadlines is None:
            deadlines = resolve_deadlines(instance, seed)
        deadlines = _check_deadlines(instance, deadlines)
        fn = get_algorithm(self._algorithm_name())
        self.result_: RunResult = fn(instance, seed=seed, deadlines=deadlines, **self._run_kwargs())
        self.instance_ = instance
        self.deadlines_ = deadlines
        self.matching_ = self.result_.matching
        self.total_value_ = self.result_.total_value
        return self

    def predict(self, X=None) -> np.ndarray:
        """Finalized pairs as rows ``(k, l, time)``; refits if ``X`` is given."""
        if X is not None:
            self.fit(X)
        check_is_fitted(self, "result_")
        return np.array(self.matching_.pairs, dtype=np.int64).reshape(-1, 3)

    def fit_predict(self, X, y=None, deadlines=None) -> np.ndarray:
        return self.fit(X, deadlines=deadlines).predict()

    def score(self, X=None, y=None) -> float:
        """Collected value divided by the offline optimum (1 when that is 0)."""
        if X is not None:
            self.fit(X)
        check_is_fitted(self, "result_")
        opt = offline_opt(self.instance_, self.deadlines_).value
        return self.total_value_ / opt if opt > 0 else 1.0


class DDA(_OnlineMatcher):
    """Deferred acceptance on an instance whose metadata carries roles."""

    _name = "dda"

    def __init__(self, check_every_step: bool = False):
        self.check_every_step = check_every_step

    def _run_kwargs(self):
        return {"check_every_step": self.check_every_step}


class SDDA(_OnlineMatcher):
    _name = "sdda"

    def __init__(self, random_state: int = 0, check_every_step: bool = False):
        self.random_state = random_state
        self.check_every_step = check_every_step

    def _run_kwargs(self):
        return {"check_every_step": self.check_every_step}


class PDDA(_OnlineMatcher):
    """``departures`` is ``"constant"``, ``"known"`` or ``"unknown"``."""

    _variants = {"constant": "pdda", "known": "pdda-known", "unknown": "pdda-unknown"}

    def __init__(self, departures: str = "constant", random_state: int = 0, check_every_step: bool = False):
        self.departures = departures
        self.random_state = random_state
        self.check_every_step = check_every_step

    def _algorithm_name(self):
        try:
            return self._variants[self.departures]
        except KeyError:
            raise BadParameters(f"departures must be one of {sorted(self._variants)}") from None

    def _run_kwargs(self):
        return {"check_every_step": self.check_every_step}


class Greedy(_OnlineMatcher):
    _name = "greedy"

    def __init__(self):
        pass


class Patient(_OnlineMatcher):
    _name = "patient"

    def __init__(self):
        pass


class Batching(_OnlineMatcher):
    def __init__(self, k: int = 10, rescue: bool = False):
        self.k = k
        self.rescue = rescue

    def _algorithm_name(self):
        if isinstance(self.k, bool) or not isinstance(self.k, (int, np.integer)) or self.k < 1:
            raise BadParameters(f"k must be a positive integer, got {self.k!r}")
        return f"batching:{int(self.k)}"

    def _run_kwargs(self):
        return {"rescue": bool(self.rescue)}


class MDDA(_OnlineMatcher):
    _name = "mdda"

    def __init__(self, random_state: int = 0):
        self.random_state = random_state


class ReOpt(_OnlineMatcher):
    _name = "reopt"

    def __init__(self):
        pass

"""Adaptive Neyman allocation: designs, guarantees and simulation."""

import json as _json

from . import _core
from ._core import (
    NeymanError,
    clairvoyant_allocation,
    competitive_ratio,
    exhaustive_best_allocation,
    half_half_ratio,
    lemma_ids,
    rounded_clairvoyant_allocation,
    thm4_bound,
)

__all__ = [
    "Experiment",
    "NeymanError",
    "check_design",
    "clairvoyant_allocation",
    "clicks_betas",
    "compare",
    "competitive_ratio",
    "cor_bound",
    "error_code",
    "exhaustive_best_allocation",
    "half_half_ratio",
    "ingest_csv",
    "lemma_check",
    "lemma_ids",
    "lower_bound_instance",
    "rounded_clairvoyant_allocation",
    "simulate",
    "synthetic_table1",
    "thm2_bound",
    "thm3_betas",
    "thm3_bound",
    "thm4_bound",
]


def _dump(value):
    return value if isinstance(value, str) else _json.dumps(value)


def error_code(exc):
    """The library error code carried by a NeymanError, e.g. 'InfeasibleConfig'."""
    return exc.args[0] if exc.args else None


def thm3_betas(M):
    return list(_core.thm3_betas(M))


def clicks_betas(M):
    return list(_core.clicks_betas(M))


def check_design(design):
    return _json.loads(_core.check_design(_dump(design)))


def thm2_bound(T, eps, kappa1, kappa0):
    return _json.loads(_core.thm2_bound(T, eps, kappa1, kappa0))


def thm3_bound(M, T, eps, kappa1, kappa0):
    return _json.loads(_core.thm3_bound(M, T, eps, kappa1, kappa0))


def cor_bound(which, M, T, C=1.0):
    return _json.loads(_core.cor_bound(which, M, T, C))


def lower_bound_instance(T):
    return _json.loads(_core.lower_bound_instance(T))


class Experiment:
    """A live experiment advanced one stage at a time.

    ``design`` is the same JSON object the HTTP API accepts, e.g.
    ``{"M": 3, "T": 10000, "schedule": "thm3"}``.
    """

    def __init__(self, design):
        self._impl = _core.Experiment(_dump(design))

    @property
    def complete(self):
        return self._impl.complete

    @property
    def pending(self):
        return _json.loads(self._impl.pending())

    def submit(self, treated, control):
        """Record the pending stage's outcomes; returns the next stage or None."""
        return _json.loads(self._impl.submit(list(treated), list(control)))

    def state(self):
        return _json.loads(self._impl.state())

    def result(self):
        return _json.loads(self._impl.result())


def simulate(design, population, n, seed=0, workers=0, include_samples=False):
    """Run ``n`` trajectories; ``population`` is a spec string such as "gaussian:rho=2" or a dict."""
    return _json.loads(_core.simulate(_dump(design), _json.dumps(population), n, seed, workers, include_samples))


def compare(designs, population, n, seed=0, workers=0):
    return _json.loads(_core.compare(_json.dumps(designs), _json.dumps(population), n, seed, workers))


def lemma_check(lemma, points=0):
    return _json.loads(_core.lemma_check(lemma, points))


def ingest_csv(path):
    return _json.loads(_core.ingest_csv(str(path)))


def synthetic_table1(n=40, seed=0):
    return _json.loads(_core.synthetic_table1(n, seed))

"""Counterfactual bounds for structural causal models."""

import json

from ._core import (
    Error,
    canonical_model,
    epsilon_star,
    exact_bounds,
    hyp2f1,
    identifiability_probability,
    run,
    uniform_coverage,
)
from . import _core

__all__ = [
    "Error",
    "canonical_model",
    "credible_report",
    "emcc",
    "epsilon_star",
    "exact_bounds",
    "hyp2f1",
    "identifiability_probability",
    "run",
    "uniform_coverage",
]


def emcc(model, data, query, runs=20, seed=0):
    return json.loads(_core.emcc(model, data, query, runs, seed))


def credible_report(rho, epsilon):
    return json.loads(_core.credible_report(list(rho), epsilon))

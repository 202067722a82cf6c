"""Rare-event payoff ``1000 x 1{x > alpha}`` under N(0, 1), alpha its 0.999 quantile.

Importance sampling draws from ``N(shift, 1)`` instead; the LPM variants
thin a cloud of ``N`` draws from the relevant distribution.
"""

from __future__ import annotations

import time

import numpy as np
from scipy import special

from ..continuous import ISSpec, Normal
from ._sampling import lpm_estimate
from .harness import ExperimentConfig, replicate, timed_report

__all__ = ["ALPHA", "LEVEL", "payoff", "true_mean", "run_rare_event_experiment"]

LEVEL = 0.999
ALPHA = float(special.ndtri(LEVEL))
METHODS = ("iid", "lpm2", "is", "is+lpm2")


def payoff(x):
    x = np.asarray(x, dtype=float)
    if x.ndim == 2:
        x = x[:, 0]
    return np.where(x > ALPHA, 1000.0 * x, 0.0)


def true_mean():
    """``E[1000 X 1{X > alpha}] = 1000 * phi(alpha)`` for standard normal X."""
    return float(1000.0 * np.exp(-0.5 * ALPHA**2) / np.sqrt(2.0 * np.pi))


def run_rare_event_experiment(cfg):
    """Replicate the rare-event estimate for ``cfg.method``.

    ``params["shift"]`` sets the proposal mean (default 3). Importance
    weights enter only through the Horvitz-Thompson estimator.
    """
    if cfg.method not in METHODS:
        raise ValueError(f"rare-event experiment supports {METHODS}, got {cfg.method!r}")
    n, N = int(cfg.n), int(cfg.N)
    target = Normal.standard()
    spec = ISSpec(target, Normal((float(cfg.params.get("shift", 3.0)),), (1.0,)))
    started = time.perf_counter()

    if cfg.method == "iid":
        def estimator(rng, k):
            return float(payoff(target.sample(n, rng)).mean())
    elif cfg.method == "is":
        def estimator(rng, k):
            x = spec.proposal.sample(n, rng)
            return float((payoff(x) * spec.weights(x)).mean())
    elif cfg.method == "lpm2":
        def estimator(rng, k):
            return lpm_estimate(target, payoff, n, N, "lpm2", rng)[0]
    else:
        def estimator(rng, k):
            return lpm_estimate(None, payoff, n, N, "lpm2", rng, spec=spec)[0]

    row = replicate(cfg, estimator)
    return timed_report(cfg, [row], true_mean(), started)


def default_config(**overrides):
    return ExperimentConfig(**{"experiment": "rare-event", "n": 100, "N": 10_000, "m": 10_000, **overrides})

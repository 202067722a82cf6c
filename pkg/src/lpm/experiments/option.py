"""European call option priced by Monte Carlo under geometric Brownian motion."""

from __future__ import annotations

import math
import time
from dataclasses import dataclass

import numpy as np
from scipy import special

from ..continuous import Normal
from ..estimation import local_mean_variance
from ._sampling import lpm_estimate, lpm_methods
from .harness import ExperimentConfig, replicate, timed_report

__all__ = ["OptionParams", "bs_price", "discounted_payoff", "run_option_experiment"]


@dataclass(frozen=True)
class OptionParams:
    """Spot ``s``, strike ``K``, rate ``r``, volatility ``sigma``, maturity ``T`` in years.

    ``sigma = 0`` is allowed and gives a deterministic terminal price.
    """

    s: float = 100.0
    K: float = 120.0
    r: float = 0.03
    sigma: float = 0.5
    T: float = 0.25

    def __post_init__(self):
        for name in ("s", "K", "r", "sigma", "T"):
            if not math.isfinite(getattr(self, name)):
                raise ValueError(f"{name} must be finite")
        if self.s <= 0 or self.K <= 0 or self.T <= 0:
            raise ValueError("s, K and T must be positive")
        if self.sigma < 0:
            raise ValueError("sigma must be non-negative")


def bs_price(p):
    """Black-Scholes price at time 0 of a European call."""
    disc_K = p.K * math.exp(-p.r * p.T)
    if p.sigma == 0:
        return max(0.0, p.s - disc_K)
    vol = p.sigma * math.sqrt(p.T)
    d1 = (math.log(p.s / p.K) + (p.r + 0.5 * p.sigma**2) * p.T) / vol
    d2 = d1 - vol
    return float(special.ndtr(d1) * p.s - special.ndtr(d2) * disc_K)


def discounted_payoff(z, p):
    """``exp(-rT) * max(0, S_T - K)`` for standard normal draws ``z``."""
    z = np.asarray(z, dtype=float)
    ST = p.s * np.exp((p.r - 0.5 * p.sigma**2) * p.T + p.sigma * math.sqrt(p.T) * z)
    return math.exp(-p.r * p.T) * np.maximum(0.0, ST - p.K)


def run_option_experiment(cfg, p=None):
    """Replicate the Monte Carlo option price for ``cfg.method``.

    ``iid`` averages ``n`` payoffs of iid normal draws. ``lpm1`` / ``lpm2``
    thin an ``N``-point normal cloud and also report ``sqrt_v``, the mean
    over replicates of the square root of the local-mean variance
    estimate with ``params["n_prime"]`` neighbours (default 10).

    Returns
    -------
    ExperimentReport
        ``truth`` is the Black-Scholes price.
    """
    p = OptionParams() if p is None else p
    methods = ("iid",) + lpm_methods()
    if cfg.method not in methods:
        raise ValueError(f"option experiment supports {methods}, got {cfg.method!r}")
    n, N = int(cfg.n), int(cfg.N)
    normal = Normal.standard()
    started = time.perf_counter()

    if cfg.method == "iid":
        def estimator(rng, k):
            return float(discounted_payoff(normal.sample(n, rng)[:, 0], p).mean())
    else:
        n_prime = min(int(cfg.params.get("n_prime", 10)), n)

        def y(z):
            return discounted_payoff(z[:, 0], p)

        def estimator(rng, k):
            est, coords, values, _ = lpm_estimate(normal, y, n, N, cfg.method, rng)
            if n_prime < 2:
                return est
            v = local_mean_variance(values, coords, n_prime=n_prime)
            return est, {"sqrt_v": math.sqrt(v)}

    row = replicate(cfg, estimator)
    echo = cfg.replace(params={**cfg.params, "option": p.__dict__})
    return timed_report(echo, [row], bs_price(p), started)


def default_config(**overrides):
    return ExperimentConfig(**{"experiment": "option", "n": 100, "N": 10_000, "m": 10_000, **overrides})

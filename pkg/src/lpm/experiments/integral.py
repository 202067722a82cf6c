"""Monte Carlo estimate of the integral of x over (0, 1), whose value is 1/2."""

from __future__ import annotations

import time

import numpy as np

from ..continuous import Uniform
from ._sampling import first_column, lpm_estimate, lpm_methods
from .harness import ExperimentConfig, ExperimentReport, replicate, timed_report

__all__ = ["TRUE_VALUE", "run_integral_experiment", "run_integral_sweep"]

TRUE_VALUE = 0.5
METHODS = ("iid", "stratified") + lpm_methods()


def _estimator(cfg):
    n, N = int(cfg.n), int(cfg.N)
    if cfg.method == "iid":
        return lambda rng, k: float(rng.random(n).mean())
    if cfg.method == "stratified":
        strata = int(cfg.params.get("strata", 10))
        if n % strata:
            raise ValueError(f"stratified sampling needs n divisible by {strata}, got n={n}")
        per = n // strata
        offsets = np.repeat(np.arange(strata), per)

        def stratified(rng, k):
            # equal-width strata with equal allocation; the mean is the
            # stratum-weighted mean because all strata have the same size
            return float(((offsets + rng.random(n)) / strata).mean())

        return stratified
    uniform = Uniform()
    return lambda rng, k: lpm_estimate(uniform, first_column, n, N, cfg.method, rng)[0]


def run_integral_experiment(cfg):
    """Replicate the integral estimate for ``cfg.method``.

    Parameters
    ----------
    cfg : ExperimentConfig
        ``method`` is ``"iid"``, ``"stratified"`` (``params["strata"]``
        equal-width strata, default 10, ``n / strata`` draws each),
        ``"lpm1"`` or ``"lpm2"`` (thinning an ``N``-point uniform cloud).

    Returns
    -------
    ExperimentReport
        One row; ``truth`` is 0.5.
    """
    if cfg.method not in METHODS:
        raise ValueError(f"integral experiment supports {METHODS}, got {cfg.method!r}")
    started = time.perf_counter()
    row = replicate(cfg, _estimator(cfg))
    return timed_report(cfg, [row], TRUE_VALUE, started)


def run_integral_sweep(cfg, Ns):
    """One row per discretization size in ``Ns`` (the standard deviation versus N curve)."""
    started = time.perf_counter()
    rows = [run_integral_experiment(cfg.replace(N=int(N))).rows[0] for N in Ns]
    return ExperimentReport(cfg.to_dict(), rows, time.perf_counter() - started, TRUE_VALUE)


def default_config(**overrides):
    return ExperimentConfig(**{"experiment": "integral", "n": 100, "N": 10_000, "m": 10_000, **overrides})

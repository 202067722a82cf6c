"""Seeded replication of Monte Carlo estimators.

Replicate ``k`` of a run with master seed ``s`` draws from
``default_rng(SeedSequence(s, spawn_key=(k,)))``. This is the same stream
``SeedSequence(s).spawn(...)[k]`` would give, so any replicate can be
recomputed on its own, in any order or process.
"""

from __future__ import annotations

import csv
import io
import json
import math
import time
from dataclasses import dataclass, field

import numpy as np

from ..estimation import SCHEMA_VERSION

__all__ = [
    "METHODS",
    "ExperimentConfig",
    "ReplicateSummary",
    "ExperimentReport",
    "replicate_rng",
    "replicate",
    "CSV_FIELDS",
]

METHODS = ("iid", "lpm1", "lpm2", "stratified", "is", "is+lpm2")
CSV_FIELDS = ("method", "n", "N", "m", "mean", "sd")


@dataclass
class ExperimentConfig:
    """Settings shared by all experiments.

    ``params`` holds experiment-specific values and is echoed in reports.
    """

    experiment: str
    n: int = 100
    N: int = 10_000
    m: int = 1000
    seed: int = 0
    method: str = "lpm2"
    params: dict = field(default_factory=dict)

    def __post_init__(self):
        if self.method not in METHODS:
            raise ValueError(f"method must be one of {METHODS}, got {self.method!r}")
        if int(self.n) < 1:
            raise ValueError(f"n must be at least 1, got {self.n}")
        if int(self.n) > int(self.N):
            raise ValueError(f"n={self.n} exceeds N={self.N}")
        if int(self.m) < 1:
            raise ValueError(f"m must be at least 1, got {self.m}")
        if int(self.seed) < 0:
            raise ValueError("seed must be non-negative")

    def replace(self, **changes):
        fields = {**self.to_dict(), **changes}
        fields["params"] = dict(fields["params"])
        return ExperimentConfig(**fields)

    def to_dict(self):
        return {
            "experiment": self.experiment,
            "n": int(self.n),
            "N": int(self.N),
            "m": int(self.m),
            "seed": int(self.seed),
            "method": self.method,
            "params": dict(self.params),
        }


@dataclass
class ReplicateSummary:
    """Mean and spread of ``m`` replicate estimates for one setting.

    ``sd`` uses ``ddof=1`` and is None when ``m == 1`` (``sd_defined`` is
    then False). ``extra`` holds means of auxiliary per-replicate values.
    """

    method: str
    n: int
    N: int
    m: int
    mean: float
    sd: float | None
    sd_defined: bool = True
    extra: dict = field(default_factory=dict)
    estimates: np.ndarray | None = None

    @property
    def standard_error(self):
        return None if self.sd is None else self.sd / math.sqrt(self.m)

    def to_dict(self):
        out = {
            "method": self.method,
            "n": self.n,
            "N": self.N,
            "m": self.m,
            "mean": self.mean,
            "sd": self.sd,
            "sd_defined": self.sd_defined,
        }
        out.update(self.extra)
        return out


@dataclass
class ExperimentReport:
    """Rows of replicate summaries plus the configuration that produced them."""

    config: dict
    rows: list
    wall_time: float = 0.0
    truth: float | None = None

    def row(self, method=None):
        for r in self.rows:
            if method is None or r.method == method:
                return r
        raise KeyError(method)

    def to_dict(self, timing=True):
        out = {
            "schema_version": SCHEMA_VERSION,
            "config": self.config,
            "truth": self.truth,
            "rows": [r.to_dict() for r in self.rows],
        }
        if timing:
            out["wall_time"] = self.wall_time
        return out

    def to_json(self, timing=True, **kwargs):
        return json.dumps(self.to_dict(timing=timing), **kwargs)

    def to_csv(self):
        """CSV with columns method, n, N, m, mean, sd and any extra fields."""
        extra = sorted({key for r in self.rows for key in r.extra})
        buf = io.StringIO()
        writer = csv.writer(buf, lineterminator="\n")
        writer.writerow(CSV_FIELDS + tuple(extra))
        for r in self.rows:
            d = r.to_dict()
            writer.writerow(["" if d.get(f) is None else d[f] for f in CSV_FIELDS + tuple(extra)])
        return buf.getvalue()


def replicate_rng(seed, k):
    """Generator for replicate ``k`` under master seed ``seed``."""
    return np.random.default_rng(np.random.SeedSequence(int(seed), spawn_key=(int(k),)))


def replicate(cfg, estimator, keep_estimates=False):
    """Run ``cfg.m`` seeded replicates of ``estimator(rng, k)``.

    Parameters
    ----------
    cfg : ExperimentConfig
    estimator : callable
        Returns a float, or a tuple ``(estimate, extras)`` where ``extras``
        is a dict of floats averaged across replicates.
    keep_estimates : bool
        Store the raw estimates on the summary.

    Returns
    -------
    ReplicateSummary
    """
    m = int(cfg.m)
    est = np.empty(m)
    extras = {}
    for k in range(m):
        out = estimator(replicate_rng(cfg.seed, k), k)
        if isinstance(out, tuple):
            out, more = out
            for key, value in more.items():
                extras.setdefault(key, np.empty(m))[k] = value
        est[k] = out
    sd = float(np.std(est, ddof=1)) if m > 1 else None
    return ReplicateSummary(
        method=cfg.method,
        n=int(cfg.n),
        N=int(cfg.N),
        m=m,
        mean=float(est.mean()),
        sd=sd,
        sd_defined=m > 1,
        extra={key: float(v.mean()) for key, v in extras.items()},
        estimates=est if keep_estimates else None,
    )


def timed_report(cfg, rows, truth=None, started=None):
    """Wrap summaries in an :class:`ExperimentReport`."""
    wall = 0.0 if started is None else time.perf_counter() - started
    return ExperimentReport(cfg.to_dict(), list(rows), wall, truth)

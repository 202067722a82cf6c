"""Discretizing continuous distributions into finite populations.

A continuous target is replaced by ``N`` iid draws, optionally from an
importance-sampling proposal, and LPM then thins that cloud. Importance
weights ``f(x) / g(x)`` travel with the cloud and enter only through the
estimator; the thinning itself uses equal inclusion probabilities.

Normal variates are produced by the inverse-CDF transform of uniforms, so a
seed fixes the cloud exactly.
"""

from __future__ import annotations

import csv
import warnings
from dataclasses import dataclass, field
from typing import Callable, Optional

import numpy as np
from scipy import special

from ._validation import check_coords, check_rng

__all__ = [
    "Uniform",
    "Normal",
    "Custom",
    "ISSpec",
    "DiscretizedPopulation",
    "default_population_size",
    "discretize",
    "discretize_is",
    "standardize",
]

_LOG_SQRT_2PI = 0.5 * np.log(2.0 * np.pi)


def _open_uniforms(rng, shape):
    # inverse CDFs need u in (0, 1); Generator.random can return exactly 0
    u = rng.random(shape)
    return np.where(u == 0.0, np.nextafter(0.0, 1.0), u)


@dataclass(frozen=True)
class Uniform:
    """Independent uniform components on ``[low, high)``."""

    low: tuple = (0.0,)
    high: tuple = (1.0,)

    def __post_init__(self):
        low = np.atleast_1d(np.asarray(self.low, dtype=float))
        high = np.atleast_1d(np.asarray(self.high, dtype=float))
        low, high = np.broadcast_arrays(low, high)
        if not (np.all(np.isfinite(low)) and np.all(np.isfinite(high))):
            raise ValueError("uniform bounds must be finite")
        if np.any(low >= high):
            raise ValueError("uniform bounds need low < high in every dimension")
        object.__setattr__(self, "low", tuple(low.tolist()))
        object.__setattr__(self, "high", tuple(high.tolist()))

    @classmethod
    def cube(cls, dim, low=0.0, high=1.0):
        return cls((low,) * dim, (high,) * dim)

    @property
    def dim(self):
        return len(self.low)

    def sample(self, N, rng):
        low = np.asarray(self.low)
        return low + (np.asarray(self.high) - low) * rng.random((N, self.dim))

    def logpdf(self, x):
        x = check_coords(x)
        low, high = np.asarray(self.low), np.asarray(self.high)
        inside = np.all((x >= low) & (x < high), axis=1)
        return np.where(inside, -np.sum(np.log(high - low)), -np.inf)


@dataclass(frozen=True)
class Normal:
    """Independent normal components with per-dimension mean and sd."""

    mean: tuple = (0.0,)
    sd: tuple = (1.0,)

    def __post_init__(self):
        mean = np.atleast_1d(np.asarray(self.mean, dtype=float))
        sd = np.atleast_1d(np.asarray(self.sd, dtype=float))
        mean, sd = np.broadcast_arrays(mean, sd)
        if not (np.all(np.isfinite(mean)) and np.all(np.isfinite(sd))):
            raise ValueError("normal parameters must be finite")
        if np.any(sd <= 0):
            raise ValueError("normal standard deviations must be positive")
        object.__setattr__(self, "mean", tuple(mean.tolist()))
        object.__setattr__(self, "sd", tuple(sd.tolist()))

    @classmethod
    def standard(cls, dim=1):
        return cls((0.0,) * dim, (1.0,) * dim)

    @property
    def dim(self):
        return len(self.mean)

    def sample(self, N, rng):
        z = special.ndtri(_open_uniforms(rng, (N, self.dim)))
        return np.asarray(self.mean) + np.asarray(self.sd) * z

    def logpdf(self, x):
        x = check_coords(x)
        mean, sd = np.asarray(self.mean), np.asarray(self.sd)
        z = (x - mean) / sd
        return np.sum(-0.5 * z * z - np.log(sd) - _LOG_SQRT_2PI, axis=1)


@dataclass(frozen=True)
class Custom:
    """Distribution given by a transform of uniforms on ``(0, 1)^dim``.

    ``transform`` maps an (N, dim) array of uniforms to (N, q) coordinates,
    for instance a quantile function. ``logpdf`` is only needed when the
    distribution is used as an importance-sampling target or proposal.
    """

    transform: Callable
    dim: int = 1
    logpdf_fn: Optional[Callable] = None

    def __post_init__(self):
        if self.dim < 1:
            raise ValueError("dim must be at least 1")

    def sample(self, N, rng):
        x = np.asarray(self.transform(_open_uniforms(rng, (N, self.dim))), dtype=float)
        return x.reshape(N, -1)

    def logpdf(self, x):
        if self.logpdf_fn is None:
            raise ValueError("this custom distribution has no log-density")
        return np.asarray(self.logpdf_fn(check_coords(x)), dtype=float)


@dataclass(frozen=True)
class ISSpec:
    """Importance-sampling pair: draw from ``proposal``, reweight to ``target``.

    The proposal must put positive density wherever the target does and the
    integrand is nonzero; this is not checked.
    """

    target: object
    proposal: object

    def __post_init__(self):
        if self.target.dim != self.proposal.dim:
            raise ValueError("target and proposal dimensions differ")

    def weights(self, x):
        """Likelihood ratio ``f(x) / g(x)`` at the rows of ``x``."""
        with np.errstate(over="ignore", invalid="ignore"):
            return np.exp(self.target.logpdf(x) - self.proposal.logpdf(x))


@dataclass
class DiscretizedPopulation:
    """An iid cloud standing in for a continuous distribution.

    Attributes
    ----------
    coords : ndarray of shape (N, q)
    weights : ndarray of shape (N,)
        1 for plain discretization, ``f/g`` under importance sampling.
    seed_record : dict
        How the cloud was generated.
    """

    coords: np.ndarray
    weights: np.ndarray
    seed_record: dict = field(default_factory=dict)

    @property
    def size(self):
        return self.coords.shape[0]

    def to_csv(self, path_or_file):
        """Write one row per point: ``x0..x{q-1}`` then ``weight``."""
        q = self.coords.shape[1]
        header = [f"x{d}" for d in range(q)] + ["weight"]
        own = isinstance(path_or_file, (str, bytes)) or hasattr(path_or_file, "__fspath__")
        fh = open(path_or_file, "w", newline="", encoding="utf-8") if own else path_or_file
        try:
            writer = csv.writer(fh, lineterminator="\n")
            writer.writerow(header)
            for row, w in zip(self.coords, self.weights):
                writer.writerow([repr(float(v)) for v in row] + [repr(float(w))])
        finally:
            if own:
                fh.close()

    @classmethod
    def from_csv(cls, path):
        with open(path, newline="", encoding="utf-8") as fh:
            rows = list(csv.reader(fh))
        header, body = rows[0], rows[1:]
        data = np.array(body, dtype=float).reshape(len(body), len(header))
        if header[-1] == "weight":
            return cls(data[:, :-1], data[:, -1])
        return cls(data, np.ones(len(body)))


def default_population_size(n, factor=100):
    """Discretization size for a target sample size ``n`` (``factor * n``)."""
    return int(factor * n)


def _seed_record(seed, rng, dist, N, kind):
    return {
        "kind": kind,
        "seed": seed if isinstance(seed, (int, np.integer)) else None,
        "bit_generator": type(rng.bit_generator).__name__,
        "normal_transform": "inverse-cdf",
        "distribution": type(dist).__name__,
        "N": int(N),
    }


def discretize(dist, N, rng=None):
    """Draw ``N`` iid points from ``dist``.

    Parameters
    ----------
    dist : Uniform, Normal or Custom
    N : int
    rng : None, int or numpy Generator

    Returns
    -------
    DiscretizedPopulation
        Weights are all 1.
    """
    if int(N) < 1:
        raise ValueError(f"N must be at least 1, got {N}")
    gen = check_rng(rng)
    coords = np.ascontiguousarray(dist.sample(int(N), gen), dtype=float)
    return DiscretizedPopulation(
        coords, np.ones(int(N)), _seed_record(rng, gen, dist, N, "iid")
    )


def discretize_is(spec, N, rng=None):
    """Draw ``N`` iid points from the proposal and attach ``f/g`` weights.

    Raises
    ------
    ValueError
        If a weight is not finite and positive at some drawn point.
    """
    if int(N) < 1:
        raise ValueError(f"N must be at least 1, got {N}")
    gen = check_rng(rng)
    coords = np.ascontiguousarray(spec.proposal.sample(int(N), gen), dtype=float)
    weights = spec.weights(coords)
    bad = ~np.isfinite(weights) | (weights <= 0)
    if np.any(bad):
        raise ValueError(
            f"importance weight is not finite and positive at {int(bad.sum())} drawn points"
        )
    return DiscretizedPopulation(
        coords, weights, _seed_record(rng, gen, spec.proposal, N, "importance")
    )


def standardize(coords):
    """Scale each column to unit sample standard deviation.

    Means are left alone. Constant columns are returned unscaled and
    reported through :mod:`warnings`.
    """
    X = check_coords(coords, min_samples=2)
    sd = X.std(axis=0, ddof=1)
    flat = sd == 0
    if np.any(flat):
        warnings.warn(
            f"columns {np.flatnonzero(flat).tolist()} have zero variance and were not scaled",
            UserWarning,
            stacklevel=2,
        )
    return X / np.where(flat, 1.0, sd)

"""Input validation helpers shared by the samplers, estimators and CLI."""

from __future__ import annotations

import numbers

import numpy as np
from sklearn.utils import check_array

#: Probabilities within this distance of 0 or 1 count as decided and are snapped.
DECIDED_TOL = 1e-9

METRICS = ("euclidean", "cityblock", "chebyshev")


def check_coords(X, *, name="X", min_samples=1):
    """Return ``X`` as a finite 2-D float64 array of shape (N, q).

    1-D input is treated as a single auxiliary variable (one column).
    """
    X = np.asarray(X)
    if X.ndim == 1:
        X = np.reshape(X, (-1, 1))
    return check_array(
        X,
        dtype=np.float64,
        ensure_min_samples=min_samples,
        input_name=name,
        order="C",
    )


def check_probabilities(probs, n_units=None):
    """Validate a vector of inclusion probabilities.

    Entries must lie in [0, 1]. Values within ``DECIDED_TOL`` of 0 or 1 are
    snapped so that later "decided" checks are exact.
    """
    probs = np.array(probs, dtype=np.float64, copy=True).ravel()
    if n_units is not None and probs.shape[0] != n_units:
        raise ValueError(
            f"probabilities have length {probs.shape[0]}, expected {n_units}"
        )
    if not np.all(np.isfinite(probs)):
        raise ValueError("inclusion probabilities must be finite")
    if np.any(probs < -DECIDED_TOL) or np.any(probs > 1 + DECIDED_TOL):
        raise ValueError("inclusion probabilities must lie in [0, 1]")
    probs[probs <= DECIDED_TOL] = 0.0
    probs[probs >= 1 - DECIDED_TOL] = 1.0
    return probs


def equal_probabilities(n, N):
    """Equal inclusion probabilities ``n / N`` for a population of size N."""
    if not 0 < n <= N:
        raise ValueError(f"need 0 < n <= N, got n={n}, N={N}")
    return np.full(N, n / N)


def check_metric(metric):
    """Normalize a distance specification.

    Returns either one of the built-in metric names or the callable itself.
    A callable takes ``(row, matrix)`` and returns one distance per matrix
    row.
    """
    if callable(metric):
        return metric
    if isinstance(metric, str):
        name = metric.lower()
        if name == "chebychev":  # MATLAB spelling
            name = "chebyshev"
        if name in METRICS:
            return name
    raise ValueError(f"unknown metric {metric!r}; expected one of {METRICS} or a callable")


def check_rng(seed):
    """Turn ``seed`` into a :class:`numpy.random.Generator`.

    Accepts None, an int, a SeedSequence or an existing Generator (returned
    as is, so the caller's stream advances).
    """
    if isinstance(seed, np.random.Generator):
        return seed
    if seed is None or isinstance(seed, (numbers.Integral, np.random.SeedSequence)):
        return np.random.default_rng(seed)
    raise ValueError(f"{seed!r} cannot be used to seed a numpy Generator")

"""Draw n points from a distribution: iid, or LPM-thinned from an N-point cloud."""

from __future__ import annotations

import numpy as np

from .._validation import equal_probabilities
from ..continuous import discretize, discretize_is
from ..estimation import ht_estimate
from ..pivotal import lpm1, lpm2

_LPM = {"lpm1": lpm1, "lpm2": lpm2}


def thin(coords, n, method, rng, metric="euclidean"):
    """LPM sample of size ``n`` with equal probabilities; returns (indices, probs)."""
    probs = equal_probabilities(n, coords.shape[0])
    res = _LPM[method](probs, coords, metric, rng)
    return res.selected, probs[res.selected]


def lpm_estimate(dist, y, n, N, method, rng, spec=None):
    """HT mean of ``y`` over an LPM thinning of a fresh cloud.

    With ``spec`` (an ISSpec) the cloud comes from the proposal and the
    importance weights multiply ``y``. Returns (estimate, sampled coords,
    sampled y values, sampled weights).
    """
    pop = discretize_is(spec, N, rng) if spec is not None else discretize(dist, N, rng)
    idx, pi = thin(pop.coords, n, method, rng)
    values = y(pop.coords[idx])
    w = pop.weights[idx] if spec is not None else None
    est = ht_estimate(values, pi, N, weights=w).point
    return est, pop.coords[idx], values, w


def lpm_methods():
    return tuple(_LPM)


def first_column(x):
    return np.asarray(x)[:, 0]

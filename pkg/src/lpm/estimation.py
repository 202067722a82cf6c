"""Horvitz-Thompson estimation, local-mean variance and spatial balance."""

from __future__ import annotations

import json
from dataclasses import asdict, dataclass
from typing import Optional

import numpy as np

from ._validation import check_coords, check_metric, check_rng

__all__ = [
    "SCHEMA_VERSION",
    "EstimateReport",
    "BalanceReport",
    "ht_estimate",
    "local_mean_variance",
    "spatial_balance",
    "pairwise_distances",
]

SCHEMA_VERSION = "1.0"

# rows of a distance matrix built at once; bounds memory at about 8 MB per block
_BLOCK_ELEMENTS = 1 << 20


@dataclass
class EstimateReport:
    """Point estimate with an optional variance estimate."""

    point: float
    n: int
    variance: Optional[float] = None
    n_prime: Optional[int] = None
    method: str = "ht"

    def to_dict(self):
        return {"schema_version": SCHEMA_VERSION, **asdict(self)}

    def to_json(self, **kwargs):
        return json.dumps(self.to_dict(), **kwargs)


@dataclass
class BalanceReport:
    """Spatial balance of one sample.

    Attributes
    ----------
    balance : float
        ``mean((a - 1)**2)``.
    cell_masses : ndarray of shape (n,)
        Estimated cell mass ``a_i`` of every sample point, scaled so they
        sum to ``n``.
    mc_points : int
        Size of the reference cloud.
    """

    balance: float
    cell_masses: np.ndarray
    mc_points: int

    def to_dict(self):
        return {
            "schema_version": SCHEMA_VERSION,
            "balance": float(self.balance),
            "cell_masses": [float(a) for a in self.cell_masses],
            "mc_points": int(self.mc_points),
        }

    def to_json(self, **kwargs):
        return json.dumps(self.to_dict(), **kwargs)


def _vector(values, name):
    v = np.asarray(values, dtype=float)
    if v.ndim != 1:
        raise ValueError(f"{name} must be one-dimensional, got shape {v.shape}")
    if not np.all(np.isfinite(v)):
        raise ValueError(f"{name} contains non-finite values")
    return v


def ht_estimate(values, probs, N, weights=None):
    """Horvitz-Thompson estimate of a population mean.

    ``point = sum(w * y / pi) / N`` with ``w = 1`` unless importance
    weights are given.

    Parameters
    ----------
    values : array-like of shape (n,)
        Trait values of the sampled units.
    probs : array-like of shape (n,)
        Their inclusion probabilities, all positive.
    N : int
        Population size.
    weights : array-like of shape (n,), optional
        Importance weights ``f/g`` of the sampled units.

    Returns
    -------
    EstimateReport
    """
    y = _vector(values, "values")
    pi = _vector(probs, "probs")
    if pi.shape != y.shape:
        raise ValueError(f"values and probs lengths differ ({y.size} vs {pi.size})")
    if np.any(pi <= 0):
        raise ValueError("inclusion probabilities of sampled units must be positive")
    if np.any(pi > 1):
        raise ValueError("inclusion probabilities cannot exceed 1")
    if N < 1:
        raise ValueError(f"N must be at least 1, got {N}")
    if weights is not None:
        w = _vector(weights, "weights")
        if w.shape != y.shape:
            raise ValueError(f"values and weights lengths differ ({y.size} vs {w.size})")
        y = w * y
    return EstimateReport(point=float(np.sum(y / pi) / N), n=int(y.size))


def _pair_block(A, B, metric):
    diff = A[:, None, :] - B[None, :, :]
    if metric == "euclidean":
        return np.sqrt(np.einsum("ijk,ijk->ij", diff, diff))
    if metric == "cityblock":
        return np.abs(diff).sum(axis=2)
    return np.abs(diff).max(axis=2)


def pairwise_distances(A, B, metric="euclidean"):
    """Distance matrix between the rows of ``A`` and ``B``.

    A callable metric is applied row by row as ``metric(a, B)``.
    """
    metric = check_metric(metric)
    if callable(metric):
        return np.vstack([np.asarray(metric(a, B), dtype=float) for a in A])
    return _pair_block(A, B, metric)


def _row_blocks(n_rows, n_cols, q=1):
    step = max(1, _BLOCK_ELEMENTS // max(1, n_cols * q))
    for start in range(0, n_rows, step):
        yield start, min(n_rows, start + step)


def local_mean_variance(values, coords, metric="euclidean", n_prime=10):
    """Local-mean variance estimate of an LPM Horvitz-Thompson mean.

    ``V = n' / (n**2 (n' - 1)) * sum_x (y(x) - mean(y over S_x))**2``, where
    ``S_x`` is ``x`` together with its ``n' - 1`` nearest sampled
    neighbours. Equal distances are resolved in favour of the lower index.

    With ``n' = n`` this is the iid formula ``sum((y - ybar)**2) / (n (n-1))``.
    Small ``n'`` tracks local structure but is itself noisy, and no choice
    of ``n'`` is best in general.

    Parameters
    ----------
    values : array-like of shape (n,)
    coords : array-like of shape (n, q) or (n,)
        Coordinates of the sampled units.
    metric : {"euclidean", "cityblock", "chebyshev"} or callable
    n_prime : int, default 10
        Neighbourhood size, ``2 <= n_prime <= n``.

    Returns
    -------
    float
    """
    y = _vector(values, "values")
    X = check_coords(coords, name="coords")
    n = y.size
    if X.shape[0] != n:
        raise ValueError(f"values and coords disagree on n ({n} vs {X.shape[0]})")
    n_prime = int(n_prime)
    if not 2 <= n_prime <= n:
        raise ValueError(f"n_prime must satisfy 2 <= n_prime <= n={n}, got {n_prime}")
    if n_prime == n:
        local = np.full(n, y.mean())
    else:
        local = np.empty(n)
        for a, b in _row_blocks(n, n, X.shape[1]):
            D = pairwise_distances(X[a:b], X, metric)
            rows = np.arange(b - a)
            D[rows, a + rows] = -1.0  # the point itself always comes first
            thr = np.partition(D, n_prime - 1, axis=1)[:, n_prime - 1 : n_prime]
            below = D < thr
            at = D == thr
            room = n_prime - below.sum(axis=1, keepdims=True)
            # lowest indices win among points at the cut-off distance
            take = below | (at & (np.cumsum(at, axis=1) <= room))
            local[a:b] = (take * y).sum(axis=1) / n_prime
    return float(n_prime / (n * n * (n_prime - 1)) * np.sum((y - local) ** 2))


def spatial_balance(sample, reference, rng=None, metric="euclidean"):
    """Monte Carlo cell-mass balance of a sample.

    Each reference point is assigned to its nearest sample point, with
    exact ties split at random. The cell mass of sample point ``i`` is
    ``a_i = n * count_i / M`` and the balance is ``mean((a - 1)**2)``.
    Over a dense uniform cloud this estimates the Voronoi-area balance in
    any dimension.

    Parameters
    ----------
    sample : array-like of shape (n, q)
    reference : array-like of shape (M, q)
        Cloud representing the target distribution, ``M >= n``.
    rng : None, int or numpy Generator
        Only used for tie-breaking.
    metric : {"euclidean", "cityblock", "chebyshev"} or callable

    Returns
    -------
    BalanceReport
    """
    S = check_coords(sample, name="sample")
    R = check_coords(reference, name="reference")
    if S.shape[1] != R.shape[1]:
        raise ValueError(
            f"sample has {S.shape[1]} columns but reference has {R.shape[1]}"
        )
    n, M = S.shape[0], R.shape[0]
    if M < n:
        raise ValueError(f"reference cloud ({M}) must be at least as large as the sample ({n})")
    metric = check_metric(metric)
    counts = np.zeros(n, dtype=np.int64)
    gen = None
    for a, b in _row_blocks(M, n, S.shape[1]):
        D = pairwise_distances(R[a:b], S, metric)
        owner = D.argmin(axis=1)
        tied = (D == D[np.arange(b - a), owner][:, None]).sum(axis=1) > 1
        if np.any(tied):
            gen = check_rng(rng) if gen is None else gen
            for r in np.flatnonzero(tied):
                cand = np.flatnonzero(D[r] == D[r, owner[r]])
                owner[r] = cand[min(int(gen.random() * cand.size), cand.size - 1)]
        counts += np.bincount(owner, minlength=n)
    a = n * counts / M
    return BalanceReport(float(np.mean((a - 1.0) ** 2)), a, M)

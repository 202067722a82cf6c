"""Exact distribution of LPM samples for tiny populations.

Walks every branch of the algorithm's randomness (unit draw, tie-break,
probability update) with exact rational arithmetic and returns the exact
probability of every possible sample. This is the ground truth the
Monte Carlo tests compare the sampler against.

Tie sets are computed with the same distance keys as the sampler and each
tied neighbour is an equally likely branch. For LPM1, rejected draws are
retried, so each mutually nearest pair is taken with probability
proportional to its draw probability. The sampler's fallback after
``10 * N`` consecutive rejections is not modelled; its probability is
below ``(1 - 2 / N**2) ** (10 * N)``.
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from fractions import Fraction
from functools import lru_cache

import numpy as np

from ._validation import check_coords, check_metric

MAX_UNITS = 8


@dataclass
class OracleResult:
    """Exact inclusion probabilities and sample distribution.

    Attributes
    ----------
    first_order : list of Fraction
    second_order : list of list of Fraction
        ``second_order[i][j]`` is the probability that both i and j are
        sampled; the diagonal equals ``first_order``.
    sample_distribution : dict
        Maps a sorted tuple of unit indices to its exact probability.
    """

    first_order: list
    second_order: list
    sample_distribution: dict

    @property
    def first_order_array(self):
        return np.array([float(p) for p in self.first_order])

    @property
    def second_order_array(self):
        return np.array([[float(p) for p in row] for row in self.second_order])

    def to_dict(self):
        return {
            "first_order": [float(p) for p in self.first_order],
            "first_order_exact": [str(p) for p in self.first_order],
            "second_order": self.second_order_array.tolist(),
            "sample_distribution": [
                {"sample": list(s), "probability": float(p), "exact": str(p)}
                for s, p in sorted(self.sample_distribution.items())
            ],
        }

    def to_json(self, **kwargs):
        return json.dumps(self.to_dict(), **kwargs)


def _as_fraction(p):
    if isinstance(p, Fraction):
        return p
    if isinstance(p, int):
        return Fraction(p)
    # decimal reading of the float, so 0.1 is 1/10 and sums stay integral
    return Fraction(repr(float(p)))


def _key_matrix(X, metric):
    if callable(metric):
        return [[float(v) for v in metric(row, X)] for row in X]
    rows = X.tolist()
    K = []
    for a in rows:
        keys = []
        for b in rows:
            acc = 0.0
            for xa, xb in zip(a, b):
                diff = abs(xa - xb)
                if metric == "euclidean":
                    acc += diff * diff
                elif metric == "cityblock":
                    acc += diff
                else:
                    acc = max(acc, diff)
            keys.append(acc)
        K.append(keys)
    return K


def _branches(pi, pj):
    s = pi + pj
    if s < 1:
        return [((Fraction(0), s), pj / s), ((s, Fraction(0)), pi / s)]
    return [
        ((Fraction(1), s - 1), (1 - pj) / (2 - s)),
        ((s - 1, Fraction(1)), (1 - pi) / (2 - s)),
    ]


def enumerate_lpm(probs, coords, metric="euclidean", variant="lpm2"):
    """Enumerate the exact LPM sampling distribution.

    Parameters
    ----------
    probs : sequence of float or Fraction
        Inclusion probabilities. Floats are read by their decimal repr.
    coords : array-like of shape (N, q)
    metric : str or callable
    variant : {"lpm1", "lpm2"}

    Returns
    -------
    OracleResult
    """
    X = check_coords(coords, name="coords")
    N = X.shape[0]
    if N > MAX_UNITS:
        raise ValueError(f"exact enumeration is limited to N <= {MAX_UNITS}, got {N}")
    if variant not in ("lpm1", "lpm2"):
        raise ValueError(f"unknown variant {variant!r}")
    start = tuple(_as_fraction(p) for p in probs)
    if len(start) != N:
        raise ValueError("probabilities and coordinates disagree on N")
    if any(p < 0 or p > 1 for p in start):
        raise ValueError("inclusion probabilities must lie in [0, 1]")
    K = _key_matrix(X, check_metric(metric))

    def nearest(i, undecided):
        others = [j for j in undecided if j != i]
        best = min(K[i][j] for j in others)
        return [j for j in others if K[i][j] == best]

    def steps(state, undecided):
        # (i, j, weight) for the pivotal pairs reachable in one step
        k = len(undecided)
        pairs = []
        for i in undecided:
            ties = nearest(i, undecided)
            for j in ties:
                if variant == "lpm1" and i not in nearest(j, undecided):
                    continue
                pairs.append((i, j, Fraction(1, k * len(ties))))
        total = sum(w for _, _, w in pairs)
        return [(i, j, w / total) for i, j, w in pairs]

    @lru_cache(maxsize=None)
    def dist(state):
        undecided = [u for u, p in enumerate(state) if 0 < p < 1]
        if not undecided:
            return {tuple(u for u, p in enumerate(state) if p == 1): Fraction(1)}
        out = {}

        def add(sub, weight):
            for sample, p in dist(sub).items():
                out[sample] = out.get(sample, Fraction(0)) + weight * p

        if len(undecided) == 1:
            u = undecided[0]
            for value, weight in ((1, state[u]), (0, 1 - state[u])):
                nxt = list(state)
                nxt[u] = Fraction(value)
                add(tuple(nxt), weight)
            return out
        for i, j, w in steps(state, undecided):
            for (a, b), bp in _branches(state[i], state[j]):
                if bp == 0:
                    continue
                nxt = list(state)
                nxt[i], nxt[j] = a, b
                add(tuple(nxt), w * bp)
        return out

    samples = dist(start)
    first = [Fraction(0)] * N
    second = [[Fraction(0)] * N for _ in range(N)]
    for sample, p in samples.items():
        for a in sample:
            first[a] += p
            for b in sample:
                second[a][b] += p
    return OracleResult(first, second, dict(samples))

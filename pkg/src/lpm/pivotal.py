"""Local pivotal method (LPM1 / LPM2) on a discrete population.

Each pivotal step picks an undecided unit ``i`` uniformly at random, finds a
nearest undecided neighbour ``j`` and moves inclusion probability between
the two so that at least one of them becomes 0 or 1. The final sample is the
set of units that end at probability 1.

Built-in metrics run in compiled loops over a k-d tree (a sorted linked
list for one-dimensional data). A user supplied
distance callable ``metric(row, matrix) -> distances`` runs the same
algorithm in Python with a linear scan, consuming randomness in exactly the
same order.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from . import _kernels
from ._kdtree import KDTree, index_reset, make_index, work_buffers
from ._validation import (
    DECIDED_TOL,
    check_coords,
    check_metric,
    check_probabilities,
    check_rng,
)

__all__ = [
    "SampleResult",
    "NeighborIndex",
    "PivotalSampler",
    "pivotal_update",
    "nearest_undecided",
    "lpm1",
    "lpm2",
]


@dataclass
class SampleResult:
    """Outcome of one LPM run.

    Attributes
    ----------
    selected : ndarray of int
        Sorted indices of the units in the sample.
    final_probs : ndarray of float
        Updated probabilities, each exactly 0.0 or 1.0.
    steps : int
        Number of pivotal updates performed.
    """

    selected: np.ndarray
    final_probs: np.ndarray
    steps: int
    method: str = "lpm2"

    @property
    def size(self):
        return int(self.selected.shape[0])


def pivotal_update(pi_i, pi_j, u):
    """Update two undecided inclusion probabilities.

    If ``pi_i + pi_j < 1`` one unit is excluded and the other receives the
    whole mass; otherwise one unit is included and the other keeps the
    remainder. The branch is chosen by comparing the uniform draw ``u`` with
    the probability of the first branch, so ``u`` below that threshold gives
    ``(0, s)`` (resp. ``(1, s - 1)``).

    Parameters
    ----------
    pi_i, pi_j : float
        Probabilities strictly between 0 and 1.
    u : float
        Uniform draw in [0, 1).

    Returns
    -------
    tuple of float
        The updated pair. The sum is preserved and at least one entry is
        exactly 0 or 1.
    """
    for name, p in (("pi_i", pi_i), ("pi_j", pi_j)):
        if not 0.0 <= p <= 1.0:
            raise ValueError(f"{name}={p} is not a probability")
        if p <= DECIDED_TOL or p >= 1.0 - DECIDED_TOL:
            raise ValueError(f"{name}={p} is already decided; only undecided units pivot")
    if not 0.0 <= u < 1.0:
        raise ValueError(f"u={u} must lie in [0, 1)")
    a, b = _kernels.pivot(float(pi_i), float(pi_j), float(u), DECIDED_TOL)
    return a, b


class NeighborIndex:
    """Nearest-undecided-neighbour queries over a population.

    Units start active when their probability is undecided and are removed
    with :meth:`deactivate`. Built-in metrics use a compiled index;
    callables are scanned linearly.
    """

    def __init__(self, coords, metric="euclidean", active=None, force_tree=False):
        self.X = check_coords(coords)
        self.metric = check_metric(metric)
        N = self.X.shape[0]
        if active is None:
            active = np.ones(N, dtype=bool)
        if callable(self.metric):
            self._tree = None
            self.active = np.array(active, dtype=bool)
        else:
            self._tree = KDTree(self.X, self.metric, force_tree=force_tree)
            self._tree.reset(np.asarray(active, dtype=bool))
            self.active = self._tree.active

    @property
    def n_active(self):
        return int(np.count_nonzero(self.active))

    def deactivate(self, u):
        if self._tree is not None:
            self._tree.deactivate(u)
        else:
            self.active[u] = False

    def ties(self, i):
        """All active units other than ``i`` at minimal distance, ascending."""
        if self._tree is not None:
            return self._tree.ties(i)
        cand = np.flatnonzero(self.active)
        cand = cand[cand != i]
        if cand.size == 0:
            return cand
        d = np.asarray(self.metric(self.X[i], self.X[cand]), dtype=np.float64)
        if d.shape != cand.shape:
            raise ValueError(
                f"distance callable returned shape {d.shape}, expected {cand.shape}"
            )
        if np.any(~np.isfinite(d)) or np.any(d < 0):
            raise ValueError("distance callable must return finite non-negative values")
        return cand[d == d.min()]


def nearest_undecided(index, i, rng=None):
    """Nearest active neighbour of unit ``i``.

    Ties are broken uniformly at random with one draw from ``rng``, taken
    only when more than one unit is at the minimal distance.
    """
    if index.n_active < 2:
        raise ValueError("need at least two undecided units")
    ties = index.ties(i)
    if ties.size > 1:
        rng = check_rng(rng)
        return int(ties[_draw_index(rng.random(), ties.size)])
    return int(ties[0])


def _draw_index(u, k):
    return min(int(u * k), k - 1)


class _Uniforms:
    """Sequential reader over a Generator's uniform stream."""

    def __init__(self, rng):
        self.rng = rng
        self.buf = np.empty(0)
        self.ptr = 0

    def ensure(self, k, block):
        if self.ptr + k > self.buf.shape[0]:
            self.buf = np.concatenate([self.buf[self.ptr:], self.rng.random(block)])
            self.ptr = 0

    def next(self):
        u = self.buf[self.ptr]
        self.ptr += 1
        return u


def _interpreted(X, probs, metric, rng, variant):
    undecided = (probs > 0.0) & (probs < 1.0)
    index = NeighborIndex(X, metric, active=undecided)
    und = list(np.flatnonzero(undecided))
    pos = {u: p for p, u in enumerate(und)}
    stream = _Uniforms(rng)
    max_fails = 10 * X.shape[0]
    steps = fails = 0

    def remove(u):
        p = pos.pop(u)
        last = und.pop()
        if last != u:
            und[p] = last
            pos[last] = p
        index.deactivate(u)

    def apply(i, j, u):
        nonlocal steps
        a, b = pivotal_update(probs[i], probs[j], u)
        probs[i], probs[j] = a, b
        if a in (0.0, 1.0):
            remove(i)
        if b in (0.0, 1.0):
            remove(j)
        steps += 1

    while len(und) >= 2:
        stream.ensure(3, 3 * len(und) + 1)
        if variant == "lpm1" and fails >= max_fails:
            for i in sorted(und):
                j = int(index.ties(i)[0])
                if i in index.ties(j):
                    break
            fails = 0
            apply(i, j, stream.next())
            continue
        i = und[_draw_index(stream.next(), len(und))]
        ties = index.ties(i)
        j = int(ties[_draw_index(stream.next(), ties.size)]) if ties.size > 1 else int(ties[0])
        if variant == "lpm1" and i not in index.ties(j):
            fails += 1
            continue
        fails = 0
        apply(i, j, stream.next())
    if len(und) == 1:
        stream.ensure(1, 4)
        i = und[0]
        probs[i] = 1.0 if stream.next() < probs[i] else 0.0
        remove(i)
    return probs, steps


class PivotalSampler:
    """LPM sampler bound to one population, for drawing many samples.

    Validation and index construction happen once; each :meth:`sample`
    call only resets the index.

    Parameters
    ----------
    probs : array-like of shape (N,)
        Inclusion probabilities in [0, 1].
    coords : array-like of shape (N, q) or (N,)
    metric : {"euclidean", "cityblock", "chebyshev"} or callable
    method : {"lpm2", "lpm1"}
    compiled : bool
        Use the compiled loop for built-in metrics. ``False`` forces the
        Python loop; both consume randomness identically.
    """

    def __init__(self, probs, coords, metric="euclidean", method="lpm2", compiled=True):
        if method not in ("lpm1", "lpm2"):
            raise ValueError(f"method must be 'lpm1' or 'lpm2', got {method!r}")
        self.X = check_coords(coords, name="coords")
        self.probs = check_probabilities(probs, self.X.shape[0])
        self.metric = check_metric(metric)
        self.method = method
        self._undecided = (self.probs > 0.0) & (self.probs < 1.0)
        self._compiled = compiled and not callable(self.metric)
        if self._compiled and self._undecided.any():
            self._ix = make_index(self.X, self.metric)
            self._stack, self._ties = work_buffers(self._ix)
            self._back = np.empty_like(self._ties)
            self._und = np.flatnonzero(self._undecided).astype(np.int64)
            self._pos = np.full(self.X.shape[0], -1, np.int64)
            self._pos[self._und] = np.arange(self._und.size)

    @property
    def n_units(self):
        return self.X.shape[0]

    def sample(self, rng=None):
        """Draw one sample; returns a :class:`SampleResult`."""
        rng = check_rng(rng)
        probs = self.probs.copy()
        if not self._undecided.any():
            return _result(probs, 0, self.method)
        if not self._compiled:
            probs, steps = _interpreted(self.X, probs, self.metric, rng, self.method)
            return _result(probs, steps, self.method)
        index_reset(self._ix, self._undecided)
        und = self._und.copy()
        pos = self._pos.copy()
        st = np.array([und.size, 0, 0], np.int64)
        draws = np.empty(0)
        ptr = 0
        while True:
            draws = np.concatenate([draws[ptr:], rng.random(3 * int(st[0]) + 1)])
            status, ptr = _kernels.select_loop(
                *self._ix, self._stack, self._ties, self._back, probs, und, pos,
                st, draws, 0, DECIDED_TOL, self.method == "lpm1",
                10 * self.n_units,
            )
            if status == _kernels.DONE:
                break
        return _result(probs, st[1], self.method)


def _result(probs, steps, method):
    return SampleResult(
        selected=np.flatnonzero(probs == 1.0),
        final_probs=probs,
        steps=int(steps),
        method=method,
    )


def lpm2(probs, coords, metric="euclidean", rng=None):
    """Select a well-spread sample with LPM2.

    Parameters
    ----------
    probs : array-like of shape (N,)
        Inclusion probabilities in [0, 1]. Their sum is the expected sample
        size; when it is an integer the sample size is fixed.
    coords : array-like of shape (N, q) or (N,)
        Auxiliary coordinates of the population.
    metric : {"euclidean", "cityblock", "chebyshev"} or callable
        Distance used to find nearest neighbours. A callable receives one
        row and a matrix of rows and returns one distance per matrix row.
    rng : None, int, SeedSequence or numpy Generator
        Source of randomness. Uniforms are pulled from it in blocks of
        ``3 * k + 1`` (``k`` undecided units) and consumed in the order
        unit draw, tie-break draw (only on ties), branch draw.

    Returns
    -------
    SampleResult
    """
    return PivotalSampler(probs, coords, metric, "lpm2").sample(rng)


def lpm1(probs, coords, metric="euclidean", rng=None):
    """Select a sample with LPM1 (updates only mutually nearest pairs).

    A drawn pair ``(i, j)`` is updated only when ``i`` is among the nearest
    neighbours of ``j``; otherwise a new unit is drawn. After ``10 * N``
    consecutive rejections the lowest-index mutually nearest pair is used.
    Arguments as for :func:`lpm2`.
    """
    return PivotalSampler(probs, coords, metric, "lpm1").sample(rng)

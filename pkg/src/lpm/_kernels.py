"""Compiled selection loop for LPM1 and LPM2 over a neighbour index.

Randomness comes from a buffer of uniforms consumed strictly in order. The
loop returns early when fewer than three uniforms remain, so the caller can
append more and resume; the consumed sequence does not depend on how the
stream was chunked.

Per pivotal step the draws are, in order:

1. unit draw ``i = undecided[floor(u * k)]``
2. tie-break draw, only when several units are nearest to ``i``:
   ``j = ties[floor(u * n_ties)]`` with ties sorted by unit index
3. branch draw for the probability update

LPM1 repeats (1)-(2) until the pair is mutually nearest, then does (3). A
single undecided unit left over (non-integer total) is decided by one more
draw, ``u < pi``.

Helpers called inside the loop take few arguments on purpose: numba calls
with many array arguments are expensive relative to a pivotal step.
"""

from __future__ import annotations

import numba as nb
import numpy as np

from ._kdtree import _line_ties, _tree_ties

DONE = 0
NEED_DRAWS = 1


@nb.njit(cache=True, nogil=True)
def pivot(pi, pj, u, tol):
    """Probability update for a pair of undecided units, snapped to {0, 1}."""
    s = pi + pj
    if s < 1.0:
        if u < pj / s:
            a, b = 0.0, s
        else:
            a, b = s, 0.0
    else:
        if u < (1.0 - pj) / (2.0 - s):
            a, b = 1.0, s - 1.0
        else:
            a, b = s - 1.0, 1.0
    if a <= tol:
        a = 0.0
    elif a >= 1.0 - tol:
        a = 1.0
    if b <= tol:
        b = 0.0
    elif b >= 1.0 - tol:
        b = 1.0
    return a, b


@nb.njit(cache=True, nogil=True)
def _draw_index(u, k):
    idx = np.int64(u * k)
    if idx >= k:
        idx = k - 1
    return idx


@nb.njit(cache=True, nogil=True)
def _swap_remove(u, und, pos, st):
    k = st[0]
    p = pos[u]
    last = und[k - 1]
    und[p] = last
    pos[last] = p
    pos[u] = -1
    st[0] = k - 1


@nb.njit(cache=True, nogil=True)
def _line_unlink(u, active, rank, prv, nxt):
    active[u] = False
    r = rank[u]
    p = prv[r]
    n = nxt[r]
    # stale links on r are kept: they still lead towards active units
    if p != -1:
        nxt[p] = n
    if n != -1:
        prv[n] = p


@nb.njit(cache=True, nogil=True)
def _tree_unlink(u, active, leaf_of, parent, count):
    active[u] = False
    node = leaf_of[u]
    while node != -1:
        count[node] -= 1
        node = parent[node]


@nb.njit(cache=True, nogil=True)
def _contains(sorted_arr, n, value):
    idx = np.searchsorted(sorted_arr[:n], value)
    return idx < n and sorted_arr[idx] == value


@nb.njit(cache=True, nogil=True)
def select_loop(X, metric, one_d, active, perm, lo, hi, left, right, parent,
                bmin, bmax, leaf_of, count, order, rank, prv, nxt,
                stack, ties, back, probs, und, pos, st, draws, ptr, tol,
                mutual, max_fails):
    """Run LPM until done or the draw buffer runs low; returns (status, ptr).

    The leading arguments are the index arrays from ``make_index``.
    ``mutual`` selects LPM1. ``st`` holds (undecided count, pivotal steps,
    consecutive LPM1 rejections); once the rejections reach ``max_fails``
    the lowest-index mutually nearest pair is used instead of a random draw.
    """
    n_draws = draws.shape[0]
    N = probs.shape[0]
    while st[0] >= 2:
        if ptr + 3 > n_draws:
            return NEED_DRAWS, ptr
        if mutual and st[2] >= max_fails:
            i = -1
            j = -1
            for c in range(N):
                if pos[c] == -1:
                    continue
                if one_d:
                    n_ties = _line_ties(X, c, metric, active, order, rank, prv,
                                        nxt, ties)
                else:
                    n_ties = _tree_ties(X, c, metric, perm, lo, hi, left, right,
                                        bmin, bmax, active, count, stack, ties)
                if n_ties > 1:
                    ties[:n_ties].sort()
                d = ties[0]
                if one_d:
                    n_back = _line_ties(X, d, metric, active, order, rank, prv,
                                        nxt, back)
                else:
                    n_back = _tree_ties(X, d, metric, perm, lo, hi, left, right,
                                        bmin, bmax, active, count, stack, back)
                if n_back > 1:
                    back[:n_back].sort()
                if _contains(back, n_back, c):
                    i = c
                    j = d
                    break
            if i == -1:  # pragma: no cover - a closest pair always qualifies
                raise RuntimeError("no mutually nearest pair among undecided units")
            st[2] = 0
        else:
            i = und[_draw_index(draws[ptr], st[0])]
            ptr += 1
            if one_d:
                n_ties = _line_ties(X, i, metric, active, order, rank, prv, nxt, ties)
            else:
                n_ties = _tree_ties(X, i, metric, perm, lo, hi, left, right,
                                    bmin, bmax, active, count, stack, ties)
            if n_ties > 1:
                ties[:n_ties].sort()
                j = ties[_draw_index(draws[ptr], n_ties)]
                ptr += 1
            else:
                j = ties[0]
            if mutual:
                if one_d:
                    n_back = _line_ties(X, j, metric, active, order, rank, prv,
                                        nxt, back)
                else:
                    n_back = _tree_ties(X, j, metric, perm, lo, hi, left, right,
                                        bmin, bmax, active, count, stack, back)
                if n_back > 1:
                    back[:n_back].sort()
                if not _contains(back, n_back, i):
                    st[2] += 1
                    continue
                st[2] = 0
        a, b = pivot(probs[i], probs[j], draws[ptr], tol)
        ptr += 1
        probs[i] = a
        probs[j] = b
        st[1] += 1
        for u in (i, j):
            if probs[u] == 0.0 or probs[u] == 1.0:
                _swap_remove(u, und, pos, st)
                if one_d:
                    _line_unlink(u, active, rank, prv, nxt)
                else:
                    _tree_unlink(u, active, leaf_of, parent, count)
    if st[0] == 1:
        if ptr + 1 > n_draws:
            return NEED_DRAWS, ptr
        u = und[0]
        probs[u] = 1.0 if draws[ptr] < probs[u] else 0.0
        ptr += 1
        _swap_remove(u, und, pos, st)
        if one_d:
            _line_unlink(u, active, rank, prv, nxt)
        else:
            _tree_unlink(u, active, leaf_of, parent, count)
    return DONE, ptr

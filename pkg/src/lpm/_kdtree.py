"""Exact nearest-neighbour indexes over a population with unit deactivation.

Two structures share one interface (``ties_of`` / ``remove_unit``):

* a static k-d tree for q >= 2. Removing a unit clears its ``active`` flag
  and decrements the active counts on the path from its leaf to the root, so
  empty subtrees are skipped during queries;
* for q == 1, the units in sorted order with a doubly linked list of the
  active ones, so the nearest active units sit right next to the query.

Queries return *every* active unit at the minimal distance, in ascending
unit order, which lets the caller break ties. Distances are compared through
a monotone key: squared distance for the Euclidean metric, the plain
distance for cityblock and Chebyshev. Both structures use the same key, so
they agree exactly on tie sets.
"""

from __future__ import annotations

import numba as nb
import numpy as np

EUCLIDEAN = 0
CITYBLOCK = 1
CHEBYSHEV = 2

METRIC_CODES = {"euclidean": EUCLIDEAN, "cityblock": CITYBLOCK, "chebyshev": CHEBYSHEV}

LEAF_SIZE = 8


@nb.njit(cache=True, nogil=True)
def point_key(X, a, b, metric):
    q = X.shape[1]
    acc = 0.0
    for d in range(q):
        diff = abs(X[a, d] - X[b, d])
        if metric == EUCLIDEAN:
            acc += diff * diff
        elif metric == CITYBLOCK:
            acc += diff
        elif diff > acc:
            acc = diff
    return acc


@nb.njit(cache=True, nogil=True)
def _box_key(X, a, bmin, bmax, node, metric):
    # lower bound of the key between point a and any point in the node's box
    q = X.shape[1]
    acc = 0.0
    for d in range(q):
        x = X[a, d]
        if x < bmin[node, d]:
            diff = bmin[node, d] - x
        elif x > bmax[node, d]:
            diff = x - bmax[node, d]
        else:
            diff = 0.0
        if metric == EUCLIDEAN:
            acc += diff * diff
        elif metric == CITYBLOCK:
            acc += diff
        elif diff > acc:
            acc = diff
    return acc


@nb.njit(cache=True, nogil=True)
def _select(perm, a, b, kth, X, d):
    # quickselect: reorder perm[a:b] so perm[kth] holds the kth value along d
    lo = a
    hi = b - 1
    while lo < hi:
        m = (lo + hi) // 2
        pivot = X[perm[m], d]
        i = lo
        j = hi
        while i <= j:
            while X[perm[i], d] < pivot:
                i += 1
            while X[perm[j], d] > pivot:
                j -= 1
            if i <= j:
                t = perm[i]
                perm[i] = perm[j]
                perm[j] = t
                i += 1
                j -= 1
        if kth <= j:
            hi = j
        elif kth >= i:
            lo = i
        else:
            return


@nb.njit(cache=True, nogil=True)
def build_tree(X, leaf_size):
    """Build the tree arrays; splits on the widest dimension at the median."""
    N, q = X.shape
    max_nodes = 2 * N + 1
    perm = np.arange(N)
    lo = np.empty(max_nodes, np.int64)
    hi = np.empty(max_nodes, np.int64)
    left = np.full(max_nodes, -1, np.int64)
    right = np.full(max_nodes, -1, np.int64)
    parent = np.full(max_nodes, -1, np.int64)
    bmin = np.empty((max_nodes, q))
    bmax = np.empty((max_nodes, q))
    leaf_of = np.empty(N, np.int64)

    lo[0] = 0
    hi[0] = N
    n_nodes = 1
    stack = np.empty(max_nodes, np.int64)
    stack[0] = 0
    top = 1
    while top > 0:
        top -= 1
        node = stack[top]
        a = lo[node]
        b = hi[node]
        for d in range(q):
            mn = np.inf
            mx = -np.inf
            for k in range(a, b):
                v = X[perm[k], d]
                if v < mn:
                    mn = v
                if v > mx:
                    mx = v
            bmin[node, d] = mn
            bmax[node, d] = mx
        split = 0
        widest = -1.0
        for d in range(q):
            w = bmax[node, d] - bmin[node, d]
            if w > widest:
                widest = w
                split = d
        # small or fully coincident point sets become leaves
        if b - a <= leaf_size or widest <= 0.0:
            for k in range(a, b):
                leaf_of[perm[k]] = node
            continue
        mid = (a + b) // 2
        _select(perm, a, b, mid, X, split)
        for child in range(2):
            c = n_nodes
            n_nodes += 1
            parent[c] = node
            if child == 0:
                lo[c] = a
                hi[c] = mid
                left[node] = c
            else:
                lo[c] = mid
                hi[c] = b
                right[node] = c
            stack[top] = c
            top += 1
    count = np.zeros(n_nodes, np.int64)
    return (
        perm,
        lo[:n_nodes].copy(),
        hi[:n_nodes].copy(),
        left[:n_nodes].copy(),
        right[:n_nodes].copy(),
        parent[:n_nodes].copy(),
        bmin[:n_nodes].copy(),
        bmax[:n_nodes].copy(),
        leaf_of,
        count,
    )


@nb.njit(cache=True, nogil=True)
def _tree_ties(X, i, metric, perm, lo, hi, left, right, bmin, bmax, active,
               count, stack, ties):
    best = np.inf
    n_ties = 0
    stack[0] = 0
    top = 1
    while top > 0:
        top -= 1
        node = stack[top]
        if count[node] == 0:
            continue
        if _box_key(X, i, bmin, bmax, node, metric) > best:
            continue
        l = left[node]
        if l == -1:
            for k in range(lo[node], hi[node]):
                u = perm[k]
                if u == i or not active[u]:
                    continue
                key = point_key(X, i, u, metric)
                if key < best:
                    best = key
                    ties[0] = u
                    n_ties = 1
                elif key == best:
                    ties[n_ties] = u
                    n_ties += 1
            continue
        r = right[node]
        # push the farther child first so the nearer one is explored first
        kl = _box_key(X, i, bmin, bmax, l, metric)
        kr = _box_key(X, i, bmin, bmax, r, metric)
        if kl <= kr:
            stack[top] = r
            stack[top + 1] = l
        else:
            stack[top] = l
            stack[top + 1] = r
        top += 2
    return n_ties


@nb.njit(cache=True, nogil=True)
def _line_ties(X, i, metric, active, order, rank, prv, nxt, ties):
    # walk outwards from i over active neighbours in sorted order; keys are
    # non-decreasing along each direction so the walk stops at the first gap
    n_ties = 0
    best = np.inf
    for direction in range(2):
        r = prv[rank[i]] if direction == 0 else nxt[rank[i]]
        side_best = np.inf
        while r != -1:
            u = order[r]
            if not active[u]:
                r = prv[r] if direction == 0 else nxt[r]
                continue
            key = point_key(X, i, u, metric)
            if key > side_best:
                break
            side_best = key
            if key < best:
                best = key
                ties[0] = u
                n_ties = 1
            elif key == best:
                ties[n_ties] = u
                n_ties += 1
            else:
                break
            r = prv[r] if direction == 0 else nxt[r]
    return n_ties


@nb.njit(cache=True, nogil=True)
def ties_of(i, stack, ties, X, metric, one_d, active, perm, lo, hi, left, right,
            parent, bmin, bmax, leaf_of, count, order, rank, prv, nxt):
    """All active units j != i at minimal distance from i, ascending.

    Returns the number of ties written to ``ties``; 0 when no other active
    unit exists. The index arrays follow the layout of :func:`make_index`.
    """
    if one_d:
        n = _line_ties(X, i, metric, active, order, rank, prv, nxt, ties)
    else:
        n = _tree_ties(X, i, metric, perm, lo, hi, left, right, bmin, bmax,
                       active, count, stack, ties)
    if n > 1:
        ties[:n].sort()
    return n


@nb.njit(cache=True, nogil=True)
def index_ties(ix, i, stack, ties):
    """Tuple-argument wrapper around :func:`ties_of` for Python callers."""
    return ties_of(i, stack, ties, *ix)


@nb.njit(cache=True, nogil=True)
def remove_unit(u, X, metric, one_d, active, perm, lo, hi, left, right, parent,
                bmin, bmax, leaf_of, count, order, rank, prv, nxt):
    """Deactivate unit u."""
    if not active[u]:
        return
    active[u] = False
    if one_d:
        r = rank[u]
        p = prv[r]
        n = nxt[r]
        # stale links on r are kept: they still lead towards active units
        if p != -1:
            nxt[p] = n
        if n != -1:
            prv[n] = p
    else:
        node = leaf_of[u]
        while node != -1:
            count[node] -= 1
            node = parent[node]


@nb.njit(cache=True, nogil=True)
def index_remove(ix, u):
    """Tuple-argument wrapper around :func:`remove_unit`."""
    remove_unit(u, *ix)


@nb.njit(cache=True, nogil=True)
def index_reset(ix, flags):
    """Make exactly the units with ``flags[u]`` active."""
    (X, metric, one_d, active, perm, lo, hi, left, right, parent, bmin, bmax,
     leaf_of, count, order, rank, prv, nxt) = ix
    N = active.shape[0]
    for u in range(N):
        active[u] = flags[u]
    if one_d:
        # every rank, active or not, links to the nearest active rank per side
        last = -1
        for r in range(N):
            prv[r] = last
            if active[order[r]]:
                last = r
        last = -1
        for r in range(N - 1, -1, -1):
            nxt[r] = last
            if active[order[r]]:
                last = r
    else:
        count[:] = 0
        for u in range(N):
            if active[u]:
                node = leaf_of[u]
                while node != -1:
                    count[node] += 1
                    node = parent[node]


_EMPTY_I = np.empty(0, np.int64)
_EMPTY_F2 = np.empty((0, 0))


def make_index(X, metric="euclidean", force_tree=False):
    """Build the index tuple consumed by the compiled loops.

    Parameters
    ----------
    X : ndarray of shape (N, q)
        Finite float64 coordinates.
    metric : {"euclidean", "cityblock", "chebyshev"}
    force_tree : bool
        Use the k-d tree even for one-dimensional data.
    """
    X = np.ascontiguousarray(X, dtype=np.float64)
    N = X.shape[0]
    active = np.zeros(N, dtype=np.bool_)
    code = METRIC_CODES[metric]
    if X.shape[1] == 1 and not force_tree:
        order = np.argsort(X[:, 0], kind="stable").astype(np.int64)
        rank = np.empty(N, np.int64)
        rank[order] = np.arange(N)
        prv = np.full(N, -1, np.int64)
        nxt = np.full(N, -1, np.int64)
        return (X, code, True, active, _EMPTY_I, _EMPTY_I, _EMPTY_I, _EMPTY_I,
                _EMPTY_I, _EMPTY_I, _EMPTY_F2, _EMPTY_F2, _EMPTY_I, _EMPTY_I,
                order, rank, prv, nxt)
    perm, lo, hi, left, right, parent, bmin, bmax, leaf_of, count = build_tree(X, LEAF_SIZE)
    return (X, code, False, active, perm, lo, hi, left, right, parent, bmin,
            bmax, leaf_of, count, _EMPTY_I, _EMPTY_I, _EMPTY_I, _EMPTY_I)


def work_buffers(ix):
    """Scratch arrays (stack, ties) sized for ``ix``."""
    return np.empty(ix[5].shape[0] + 2, np.int64), np.empty(ix[0].shape[0], np.int64)


class KDTree:
    """Python handle on a compiled index with deactivation.

    Parameters
    ----------
    X : ndarray of shape (N, q)
    metric : {"euclidean", "cityblock", "chebyshev"}
    force_tree : bool
        Skip the one-dimensional fast path.
    """

    def __init__(self, X, metric="euclidean", force_tree=False):
        self.ix = make_index(X, metric, force_tree)
        self.active = self.ix[3]
        self._stack, self._ties = work_buffers(self.ix)
        self.reset(np.ones(self.ix[0].shape[0], dtype=np.bool_))

    def reset(self, active):
        index_reset(self.ix, np.asarray(active, dtype=np.bool_))

    def deactivate(self, u):
        index_remove(self.ix, u)

    def ties(self, i):
        """All active units other than ``i`` at the minimal distance."""
        n = index_ties(self.ix, i, self._stack, self._ties)
        return self._ties[:n].copy()

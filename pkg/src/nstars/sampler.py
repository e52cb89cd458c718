"""Growable Fenwick (binary indexed) tree for weight-proportional sampling.

Weights are non-negative integers that are appended or increased; the tree
answers "which index holds the u-th unit of weight" in O(log K).  The jitted
primitives operate on a 1-based ``int64`` tree array and are shared with the
simulation kernel; :class:`FenwickSampler` wraps them for Python callers.
"""

from __future__ import annotations

import numpy as np
from numba import njit

from .errors import EmptySampler


@njit(cache=True)
def fen_append(tree, n, weight):
    """Store ``weight`` at index ``n`` (0-based) of a tree currently holding ``n`` items."""
    k = n + 1
    val = weight
    stop = k - (k & -k)
    j = k - 1
    while j > stop:
        val += tree[j]
        j -= j & -j
    tree[k] = val


@njit(cache=True)
def fen_add(tree, n, index, delta):
    k = index + 1
    while k <= n:
        tree[k] += delta
        k += k & -k


@njit(cache=True)
def fen_prefix(tree, k):
    """Sum of the first ``k`` weights."""
    s = 0
    while k > 0:
        s += tree[k]
        k -= k & -k
    return s


@njit(cache=True)
def fen_find(tree, n, u):
    """Smallest 0-based index whose inclusive prefix sum exceeds ``u``.

    ``u`` must lie in ``[0, total)``.
    """
    pos = 0
    step = 1
    while step * 2 <= n:
        step *= 2
    while step > 0:
        nxt = pos + step
        if nxt <= n and tree[nxt] <= u:
            pos = nxt
            u -= tree[nxt]
        step >>= 1
    return pos


@njit(cache=True)
def _find_many(tree, n, us, out):
    for i in range(us.shape[0]):
        out[i] = fen_find(tree, n, us[i])


class FenwickSampler:
    """Weighted sampler over a growing list of positive integer weights.

    >>> s = FenwickSampler()
    >>> s.add(1), s.add(3)
    (0, 1)
    >>> s.total
    4
    """

    def __init__(self, weights=(), capacity: int = 16):
        self._n = 0
        self._total = 0
        self._weights = np.zeros(max(capacity, 1), dtype=np.int64)
        self._tree = np.zeros(max(capacity, 1) + 1, dtype=np.int64)
        for w in weights:
            self.add(w)

    def __len__(self) -> int:
        return self._n

    @property
    def total(self) -> int:
        return self._total

    def weight(self, index: int) -> int:
        if not 0 <= index < self._n:
            raise IndexError(index)
        return int(self._weights[index])

    def weights(self) -> np.ndarray:
        return self._weights[: self._n].copy()

    def _grow(self) -> None:
        cap = 2 * self._weights.shape[0]
        w = np.zeros(cap, dtype=np.int64)
        w[: self._n] = self._weights[: self._n]
        t = np.zeros(cap + 1, dtype=np.int64)
        t[: self._n + 1] = self._tree[: self._n + 1]
        self._weights, self._tree = w, t

    def add(self, weight: int) -> int:
        """Append an item with the given weight; returns its index."""
        weight = int(weight)
        if weight <= 0:
            raise ValueError(f"weights must be positive, got {weight}")
        if self._n == self._weights.shape[0]:
            self._grow()
        idx = self._n
        self._weights[idx] = weight
        fen_append(self._tree, self._n, weight)
        self._n += 1
        self._total += weight
        return idx

    def increment(self, index: int, delta: int = 1) -> None:
        if not 0 <= index < self._n:
            raise IndexError(index)
        delta = int(delta)
        if self._weights[index] + delta <= 0:
            raise ValueError("weights must stay positive")
        self._weights[index] += delta
        fen_add(self._tree, self._n, index, delta)
        self._total += delta

    def prefix(self, k: int) -> int:
        return int(fen_prefix(self._tree, k))

    def sample(self, rng: np.random.Generator) -> int:
        """Index ``i`` drawn with probability ``weight(i) / total``."""
        if self._total == 0:
            raise EmptySampler("cannot sample from an empty sampler")
        u = int(rng.integers(self._total))
        return int(fen_find(self._tree, self._n, u))

    def sample_many(self, rng: np.random.Generator, size: int) -> np.ndarray:
        if self._total == 0:
            raise EmptySampler("cannot sample from an empty sampler")
        us = rng.integers(self._total, size=size, dtype=np.int64)
        out = np.empty(size, dtype=np.int64)
        _find_many(self._tree, self._n, us, out)
        return out

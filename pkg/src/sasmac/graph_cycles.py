"""Cycles of the weighted complete graph and the averaged cycle-gain bound.

Vertices are ``0..k-1``; the ``k(k-1)/2`` edges are indexed in
``itertools.combinations(range(k), 2)`` order. A cycle of length ``r >= 3`` is
stored canonically: smallest vertex first, then whichever of its two
neighbours is smaller. A 2-cycle is an unordered vertex pair whose gain is
the *square* of its edge weight (a swap of two vertices traverses the edge
twice).
"""
from __future__ import annotations

import itertools
import math
from dataclasses import dataclass
from functools import lru_cache
from typing import Sequence

import numpy as np

from . import GuardError
from .prob_core import Distribution, bhattacharyya_dist

MAX_ENUM_K = 12


def n_edges(k: int) -> int:
    return k * (k - 1) // 2


def edge_index(i: int, j: int, k: int) -> int:
    if i == j:
        raise ValueError("no self-loops in a simple graph")
    if i > j:
        i, j = j, i
    # number of edges (a, b) with a < i, plus offset within row i
    return i * (2 * k - i - 1) // 2 + (j - i - 1)


@dataclass(frozen=True)
class WeightedCompleteGraph:
    k: int
    weights: np.ndarray

    def __post_init__(self):
        w = np.array(self.weights, dtype=float)
        if self.k < 2:
            raise ValueError("need at least two vertices")
        if w.shape != (n_edges(self.k),):
            raise ValueError(f"expected {n_edges(self.k)} edge weights, got {w.shape}")
        if np.any(w < 0) or not np.all(np.isfinite(w)):
            raise ValueError("edge weights must be finite and non-negative")
        w.setflags(write=False)
        object.__setattr__(self, "weights", w)

    def weight(self, i: int, j: int) -> float:
        return float(self.weights[edge_index(i, j, self.k)])


def canonical_cycle(vertices: Sequence[int]) -> tuple:
    v = [int(x) for x in vertices]
    if len(v) < 2 or len(set(v)) != len(v):
        raise ValueError(f"{v} is not a cycle on distinct vertices")
    if len(v) == 2:
        return tuple(sorted(v))
    s = v.index(min(v))
    v = v[s:] + v[:s]
    if v[-1] < v[1]:
        v = [v[0]] + v[:0:-1]
    return tuple(v)


def count_cycles(k: int, r: int) -> int:
    """Number of length-``r`` cycles in the complete graph on ``k`` vertices."""
    if not 2 <= r <= k:
        raise ValueError(f"need 2 <= r <= k, got r={r}, k={k}")
    if r == 2:
        return math.comb(k, 2)
    return math.comb(k, r) * math.factorial(r - 1) // 2


def enumerate_cycles(k: int, r: int) -> list:
    if not 2 <= r <= k:
        raise ValueError(f"need 2 <= r <= k, got r={r}, k={k}")
    if k > MAX_ENUM_K:
        raise GuardError(f"cycle enumeration limited to k <= {MAX_ENUM_K}")
    return list(_cycles(k, r))


@lru_cache(maxsize=None)
def _cycles(k: int, r: int) -> tuple:
    if r == 2:
        return tuple(itertools.combinations(range(k), 2))
    out = []
    for subset in itertools.combinations(range(k), r):
        first, rest = subset[0], subset[1:]
        for perm in itertools.permutations(rest):
            if perm[0] < perm[-1]:
                out.append((first,) + perm)
    return tuple(out)


@lru_cache(maxsize=None)
def _cycle_edges(k: int, r: int) -> np.ndarray:
    """``(N, r)`` edge indices traversed by each canonical cycle.

    For ``r = 2`` each row holds the same edge twice, which makes the squared
    edge weight fall out of the row product.
    """
    rows = []
    for c in _cycles(k, r):
        if r == 2:
            e = edge_index(c[0], c[1], k)
            rows.append((e, e))
        else:
            rows.append(tuple(edge_index(c[t], c[(t + 1) % r], k) for t in range(r)))
    arr = np.array(rows, dtype=np.intp)
    arr.setflags(write=False)
    return arr


def cycle_gain(g: WeightedCompleteGraph, c: Sequence[int]) -> float:
    c = list(c)
    if any(not 0 <= v < g.k for v in c):
        raise ValueError(f"cycle {c} has a vertex outside 0..{g.k - 1}")
    canonical_cycle(c)
    if len(c) == 2:
        return g.weight(c[0], c[1]) ** 2
    return float(np.prod([g.weight(c[t], c[(t + 1) % len(c)]) for t in range(len(c))]))


def cycle_gains(g: WeightedCompleteGraph, r: int) -> np.ndarray:
    """Gains of every canonical length-``r`` cycle, in enumeration order."""
    if g.k > MAX_ENUM_K:
        raise GuardError(f"cycle enumeration limited to k <= {MAX_ENUM_K}")
    return np.prod(g.weights[_cycle_edges(g.k, r)], axis=1)


def lemma1_check(g: WeightedCompleteGraph, r: int):
    """Mean cycle gain versus the power-mean bound on squared edge weights.

    Returns ``(lhs_mean, rhs, holds)`` where
    ``lhs_mean = mean_c G(c)`` over all length-``r`` cycles and
    ``rhs = (sum a^2 / n_k)^(r/2)``.
    """
    if not 2 <= r <= g.k:
        raise ValueError(f"need 2 <= r <= k, got r={r}, k={g.k}")
    if g.k > 10:
        raise GuardError("bound check by enumeration is limited to k <= 10")
    lhs = float(np.mean(cycle_gains(g, r)))
    rhs = float(np.mean(g.weights**2) ** (r / 2))
    return lhs, rhs, lhs <= rhs * (1 + 1e-12)


def identification_graph(dists: Sequence[Distribution], n: float) -> WeightedCompleteGraph:
    """Confusability graph with edge weight ``exp(-n B(P_i, P_j))``.

    Identical distributions get weight 0: they are interchangeable, so
    confusing them is not counted as an error.
    """
    if len(dists) < 2:
        raise ValueError("need at least two distributions")
    size = dists[0].alphabet_size
    if any(d.alphabet_size != size for d in dists):
        raise ValueError("distributions live on different alphabets")
    k = len(dists)
    w = np.empty(n_edges(k))
    for e, (i, j) in enumerate(itertools.combinations(range(k), 2)):
        if dists[i] == dists[j]:
            w[e] = 0.0
        else:
            w[e] = math.exp(-n * bhattacharyya_dist(dists[i], dists[j])) if n else 1.0
    return WeightedCompleteGraph(k, w)

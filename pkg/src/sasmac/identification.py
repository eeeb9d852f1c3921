"""Massive identification: match A observed i.i.d. sequences to A candidate
distributions by maximum likelihood over permutations.

The Monte Carlo estimator samples symbol counts (the sufficient statistic of
an i.i.d. sequence) rather than full sequences; the decoder only ever looks at
``counts @ log P``.
"""
from __future__ import annotations

import itertools
import math
from collections import Counter
from dataclasses import dataclass
from functools import lru_cache
from typing import Sequence

import numpy as np
from scipy.optimize import linear_sum_assignment

from . import GuardError
from .graph_cycles import identification_graph
from .prob_core import Distribution

MAX_EXHAUSTIVE = 8
TIE_RTOL = 1e-12


@dataclass(frozen=True)
class IdentificationInstance:
    dists: tuple
    n: int

    def __post_init__(self):
        dists = tuple(self.dists)
        if len(dists) < 2:
            raise ValueError("an identification instance needs A >= 2 distributions")
        if any(d.alphabet_size != dists[0].alphabet_size for d in dists):
            raise ValueError("distributions live on different alphabets")
        if self.n < 0:
            raise ValueError("sample length must be non-negative")
        object.__setattr__(self, "dists", dists)

    @property
    def A(self) -> int:
        return len(self.dists)

    def log_probs(self) -> np.ndarray:
        with np.errstate(divide="ignore"):
            return np.log(np.array([d.probs for d in self.dists]))

    def classes(self) -> np.ndarray:
        """Label of each distribution's equivalence class (identical laws share a label)."""
        labels, seen = [], {}
        for d in self.dists:
            labels.append(seen.setdefault(d, len(seen)))
        return np.array(labels)


@lru_cache(maxsize=None)
def _perms(a: int) -> np.ndarray:
    # itertools yields lexicographic order; argmax keeps the first maximizer
    arr = np.array(list(itertools.permutations(range(a))), dtype=np.intp)
    arr.setflags(write=False)
    return arr


def loglik_matrix(counts: np.ndarray, log_p: np.ndarray) -> np.ndarray:
    """``L[i, j] = log P_j(x_i^n)`` from symbol counts; ``0 * log 0`` is 0."""
    counts = np.asarray(counts, dtype=float)
    safe = np.where(np.isneginf(log_p), 0.0, log_p)
    L = counts @ safe.T
    impossible = (counts > 0).astype(float) @ np.isneginf(log_p).T.astype(float)
    return np.where(impossible > 0, -np.inf, L)


def permutation_scores(L: np.ndarray) -> np.ndarray:
    perms = _perms(L.shape[0])
    return L[np.arange(L.shape[0]), perms].sum(axis=1)


def _tied(scores: np.ndarray) -> np.ndarray:
    best = scores.max()
    if np.isneginf(best):
        return np.arange(scores.size)
    return np.flatnonzero(scores >= best - TIE_RTOL * max(1.0, abs(best)))


def _guard(a: int):
    if a > MAX_EXHAUSTIVE:
        raise GuardError(f"exhaustive search over S_A is limited to A <= {MAX_EXHAUSTIVE}, got {a}")


def ml_permutation_decode(samples: Sequence[Sequence[int]], inst: IdentificationInstance) -> tuple:
    """``argmax_sigma sum_i log P_{sigma_i}(x_i^n)``; ties go to the lexicographically smallest sigma."""
    _guard(inst.A)
    if len(samples) != inst.A:
        raise ValueError(f"expected {inst.A} sequences, got {len(samples)}")
    size = inst.dists[0].alphabet_size
    counts = np.zeros((inst.A, size))
    for i, x in enumerate(samples):
        x = np.asarray(x, dtype=int)
        if x.size and (x.min() < 0 or x.max() >= size):
            raise ValueError(f"sequence {i} has symbols outside the alphabet of size {size}")
        counts[i] = np.bincount(x, minlength=size)
    scores = permutation_scores(loglik_matrix(counts, inst.log_probs()))
    return tuple(int(s) for s in _perms(inst.A)[_tied(scores)[0]])


def assignment_decode(samples_or_L, inst: IdentificationInstance | None = None) -> tuple:
    """ML permutation via the linear assignment solver (scales past A = 8).

    Accepts either a log-likelihood matrix or ``(samples, inst)``.
    """
    if inst is None:
        L = np.asarray(samples_or_L, dtype=float)
    else:
        size = inst.dists[0].alphabet_size
        counts = np.array([np.bincount(np.asarray(x, dtype=int), minlength=size) for x in samples_or_L])
        L = loglik_matrix(counts, inst.log_probs())
    finite = L[np.isfinite(L)]
    floor = (finite.min() if finite.size else 0.0) - (1.0 + np.ptp(finite) if finite.size else 1.0) * L.shape[0] * 10
    rows, cols = linear_sum_assignment(np.where(np.isfinite(L), L, floor), maximize=True)
    sigma = np.empty(L.shape[0], dtype=int)
    sigma[rows] = cols
    return tuple(sigma.tolist())


def identifiability_sum(inst: IdentificationInstance) -> float:
    """``S = sum_{i<j} exp(-2n B(P_i, P_j))``, identical pairs contributing 0."""
    g = identification_graph(inst.dists, inst.n)
    return float(np.sum(g.weights**2))


def pe_upper_bound(inst_or_S) -> float:
    """``16 S / (1 - 4 sqrt(S))``, or +inf once ``4 sqrt(S) >= 1``."""
    S = inst_or_S if isinstance(inst_or_S, (int, float)) else identifiability_sum(inst_or_S)
    root = math.sqrt(S)
    if 4 * root >= 1:
        return math.inf
    return 16 * S / (1 - 4 * root)


def pe_lower_bound(inst_or_S) -> float:
    """``sqrt(S) / (8 + sqrt(S))``; an asymptotic trend indicator, not a finite-n guarantee."""
    S = inst_or_S if isinstance(inst_or_S, (int, float)) else identifiability_sum(inst_or_S)
    root = math.sqrt(S)
    return root / (8 + root)


def _trial_rng(seed: int, trial: int) -> np.random.Generator:
    return np.random.default_rng([seed, trial])


def simulate_decisions(inst: IdentificationInstance, trials: int, seed: int) -> np.ndarray:
    """Decoded permutations for ``trials`` runs with truth = identity.

    Likelihood ties are broken uniformly at random with the trial's RNG.
    """
    _guard(inst.A)
    if trials < 1:
        raise ValueError("trials must be >= 1")
    log_p = inst.log_probs()
    probs = np.array([d.probs for d in inst.dists])
    perms = _perms(inst.A)
    rows = np.arange(inst.A)
    out = np.empty((trials, inst.A), dtype=np.intp)
    for t in range(trials):
        rng = _trial_rng(seed, t)
        counts = np.array([rng.multinomial(inst.n, p) for p in probs])
        scores = loglik_matrix(counts, log_p)[rows, perms].sum(axis=1)
        tied = _tied(scores)
        pick = tied[0] if tied.size == 1 else tied[rng.integers(tied.size)]
        out[t] = perms[pick]
    return out


def _errors(decisions: np.ndarray, inst: IdentificationInstance, classwise: bool) -> np.ndarray:
    truth = np.arange(inst.A)
    if classwise:
        cls = inst.classes()
        return np.any(cls[decisions] != cls[truth], axis=1)
    return np.any(decisions != truth, axis=1)


def mc_identification_error(inst: IdentificationInstance, trials: int, seed: int, classwise: bool = False):
    """Monte Carlo error frequency of the ML decoder and its binomial standard error.

    With ``classwise=True`` a decision only counts as wrong when some sequence
    is matched to a *different* law (swapping identical laws is not an error).
    """
    err = _errors(simulate_decisions(inst, trials, seed), inst, classwise)
    p_hat = float(err.mean())
    return p_hat, math.sqrt(p_hat * (1 - p_hat) / trials)


def misassigned_counts(decisions: np.ndarray) -> np.ndarray:
    return np.sum(decisions != np.arange(decisions.shape[1]), axis=1)


def dominant_error_profile(inst: IdentificationInstance, trials: int, seed: int) -> dict:
    """Histogram ``{r: count}`` of misassigned sequences over error trials.

    ``r = 1`` cannot occur: a permutation never moves exactly one point.
    """
    r = misassigned_counts(simulate_decisions(inst, trials, seed))
    hist = Counter(int(v) for v in r if v > 0)
    assert 1 not in hist
    return dict(sorted(hist.items()))

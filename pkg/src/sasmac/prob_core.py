"""Finite-alphabet distributions, channels, and the divergence / tilt / type
quantities used by the region formulas and the decoders.

All logarithms are natural, so every rate and exponent is in nats.

Zero conventions: ``0 log 0 = 0``, ``p log(p/0) = +inf`` for ``p > 0``, and
``0**t = 0`` for every ``t`` (including ``t = 0``) inside geometric mixtures,
i.e. zero-mass symbols never enter a normalizer.
"""
from __future__ import annotations

import json
import math
from dataclasses import dataclass
from typing import Sequence

import numpy as np

PROB_ATOL = 1e-12
GOLDEN_TOL = 1e-10

_INVPHI = (math.sqrt(5.0) - 1.0) / 2.0


def _frozen(a) -> np.ndarray:
    arr = np.array(a, dtype=float)
    arr.setflags(write=False)
    return arr


@dataclass(frozen=True, eq=False)
class Distribution:
    """Probability vector on ``{0, ..., alphabet_size - 1}``."""

    probs: np.ndarray

    def __post_init__(self):
        p = _frozen(self.probs)
        if p.ndim != 1 or p.size == 0:
            raise ValueError("probs must be a non-empty 1-D vector")
        if not np.all(np.isfinite(p)) or np.any(p < 0):
            raise ValueError("probabilities must be finite and non-negative")
        if abs(p.sum() - 1.0) > PROB_ATOL:
            raise ValueError(f"probabilities sum to {p.sum()!r}, not 1")
        object.__setattr__(self, "probs", p)

    @property
    def alphabet_size(self) -> int:
        return self.probs.size

    def __len__(self):
        return self.probs.size

    def __eq__(self, other):
        if not isinstance(other, Distribution):
            return NotImplemented
        return np.array_equal(self.probs, other.probs)

    def __hash__(self):
        return hash(self.probs.tobytes())

    def __repr__(self):
        return f"Distribution({np.array2string(self.probs, precision=6)})"

    @classmethod
    def bernoulli(cls, p: float) -> "Distribution":
        """Ber(p) on {0, 1}: mass ``p`` on symbol 1."""
        return cls([1.0 - p, p])

    @classmethod
    def point_mass(cls, symbol: int, alphabet_size: int) -> "Distribution":
        probs = np.zeros(alphabet_size)
        probs[symbol] = 1.0
        return cls(probs)

    @classmethod
    def uniform(cls, alphabet_size: int) -> "Distribution":
        return cls(np.full(alphabet_size, 1.0 / alphabet_size))

    def to_dict(self) -> dict:
        return {"alphabet": self.alphabet_size, "probs": self.probs.tolist()}

    @classmethod
    def from_dict(cls, doc: dict) -> "Distribution":
        if set(doc) != {"alphabet", "probs"}:
            raise ValueError(f"distribution document needs exactly alphabet/probs, got {sorted(doc)}")
        dist = cls(doc["probs"])
        if dist.alphabet_size != doc["alphabet"]:
            raise ValueError("alphabet size does not match probs length")
        return dist

    def to_json(self) -> str:
        return json.dumps(self.to_dict())

    @classmethod
    def from_json(cls, text: str) -> "Distribution":
        return cls.from_dict(json.loads(text))


@dataclass(frozen=True, eq=False)
class Channel:
    """Row-stochastic matrix ``Q[x, y] = Q(y|x)`` with a designated idle input."""

    matrix: np.ndarray
    idle: int = 0

    def __post_init__(self):
        m = _frozen(self.matrix)
        if m.ndim != 2 or m.size == 0:
            raise ValueError("channel matrix must be a non-empty 2-D array")
        if not np.all(np.isfinite(m)) or np.any(m < 0):
            raise ValueError("transition probabilities must be finite and non-negative")
        bad = np.abs(m.sum(axis=1) - 1.0) > PROB_ATOL
        if np.any(bad):
            raise ValueError(f"rows {np.flatnonzero(bad).tolist()} do not sum to 1")
        if not 0 <= self.idle < m.shape[0]:
            raise ValueError(f"idle symbol {self.idle} outside input alphabet of size {m.shape[0]}")
        object.__setattr__(self, "matrix", m)
        object.__setattr__(self, "idle", int(self.idle))

    @property
    def inputs(self) -> int:
        return self.matrix.shape[0]

    @property
    def outputs(self) -> int:
        return self.matrix.shape[1]

    @property
    def idle_row(self) -> Distribution:
        """Pure-noise output law Q_star."""
        return Distribution(self.matrix[self.idle])

    def row(self, x: int) -> Distribution:
        return Distribution(self.matrix[x])

    def __eq__(self, other):
        if not isinstance(other, Channel):
            return NotImplemented
        return self.idle == other.idle and np.array_equal(self.matrix, other.matrix)

    def __hash__(self):
        return hash((self.idle, self.matrix.tobytes()))

    def __repr__(self):
        return f"Channel({self.matrix.tolist()}, idle={self.idle})"

    @classmethod
    def bsc(cls, delta: float, idle: int = 0) -> "Channel":
        return cls([[1.0 - delta, delta], [delta, 1.0 - delta]], idle=idle)

    @classmethod
    def bec(cls, eps: float, idle: int = 0) -> "Channel":
        # outputs: 0, 1, erasure
        return cls([[1.0 - eps, 0.0, eps], [0.0, 1.0 - eps, eps]], idle=idle)

    @classmethod
    def identity(cls, size: int, idle: int = 0) -> "Channel":
        return cls(np.eye(size), idle=idle)

    def to_dict(self) -> dict:
        return {
            "inputs": self.inputs,
            "outputs": self.outputs,
            "idle": self.idle,
            "rows": self.matrix.tolist(),
        }

    @classmethod
    def from_dict(cls, doc: dict) -> "Channel":
        if set(doc) != {"inputs", "outputs", "idle", "rows"}:
            raise ValueError(f"channel document needs inputs/outputs/idle/rows, got {sorted(doc)}")
        ch = cls(doc["rows"], idle=doc["idle"])
        if (ch.inputs, ch.outputs) != (doc["inputs"], doc["outputs"]):
            raise ValueError("declared channel dimensions do not match rows")
        return ch

    def to_json(self) -> str:
        return json.dumps(self.to_dict())

    @classmethod
    def from_json(cls, text: str) -> "Channel":
        return cls.from_dict(json.loads(text))


@dataclass(frozen=True)
class TypeComposition:
    counts: tuple
    n: int

    def __post_init__(self):
        counts = tuple(int(c) for c in self.counts)
        if any(c < 0 for c in counts) or sum(counts) != self.n:
            raise ValueError(f"counts {counts} are not a composition of {self.n}")
        object.__setattr__(self, "counts", counts)

    def distribution(self) -> Distribution:
        return Distribution(np.asarray(self.counts, dtype=float) / self.n)


# -- helpers ------------------------------------------------------------------


def _probs(d) -> np.ndarray:
    return d.probs if isinstance(d, Distribution) else np.asarray(d, dtype=float)


def _mat(q) -> np.ndarray:
    return q.matrix if isinstance(q, Channel) else np.asarray(q, dtype=float)


def _check_same(a: int, b: int, what: str):
    if a != b:
        raise ValueError(f"dimension mismatch in {what}: {a} != {b}")


def _power(a: np.ndarray, e) -> np.ndarray:
    """``a**e`` with ``0**e = 0`` for every exponent."""
    with np.errstate(divide="ignore", invalid="ignore"):
        return np.where(a > 0, np.power(np.where(a > 0, a, 1.0), e), 0.0)


def _kl_terms(p: np.ndarray, q: np.ndarray) -> np.ndarray:
    with np.errstate(divide="ignore", invalid="ignore"):
        terms = np.where(p > 0, p * np.log(np.where(p > 0, p, 1.0) / q), 0.0)
    return np.where((p > 0) & (q <= 0), np.inf, terms)


def _neg_log(s: float) -> float:
    return math.inf if s <= 0 else -math.log(s)


def golden_max(f, lo: float = 0.0, hi: float = 1.0, tol: float = GOLDEN_TOL):
    """Maximize a concave scalar function on ``[lo, hi]``.

    Golden-section search down to ``tol`` in the abscissa. The endpoints are
    compared against the interior optimum, so a supremum attained on the
    boundary is returned exactly. Returns ``(value, argmax)``.
    """
    f_lo, f_hi, f_mid = f(lo), f(hi), f(0.5 * (lo + hi))
    # concavity guard on three points
    if f_mid < 0.5 * (f_lo + f_hi) - 1e-9 * (1.0 + abs(f_mid)):
        raise ValueError("objective is not concave on the search interval")
    a, b = lo, hi
    c = b - _INVPHI * (b - a)
    d = a + _INVPHI * (b - a)
    fc, fd = f(c), f(d)
    while b - a > tol:
        if fc >= fd:
            b, d, fd = d, c, fc
            c = b - _INVPHI * (b - a)
            fc = f(c)
        else:
            a, c, fc = c, d, fd
            d = a + _INVPHI * (b - a)
            fd = f(d)
    t = 0.5 * (a + b)
    best = (f(t), t)
    for cand in ((f_lo, lo), (f_hi, hi), (f_mid, 0.5 * (lo + hi))):
        if cand[0] > best[0]:
            best = cand
    return best


# -- basic quantities -----------------------------------------------------------


def output_marginal(P: Distribution, Q: Channel) -> Distribution:
    """Output law ``[PQ](y) = sum_x P(x) Q(y|x)``."""
    p, q = _probs(P), _mat(Q)
    _check_same(p.size, q.shape[0], "output_marginal")
    out = p @ q
    return Distribution(out / out.sum())


def kl_div(P1: Distribution, P2: Distribution) -> float:
    p, q = _probs(P1), _probs(P2)
    _check_same(p.size, q.size, "kl_div")
    return float(max(_kl_terms(p, q).sum(), 0.0))


def cond_kl(Q1: Channel, Q2: Channel, P: Distribution) -> float:
    """``D(Q1 || Q2 | P) = sum_x P(x) D(Q1(.|x) || Q2(.|x))``."""
    q1, q2, p = _mat(Q1), _mat(Q2), _probs(P)
    if q1.shape != q2.shape:
        raise ValueError(f"dimension mismatch in cond_kl: {q1.shape} != {q2.shape}")
    _check_same(p.size, q1.shape[0], "cond_kl")
    rows = _kl_terms(q1, q2).sum(axis=1)
    # rows with P(x) = 0 contribute nothing even if infinite
    return float(max(np.sum(np.where(p > 0, p * rows, 0.0)), 0.0))


def mutual_info(P: Distribution, Q: Channel) -> float:
    p, q = _probs(P), _mat(Q)
    _check_same(p.size, q.shape[0], "mutual_info")
    py = p @ q
    return cond_kl(q, np.broadcast_to(py, q.shape), p)


def binary_entropy(p: float) -> float:
    if not 0.0 <= p <= 1.0:
        raise ValueError(f"p={p} outside [0, 1]")
    if p in (0.0, 1.0):
        return 0.0
    return -p * math.log(p) - (1.0 - p) * math.log(1.0 - p)


def binary_kl(a: float, b: float) -> float:
    """``d(a || b)`` between Ber(a) and Ber(b)."""
    return kl_div(Distribution.bernoulli(a), Distribution.bernoulli(b))


def bhattacharyya_coeff(P1: Distribution, P2: Distribution) -> float:
    p, q = _probs(P1), _probs(P2)
    _check_same(p.size, q.size, "bhattacharyya")
    return float(np.sum(np.sqrt(p * q)))


def bhattacharyya_dist(P1: Distribution, P2: Distribution) -> float:
    """``-log sum_x sqrt(P1(x) P2(x))``; +inf for disjoint supports."""
    return max(_neg_log(bhattacharyya_coeff(P1, P2)), 0.0)


# -- Chernoff-type exponents ----------------------------------------------------


def channel_bhattacharyya(P: Distribution, Q: Channel) -> float:
    """``-log sum_{x,x',y} P(x)P(x') sqrt(Q(y|x) Q(y|x'))``."""
    p, q = _probs(P), _mat(Q)
    _check_same(p.size, q.shape[0], "channel_bhattacharyya")
    s = np.sqrt(q)
    overlap = s @ s.T  # overlap[x, x'] = sum_y sqrt(Q(y|x) Q(y|x'))
    return max(_neg_log(float(p @ overlap @ p)), 0.0)


def mu_pair(t: float, P_i, Q_i, P_j, Q_j) -> float:
    """``-log sum P_i(x_i) P_j(x_j) Q_i(y|x_i)^(1-t) Q_j(y|x_j)^t``; concave in t."""
    a = _probs(P_i) @ _power(_mat(Q_i), 1.0 - t)
    b = _probs(P_j) @ _power(_mat(Q_j), t)
    return _neg_log(float(a @ b))


def chernoff_pair(P_i: Distribution, Q_i: Channel, P_j: Distribution, Q_j: Channel):
    """Supremum over ``t in [0, 1]`` of the pairwise tilted exponent.

    Returns ``(value, t_star)``.
    """
    pi, qi, pj, qj = _probs(P_i), _mat(Q_i), _probs(P_j), _mat(Q_j)
    _check_same(pi.size, qi.shape[0], "chernoff_pair (i)")
    _check_same(pj.size, qj.shape[0], "chernoff_pair (j)")
    _check_same(qi.shape[1], qj.shape[1], "chernoff_pair outputs")
    return golden_max(lambda t: mu_pair(t, pi, qi, pj, qj))


def mu_idle(t: float, Q_star, P_j, Q_j) -> float:
    b = _probs(P_j) @ _power(_mat(Q_j), t)
    return _neg_log(float(_power(_probs(Q_star), 1.0 - t) @ b))


def chernoff_idle(Q_star: Distribution, P_j: Distribution, Q_j: Channel):
    """Chernoff exponent between pure noise and user j's codeword output.

    Returns ``(value, t_star)``.
    """
    qs, pj, qj = _probs(Q_star), _probs(P_j), _mat(Q_j)
    _check_same(pj.size, qj.shape[0], "chernoff_idle")
    _check_same(qs.size, qj.shape[1], "chernoff_idle outputs")
    return golden_max(lambda t: mu_idle(t, qs, pj, qj))


# -- tilts ----------------------------------------------------------------------


def _check_lambda(lam: float):
    if not 0.0 <= lam <= 1.0:
        raise ValueError(f"lambda={lam} outside [0, 1]")


def _geometric_rows(a: np.ndarray, b: np.ndarray, lam: float) -> np.ndarray:
    w = _power(a, lam) * _power(b, 1.0 - lam)
    z = w.sum(axis=-1, keepdims=True)
    if np.any(z <= 0):
        raise ValueError("geometric mixture undefined: supports are disjoint")
    return w / z


def tilt_conditional(Q: Channel, lam: float) -> Channel:
    """Rows ``Q(y|x)^lam Q_star(y)^(1-lam)``, normalized per input."""
    _check_lambda(lam)
    if lam == 1.0:
        return Q
    q = Q.matrix
    if lam == 0.0:
        return Channel(np.repeat(q[Q.idle][None, :], q.shape[0], axis=0), idle=Q.idle)
    return Channel(_geometric_rows(q, q[Q.idle][None, :], lam), idle=Q.idle)


def tilt_output(Pout: Distribution, Q_star: Distribution, lam: float) -> Distribution:
    _check_lambda(lam)
    _check_same(Pout.alphabet_size, Q_star.alphabet_size, "tilt_output")
    if lam == 1.0:
        return Pout
    if lam == 0.0:
        return Q_star
    return Distribution(_geometric_rows(Pout.probs, Q_star.probs, lam))


# -- types ----------------------------------------------------------------------


def empirical_dist(x: Sequence[int], alphabet_size: int | None = None) -> Distribution:
    x = np.asarray(x, dtype=int)
    if x.size == 0:
        raise ValueError("empirical distribution of an empty sequence")
    size = int(x.max()) + 1 if alphabet_size is None else alphabet_size
    return Distribution(np.bincount(x, minlength=size) / x.size)


def round_to_type(P: Distribution, n: int) -> TypeComposition:
    """Largest-remainder rounding of ``n P`` to integer counts.

    Leftover units go to the largest fractional parts; ties go to the lowest
    symbol index.
    """
    if n < 1:
        raise ValueError("block length must be >= 1")
    target = P.probs * n
    counts = np.floor(target).astype(int)
    short = n - counts.sum()
    if short > 0:
        # stable sort keeps the lowest index first among equal remainders
        order = np.argsort(-np.round(target - counts, 9), kind="stable")
        counts[order[:short]] += 1
    return TypeComposition(tuple(counts.tolist()), n)


# -- hypothesis testing -----------------------------------------------------------


def map_error(hypotheses) -> float:
    """Minimum average error over estimators for equiprobable hypotheses.

    ``hypotheses`` is a sequence of Distributions (or an ``N x |Y|`` array) on
    a common explicit outcome space. MAP under the uniform prior attains the
    infimum, giving ``1 - (1/N) sum_y max_theta H_theta(y)``.
    """
    h = np.array([_probs(d) for d in hypotheses], dtype=float)
    if h.ndim != 2 or h.shape[0] < 2:
        raise ValueError("need at least two hypotheses on a common outcome space")
    return float(max(1.0 - h.max(axis=0).sum() / h.shape[0], 0.0))


def fano_bound(N: int, r_bar: float) -> float:
    """Right side of the Fano-type bound on the mean divergence to the centroid."""
    good = 1.0 - r_bar
    val = good * math.log(N * good) if good > 0 else 0.0
    if r_bar > 0:
        val += r_bar * math.log(N * r_bar / (N - 1))
    return val


def product_distribution(dists: Sequence[Distribution]) -> Distribution:
    """Law of independent coordinates, flattened in row-major order."""
    out = np.ones(1)
    for d in dists:
        out = np.outer(out, d.probs).ravel()
    return Distribution(out / out.sum())

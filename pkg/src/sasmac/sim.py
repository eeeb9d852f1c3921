"""Desk-scale Monte Carlo of the slotted asynchronous massive access channel.

Each trial draws a plan (slot and message per user), passes the A x n output
grid through the channels, and runs one of three receivers:

``thm2``  threshold synchronization, then joint ML over the superblock of
          active blocks (identical channels, constant-composition codes);
``thm3``  marginal-LLR synchronization, then ML identification of user
          classes, then ML decoding within classes (i.i.d. codes);
``thm4``  block-by-block ML with an explicit idle hypothesis.

A trial is a global error unless every user's slot and message is recovered
and no idle block is declared active. Colliding plans are not decoded and
count as global errors.
"""
from __future__ import annotations

import itertools
import math
import warnings
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from functools import lru_cache
from typing import Sequence

import numpy as np
from scipy.optimize import brentq

from . import GuardError
from .identification import loglik_matrix
from .prob_core import (
    Channel,
    Distribution,
    cond_kl,
    kl_div,
    output_marginal,
    round_to_type,
    tilt_conditional,
    tilt_output,
)

SUPERBLOCK_GUARD = 10**5
CODEBOOK_KEY = 0x636F6465
MAX_EXPURGATE_ROUNDS = 1000


class CollisionError(ValueError):
    """Two users picked the same slot and no collision channel is modelled."""


# -- codebooks ---------------------------------------------------------------------


@dataclass(frozen=True)
class Codebook:
    codewords: np.ndarray  # (M, n) input symbols
    kind: str  # "cc" or "iid"
    law: object  # TypeComposition for cc, Distribution for iid
    user_id: int
    redraws: int = 0

    @property
    def M(self) -> int:
        return self.codewords.shape[0]

    @property
    def n(self) -> int:
        return self.codewords.shape[1]


def gen_codebook_cc(P: Distribution, n: int, M: int, user_id: int, seed, idle: int = 0) -> Codebook:
    """M codewords drawn uniformly from the type class of ``round_to_type(P, n)``."""
    comp = round_to_type(P, n)
    if comp.counts[idle] == n:
        raise ValueError("the composition puts all mass on the idle symbol")
    rng = np.random.default_rng(seed)
    base = np.repeat(np.arange(len(comp.counts)), comp.counts)
    words = np.array([rng.permutation(base) for _ in range(M)], dtype=np.intp).reshape(M, n)
    return Codebook(words, "cc", comp, user_id)


def gen_codebook_iid(P: Distribution, n: int, M: int, user_id: int, seed, idle: int = 0) -> Codebook:
    """M x n i.i.d. draws from P; all-idle codewords are redrawn."""
    if P.probs[idle] == 1.0:
        raise ValueError("P is a point mass on the idle symbol")
    rng = np.random.default_rng(seed)
    words = rng.choice(P.alphabet_size, size=(M, n), p=P.probs)
    redraws = 0
    while True:
        bad = np.flatnonzero(np.all(words == idle, axis=1))
        if bad.size == 0:
            break
        redraws += bad.size
        words[bad] = rng.choice(P.alphabet_size, size=(bad.size, n), p=P.probs)
    return Codebook(words.astype(np.intp), "iid", P, user_id, redraws)


# -- plans and channel output ------------------------------------------------------


@dataclass(frozen=True)
class TransmissionPlan:
    slots: np.ndarray
    messages: np.ndarray
    A: int
    n: int

    def __post_init__(self):
        slots = np.asarray(self.slots, dtype=np.intp).reshape(-1)
        msgs = np.asarray(self.messages, dtype=np.intp).reshape(-1)
        if slots.shape != msgs.shape:
            raise ValueError("one slot and one message per user")
        if slots.size and (slots.min() < 0 or slots.max() >= self.A or msgs.min() < 0):
            raise ValueError("slot or message out of range")
        object.__setattr__(self, "slots", slots)
        object.__setattr__(self, "messages", msgs)

    @property
    def K(self) -> int:
        return len(self.slots)

    @property
    def collision(self) -> bool:
        return len(set(self.slots.tolist())) < len(self.slots)


def draw_plan(K: int, A: int, M: int, n: int, rng: np.random.Generator) -> TransmissionPlan:
    return TransmissionPlan(rng.integers(A, size=K), rng.integers(M, size=K), A, n)


def collision_probability(A: int, K: int) -> float:
    """``1 - A! / ((A-K)! A^K)``: chance that K uniform slots are not all distinct."""
    if K > A:
        return 1.0
    return 1.0 - math.prod((A - k) / A for k in range(K))


def collision_frequency(A: int, K: int, plans: int, seed: int):
    """Empirical collision rate over ``plans`` uniform draws, with its binomial sigma."""
    rng = np.random.default_rng(seed)
    slots = np.sort(rng.integers(A, size=(plans, K)), axis=1)
    hits = np.any(np.diff(slots, axis=1) == 0, axis=1)
    f = float(hits.mean())
    return f, math.sqrt(f * (1 - f) / plans)


def _sample_rows(rows: np.ndarray, rng: np.random.Generator) -> np.ndarray:
    """One output per row of conditional probabilities, by inverse CDF."""
    cdf = np.cumsum(rows, axis=-1)
    u = rng.random(rows.shape[:-1])
    y = (u[..., None] >= cdf).sum(axis=-1)
    return np.minimum(y, rows.shape[-1] - 1)


def transmit(codebooks: Sequence[Codebook], plan: TransmissionPlan, channels: Sequence[Channel], rng) -> np.ndarray:
    """Output grid ``Y`` of shape ``(A, n)``; idle blocks are drawn from the idle row."""
    if plan.collision:
        raise CollisionError("colliding plan")
    rng = np.random.default_rng(rng)
    q0 = channels[0]
    Y = np.empty((plan.A, plan.n), dtype=np.intp)
    busy = np.zeros(plan.A, dtype=bool)
    busy[plan.slots] = True
    idle_blocks = np.flatnonzero(~busy)
    Y[idle_blocks] = rng.choice(q0.outputs, size=(idle_blocks.size, plan.n), p=q0.matrix[q0.idle])
    for i in np.argsort(plan.slots, kind="stable"):
        x = codebooks[i].codewords[plan.messages[i]]
        Y[plan.slots[i]] = _sample_rows(channels[i].matrix[x], rng)
    return Y


# -- log-likelihood helpers -----------------------------------------------------------


def _log(a):
    with np.errstate(divide="ignore"):
        return np.log(a)


def _block_loglik(Y: np.ndarray, words: np.ndarray, logq: np.ndarray) -> np.ndarray:
    """``out[b, w] = sum_t log Q(Y[b, t] | words[w, t])`` (may be -inf)."""
    return logq[words[None, :, :], Y[:, None, :]].sum(axis=2)


def _llr_sum(table: np.ndarray, idx) -> np.ndarray:
    """Sum of per-symbol LLRs where entries may be +inf or -inf.

    Any -inf term (impossible under the hypothesis) wins over +inf terms
    (impossible under the idle law).
    """
    vals = table[idx]
    neg = np.isneginf(vals).any(axis=-1)
    pos = np.isposinf(vals).any(axis=-1)
    finite = np.where(np.isfinite(vals), vals, 0.0).sum(axis=-1)
    return np.where(neg, -np.inf, np.where(pos, np.inf, finite))


def codeword_llr_table(Q: Channel) -> np.ndarray:
    """``log Q(y|x) - log Q_star(y)`` per (x, y), with the infinite conventions above."""
    lq, ls = _log(Q.matrix), _log(Q.matrix[Q.idle])[None, :]
    with np.errstate(invalid="ignore"):
        return np.where(np.isneginf(lq), -np.inf, np.where(np.isneginf(ls), np.inf, lq - ls))


# -- synchronization -------------------------------------------------------------------


def threshold_interval(P: Distribution, Q: Channel):
    qs = np.broadcast_to(Q.matrix[Q.idle], Q.matrix.shape)
    return -cond_kl(qs, Q, P), cond_kl(Q, qs, P)


def balanced_threshold(P: Distribution, Q: Channel, n: int, A: int, K: int, M: int):
    """Threshold equating the missed-detection and false-alarm exponents.

    Multiplicities enter at finite n as ``nu = log K / n`` (misses) and
    ``alpha + nu + R`` (false alarms over A blocks, K users, M messages).
    Returns ``(T, lam)``. Falls back to ``T = 0`` (``lam = None``) when the
    divergences are infinite, where any finite threshold separates.
    """
    a, v, r = math.log(A) / n, math.log(K) / n, math.log(M) / n
    qs = np.broadcast_to(Q.matrix[Q.idle], Q.matrix.shape)
    lo, hi = threshold_interval(P, Q)
    if not (math.isfinite(lo) and math.isfinite(hi)):
        return 0.0, None

    def divs(lam):
        Ql = tilt_conditional(Q, lam)
        return cond_kl(Ql, Q, P), cond_kl(Ql, qs, P)

    def gap(lam):
        dq, ds = divs(lam)
        return (dq - v) - (ds - a - v - r)

    if gap(1.0) >= 0:
        lam = 1.0
    else:
        lam = brentq(gap, 0.0, 1.0, xtol=1e-12)
    dq, ds = divs(lam)
    return ds - dq, lam


def sync_threshold_decode(Y: np.ndarray, codebooks: Sequence[Codebook], Q: Channel, T: float, P: Distribution | None = None):
    """Blocks whose best normalized codeword LLR clears ``T``."""
    if P is not None:
        lo, hi = threshold_interval(P, Q)
        if not lo <= T <= hi:
            warnings.warn(f"threshold {T} outside [{lo:.6g}, {hi:.6g}]", stacklevel=2)
    table = codeword_llr_table(Q)
    words = np.concatenate([cb.codewords for cb in codebooks])
    llr = _llr_sum(table, (words[None, :, :], Y[:, None, :])) / Y.shape[1]
    return tuple(int(b) for b in np.flatnonzero(llr.max(axis=1) >= T))


def marginal_llr_table(marg: Distribution, Q_star: Distribution) -> np.ndarray:
    lm, ls = _log(marg.probs), _log(Q_star.probs)
    with np.errstate(invalid="ignore"):
        return np.where(np.isneginf(lm), -np.inf, np.where(np.isneginf(ls), np.inf, lm - ls))


def balanced_marginal_threshold(marg: Distribution, Q_star: Distribution, n: int, A: int, N_j: int):
    """Per-class threshold balancing ``D(tilt||marg) - nu_j`` against ``D(tilt||Q_star) - alpha``."""
    a, v = math.log(A) / n, math.log(N_j) / n
    if marg == Q_star:
        return 0.0, None
    hi, lo = kl_div(marg, Q_star), -kl_div(Q_star, marg)
    if not (math.isfinite(lo) and math.isfinite(hi)):
        return 0.0, None

    def divs(lam):
        t = tilt_output(marg, Q_star, lam)
        return kl_div(t, marg), kl_div(t, Q_star)

    def gap(lam):
        dm, ds = divs(lam)
        return (dm - v) - (ds - a)

    lam = 1.0 if gap(1.0) >= 0 else brentq(gap, 0.0, 1.0, xtol=1e-12)
    dm, ds = divs(lam)
    return ds - dm, lam


def sync_marginal_decode(Y: np.ndarray, marginals: Sequence[Distribution], Q_star: Distribution, thresholds: Sequence[float]):
    """Blocks where some class's marginal LLR clears that class's threshold.

    A class whose marginal equals the idle law has an identically zero LLR;
    it is flagged and never declares a block active.
    """
    n = Y.shape[1]
    active = np.zeros(Y.shape[0], dtype=bool)
    for j, (marg, T) in enumerate(zip(marginals, thresholds)):
        if marg == Q_star:
            warnings.warn(f"class {j}: marginal equals the idle law, test is degenerate", stacklevel=2)
            continue
        llr = _llr_sum(marginal_llr_table(marg, Q_star), Y) / n
        active |= llr >= T
    return tuple(int(b) for b in np.flatnonzero(active))


# -- identification and decoding -----------------------------------------------------


@lru_cache(maxsize=None)
def _perms(k: int) -> np.ndarray:
    return np.array(list(itertools.permutations(range(k))), dtype=np.intp).reshape(-1, k)


def identify_users(outputs: np.ndarray, marginals: Sequence[Distribution]):
    """ML assignment of active blocks to users from their output marginals.

    Returns ``sigma`` with ``sigma[b]`` the user matched to block ``b``.
    Users with identical marginals are interchangeable here, so only the
    class of ``sigma[b]`` is meaningful.
    """
    D, K = len(outputs), len(marginals)
    if D != K:
        raise ValueError(f"{D} active blocks for {K} users")
    if K > 8:
        raise GuardError("exhaustive identification is limited to 8 users")
    size = marginals[0].alphabet_size
    counts = np.array([np.bincount(y, minlength=size) for y in outputs])
    L = loglik_matrix(counts, _log(np.array([m.probs for m in marginals])))
    perms = _perms(K)
    scores = L[np.arange(K), perms].sum(axis=1)
    return tuple(int(u) for u in perms[int(np.argmax(scores))])


def _superblock_search(ll: np.ndarray, perms: np.ndarray):
    """Best (user permutation, messages) for ``ll[b, u, m]``; first maximizer wins."""
    D = ll.shape[0]
    best_m = ll.argmax(axis=2)  # lexicographic: first message among ties
    best_v = ll.max(axis=2)
    scores = best_v[np.arange(D), perms].sum(axis=1)
    p = perms[int(np.argmax(scores))]
    return tuple((int(p[b]), int(best_m[b, p[b]])) for b in range(D))


def decode_superblock_ml(outputs: np.ndarray, codebooks: Sequence[Codebook], Q: Channel, allowed=None):
    """Exact ML over user permutations and message tuples on the active blocks.

    The likelihood factorizes over blocks, so for each permutation the best
    message tuple is the per-block argmax. Returns ``(user, message)`` per
    block. ``allowed`` optionally restricts the candidate permutations.
    """
    K, M = len(codebooks), codebooks[0].M
    if math.factorial(K) * M**K > SUPERBLOCK_GUARD:
        raise GuardError(f"K! M^K = {math.factorial(K) * M**K} exceeds {SUPERBLOCK_GUARD}")
    if len(outputs) != K:
        raise ValueError(f"{len(outputs)} active blocks for {K} users")
    logq = _log(Q.matrix)
    ll = np.stack([_block_loglik(outputs, cb.codewords, logq) for cb in codebooks], axis=1)
    perms = _perms(K) if allowed is None else allowed
    return _superblock_search(ll, perms)


def block_ml_decode(Y: np.ndarray, codebooks: Sequence[Codebook], channels: Sequence[Channel]):
    """Per-block argmax over the idle hypothesis and every (user, message).

    Ties go to idle first, then to the smallest (user, message).
    Returns a list with ``None`` for idle blocks.
    """
    q0 = channels[0]
    idle_ll = _log(q0.matrix[q0.idle])[Y].sum(axis=1)
    cols = [idle_ll[:, None]]
    labels = [None]
    for u, (cb, W) in enumerate(zip(codebooks, channels)):
        cols.append(_block_loglik(Y, cb.codewords, _log(W.matrix)))
        labels.extend((u, m) for m in range(cb.M))
    ll = np.concatenate(cols, axis=1)
    return [labels[k] for k in ll.argmax(axis=1)]


# -- occupancy arrangements ----------------------------------------------------------


@dataclass
class ArrangementResult:
    best: tuple
    ties: list
    swap_ok: bool


def _weak_compositions(K: int, A: int):
    for bars in itertools.combinations(range(K + A - 1), A - 1):
        prev, out = -1, []
        for b in bars:
            out.append(b - prev - 1)
            prev = b
        out.append(K + A - 1 - prev - 1)
        yield tuple(out)


def arrangement_argmax(K: int, A: int) -> ArrangementResult:
    """Occupancy vectors maximizing ``K! / prod t_a!`` and the swap check.

    ``swap_ok`` is true when every vector with some ``t_a - t_b > 1`` is
    strictly beaten by moving one user from slot a to slot b.
    """
    if not (1 <= K <= 8 and 1 <= A <= 8):
        raise GuardError("exhaustive occupancy enumeration is limited to K, A <= 8")
    logc = lambda t: -sum(math.lgamma(x + 1) for x in t)
    comps = list(_weak_compositions(K, A))
    vals = np.array([logc(t) for t in comps])
    top = vals.max()
    ties = [c for c, v in zip(comps, vals) if v >= top - 1e-12]
    swap_ok = True
    for t in comps:
        for a, b in itertools.permutations(range(A), 2):
            if t[a] - t[b] > 1:
                s = list(t)
                s[a] -= 1
                s[b] += 1
                # exact integer comparison: t_a / (t_b + 1) > 1
                if not math.prod(math.factorial(x) for x in s) < math.prod(math.factorial(x) for x in t):
                    swap_ok = False
    return ArrangementResult(ties[0], ties, swap_ok)


# -- experiments -----------------------------------------------------------------------


@dataclass
class SimConfig:
    pipeline: str
    n: int
    A: int
    K: int
    M: int
    channels: list  # one per user, or a single shared channel
    inputs: list  # one per user, or a single shared law
    trials: int
    seed: int
    threshold: object = "balanced"  # "balanced" | "midpoint" | float | list of floats (thm3)
    codebook: str | None = None  # "cc" | "iid"; defaults by pipeline
    expurgate: bool = False

    def __post_init__(self):
        if self.pipeline not in ("thm2", "thm3", "thm4"):
            raise ValueError(f"unknown pipeline {self.pipeline!r}")
        for name in ("n", "A", "K", "M", "trials"):
            if getattr(self, name) < 1:
                raise ValueError(f"{name} must be >= 1")
        if self.K > self.A:
            raise ValueError("K > A: every plan collides")
        self.channels = _per_user(self.channels, self.K, "channels")
        self.inputs = _per_user(self.inputs, self.K, "inputs")
        q0 = self.channels[0]
        for W in self.channels:
            if W.outputs != q0.outputs or not np.array_equal(W.matrix[W.idle], q0.matrix[q0.idle]):
                raise ValueError("all channels must share the output alphabet and the idle output law")
        if self.pipeline == "thm2" and any(W != q0 for W in self.channels):
            raise ValueError("the thm2 pipeline needs identical channels")
        if self.codebook is None:
            self.codebook = "cc" if self.pipeline == "thm2" else "iid"
        if self.codebook not in ("cc", "iid"):
            raise ValueError(f"unknown codebook kind {self.codebook!r}")


def _per_user(items, K, what):
    items = list(items) if isinstance(items, (list, tuple)) else [items]
    if len(items) == 1:
        items = items * K
    if len(items) != K:
        raise ValueError(f"need 1 or K={K} {what}, got {len(items)}")
    return items


@dataclass
class TrialReport:
    collision: bool
    sync_miss: int
    sync_fa: int
    ident_ok: bool | None
    msgs_ok: bool | None
    global_error: bool


@dataclass
class ExperimentReport:
    config: SimConfig
    trials: list
    thresholds: list
    codebook_redraws: int
    summary: dict = field(default_factory=dict)


def build_codebooks(cfg: SimConfig) -> list:
    gen = gen_codebook_cc if cfg.codebook == "cc" else gen_codebook_iid
    rounds = 0
    salt = 0
    while True:
        books = [
            gen(cfg.inputs[u], cfg.n, cfg.M, u, [cfg.seed, CODEBOOK_KEY, u, salt], cfg.channels[u].idle)
            for u in range(cfg.K)
        ]
        if not cfg.expurgate:
            return books
        words = np.concatenate([b.codewords for b in books])
        if len(np.unique(words, axis=0)) == len(words):
            return books
        rounds += 1
        salt += 1
        if rounds > MAX_EXPURGATE_ROUNDS:
            raise ValueError("could not draw distinct codewords; increase n or reduce M*K")


def _thresholds(cfg: SimConfig) -> list:
    pol = cfg.threshold
    if cfg.pipeline == "thm4":
        return []
    if cfg.pipeline == "thm2":
        P, Q = cfg.inputs[0], cfg.channels[0]
        if pol == "balanced":
            return [balanced_threshold(P, Q, cfg.n, cfg.A, cfg.K, cfg.M)[0]]
        if pol == "midpoint":
            lo, hi = threshold_interval(P, Q)
            return [0.5 * (lo + hi) if math.isfinite(lo + hi) else 0.0]
        return [float(pol)]
    margs, counts, _ = _classes(cfg)
    qs = cfg.channels[0].idle_row
    if pol == "balanced":
        return [balanced_marginal_threshold(m, qs, cfg.n, cfg.A, c)[0] for m, c in zip(margs, counts)]
    if pol == "midpoint":
        out = []
        for m in margs:
            lo, hi = -kl_div(qs, m), kl_div(m, qs)
            out.append(0.5 * (lo + hi) if math.isfinite(lo + hi) else 0.0)
        return out
    vals = [float(v) for v in (pol if isinstance(pol, (list, tuple)) else [pol] * len(margs))]
    if len(vals) != len(margs):
        raise ValueError(f"need one threshold per marginal class ({len(margs)})")
    return vals


def _classes(cfg: SimConfig):
    """Distinct output marginals, their user counts, and each user's class label."""
    margs, counts, labels = [], [], []
    for P, W in zip(cfg.inputs, cfg.channels):
        m = output_marginal(P, W)
        if m in margs:
            k = margs.index(m)
            counts[k] += 1
        else:
            k = len(margs)
            margs.append(m)
            counts.append(1)
        labels.append(k)
    return margs, counts, labels


def _run_trial(cfg: SimConfig, books, thresholds, t: int) -> TrialReport:
    rng = np.random.default_rng([cfg.seed, t])
    plan = draw_plan(cfg.K, cfg.A, cfg.M, cfg.n, rng)
    if plan.collision:
        return TrialReport(True, 0, 0, None, None, True)
    Y = transmit(books, plan, cfg.channels, rng)
    truth = set(plan.slots.tolist())
    user_at = {int(s): u for u, s in enumerate(plan.slots)}

    if cfg.pipeline == "thm4":
        dec = block_ml_decode(Y, books, cfg.channels)
        miss = sum(1 for b in truth if dec[b] is None)
        fa = sum(1 for b in range(cfg.A) if b not in truth and dec[b] is not None)
        found = [b for b in truth if dec[b] is not None]
        ident = all(dec[b][0] == user_at[b] for b in found) if found else None
        msgs = all(dec[b] == (user_at[b], int(plan.messages[user_at[b]])) for b in found) if found else None
        err = miss > 0 or fa > 0 or not ident or not msgs
        return TrialReport(False, miss, fa, ident, msgs, bool(err))

    if cfg.pipeline == "thm2":
        active = sync_threshold_decode(Y, books, cfg.channels[0], thresholds[0])
    else:
        margs, _, _ = _classes(cfg)
        active = sync_marginal_decode(Y, margs, cfg.channels[0].idle_row, thresholds)
    miss = len(truth - set(active))
    fa = len(set(active) - truth)
    if miss or fa:
        return TrialReport(False, miss, fa, None, None, True)
    blocks = sorted(active)
    outputs = Y[blocks]

    if cfg.pipeline == "thm2":
        dec = decode_superblock_ml(outputs, books, cfg.channels[0])
        ident = all(u == user_at[b] for b, (u, _) in zip(blocks, dec))
    else:
        margs, _, labels = _classes(cfg)
        user_margs = [margs[k] for k in labels]
        sigma = identify_users(outputs, user_margs)
        lab = np.array(labels)
        ident = all(lab[sigma[i]] == lab[user_at[b]] for i, b in enumerate(blocks))
        if not ident:
            return TrialReport(False, 0, 0, False, None, True)
        # decode within the identified classes; channels may differ by class
        block_class = lab[list(sigma)]
        perms = _perms(cfg.K)
        allowed = perms[np.all(lab[perms] == block_class[None, :], axis=1)]
        ll = np.stack(
            [_block_loglik(outputs, cb.codewords, _log(W.matrix)) for cb, W in zip(books, cfg.channels)], axis=1
        )
        dec = _superblock_search(ll, allowed)
    msgs = all((u, m) == (user_at[b], int(plan.messages[user_at[b]])) for b, (u, m) in zip(blocks, dec))
    return TrialReport(False, 0, 0, bool(ident), bool(msgs), not (ident and msgs))


def _run_chunk(args):
    cfg, books, thresholds, lo, hi = args
    return [_run_trial(cfg, books, thresholds, t) for t in range(lo, hi)]


def run_experiment(cfg: SimConfig, threads: int = 1) -> ExperimentReport:
    """Run all trials; results depend only on the config, never on ``threads``."""
    if cfg.pipeline == "thm2":
        K, M = cfg.K, cfg.M
        if math.factorial(K) * M**K > SUPERBLOCK_GUARD:
            raise GuardError(f"K! M^K = {math.factorial(K) * M**K} exceeds {SUPERBLOCK_GUARD}")
    if cfg.pipeline == "thm3" and cfg.K > 8:
        raise GuardError("exhaustive identification is limited to 8 users")
    books = build_codebooks(cfg)
    thresholds = _thresholds(cfg)
    if threads <= 1:
        reports = _run_chunk((cfg, books, thresholds, 0, cfg.trials))
    else:
        step = max(1, -(-cfg.trials // (4 * threads)))
        chunks = [(cfg, books, thresholds, lo, min(lo + step, cfg.trials)) for lo in range(0, cfg.trials, step)]
        with ProcessPoolExecutor(max_workers=threads) as pool:
            reports = [r for part in pool.map(_run_chunk, chunks) for r in part]
    rep = ExperimentReport(cfg, reports, thresholds, sum(b.redraws for b in books))
    rep.summary = summarize(reports)
    return rep


def _rate(k: int, n: int):
    if n == 0:
        return None, None
    p = k / n
    return p, math.sqrt(p * (1 - p) / n)


def summarize(reports: Sequence[TrialReport]) -> dict:
    T = len(reports)
    coll = sum(r.collision for r in reports)
    errs = sum(r.global_error for r in reports)
    nc_errs = sum(r.global_error for r in reports if not r.collision)
    p, s = _rate(errs, T)
    pn, sn = _rate(nc_errs, T - coll)
    return {
        "trials": T,
        "collisions": coll,
        "global_errors": errs,
        "global_error_rate": p,
        "global_error_stderr": s,
        "global_error_ci95": [max(0.0, p - 1.96 * s), min(1.0, p + 1.96 * s)],
        "non_collision_trials": T - coll,
        "non_collision_errors": nc_errs,
        "non_collision_error_rate": pn,
        "non_collision_error_stderr": sn,
        "sync_failures": sum(1 for r in reports if r.sync_miss or r.sync_fa),
        "missed_blocks": sum(r.sync_miss for r in reports),
        "false_alarm_blocks": sum(r.sync_fa for r in reports),
        "ident_failures": sum(1 for r in reports if r.ident_ok is False),
        "message_failures": sum(1 for r in reports if r.msgs_ok is False),
    }

"""Evaluation of the (R, alpha, nu) achievability and converse regions.

Coordinates are exponents in nats per channel use: ``M = e^{nR}`` messages,
``A = e^{n alpha}`` blocks and ``K = e^{n nu}`` users.

Regions are open sets. A strict inequality counts as satisfied when its
slack exceeds ``SLACK_TOL``, violated below ``-SLACK_TOL``, and anything in
between is reported as ``"boundary"``.
"""
from __future__ import annotations

import itertools
import math
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np
from scipy.optimize import minimize

from .prob_core import (
    Channel,
    Distribution,
    _kl_terms,
    _power,
    binary_entropy,
    binary_kl,
    bhattacharyya_dist,
    channel_bhattacharyya,
    chernoff_idle,
    chernoff_pair,
    cond_kl,
    mutual_info,
    output_marginal,
    tilt_conditional,
    tilt_output,
)

SLACK_TOL = 1e-9


@dataclass(frozen=True)
class RegionPoint:
    R: float
    alpha: float
    nu: float

    def __post_init__(self):
        for name in ("R", "alpha", "nu"):
            v = getattr(self, name)
            if not math.isfinite(v) or v < 0:
                raise ValueError(f"{name}={v} must be finite and non-negative")


@dataclass
class RegionCheck:
    """Slack of every constraint (positive = satisfied)."""

    slacks: dict

    @property
    def status(self) -> str:
        vals = list(self.slacks.values())
        if all(v > SLACK_TOL for v in vals):
            return "inside"
        if any(v < -SLACK_TOL for v in vals):
            return "outside"
        return "boundary"

    @property
    def inside(self) -> bool:
        return self.status == "inside"

    @property
    def binding(self) -> str:
        return min(self.slacks, key=self.slacks.get)

    def __bool__(self):
        return self.inside


def _check_lambdas(lambdas):
    for lam in np.atleast_1d(lambdas):
        if not 0.0 <= lam <= 1.0:
            raise ValueError(f"lambda={lam} outside [0, 1]")


# -- identical channels, two-stage decoder ---------------------------------------


def thm2_region_test(p: RegionPoint, P: Distribution, Q: Channel, lam: float) -> RegionCheck:
    """Constraints for identical channels with constant-composition codes."""
    _check_lambdas(lam)
    Ql = tilt_conditional(Q, lam)
    qs = np.broadcast_to(Q.matrix[Q.idle], Q.matrix.shape)
    return RegionCheck(
        {
            "collision": p.alpha / 2 - p.nu,
            "sync_miss": cond_kl(Ql, Q, P) - p.nu,
            "sync_false_alarm": cond_kl(Ql, qs, P) - (p.alpha + p.R + p.nu),
            "decoding": mutual_info(P, Q) - (p.R + p.nu),
        }
    )


@dataclass
class FrontierPoint:
    alpha: float
    nu: float
    R_star: float
    P: np.ndarray | None
    lam: float | None
    binding: str
    feasible: bool
    extra: dict = field(default_factory=dict)


def simplex_lattice(size: int, resolution: int) -> np.ndarray:
    """All distributions on ``size`` symbols with masses in multiples of ``1/resolution``."""
    pts = [
        np.diff(np.concatenate(([0], bars, [resolution])))
        for bars in itertools.combinations_with_replacement(range(resolution + 1), size - 1)
    ]
    return np.array(pts, dtype=float) / resolution


def _row_tilt_divergences(Q: Channel, lams: np.ndarray):
    """Per-input ``D(Q_lam(.|x) || Q(.|x))`` and ``D(Q_lam(.|x) || Q_star)``.

    Shapes ``(|X|, len(lams))``; NaN where the tilt is undefined (row support
    disjoint from the idle row).
    """
    q = Q.matrix
    qs = q[Q.idle]
    d_q = np.full((q.shape[0], lams.size), np.nan)
    d_s = np.full_like(d_q, np.nan)
    for k, lam in enumerate(lams):
        if lam == 1.0:
            w = q
        elif lam == 0.0:
            w = np.broadcast_to(qs, q.shape)
        else:
            w = _power(q, lam) * _power(qs, 1.0 - lam)[None, :]
        z = w.sum(axis=1)
        ok = z > 0
        t = np.where(ok[:, None], w / np.where(ok, z, 1.0)[:, None], 0.0)
        d_q[ok, k] = _kl_terms(t, q).sum(axis=1)[ok]
        d_s[ok, k] = _kl_terms(t, np.broadcast_to(qs, q.shape)).sum(axis=1)[ok]
    return d_q, d_s


def _mix(P: np.ndarray, rows: np.ndarray) -> np.ndarray:
    """``sum_x P(x) rows[x]`` ignoring rows where ``P(x) = 0``."""
    P = np.atleast_2d(P)
    contrib = np.where(P[:, :, None] > 0, P[:, :, None] * np.nan_to_num(rows, nan=np.inf, posinf=np.inf)[None], 0.0)
    return contrib.sum(axis=1)


def _mutual_infos(Ps: np.ndarray, Q: Channel) -> np.ndarray:
    py = Ps @ Q.matrix
    out = np.empty(len(Ps))
    for g, (p, y) in enumerate(zip(Ps, py)):
        out[g] = np.sum(np.where(p > 0, p * _kl_terms(Q.matrix, np.broadcast_to(y, Q.matrix.shape)).sum(axis=1), 0.0))
    return out


def _collision_ok(alpha: float, nu: float) -> bool:
    # a single user (nu = 0) never collides
    return nu == 0.0 or alpha / 2 - nu > SLACK_TOL


def _thm2_rate(P, lam, Q, alpha, nu):
    """Largest R allowed at one (P, lambda), or -inf if the point is infeasible."""
    P = np.asarray(P, dtype=float)
    d_q, d_s = _row_tilt_divergences(Q, np.array([lam]))
    Dq, Ds = _mix(P, d_q)[0, 0], _mix(P, d_s)[0, 0]
    if not np.isfinite(Dq) or Dq - nu <= SLACK_TOL:
        return -math.inf, ""
    I = _mutual_infos(P[None], Q)[0]
    r_fa, r_dec = Ds - alpha - nu, I - nu
    return (r_fa, "sync_false_alarm") if r_fa < r_dec else (r_dec, "decoding")


def _p_candidates(size: int, resolution: int) -> np.ndarray:
    if size <= 3:
        return simplex_lattice(size, resolution)
    # coarse lattice seeds for larger alphabets; refinement does the rest
    return simplex_lattice(size, max(2, min(resolution, 12)))


def thm2_frontier(
    Q: Channel,
    alpha: float,
    nu: float,
    resolution: int = 200,
    lam_points: int = 201,
    refine: bool = True,
) -> FrontierPoint:
    """Largest rate of the identical-channel region at fixed ``(alpha, nu)``.

    Grid search over a simplex lattice of input distributions and a uniform
    lambda grid, followed by a local polish from the best grid cell. For fixed
    ``(P, lambda)`` the constraints are linear in R, so the best rate is the
    minimum of the two R-dependent slacks.
    """
    if resolution < 1 or lam_points < 2:
        raise ValueError("grids need at least two points")
    if not _collision_ok(alpha, nu):
        return FrontierPoint(alpha, nu, 0.0, None, None, "collision", False)
    Ps = _p_candidates(Q.inputs, resolution)
    lams = np.linspace(0.0, 1.0, lam_points)
    d_q, d_s = _row_tilt_divergences(Q, lams)
    Dq, Ds = _mix(Ps, d_q), _mix(Ps, d_s)
    I = _mutual_infos(Ps, Q)
    r_fa = Ds - alpha - nu
    r_dec = np.broadcast_to((I - nu)[:, None], r_fa.shape)
    rate = np.minimum(r_fa, r_dec)
    ok = np.isfinite(Dq) & (Dq - nu > SLACK_TOL)
    rate = np.where(ok, rate, -np.inf)
    g, k = np.unravel_index(np.argmax(rate), rate.shape)
    best_rate, best_P, best_lam = rate[g, k], Ps[g], lams[k]
    if refine and np.isfinite(best_rate):
        best_rate, best_P, best_lam = _polish(
            lambda P, lam: _thm2_rate(P, lam, Q, alpha, nu)[0], best_rate, best_P, best_lam
        )
    if not np.isfinite(best_rate) or best_rate <= SLACK_TOL:
        return FrontierPoint(alpha, nu, 0.0, None, None, "infeasible", False)
    binding = _thm2_rate(best_P, best_lam, Q, alpha, nu)[1]
    return FrontierPoint(alpha, nu, float(best_rate), np.asarray(best_P), float(best_lam), binding, True)


def _to_simplex(z: np.ndarray) -> np.ndarray:
    p = np.clip(z, 0.0, None)
    s = p.sum()
    return p / s if s > 0 else np.full(p.size, 1.0 / p.size)


def _polish(rate_fn, rate0, P0, lam0):
    """Nelder-Mead over (P, lambda) from a grid optimum; never returns worse."""
    x0 = np.concatenate([P0, [lam0]])

    def neg(x):
        lam = float(np.clip(x[-1], 0.0, 1.0))
        r = rate_fn(_to_simplex(x[:-1]), lam)
        return -r if np.isfinite(r) else 1e6

    res = minimize(neg, x0, method="Nelder-Mead", options={"xatol": 1e-10, "fatol": 1e-12, "maxiter": 4000})
    if -res.fun > rate0:
        return -res.fun, _to_simplex(res.x[:-1]), float(np.clip(res.x[-1], 0.0, 1.0))
    return rate0, P0, lam0


# -- polynomially many channels, three-stage decoder ------------------------------


@dataclass(frozen=True)
class ChannelAssignment:
    """Distinct channels ``W_j`` with their input laws and occupancy exponents.

    ``nu_j = log(N_j) / n`` where ``N_j`` users use channel ``j``; the
    overall occupancy exponent is ``max_j nu_j``.
    """

    channels: tuple
    inputs: tuple
    nus: tuple

    def __post_init__(self):
        object.__setattr__(self, "channels", tuple(self.channels))
        object.__setattr__(self, "inputs", tuple(self.inputs))
        object.__setattr__(self, "nus", tuple(float(v) for v in self.nus))
        if not len(self.channels) == len(self.inputs) == len(self.nus):
            raise ValueError("channels, inputs and nus must have equal length")
        if any(v < 0 for v in self.nus):
            raise ValueError("per-channel occupancy exponents must be non-negative")
        idle = self.channels[0].matrix[self.channels[0].idle]
        for w in self.channels:
            if not np.array_equal(w.matrix[w.idle], idle):
                raise ValueError("all channels must share the idle output law")

    @property
    def nu(self) -> float:
        return max(self.nus)

    @property
    def q_star(self) -> Distribution:
        return self.channels[0].idle_row

    def marginals(self) -> list:
        return [output_marginal(P, W) for P, W in zip(self.inputs, self.channels)]


@dataclass
class Thm3Check:
    check: RegionCheck
    identification_sum: float | None
    indistinguishable: list

    @property
    def inside(self) -> bool:
        return self.check.inside

    def __bool__(self):
        return self.inside


def thm3_region_test(p: RegionPoint, asg: ChannelAssignment, lambdas: Sequence[float], n: int | None = None) -> Thm3Check:
    """Per-channel constraints of the three-stage scheme.

    ``p.nu`` is ignored in favour of the per-channel ``asg.nus``. When ``n``
    is given, the finite-n identification bound
    ``sum_{i<j} exp(-2n B([P_i W_i], [P_j W_j]))`` is reported, with pairs of
    identical marginals contributing 0 and listed as indistinguishable.
    """
    if len(lambdas) != len(asg.channels):
        raise ValueError("one lambda per channel is required")
    _check_lambdas(lambdas)
    qs = asg.q_star
    margs = asg.marginals()
    slacks = {}
    for j, (P, W, nu_j, lam) in enumerate(zip(asg.inputs, asg.channels, asg.nus, lambdas)):
        tilt = tilt_output(margs[j], qs, lam)
        slacks[f"collision[{j}]"] = p.alpha / 2 - nu_j
        slacks[f"sync_miss[{j}]"] = _kl(tilt, margs[j]) - nu_j
        slacks[f"sync_false_alarm[{j}]"] = _kl(tilt, qs) - p.alpha
        slacks[f"decoding[{j}]"] = mutual_info(P, W) - (p.R + nu_j)
    indist = [(i, j) for i, j in itertools.combinations(range(len(margs)), 2) if margs[i] == margs[j]]
    ident = None
    if n is not None:
        ident = 0.0
        for i, j in itertools.combinations(range(len(margs)), 2):
            if (i, j) not in indist:
                ident += math.exp(-2 * n * bhattacharyya_dist(margs[i], margs[j]))
    return Thm3Check(RegionCheck(slacks), ident, indist)


def _kl(a: Distribution, b: Distribution) -> float:
    return float(max(_kl_terms(a.probs, b.probs).sum(), 0.0))


def thm3_frontier(
    channels: Sequence[Channel],
    nus: Sequence[float],
    alpha: float,
    resolution: int = 200,
    lam_points: int = 201,
) -> FrontierPoint:
    """Largest common rate for a fixed user-to-channel assignment.

    The constraints decouple across channels, so each channel's input law
    and tilt are optimized separately and the frontier is the minimum of the
    per-channel best rates.
    """
    qs = channels[0].idle_row
    if any(W.outputs != channels[0].outputs or W.idle_row != qs for W in channels):
        raise ValueError("all channels must share the idle output law")
    if len(nus) != len(channels):
        raise ValueError("one occupancy exponent per channel is required")
    lams = np.linspace(0.0, 1.0, lam_points)
    per_channel, best_P, best_lam = [], [], []
    for W, nu_j in zip(channels, nus):
        if not _collision_ok(alpha, nu_j):
            return FrontierPoint(alpha, max(nus), 0.0, None, None, "collision", False)
        best = (-math.inf, None, None)
        for P in _p_candidates(W.inputs, resolution):
            marg = output_marginal(Distribution(P), W)
            I = mutual_info(Distribution(P), W)
            if I - nu_j <= best[0]:
                continue
            for lam in lams:
                try:
                    tilt = tilt_output(marg, qs, lam)
                except ValueError:
                    continue
                if _kl(tilt, marg) - nu_j > SLACK_TOL and _kl(tilt, qs) - alpha > SLACK_TOL:
                    best = (I - nu_j, P, lam)
                    break
        per_channel.append(best[0])
        best_P.append(best[1])
        best_lam.append(best[2])
    j = int(np.argmin(per_channel))
    r = per_channel[j]
    if not np.isfinite(r) or r <= SLACK_TOL:
        return FrontierPoint(alpha, max(nus), 0.0, None, None, "infeasible", False)
    return FrontierPoint(
        alpha,
        max(nus),
        float(r),
        np.concatenate([np.asarray(P) for P in best_P]),
        float(best_lam[j]),
        f"decoding[{j}]",
        True,
        {"per_channel_R": per_channel, "lambdas": best_lam},
    )


# -- unrestricted channels, block-by-block ML ----------------------------------------


def thm4_region_test(p: RegionPoint, inputs: Sequence[Distribution], channels: Sequence[Channel]) -> RegionCheck:
    if len(inputs) != len(channels) or not inputs:
        raise ValueError("one input law per channel is required")
    q0 = channels[0]
    for Q in channels:
        if Q.outputs != q0.outputs or not np.array_equal(Q.matrix[Q.idle], q0.matrix[q0.idle]):
            raise ValueError("users must share the output alphabet and the idle output law")
    qs = q0.idle_row
    slacks = {"collision": p.alpha / 2 - p.nu}
    K = len(inputs)
    for i in range(K):
        Pi, Qi = inputs[i], channels[i]
        cross = min((chernoff_pair(inputs[j], channels[j], Pi, Qi)[0] for j in range(K) if j != i), default=math.inf)
        slacks[f"codebook[{i}]"] = channel_bhattacharyya(Pi, Qi) - (p.nu + p.R)
        slacks[f"cross_user[{i}]"] = cross - (2 * p.nu + p.R)
        slacks[f"idle[{i}]"] = chernoff_idle(qs, Pi, Qi)[0] - (p.alpha + p.nu + p.R)
    return RegionCheck(slacks)


def _thm4_rate(P: np.ndarray, Q: Channel, alpha: float, nu: float):
    d = Distribution(_to_simplex(P))
    b = channel_bhattacharyya(d, Q)
    c_idle = chernoff_idle(Q.idle_row, d, Q)[0]
    # identical users: the cross-user exponent reduces to B(P, Q)
    cands = {"codebook": b - nu, "cross_user": b - 2 * nu, "idle": c_idle - alpha - nu}
    name = min(cands, key=cands.get)
    return cands[name], name


def thm4_frontier(Q: Channel, alpha: float, nu: float, resolution: int = 200, P: Distribution | None = None) -> FrontierPoint:
    """Largest rate of the block-ML region for identical users sharing one input law.

    The input law is optimized over the simplex lattice unless ``P`` is given.
    """
    if not _collision_ok(alpha, nu):
        return FrontierPoint(alpha, nu, 0.0, None, None, "collision", False)
    best = (-math.inf, None, "")
    cands = _p_candidates(Q.inputs, resolution) if P is None else [P.probs]
    for P in cands:
        r, name = _thm4_rate(P, Q, alpha, nu)
        if r > best[0]:
            best = (r, P, name)
    if not np.isfinite(best[0]) or best[0] <= SLACK_TOL:
        return FrontierPoint(alpha, nu, 0.0, None, None, "infeasible", False)
    return FrontierPoint(alpha, nu, float(best[0]), best[1], None, best[2], True)


# -- converse -------------------------------------------------------------------------


def converse_exponents(inputs, channels, lambdas, R: float, nu: float, r_bar: float, n: int):
    """Lower-bound exponents of the noise-block and code-block tail events.

    Returns ``(noise_exp, code_exp)``:
    ``noise_exp = mean_i D(Q_i,lam_i || Q_star | P_i) - (R + nu)(1 - r_bar) + h(r_bar)/n`` and
    ``code_exp = mean_i D(Q_i,lam_i || Q_i | P_i)``.
    """
    if not 0.0 <= r_bar <= 1.0:
        raise ValueError(f"r_bar={r_bar} outside [0, 1]")
    if n < 1:
        raise ValueError("n must be >= 1")
    _check_lambdas(lambdas)
    d_star, d_code = _converse_means(inputs, channels, lambdas)
    return d_star - (R + nu) * (1 - r_bar) + binary_entropy(r_bar) / n, d_code


def _converse_means(inputs, channels, lambdas):
    if not len(inputs) == len(channels) == len(lambdas):
        raise ValueError("inputs, channels and lambdas must have equal length")
    d_star, d_code = [], []
    for P, Q, lam in zip(inputs, channels, lambdas):
        Ql = tilt_conditional(Q, lam)
        d_code.append(cond_kl(Ql, Q, P))
        d_star.append(cond_kl(Ql, np.broadcast_to(Q.matrix[Q.idle], Q.matrix.shape), P))
    return float(np.mean(d_star)), float(np.mean(d_code))


@dataclass
class ConverseCheck:
    impermissible: bool
    reason: str

    def __bool__(self):
        return self.impermissible


def thm5_impermissible_test(p: RegionPoint, inputs, channels, lambdas, r_bar: float) -> ConverseCheck:
    """Is the point ruled out by the witness ``(lambdas, r_bar)``?

    ``r_bar`` is the smallest average error for telling the tilted codeword
    hypotheses apart; it is supplied by the caller (``map_error`` computes it
    exactly for small enumerable families). ``r_bar = 0`` gives the most
    conservative witness.
    """
    if not p.nu < p.alpha / 2:
        raise ValueError("the converse assumes nu < alpha / 2")
    if not 0.0 <= r_bar <= 1.0:
        raise ValueError(f"r_bar={r_bar} outside [0, 1]")
    _check_lambdas(lambdas)
    for i, (P, Q) in enumerate(zip(inputs, channels)):
        if p.R > mutual_info(P, Q) + SLACK_TOL:
            return ConverseCheck(True, f"rate[{i}]")
    d_star, d_code = _converse_means(inputs, channels, lambdas)
    if p.nu > d_code + SLACK_TOL and p.alpha > d_star - (1 - r_bar) * (p.nu + p.R) + SLACK_TOL:
        return ConverseCheck(True, "synchronization")
    return ConverseCheck(False, "")


def thm5_frontier(
    Q: Channel,
    alpha: float,
    nu: float,
    r_bar: float = 0.0,
    resolution: int = 200,
    lam_points: int = 201,
) -> FrontierPoint:
    """Converse rate bound for identical channels.

    For a code of composition P, rates above ``min(I(P, Q), R_sync(P))`` are
    ruled out, where ``R_sync`` is the smallest rate some lambda witnesses.
    The bound is the maximum over compositions; ``R_star`` is that rate.
    """
    if not 0.0 <= r_bar <= 1.0:
        raise ValueError(f"r_bar={r_bar} outside [0, 1]")
    Ps = _p_candidates(Q.inputs, resolution)
    lams = np.linspace(0.0, 1.0, lam_points)
    d_q, d_s = _row_tilt_divergences(Q, lams)
    Dq, Ds = _mix(Ps, d_q), _mix(Ps, d_s)
    I = _mutual_infos(Ps, Q)
    witness = np.isfinite(Dq) & (nu > Dq + SLACK_TOL)
    if r_bar < 1.0:
        r_sync = (Ds - alpha) / (1.0 - r_bar) - nu
    else:
        r_sync = np.where(alpha > Ds + SLACK_TOL, -np.inf, np.inf)
    r_sync = np.where(witness, r_sync, np.inf)
    k_best = np.argmin(r_sync, axis=1)
    r_sync_best = np.maximum(r_sync[np.arange(len(Ps)), k_best], 0.0)
    bound = np.minimum(I, r_sync_best)
    g = int(np.argmax(bound))
    binding = "rate" if I[g] <= r_sync_best[g] else "synchronization"
    lam = float(lams[k_best[g]]) if np.isfinite(r_sync_best[g]) and witness[g, k_best[g]] else None
    return FrontierPoint(alpha, nu, float(bound[g]), Ps[g], lam, binding, True, {"r_bar": r_bar})


def thm6_feasible(alpha: float, nu: float) -> bool:
    """Necessary condition ``nu <= alpha`` for reliable synchronization."""
    if alpha < 0 or nu < 0:
        raise ValueError("exponents must be non-negative")
    return nu <= alpha


# -- BSC closed forms -----------------------------------------------------------------


@dataclass(frozen=True)
class BscClosedForms:
    """Closed-form region quantities for BSC(delta) with idle input 0, ``P = Ber(p)``."""

    delta: float

    def __post_init__(self):
        if not 0.0 < self.delta < 0.5:
            raise ValueError(f"delta={self.delta} outside (0, 1/2)")

    def g(self, a: float) -> float:
        d = self.delta
        return -math.log(1 - a + 2 * a * math.sqrt(d * (1 - d)))

    @property
    def g_half(self) -> float:
        return self.g(0.5)

    def eps_lambda(self, lam: float) -> float:
        d = self.delta
        num = d**lam * (1 - d) ** (1 - lam)
        return num / (num + (1 - d) ** lam * d ** (1 - lam))

    @staticmethod
    def conv(a: float, b: float) -> float:
        return a * (1 - b) + (1 - a) * b

    def region2(self, p: float, lam: float) -> dict:
        """Right-hand sides of the identical-channel constraints."""
        e, d = self.eps_lambda(lam), self.delta
        return {
            "sync_miss": p * binary_kl(e, d),
            "sync_false_alarm": p * binary_kl(e, 1 - d),
            "decoding": binary_entropy(self.conv(p, d)) - binary_entropy(d),
        }

    def region4(self, p_i: float, p_j: float | None = None) -> dict:
        """Right-hand sides of the block-ML constraints for ``P_i = Ber(p_i)``."""
        p_j = p_i if p_j is None else p_j
        return {
            "codebook": self.g(self.conv(p_i, p_i)),
            "cross_user": self.g(self.conv(p_i, p_j)),
            "idle": self.g(p_i),
        }

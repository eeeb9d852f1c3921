"""Acceptance gate: the twelve headline checks at their stated tolerances.

Each test records one PASS/FAIL line; the lines are printed in the pytest
terminal summary, or directly when this file is run as a script.
"""
import json
import math
import time

import numpy as np
import pytest

from sasmac.cli import run as cli_run
from sasmac.graph_cycles import WeightedCompleteGraph, count_cycles, enumerate_cycles, lemma1_check, n_edges
from sasmac.identification import (
    IdentificationInstance,
    dominant_error_profile,
    mc_identification_error,
    pe_upper_bound,
)
from sasmac.prob_core import (
    Channel,
    Distribution,
    binary_entropy,
    chernoff_idle,
    chernoff_pair,
    fano_bound,
    kl_div,
    map_error,
    mutual_info,
    output_marginal,
    product_distribution,
)
from sasmac.regions import RegionPoint, thm2_frontier, thm4_frontier, thm4_region_test
from sasmac.sim import SimConfig, arrangement_argmax, collision_frequency, collision_probability, run_experiment

RESULTS = {}
B = Distribution.bernoulli
BSC = Channel.bsc(0.11)


def record(num, ok, detail):
    RESULTS[num] = f"criterion {num:2d}: {'PASS' if ok else 'FAIL'}  {detail}"
    assert ok, RESULTS[num]


def rand_dist(rng, size):
    return Distribution(rng.dirichlet(np.ones(size)))


def rand_channel(rng, nx, ny):
    return Channel(rng.dirichlet(np.ones(ny), size=nx))


def test_c01_lemma1_brute_force():
    start = time.perf_counter()
    rng = np.random.default_rng(1)
    worst, all_hold, eq_ok = 0.0, True, True
    for k in range(3, 8):
        for r in range(2, k + 1):
            for _ in range(200):
                w = 1.0 - rng.random(n_edges(k))  # uniform on (0, 1]
                lhs, rhs, holds = lemma1_check(WeightedCompleteGraph(k, w), r)
                all_hold &= holds
                worst = max(worst, lhs / rhs)
            for c in (0.3, 1.0):
                lhs, rhs, _ = lemma1_check(WeightedCompleteGraph(k, np.full(n_edges(k), c)), r)
                eq_ok &= abs(lhs - rhs) <= 1e-12 * rhs
    elapsed = time.perf_counter() - start
    ok = all_hold and eq_ok and worst <= 1 + 1e-12 and elapsed < 60
    record(1, ok, f"max lhs/rhs={worst:.12f}, equal-weight equality={eq_ok}, {elapsed:.1f}s")


def test_c02_cycle_counting():
    ok, worst = True, 0.0
    for k in range(2, 9):
        for r in range(2, k + 1):
            formula = math.comb(k, 2) if r == 2 else math.comb(k, r) * math.factorial(r - 1) // 2
            ok &= len(enumerate_cycles(k, r)) == formula == count_cycles(k, r)
            ratio = formula / n_edges(k) ** (r / 2) / 4**r
            worst = max(worst, ratio)
    ok &= worst <= 1
    record(2, ok, f"all counts match for k<=8, max N/(n_k^(r/2) 4^r)={worst:.4g}")


def _random_instances():
    rng = np.random.default_rng(2024)
    out = []
    for t in range(20):
        A = int(rng.choice([3, 4, 5]))
        size = 2 if t % 2 == 0 else 3
        n = int(rng.choice([10, 20, 40]))
        out.append(IdentificationInstance([Distribution(rng.dirichlet(np.full(size, 0.2))) for _ in range(A)], n))
    return out


def test_c03_identification_bound():
    checked, ok = 0, True
    for inst in _random_instances():
        ub = pe_upper_bound(inst)
        if math.isfinite(ub):
            p, s = mc_identification_error(inst, 10_000, 3)
            ok &= p <= ub + 3 * s
            checked += 1
    p, s = mc_identification_error(IdentificationInstance([B(0.3), B(0.3)], 20), 10_000, 5)
    sym = abs(p - 0.5) <= 3 * s
    record(3, ok and sym and checked > 0, f"{checked}/20 instances with finite bound all under it; symmetric P_e={p:.4f}+/-{s:.4f}")


def test_c04_dominant_error_event():
    inst = IdentificationInstance([B(p) for p in (0.1, 0.35, 0.65, 0.9)], 20)
    prof = dominant_error_profile(inst, 10_000, 4)
    mode = max(prof, key=prof.get) if prof else None
    record(4, mode == 2, f"r-histogram {prof}")


def test_c05_bsc_closed_forms():
    closed = -math.log(0.5 + math.sqrt(0.11 * 0.89))
    # two identical users at (R, alpha, nu) = (0.05, 0.12, 0.02); the idle constraint binds
    chk = thm4_region_test(RegionPoint(0.05, 0.12, 0.02), [B(0.5)] * 2, [BSC] * 2)
    binding_rhs = chk.slacks[chk.binding] + 0.19  # alpha + nu + R
    numeric = chernoff_idle(BSC.idle_row, B(0.5), BSC)[0]
    mi = mutual_info(B(0.5), BSC)
    ok = chk.binding in ("idle[0]", "idle[1]") and abs(binding_rhs - 0.20715) <= 1e-4 and abs(numeric - closed) <= 1e-6 and abs(mi - 0.3466) <= 1e-4
    record(5, ok, f"binding {chk.binding}={binding_rhs:.6f}, numeric-closed={numeric - closed:.1e}, I={mi:.6f}")


def test_c06_region_consistency():
    cap = math.log(2) - binary_entropy(0.11)
    r0 = thm2_frontier(BSC, 0.0, 0.0).R_star
    alphas, nus = [0.1, 0.2, 0.3], [0.0, 0.02, 0.04]
    R = np.array([[thm2_frontier(BSC, a, v, resolution=100, lam_points=101).R_star for v in nus] for a in alphas])
    mono = bool(np.all(np.diff(R, axis=0) <= 1e-9) and np.all(np.diff(R, axis=1) <= 1e-9))
    pts = [(0.05, 0.0), (0.1, 0.02), (0.15, 0.05), (0.2, 0.08), (0.3, 0.1)]
    dom = [thm2_frontier(BSC, a, v).R_star - thm4_frontier(BSC, a, v).R_star for a, v in pts]
    ok = abs(r0 - cap) <= 1e-3 and mono and min(dom) > 0
    record(6, ok, f"R*(0,0)-C={r0 - cap:.1e}, monotone={mono}, min thm2-thm4 gap={min(dom):.4f}")


def test_c07_collision_statistics():
    ok, parts = True, []
    for A, K in [(8, 2), (16, 3), (32, 2)]:
        f, _ = collision_frequency(A, K, 100_000, 7)
        p = collision_probability(A, K)
        sigma = math.sqrt(p * (1 - p) / 100_000)
        ok &= abs(f - p) <= 3 * sigma
        parts.append(f"({A},{K}) {(f - p) / sigma:+.2f}sd")
    record(7, ok, ", ".join(parts))


def test_c08_noiseless_end_to_end():
    # ternary identity channel; codewords use symbols {1, 2}, idle is 0
    cfg = SimConfig("thm2", 8, 8, 2, 2, Channel.identity(3), Distribution([0, 0.5, 0.5]), 1000, 8, expurgate=True)
    s = run_experiment(cfg).summary
    record(8, s["non_collision_errors"] == 0, f"{s['non_collision_errors']} errors in {s['non_collision_trials']} non-colliding trials ({s['collisions']} collisions)")


def test_c09_noisy_trend():
    ns = (30, 60, 120)
    inside = all(
        thm4_region_test(RegionPoint(math.log(2) / n, math.log(8) / n, math.log(2) / n), [B(0.5)] * 2, [BSC] * 2).inside
        for n in ns
    )
    ok, parts = inside, []
    for pipe in ("thm2", "thm4"):
        rates = []
        for n in ns:
            s = run_experiment(SimConfig(pipe, n, 8, 2, 2, BSC, B(0.5), 10_000, 9)).summary
            rates.append((s["non_collision_error_rate"], s["non_collision_error_stderr"], s["global_error_rate"]))
        steps = all(b[0] <= a[0] + 3 * math.hypot(a[1], b[1]) for a, b in zip(rates, rates[1:]))
        overall = rates[0][0] - rates[-1][0] > 3 * math.hypot(rates[0][1], rates[-1][1])
        ok &= steps and overall
        parts.append(f"{pipe} " + "/".join(f"{p:.4f}" for p, _, _ in rates) + " (with collisions " + "/".join(f"{g:.4f}" for _, _, g in rates) + ")")
    record(9, ok, f"inside region={inside}; non-collision error rates n=30/60/120: " + "; ".join(parts))


def test_c10_appendix_identities():
    rng = np.random.default_rng(10)
    comp = True
    for _ in range(100):
        k, size = int(rng.integers(1, 6)), int(rng.integers(2, 7))
        w = rng.dirichlet(np.ones(k))
        ps = [rand_dist(rng, size) for _ in range(k)]
        r = rand_dist(rng, size)
        pbar = Distribution(sum(a * p.probs for a, p in zip(w, ps)))
        lhs = kl_div(pbar, r) + sum(a * kl_div(p, pbar) for a, p in zip(w, ps))
        rhs = sum(a * kl_div(p, r) for a, p in zip(w, ps))
        comp &= abs(lhs - rhs) <= 1e-10 * max(1.0, abs(rhs))
    fano = True
    for _ in range(50):
        base = [rand_dist(rng, int(rng.integers(2, 4))) for _ in range(int(rng.integers(1, 3)))]
        N = int(rng.integers(2, 6))
        hyps = [product_distribution([rand_dist(rng, d.alphabet_size) for d in base]) for _ in range(N)]
        hbar = Distribution(np.mean([h.probs for h in hyps], axis=0))
        fano &= np.mean([kl_div(h, hbar) for h in hyps]) >= fano_bound(N, map_error(hyps)) - 1e-12
    appd = True
    for _ in range(100):
        nx, ny = int(rng.integers(2, 5)), int(rng.integers(2, 5))
        pi, pj = rand_dist(rng, nx), rand_dist(rng, nx)
        qi, qj = rand_channel(rng, nx, ny), rand_channel(rng, nx, ny)
        marg = output_marginal(pj, qj)
        appd &= chernoff_idle(qi.idle_row, pj, qj)[0] <= mutual_info(pj, qj) + kl_div(marg, qi.idle_row) + 1e-12
        ja = Distribution(np.outer(pi.probs, marg.probs).ravel())
        jb = Distribution((pi.probs[:, None] * qi.matrix).ravel())
        appd &= chernoff_pair(pi, qi, pj, qj)[0] <= mutual_info(pj, qj) + kl_div(ja, jb) + 1e-12
    record(10, comp and fano and appd, f"compensation={comp}, Fano with MAP r_bar={fano}, point-to-point bounds={appd}")


def test_c11_occupancy_argmax():
    ok = True
    for K in range(1, 7):
        for A in range(1, 7):
            res = arrangement_argmax(K, A)
            ok &= res.swap_ok and all(max(t) - min(t) <= 1 for t in res.ties)
    record(11, ok, "all K<=6, A<=6: argmax balanced and every unbalanced vector beaten by its swap")


def test_c12_determinism(tmp_path):
    cfg = tmp_path / "c.json"
    cfg.write_text(json.dumps({"pipeline": "thm2", "n": 30, "A": 8, "K": 2, "M": 2, "channel": "bsc:0.11", "input": "ber:0.5", "trials": 2000}))
    outs = []
    for threads in (1, 2, 4):
        o, t = tmp_path / f"r{threads}.json", tmp_path / f"t{threads}.csv"
        assert cli_run(["simulate", "--config", str(cfg), "--seed", "12", "--threads", str(threads), "--out", str(o), "--trials-out", str(t)]) == 0
        outs.append((o.read_bytes(), t.read_bytes()))
    reg = []
    for threads in (1, 3):
        o = tmp_path / f"g{threads}.csv"
        cli_run(["region", "--theorem", "2", "--channel", "bsc:0.11", "--resolution", "40", "--threads", str(threads), "--out", str(o)])
        reg.append(o.read_bytes())
    ok = all(x == outs[0] for x in outs) and reg[0] == reg[1]
    record(12, ok, "simulate (threads 1/2/4) and region (threads 1/3) outputs byte-identical")


if __name__ == "__main__":
    import sys

    sys.exit(pytest.main([__file__, "-q"]))

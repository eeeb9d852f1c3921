import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from sasmac.prob_core import (
    Channel,
    Distribution,
    binary_entropy,
    bhattacharyya_dist,
    channel_bhattacharyya,
    chernoff_idle,
    chernoff_pair,
    cond_kl,
    empirical_dist,
    fano_bound,
    kl_div,
    map_error,
    mu_pair,
    mutual_info,
    output_marginal,
    product_distribution,
    round_to_type,
    tilt_conditional,
    tilt_output,
)

DELTA = 0.11
G_HALF = -math.log(0.5 + math.sqrt(DELTA * (1 - DELTA)))


def ber(p):
    return Distribution.bernoulli(p)


def rand_dist(rng, size):
    return Distribution(rng.dirichlet(np.ones(size)))


def rand_channel(rng, nx, ny, idle=0):
    return Channel(rng.dirichlet(np.ones(ny), size=nx), idle=idle)


class TestValidation:
    def test_rejects_bad_sum(self):
        with pytest.raises(ValueError):
            Distribution([0.5, 0.6])

    def test_rejects_negative(self):
        with pytest.raises(ValueError):
            Distribution([1.5, -0.5])

    def test_channel_rows(self):
        with pytest.raises(ValueError):
            Channel([[0.5, 0.4], [0.5, 0.5]])
        with pytest.raises(ValueError):
            Channel([[1.0, 0.0]], idle=1)

    def test_immutable(self):
        d = ber(0.3)
        with pytest.raises(ValueError):
            d.probs[0] = 1.0

    def test_json_round_trip(self):
        d = Distribution([0.2, 0.3, 0.5])
        assert Distribution.from_json(d.to_json()) == d
        q = Channel.bsc(0.11, idle=1)
        assert Channel.from_json(q.to_json()) == q
        assert q.to_dict().keys() == {"inputs", "outputs", "idle", "rows"}

    def test_json_validation(self):
        with pytest.raises(ValueError):
            Distribution.from_dict({"alphabet": 3, "probs": [0.5, 0.5]})
        with pytest.raises(ValueError):
            Channel.from_dict({"inputs": 2, "outputs": 2, "idle": 0, "rows": [[1, 0], [0.3, 0.3]]})
        with pytest.raises(ValueError):
            Distribution.from_dict({"alphabet": 2, "probs": [0.5, 0.5], "extra": 1})


class TestOutputMarginal:
    def test_point_mass(self):
        q = Channel([[0.2, 0.8], [0.6, 0.4]])
        out = output_marginal(Distribution.point_mass(1, 2), q)
        np.testing.assert_allclose(out.probs, [0.6, 0.4])

    def test_symmetric(self):
        np.testing.assert_allclose(output_marginal(ber(0.5), Channel.bsc(0.3)).probs, [0.5, 0.5])

    def test_hand_value(self):
        out = output_marginal(ber(0.3), Channel.bsc(0.11))
        assert out.probs[1] == pytest.approx(0.3 * 0.89 + 0.7 * 0.11, abs=1e-15)

    def test_mismatch(self):
        with pytest.raises(ValueError):
            output_marginal(Distribution.uniform(3), Channel.bsc(0.1))


class TestDivergences:
    def test_kl_zero(self):
        assert kl_div(ber(0.3), ber(0.3)) == 0.0

    def test_kl_hand(self):
        expected = 0.5 * math.log(2) + 0.5 * math.log(2 / 3)
        assert kl_div(ber(0.5), ber(0.25)) == pytest.approx(expected, abs=1e-15)
        assert expected == pytest.approx(0.1438, abs=1e-4)

    def test_kl_support(self):
        assert kl_div(ber(1.0), ber(0.0)) == math.inf
        assert kl_div(ber(0.0), ber(0.5)) == pytest.approx(math.log(2))

    def test_cond_kl_reductions(self):
        rng = np.random.default_rng(0)
        q1, q2 = rand_channel(rng, 3, 4), rand_channel(rng, 3, 4)
        assert cond_kl(q1, q1, Distribution.uniform(3)) == 0.0
        pm = Distribution.point_mass(2, 3)
        assert cond_kl(q1, q2, pm) == pytest.approx(kl_div(q1.row(2), q2.row(2)), abs=1e-14)

    @pytest.mark.parametrize("p", [0.1, 0.5, 0.8])
    def test_cond_kl_bsc_p_independent(self, p):
        d1, d2 = 0.1, 0.3
        expected = d1 * math.log(d1 / d2) + (1 - d1) * math.log((1 - d1) / (1 - d2))
        assert cond_kl(Channel.bsc(d1), Channel.bsc(d2), ber(p)) == pytest.approx(expected, abs=1e-14)

    def test_mutual_info(self):
        q = Channel([[0.3, 0.7], [0.3, 0.7]])
        assert mutual_info(ber(0.4), q) == pytest.approx(0.0, abs=1e-15)
        hb = -0.11 * math.log(0.11) - 0.89 * math.log(0.89)
        assert mutual_info(ber(0.5), Channel.bsc(0.11)) == pytest.approx(math.log(2) - hb, abs=1e-14)
        assert math.log(2) - hb == pytest.approx(0.3466, abs=1e-4)
        assert mutual_info(Distribution.uniform(4), Channel.identity(4)) == pytest.approx(math.log(4))

    def test_binary_entropy(self):
        assert binary_entropy(0.0) == 0.0
        assert binary_entropy(1.0) == 0.0
        assert binary_entropy(0.5) == pytest.approx(math.log(2))
        assert binary_entropy(0.11) == pytest.approx(0.3465, abs=1e-4)
        with pytest.raises(ValueError):
            binary_entropy(1.2)

    def test_bhattacharyya(self):
        assert bhattacharyya_dist(ber(0.4), ber(0.4)) == pytest.approx(0.0, abs=1e-15)
        assert bhattacharyya_dist(ber(0.1), ber(0.9)) == pytest.approx(-math.log(0.6), abs=1e-14)
        assert bhattacharyya_dist(ber(0.0), ber(1.0)) == math.inf


class TestChernoff:
    def test_channel_bhattacharyya_closed_form(self):
        assert channel_bhattacharyya(ber(0.5), Channel.bsc(DELTA)) == pytest.approx(G_HALF, abs=1e-14)
        assert G_HALF == pytest.approx(0.20715, abs=1e-5)

    def test_channel_bhattacharyya_degenerate(self):
        q = Channel([[0.3, 0.7], [0.3, 0.7]])
        assert channel_bhattacharyya(ber(0.5), q) == pytest.approx(0.0, abs=1e-15)
        assert channel_bhattacharyya(Distribution.point_mass(1, 2), Channel.bsc(0.2)) == pytest.approx(0.0, abs=1e-15)

    def test_pair_midpoint(self):
        val, t = chernoff_pair(ber(0.5), Channel.bsc(DELTA), ber(0.5), Channel.bsc(DELTA))
        assert val == pytest.approx(G_HALF, abs=1e-12)
        assert t == pytest.approx(0.5, abs=1e-6)

    def test_pair_identical_rows(self):
        q = Channel([[1.0]])
        val, _ = chernoff_pair(Distribution([1.0]), q, Distribution([1.0]), q)
        assert val == pytest.approx(0.0, abs=1e-15)

    @pytest.mark.parametrize("pi,pj", [(0.1, 0.3), (0.5, 0.2), (0.9, 0.7)])
    def test_pair_bsc_g(self, pi, pj):
        a = pi * (1 - pj) + (1 - pi) * pj
        g = -math.log(1 - a + 2 * a * math.sqrt(DELTA * (1 - DELTA)))
        val, t = chernoff_pair(ber(pi), Channel.bsc(DELTA), ber(pj), Channel.bsc(DELTA))
        assert val == pytest.approx(g, abs=1e-9)
        assert t == pytest.approx(0.5, abs=1e-5)

    def test_idle_degenerate(self):
        q = Channel([[0.3, 0.7], [0.3, 0.7]])
        val, _ = chernoff_idle(Distribution([0.3, 0.7]), ber(0.5), q)
        assert val == pytest.approx(0.0, abs=1e-15)

    def test_idle_bsc(self):
        val, t = chernoff_idle(ber(DELTA), ber(0.5), Channel.bsc(DELTA))
        assert val == pytest.approx(G_HALF, abs=1e-9)
        assert t == pytest.approx(0.5, abs=1e-5)

    def test_idle_brute_force(self):
        # dense grid over t is an independent maximizer
        rng = np.random.default_rng(3)
        for _ in range(10):
            qs, pj, qj = rand_dist(rng, 4), rand_dist(rng, 3), rand_channel(rng, 3, 4)
            val, _ = chernoff_idle(qs, pj, qj)
            ts = np.linspace(0, 1, 20001)
            grid = max(-math.log(np.sum(pj.probs[:, None] * qs.probs[None, :] ** (1 - t) * qj.matrix ** t)) for t in ts)
            assert val >= grid - 1e-12
            assert val == pytest.approx(grid, abs=1e-8)


class TestTilts:
    def test_endpoints(self):
        q = Channel([[0.7, 0.2, 0.1], [0.1, 0.3, 0.6]], idle=0)
        assert tilt_conditional(q, 1.0) == q
        t0 = tilt_conditional(q, 0.0)
        assert np.array_equal(t0.matrix, np.array([[0.7, 0.2, 0.1], [0.7, 0.2, 0.1]]))

    @pytest.mark.parametrize("lam", [0.0, 0.25, 0.5, 0.9, 1.0])
    def test_bsc_eps(self, lam):
        d = 0.11
        eps = d**lam * (1 - d) ** (1 - lam) / (d**lam * (1 - d) ** (1 - lam) + (1 - d) ** lam * d ** (1 - lam))
        t = tilt_conditional(Channel.bsc(d), lam)
        # row for input 1: Q(0|1) = delta tilted toward Q_star(0) = 1 - delta
        assert t.matrix[1, 0] == pytest.approx(eps, abs=1e-14)

    def test_out_of_range(self):
        with pytest.raises(ValueError):
            tilt_conditional(Channel.bsc(0.1), 1.5)
        with pytest.raises(ValueError):
            tilt_output(ber(0.2), ber(0.3), -0.1)

    def test_tilt_output(self):
        p, qs = Distribution([0.2, 0.5, 0.3]), Distribution([0.6, 0.3, 0.1])
        assert tilt_output(p, qs, 1.0) == p
        assert tilt_output(p, qs, 0.0) == qs
        np.testing.assert_allclose(tilt_output(qs, qs, 0.37).probs, qs.probs, atol=1e-15)
        w = p.probs**0.4 * qs.probs**0.6
        np.testing.assert_allclose(tilt_output(p, qs, 0.4).probs, w / w.sum(), atol=1e-15)


class TestTypes:
    def test_empirical(self):
        np.testing.assert_array_equal(empirical_dist([0, 0, 0, 0]).probs, [1.0])
        np.testing.assert_array_equal(empirical_dist([0, 1, 0, 1]).probs, [0.5, 0.5])
        np.testing.assert_array_equal(empirical_dist([0, 1, 1, 1], 2).probs, [0.25, 0.75])
        with pytest.raises(ValueError):
            empirical_dist([])

    def test_round_to_type(self):
        assert round_to_type(ber(0.5), 4).counts == (2, 2)
        assert round_to_type(ber(0.5), 5).counts == (3, 2)
        assert round_to_type(Distribution([0.3, 0.7]), 10).counts == (3, 7)
        assert round_to_type(Distribution.uniform(3), 8).counts == (3, 3, 2)

    @settings(max_examples=100, deadline=None)
    @given(st.lists(st.floats(0.01, 1.0), min_size=2, max_size=6), st.integers(1, 60))
    def test_round_to_type_optimal(self, w, n):
        p = np.array(w) / np.sum(w)
        c = np.array(round_to_type(Distribution(p), n).counts)
        assert c.sum() == n and np.all(c >= 0)
        assert np.max(np.abs(c - n * p)) < 1.0 + 1e-9


class TestMapError:
    def test_identical(self):
        assert map_error([ber(0.3), ber(0.3)]) == pytest.approx(0.5)

    def test_disjoint(self):
        assert map_error([ber(0.0), ber(1.0)]) == pytest.approx(0.0)

    def test_hand(self):
        assert map_error([ber(0.1), ber(0.9)]) == pytest.approx(0.1, abs=1e-15)

    def test_too_few(self):
        with pytest.raises(ValueError):
            map_error([ber(0.1)])

    def test_brute_force_estimators(self):
        # enumerate every deterministic estimator on a 3-point outcome space
        import itertools

        rng = np.random.default_rng(7)
        hyps = [rand_dist(rng, 3) for _ in range(3)]
        best = min(
            np.mean([1 - sum(h.probs[y] for y in range(3) if est[y] == k) for k, h in enumerate(hyps)])
            for est in itertools.product(range(3), repeat=3)
        )
        assert map_error(hyps) == pytest.approx(best, abs=1e-14)


# -- properties over random instances ---------------------------------------------


def test_compensation_identity():
    rng = np.random.default_rng(11)
    for _ in range(100):
        k, size = rng.integers(1, 6), rng.integers(2, 7)
        pis = rng.dirichlet(np.ones(k))
        ps = [rand_dist(rng, size) for _ in range(k)]
        r = rand_dist(rng, size)
        pbar = Distribution(sum(w * p.probs for w, p in zip(pis, ps)))
        lhs = kl_div(pbar, r) + sum(w * kl_div(p, pbar) for w, p in zip(pis, ps))
        rhs = sum(w * kl_div(p, r) for w, p in zip(pis, ps))
        assert lhs == pytest.approx(rhs, rel=1e-10)


def test_bhattacharyya_equals_midpoint_chernoff():
    rng = np.random.default_rng(12)
    for _ in range(100):
        nx, ny = rng.integers(2, 5), rng.integers(2, 5)
        p, q = rand_dist(rng, nx), rand_channel(rng, nx, ny)
        val, _ = chernoff_pair(p, q, p, q)
        assert channel_bhattacharyya(p, q) == pytest.approx(val, abs=1e-9)


def test_point_to_point_bounds():
    rng = np.random.default_rng(13)
    for _ in range(100):
        nx, ny = rng.integers(2, 5), rng.integers(2, 5)
        pi, pj = rand_dist(rng, nx), rand_dist(rng, nx)
        qi, qj = rand_channel(rng, nx, ny), rand_channel(rng, nx, ny)
        qs = qi.idle_row
        pjqj = output_marginal(pj, qj)
        assert chernoff_idle(qs, pj, qj)[0] <= mutual_info(pj, qj) + kl_div(pjqj, qs) + 1e-12
        # D(P_i [P_j Q_j] || P_i Q_i) as a joint-law divergence on X x Y
        joint_a = np.outer(pi.probs, pjqj.probs).ravel()
        joint_b = (pi.probs[:, None] * qi.matrix).ravel()
        bound = mutual_info(pj, qj) + kl_div(Distribution(joint_a), Distribution(joint_b))
        assert chernoff_pair(pi, qi, pj, qj)[0] <= bound + 1e-12


def test_mu_concave():
    rng = np.random.default_rng(14)
    for _ in range(100):
        nx, ny = rng.integers(2, 5), rng.integers(2, 5)
        pi, pj = rand_dist(rng, nx), rand_dist(rng, nx)
        qi, qj = rand_channel(rng, nx, ny), rand_channel(rng, nx, ny)
        t1, t2 = rng.random(2)
        mid = mu_pair(0.5 * (t1 + t2), pi, qi, pj, qj)
        assert mid >= 0.5 * (mu_pair(t1, pi, qi, pj, qj) + mu_pair(t2, pi, qi, pj, qj)) - 1e-12


def test_bhattacharyya_geometric_mean_identity():
    rng = np.random.default_rng(15)
    for _ in range(100):
        size = rng.integers(2, 7)
        p1, p2 = rand_dist(rng, size), rand_dist(rng, size)
        m = np.sqrt(p1.probs * p2.probs)
        m = Distribution(m / m.sum())
        b = bhattacharyya_dist(p1, p2)
        assert b == pytest.approx(0.5 * (kl_div(m, p1) + kl_div(m, p2)), abs=1e-10)


def test_fano_with_map():
    rng = np.random.default_rng(16)
    for _ in range(50):
        base = [rand_dist(rng, rng.integers(2, 4)) for _ in range(rng.integers(1, 3))]
        n_hyp = rng.integers(2, 6)
        # hypotheses are product laws on a small explicit outcome space
        hyps = [product_distribution([rand_dist(rng, d.alphabet_size) for d in base]) for _ in range(n_hyp)]
        r_bar = map_error(hyps)
        hbar = Distribution(np.mean([h.probs for h in hyps], axis=0))
        lhs = np.mean([kl_div(h, hbar) for h in hyps])
        assert lhs >= fano_bound(n_hyp, r_bar) - 1e-12

"""Distributional tests for the exact inverse-CDF samplers."""

import math

import numpy as np
import pytest
from scipy import stats

from latentbook import samplers


def gen(seed=0):
    return np.random.Generator(np.random.PCG64(seed))


class TestPoisson:
    def test_zero_rate(self):
        rng = gen()
        assert all(samplers.poisson_draw(rng, 0.0) == 0 for _ in range(100))

    def test_moments_lam_half(self):
        rng = gen(1)
        n = 1_000_000
        x = np.array([samplers.poisson_draw(rng, 0.5) for _ in range(n)])
        se_mean = math.sqrt(0.5 / n)
        assert abs(x.mean() - 0.5) < 3 * se_mean
        assert abs(x.var() - 0.5) < 0.01
        # P(0) = exp(-0.5)
        p0 = (x == 0).mean()
        se_p0 = math.sqrt(p0 * (1 - p0) / n)
        assert abs(p0 - math.exp(-0.5)) < 3 * se_p0

    def test_chunked_large_rate(self):
        rng = gen(2)
        n = 20_000
        lam = 250.0  # forces the chunk-splitting path
        x = np.array([samplers.poisson_draw(rng, lam) for _ in range(n)])
        assert abs(x.mean() - lam) < 3 * math.sqrt(lam / n)
        assert abs(x.var() / lam - 1.0) < 0.05


class TestBinomial:
    def test_edge_probabilities(self):
        rng = gen()
        table, n_safe, odds = samplers.binomial_table(0.0)
        assert samplers.binomial_draw(rng, 100, table, n_safe, odds) == 0

    def test_exact_pmf_chi_square(self):
        # cancelled-count histogram matches Binomial(V, nu) for fixed V
        rng = gen(3)
        v, nu, n = 10, 0.3, 200_000
        table, n_safe, odds = samplers.binomial_table(nu)
        x = np.array([samplers.binomial_draw(rng, v, table, n_safe, odds)
                      for _ in range(n)])
        counts = np.bincount(x, minlength=v + 1)
        expected = stats.binom.pmf(np.arange(v + 1), v, nu) * n
        sel = expected > 5
        chi2 = ((counts[sel] - expected[sel]) ** 2 / expected[sel]).sum()
        # dof = bins - 1; accept at the 1e-3 level
        assert chi2 < stats.chi2.ppf(0.999, sel.sum() - 1)

    def test_desk_scale_mean(self):
        # V_p = 1e4, nu = 1e-4: one expected cancellation per sweep
        rng = gen(4)
        v, nu, sweeps = 10_000, 1e-4, 3000
        table, n_safe, odds = samplers.binomial_table(nu)
        x = np.array([samplers.binomial_draw(rng, v, table, n_safe, odds)
                      for _ in range(sweeps)])
        se = math.sqrt(1.0 / sweeps)  # var ~ v*nu = 1
        assert abs(x.mean() - 1.0) < 3 * se

    def test_large_n_split_path(self):
        rng = gen(5)
        n, p, draws = 50_000, 0.4, 4000  # n >> n_safe for p = 0.4
        table, n_safe, odds = samplers.binomial_table(p)
        assert n > n_safe
        x = np.array([samplers.binomial_draw(rng, n, table, n_safe, odds)
                      for _ in range(draws)])
        mean, var = n * p, n * p * (1 - p)
        assert abs(x.mean() - mean) < 4 * math.sqrt(var / draws)
        assert abs(x.var() / var - 1.0) < 0.1

    def test_table_validation(self):
        with pytest.raises(ValueError):
            samplers.binomial_table(0.7)


class TestRunLength:
    def test_matches_inverse_formula(self):
        # the draw consumes exactly one uniform: replay it
        for seed in range(20):
            u = gen(seed).random()
            drawn = samplers.run_length_draw(gen(seed), 1.5)
            assert drawn == math.ceil((1.0 - u) ** (-1.0 / 1.5))

    def test_hand_computed_example(self):
        # u = 0.96, alpha = 1.5: X = 0.04^(-2/3) ~ 8.55 -> L = 9
        assert math.ceil((1 - 0.96) ** (-1 / 1.5)) == 9

    def test_low_edge(self):
        # ceil maps X in (1, 2] to L = 2, so P(L = 2) = 1 - 2^-alpha;
        # L = 1 only at the u = 0 edge of the inverse CDF
        rng = gen(6)
        x = np.array([samplers.run_length_draw(rng, 1.5) for _ in range(50_000)])
        assert x.min() >= 1
        p2 = (x == 2).mean()
        expected = 1.0 - 2.0 ** -1.5
        assert abs(p2 - expected) < 3 * math.sqrt(expected * (1 - expected) / x.size)

    def test_tail_exponent(self):
        rng = gen(7)
        n = 1_000_000
        x = np.array([samplers.run_length_draw(rng, 1.5) for _ in range(n)])
        ls = np.unique(np.geomspace(10, 1000, 12).astype(int))
        tail = np.array([(x > l).mean() for l in ls])
        slope = np.polyfit(np.log(ls), np.log(tail), 1)[0]
        assert abs(slope + 1.5) < 0.1

    def test_cap(self):
        rng = gen(8)
        xs = [samplers.run_length_draw(rng, 1.000001) for _ in range(2000)]
        assert max(xs) <= samplers.RUN_LENGTH_CAP


class TestFraction:
    def test_matches_inverse_formula(self):
        for seed in range(20):
            u = gen(seed).random()
            if u <= 0:
                continue
            f = samplers.fraction_draw(gen(seed), 2.0)
            assert f == pytest.approx(1.0 - u ** 0.5, abs=0)

    def test_strictly_inside_unit_interval(self):
        rng = gen(9)
        for zeta in (0.1, 1.0, 50.0):
            x = np.array([samplers.fraction_draw(rng, zeta) for _ in range(200_000)])
            assert x.min() > 0.0
            assert x.max() < 1.0

    def test_mean_is_beta(self):
        # mean of Beta(1, zeta) is 1/(1+zeta)
        rng = gen(10)
        for zeta in (0.65, 1.0, 2.0):
            n = 300_000
            x = np.array([samplers.fraction_draw(rng, zeta) for _ in range(n)])
            mean = 1.0 / (1.0 + zeta)
            var = zeta / ((1 + zeta) ** 2 * (2 + zeta))
            assert abs(x.mean() - mean) < 3 * math.sqrt(var / n)

    def test_uniform_case_quarter(self):
        # zeta = 1 is the flat distribution: f = 1 - u
        u = gen(11).random()
        f = samplers.fraction_draw(gen(11), 1.0)
        assert f == pytest.approx(1.0 - u, rel=1e-15)


class TestSign:
    def test_balance(self):
        rng = gen(12)
        n = 500_000
        s = np.array([samplers.sign_draw(rng) for _ in range(n)])
        assert set(np.unique(s)) == {-1, 1}
        assert abs(s.mean()) < 3 / math.sqrt(n)


def test_uniform_bin_bounds():
    rng = gen(13)
    x = np.array([samplers.uniform_bin(rng, 7) for _ in range(50_000)])
    assert x.min() == 0 and x.max() == 6
    counts = np.bincount(x)
    assert (abs(counts - len(x) / 7) < 5 * math.sqrt(len(x) / 7)).all()

import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from conftest import GOLDEN_H, random_primitive, random_stochastic
from entropy_lab import (Bernoulli, DomainError, InsufficientMassError, Markov, Mixture,
                         PeriodicOrbit, Potential, birkhoff_concentration, countable_full_shift,
                         cylinder_log_mass, full_shift, katok_estimate, markov_entropy,
                         plugin_entropy, simplified_formula_report, smb_deviation,
                         tail_entropy_bound)
from entropy_lab.entropy import minimal_cover, sample_paths, tail_entropy


def H2(p):
    return -p * math.log(p) - (1 - p) * math.log(1 - p)


class TestExactEntropy:
    @pytest.mark.parametrize("p", [0.1, 0.3, 0.5])
    def test_bernoulli(self, p):
        assert markov_entropy(Bernoulli([p, 1 - p])) == pytest.approx(H2(p), abs=1e-14)

    def test_geometric_series_oracle(self):
        r = 0.37
        ks = np.arange(400)
        p = (1 - r) * r**ks
        brute = -math.fsum((p * np.log(p)).tolist())
        assert markov_entropy(Bernoulli(ratio=r)) == pytest.approx(brute, abs=1e-12)

    def test_parry(self, parry):
        assert markov_entropy(parry) == pytest.approx(GOLDEN_H, abs=1e-12)

    def test_orbit_zero(self):
        assert markov_entropy(PeriodicOrbit((0, 1, 1))) == 0.0

    def test_markov_matches_block_increments(self):
        # for a Markov chain H_{n+1} - H_n equals the entropy from n = 1 on
        rng = np.random.default_rng(2)
        trans = random_primitive(rng, 4)
        mu = Markov(random_stochastic(rng, trans.matrix()))
        H = [plugin_entropy(mu, n, trans).diagnostics["H_n"] for n in (3, 4)]
        assert H[1] - H[0] == pytest.approx(markov_entropy(mu), abs=1e-10)

    def test_mixture_affine(self):
        mix = Mixture([Bernoulli([0.5, 0.5]), PeriodicOrbit((0, 1))], [0.25, 0.75])
        assert markov_entropy(mix) == pytest.approx(0.25 * math.log(2))


class TestPlugin:
    @pytest.mark.parametrize("n", range(1, 7))
    def test_bernoulli_every_length(self, full2, n):
        est = plugin_entropy(Bernoulli([0.2, 0.8]), n, full2)
        assert est.value == pytest.approx(H2(0.2), abs=1e-12)
        assert est.diagnostics["cylinders"] == 2**n

    def test_golden(self, parry, golden):
        assert abs(plugin_entropy(parry, 10, golden).value - GOLDEN_H) < 0.02

    @pytest.mark.parametrize("n", [1, 3, 8])
    def test_orbit(self, full2, n):
        assert plugin_entropy(PeriodicOrbit((0, 1)), n, full2).value == pytest.approx(math.log(2) / n)

    def test_mass_deficit_reported(self):
        trans = countable_full_shift([4])
        est = plugin_entropy(Bernoulli(ratio=0.5), 1, trans, 0)
        assert est.diagnostics["mass_deficit"] == pytest.approx(0.5**4)

    @settings(max_examples=30, deadline=None)
    @given(st.floats(0.02, 0.98), st.integers(1, 5), st.integers(1, 5))
    def test_subadditive(self, p, n, m):
        t = full_shift(2)
        mu = Markov([[p, 1 - p], [0.5, 0.5]])
        H = lambda k: plugin_entropy(mu, k, t).diagnostics["H_n"]
        assert H(n + m) <= H(n) + H(m) + 1e-10

    def test_mixture_sandwich(self, full2):
        a, b = Bernoulli([0.5, 0.5]), Bernoulli([0.9, 0.1])
        w = (0.5, 0.5)
        n = 12
        mix = plugin_entropy(Mixture([a, b], w), n, full2).value
        affine = w[0] * plugin_entropy(a, n, full2).value + w[1] * plugin_entropy(b, n, full2).value
        assert affine - 1e-12 <= mix <= affine + math.log(2) / n
        assert abs(mix - affine) < 0.06


class TestKatok:
    def test_uniform_exact(self, uniform2, full2):
        est = katok_estimate(uniform2, 16, 0, 0.5, full2)
        assert est.value == pytest.approx(math.log(2), abs=1e-12)
        assert est.diagnostics["count"] == 2**16

    def test_orbit_count_bounded(self, full2):
        for N in (4, 9):
            est = katok_estimate(PeriodicOrbit((0, 0, 1)), N, 1, 0.1, full2)
            assert est.diagnostics["count"] <= 3
            assert est.value <= math.log(3) / (N + 1)

    @pytest.mark.parametrize("k", [0, 1, 2])
    def test_golden(self, parry, golden, k):
        assert abs(katok_estimate(parry, 16, k, 0.3, golden).value - GOLDEN_H) < 0.05

    def test_delta_monotone(self, parry, golden):
        counts = [katok_estimate(parry, 10, 0, d, golden).diagnostics["count"]
                  for d in (0.05, 0.1, 0.3, 0.6, 0.9)]
        assert counts == sorted(counts, reverse=True)

    def test_k_monotone_counts(self, parry, golden):
        counts = [katok_estimate(parry, 8, k, 0.3, golden).diagnostics["count"] for k in range(4)]
        assert counts == sorted(counts)

    def test_cover_is_minimal(self):
        # brute force over subsets of a small cylinder set
        from itertools import combinations
        mu = Bernoulli([0.6, 0.3, 0.1])
        t = full_shift(3)
        count, covered, _ = minimal_cover(mu, 2, 0.2, t)
        words = [(a, b) for a in range(3) for b in range(3)]
        masses = [math.exp(cylinder_log_mass(mu, w)) for w in words]
        best = min(r for r in range(1, 10) for c in combinations(masses, r) if sum(c) >= 0.8 - 1e-12)
        assert count == best and covered >= 0.8 - 1e-12

    def test_insufficient_mass(self):
        with pytest.raises(InsufficientMassError):
            katok_estimate(Bernoulli(ratio=0.5), 1, 0, 0.01, countable_full_shift([3]), 0)

    def test_relative_target(self):
        mu = Bernoulli([0.5, 0.5], mass=0.5)
        est = katok_estimate(mu, 4, 0, 0.5, full_shift(2), relative=True)
        assert est.diagnostics["count"] == 16

    def test_bad_delta(self, uniform2, full2):
        with pytest.raises(DomainError):
            katok_estimate(uniform2, 4, 0, 1.0, full2)


class TestSpread:
    def test_uniform(self, uniform2, full2):
        rep = simplified_formula_report(uniform2, 12, 0.3, range(4), full2)
        assert rep.spread <= 0.06

    def test_orbit(self, full2):
        rep = simplified_formula_report(PeriodicOrbit((0,)), 10, 0.3, range(3), full2)
        assert rep.spread == 0.0

    def test_golden(self, parry, golden):
        rep = simplified_formula_report(parry, 14, 0.3, range(4), golden)
        assert rep.spread <= 0.08
        assert len(rep.trend) == 2

    def test_empty(self, parry, golden):
        with pytest.raises(DomainError):
            simplified_formula_report(parry, 4, 0.3, [], golden)


class TestSMB:
    def test_uniform_degenerate(self, uniform2):
        s = smb_deviation(uniform2, 200, 50, seed=1)
        assert s.std == pytest.approx(0.0, abs=1e-12)
        assert s.mean == pytest.approx(math.log(2))

    def test_golden(self, parry):
        s = smb_deviation(parry, 2000, 500, seed=0)
        assert abs(s.mean - GOLDEN_H) < 0.01
        assert s.fraction_inside > 0.95

    def test_biased_bernoulli(self):
        s = smb_deviation(Bernoulli([0.9, 0.1]), 2000, 500, seed=0)
        assert abs(s.mean - 0.325083) < 0.01

    def test_fluctuations_shrink_like_root_n(self):
        mu = Bernoulli([0.9, 0.1])
        a = smb_deviation(mu, 200, 800, seed=3).std
        b = smb_deviation(mu, 3200, 800, seed=3).std
        assert 2.5 < a / b < 6.0  # sqrt(16) = 4

    def test_seed_reproducible(self, parry):
        assert smb_deviation(parry, 100, 20, seed=7) == smb_deviation(parry, 100, 20, seed=7)

    def test_paths_admissible(self, parry):
        paths = sample_paths(parry, 50, 30, np.random.default_rng(0))
        assert not ((paths[:, :-1] == 1) & (paths[:, 1:] == 1)).any()


class TestBirkhoff:
    def test_constant(self, parry):
        assert birkhoff_concentration(parry, Potential.constant(1.0), 50, 0.01, 40, 0).fraction == 1.0

    def test_golden_indicator(self, parry):
        ind = Potential.symbolwise([1.0, 0.0])
        b = birkhoff_concentration(parry, ind, 2000, 0.05, 400, 0)
        assert b.space_average == pytest.approx(parry.pi[0])
        assert b.fraction >= 0.99

    def test_nonincreasing_in_epsilon(self, parry):
        ind = Potential.symbolwise([1.0, 0.0])
        fr = [birkhoff_concentration(parry, ind, 300, e, 300, 5).fraction
              for e in (0.1, 0.05, 0.02, 0.01)]
        assert fr == sorted(fr, reverse=True)


class TestTailBound:
    def test_geometric(self):
        masses = [0.5**k for k in range(1, 60)]
        for M in (1, 5, 20):
            b = tail_entropy_bound(masses, M)
            assert tail_entropy(masses, M) <= b

    def test_heavy_tail(self):
        ks = np.arange(1, 5000)
        m = 1 / (ks * (ks + 1.0))
        assert tail_entropy(m, 10) <= tail_entropy_bound(m, 10)

    @settings(max_examples=50, deadline=None)
    @given(st.lists(st.floats(0, 1), min_size=1, max_size=40), st.integers(1, 40))
    def test_random(self, masses, M):
        assert tail_entropy(masses, M) <= tail_entropy_bound(masses, M) * (1 + 1e-12)

    def test_rejects_bad_masses(self):
        with pytest.raises(DomainError):
            tail_entropy_bound([1.5], 1)

import math
from fractions import Fraction
from itertools import product

import numpy as np
import pytest
from hypothesis import given, strategies as st

from prefixsim.bits import BitString
from prefixsim.errors import CapabilityError
from prefixsim.oracles import TreeOracle
from prefixsim.simulation import (
    EdgeEstimate,
    LazySimulation,
    est_simulation_edge,
    preprocess,
    samples_per_edge,
)
from prefixsim.streams import substream
from prefixsim.trees import kl_divergence, point_mass_tree, random_tree, uniform_tree

from helpers import chi2_critical_99, chi_square_stat


class TestSamplesPerEdge:
    @pytest.mark.parametrize("n,delta,expected", [
        (10, 0.5, 20),
        (3, 0.1, 30),
        (4, 0.1, 40),
        (8, 0.25, 32),
        (5, 0.3, 17),   # 16.66... rounds up
    ])
    def test_values(self, n, delta, expected):
        assert samples_per_edge(n, delta) == expected

    def test_validation(self):
        with pytest.raises(ValueError):
            samples_per_edge(3, 0.0)
        with pytest.raises(ValueError):
            samples_per_edge(0, 0.5)


class TestEdgeEstimate:
    @given(st.integers(min_value=1, max_value=200), st.data())
    def test_siblings_sum_to_one_exactly(self, m, data):
        k = data.draw(st.integers(min_value=0, max_value=m))
        est = EdgeEstimate(k, m)
        assert est.exact + est.sibling().exact == Fraction(1)
        assert est.value == k / m

    def test_bounds_validated(self):
        with pytest.raises(ValueError):
            EdgeEstimate(5, 4)
        with pytest.raises(ValueError):
            EdgeEstimate(-1, 4)


class TestEstSimulationEdge:
    def test_point_mass_edge(self):
        oracle = TreeOracle(point_mass_tree("1" * 6))
        est = est_simulation_edge(6, oracle, 0.5, "", 1, substream(0, "e"))
        assert est.k == est.m == 12
        assert est.value == 1.0

    def test_cost_is_exactly_m(self):
        oracle = TreeOracle(uniform_tree(10))
        est_simulation_edge(10, oracle, 0.5, "0101", 0, substream(1, "e"))
        assert oracle.budget.conditional_calls == 20

    def test_binomial_statistics(self):
        # m = 40 per estimate; mean of 500 estimates within 3 sigma
        oracle = TreeOracle(uniform_tree(8))
        repeats = 500
        estimates = [
            est_simulation_edge(8, oracle, 0.2, "", 1, substream(2, "e", i)).value
            for i in range(repeats)
        ]
        m = samples_per_edge(8, 0.2)
        assert m == 40
        band = 3.0 * (0.5 / math.sqrt(m)) / math.sqrt(repeats)
        assert abs(np.mean(estimates) - 0.5) <= band

    def test_same_stream_gives_complementary_counts(self):
        tree = random_tree(6, substream(3, "t"), 0.2, 0.8)
        e1 = est_simulation_edge(6, TreeOracle(tree), 0.4, "01", 1, substream(4, "e"))
        e0 = est_simulation_edge(6, TreeOracle(tree), 0.4, "01", 0, substream(4, "e"))
        assert e1.k + e0.k == e1.m


class TestPreprocess:
    def test_total_cost(self):
        oracle = TreeOracle(uniform_tree(3))
        learned = preprocess(3, oracle, 0.5, seed=7)
        m = samples_per_edge(3, 0.5)
        assert oracle.budget.conditional_calls == 7 * m
        assert learned.sample_cost == 7 * m

    def test_point_mass_learned_exactly(self):
        tree = point_mass_tree("101")
        learned = preprocess(3, TreeOracle(tree), 0.5, seed=8)
        assert learned.query("101") == 1.0
        assert kl_divergence(learned.as_marginal_tree(), tree) == 0.0

    def test_capability_gate(self):
        with pytest.raises(CapabilityError):
            preprocess(21, TreeOracle(uniform_tree(21)), 0.5, seed=0)

    def test_expected_divergence_bound(self):
        # Monte Carlo check of the learning guarantee at n=4, delta=0.25
        n, delta, runs = 4, 0.25, 120
        kls = []
        for i in range(runs):
            tree = random_tree(n, substream(100, "tree", i), 0.2, 0.8)
            learned = preprocess(n, TreeOracle(tree), delta, seed=200 + i)
            kls.append(kl_divergence(learned.as_marginal_tree(), tree))
        mean = float(np.mean(kls))
        se = float(np.std(kls, ddof=1)) / math.sqrt(runs)
        assert mean <= delta + 3.0 * se


class TestPreprocessedReads:
    def test_realization_exact(self):
        learned = preprocess(4, TreeOracle(random_tree(4, substream(5, "t"))), 0.5, seed=9)
        total = sum(learned.query_exact(BitString(bits)) for bits in product((0, 1), repeat=4))
        assert total == Fraction(1)
        float_total = sum(learned.query(BitString(bits)) for bits in product((0, 1), repeat=4))
        assert abs(float_total - 1.0) < 1e-12

    def test_point_mass_sample(self):
        learned = preprocess(3, TreeOracle(point_mass_tree("011")), 0.5, seed=10)
        x, p = learned.sample(substream(11, "u"))
        assert (x.as_str(), p) == ("011", 1.0)

    def test_sample_frequencies_match_queries(self):
        learned = preprocess(4, TreeOracle(random_tree(4, substream(6, "t"), 0.2, 0.8)),
                             0.5, seed=12)
        draws = 20_000
        rng = substream(13, "u")
        counts = np.zeros(16, dtype=int)
        for _ in range(draws):
            x, _ = learned.sample(rng)
            counts[x.as_int()] += 1
        expected = np.array([
            learned.query(BitString.from_int(v, 4)) for v in range(16)
        ]) * draws
        live = expected > 0
        stat = chi_square_stat(counts, expected)
        assert stat < chi2_critical_99(int(live.sum()) - 1)


class TestLazySimulation:
    def test_init_is_free(self):
        oracle = TreeOracle(uniform_tree(5))
        sim = LazySimulation(5, oracle, 0.5, seed=1)
        assert oracle.budget.conditional_calls == 0
        assert sim.hist == {}

    def test_same_seed_same_behavior(self):
        tree = random_tree(5, substream(20, "t"), 0.2, 0.8)
        sims = [LazySimulation(5, TreeOracle(tree), 0.5, seed=42) for _ in range(2)]
        xs = ["01101", "11000", "01101"]
        assert [sims[0].query(x) for x in xs] == [sims[1].query(x) for x in xs]
        assert sims[0].sample() == sims[1].sample()

    def test_access_edge_memo_and_sibling_rule(self):
        oracle = TreeOracle(uniform_tree(10))
        sim = LazySimulation(10, oracle, 0.5, seed=2)
        first = sim.access_edge("0110", 0)
        assert oracle.budget.conditional_calls == 20
        again = sim.access_edge("0110", 0)
        assert again is first
        assert oracle.budget.conditional_calls == 20
        other = sim.access_edge("0110", 1)
        assert first.exact + other.exact == Fraction(1)
        assert oracle.budget.conditional_calls == 20

    def test_fresh_query_cost_and_ledger(self):
        n, delta = 10, 0.5
        oracle = TreeOracle(random_tree(n, substream(21, "t"), 0.2, 0.8))
        sim = LazySimulation(n, oracle, delta, seed=3)
        m = samples_per_edge(n, delta)

        value = sim.query("0110101101")
        assert oracle.budget.conditional_calls == n * m
        assert sim.query("0110101101") == value
        assert oracle.budget.conditional_calls == n * m

        # flipping the last bit shares every sibling pair
        sim.query("0110101100")
        assert oracle.budget.conditional_calls == n * m

        # a fresh top-level branch pays for n - 1 new pairs
        sim.query("1110101101")
        assert oracle.budget.conditional_calls == (2 * n - 1) * m
        assert oracle.budget.conditional_calls == m * sim.touched_pairs

    def test_sample_consistency(self):
        oracle = TreeOracle(random_tree(6, substream(22, "t"), 0.2, 0.8))
        sim = LazySimulation(6, oracle, 0.5, seed=4)
        for _ in range(50):
            x, p = sim.sample()
            assert p == sim.query(x)

    def test_point_mass_sample(self):
        sim = LazySimulation(4, TreeOracle(point_mass_tree("1100")), 0.5, seed=5)
        for _ in range(5):
            assert sim.sample() == (BitString.from_str("1100"), 1.0)

    def test_sample_distribution_matches_materialized_state(self):
        # n=5: draw a lot, then compare against the (now fully pinned) masses
        oracle = TreeOracle(random_tree(5, substream(23, "t"), 0.2, 0.8))
        sim = LazySimulation(5, oracle, 0.5, seed=6)
        draws = 100_000
        counts = np.zeros(32, dtype=int)
        for _ in range(draws):
            x, _ = sim.sample()
            counts[x.as_int()] += 1
        expected = np.array([
            sim.query(BitString.from_int(v, 5)) for v in range(32)
        ]) * draws
        live = expected > 0
        stat = chi_square_stat(counts, expected)
        assert stat < chi2_critical_99(int(live.sum()) - 1)

    def test_lazy_matches_eager_bit_for_bit(self):
        n, delta, seed = 6, 0.25, 77
        tree = random_tree(n, substream(24, "t"), 0.2, 0.8)
        eager = preprocess(n, TreeOracle(tree), delta, seed)
        lazy = LazySimulation(n, TreeOracle(tree), delta, seed)
        user = substream(seed, "user")
        script = substream(25, "script")
        for _ in range(300):
            if script.random() < 0.5:
                x = BitString(tuple(script.integers(0, 2, n)))
                assert eager.query(x) == lazy.query(x)
            else:
                assert eager.sample(user) == lazy.sample()

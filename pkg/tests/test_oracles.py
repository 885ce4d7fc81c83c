import numpy as np
import pytest

from prefixsim.oracles import SampleBudget, TreeOracle
from prefixsim.streams import substream
from prefixsim.trees import TableMarginalTree, point_mass_tree, random_tree, uniform_tree

from helpers import chi2_critical_99, chi_square_stat


class TestBudget:
    def test_documented_increments(self):
        oracle = TreeOracle(uniform_tree(3))
        rng = substream(0, "draws")
        oracle.conditional_sample("0", rng)
        assert oracle.budget.conditional_calls == 1
        oracle.conditional_sample_batch("", 5, rng)
        assert oracle.budget.conditional_calls == 6
        oracle.marginal_sample("01", rng)
        assert oracle.budget.snapshot() == {"conditional_calls": 6, "marginal_calls": 1}

    def test_per_prefix_histogram(self):
        oracle = TreeOracle(uniform_tree(3), budget=SampleBudget.tracking())
        rng = substream(0, "draws")
        oracle.conditional_sample_batch("0", 4, rng)
        oracle.conditional_sample("0", rng)
        oracle.marginal_sample("11", rng)
        assert oracle.budget.per_prefix["0"] == 5
        assert oracle.budget.per_prefix["11"] == 1

    def test_negative_charge_rejected(self):
        with pytest.raises(ValueError):
            SampleBudget().charge_conditional("", -1)


class TestConditionalSampling:
    def test_sample_extends_prefix(self):
        oracle = TreeOracle(random_tree(5, substream(1, "t")))
        for w in ("", "0", "10", "0110"):
            x = oracle.conditional_sample(w, substream(2, "draw", w))
            assert x.as_str().startswith(w)

    def test_forced_last_level(self):
        # f(w) = 1 at the deepest level forces the closing bit
        levels = [np.array([0.5]), np.array([1.0, 0.0])]
        oracle = TreeOracle(TableMarginalTree(2, levels))
        rng = substream(3, "draw")
        for _ in range(20):
            x = oracle.conditional_sample("0", rng)
            assert x.as_str() == "01"

    def test_point_mass_returns_the_point(self):
        oracle = TreeOracle(point_mass_tree("1010"))
        rng = substream(4, "draw")
        for w in ("", "1", "10", "101"):
            assert oracle.conditional_sample(w, rng).as_str() == "1010"

    def test_cylinder_frequencies_chi_square(self):
        # uniform tree, unconditioned draws: all 8 outcomes equally likely
        oracle = TreeOracle(uniform_tree(3))
        draws = 10_000
        bits = oracle.conditional_sample_batch("", draws, substream(5, "gof"))
        codes = bits @ np.array([4, 2, 1])
        observed = np.bincount(codes, minlength=8)
        stat = chi_square_stat(observed, np.full(8, draws / 8))
        assert stat < chi2_critical_99(7)

    def test_batch_matches_walk_distribution(self):
        tree = random_tree(4, substream(11, "t"), 0.2, 0.8)
        oracle = TreeOracle(tree)
        draws = 20_000
        bits = oracle.conditional_sample_batch("10", draws, substream(12, "gof"))
        codes = bits @ np.array([2, 1])
        expected = np.array([
            tree.mass("10" + suffix) / tree.conditional_mass("10")
            for suffix in ("00", "01", "10", "11")
        ]) * draws
        stat = chi_square_stat(np.bincount(codes, minlength=4), expected)
        assert stat < chi2_critical_99(3)


class TestMarginalSampling:
    def test_degenerate(self):
        levels = [np.array([1.0]), np.array([0.0, 0.0])]
        oracle = TreeOracle(TableMarginalTree(2, levels))
        rng = substream(6, "draw")
        assert all(oracle.marginal_sample("", rng) == 1 for _ in range(10))
        assert all(oracle.marginal_sample("1", rng) == 0 for _ in range(10))
        assert oracle.budget.marginal_calls == 20
        assert oracle.budget.conditional_calls == 0

    def test_binomial_statistics(self):
        levels = [np.array([0.3]), np.array([0.5, 0.5])]
        oracle = TreeOracle(TableMarginalTree(2, levels))
        rng = substream(7, "draw")
        draws = 10_000
        mean = np.mean([oracle.marginal_sample("", rng) for _ in range(draws)])
        # 3 sigma of Ber(0.3) over 10^4 draws
        assert abs(mean - 0.3) <= 3.0 * np.sqrt(0.3 * 0.7 / draws)


class TestZeroMassConvention:
    def test_uniform_over_cylinder(self):
        # conditioning inside the dead subtree of a point mass
        oracle = TreeOracle(point_mass_tree("000"))
        assert oracle.tree.conditional_mass("1") == 0.0
        draws = 20_000
        bits = oracle.conditional_sample_batch("1", draws, substream(8, "conv"))
        means = bits.mean(axis=0)
        # 4 sigma per coordinate keeps the false-alarm rate negligible
        assert np.all(np.abs(means - 0.5) < 4.0 * np.sqrt(0.25 / draws))

    def test_sample_still_extends_prefix(self):
        oracle = TreeOracle(point_mass_tree("000"))
        x = oracle.conditional_sample("11", substream(9, "conv"))
        assert x.as_str().startswith("11")


def test_transcript_hook():
    oracle = TreeOracle(uniform_tree(2))
    records = []
    oracle.on_record = records.append
    rng = substream(10, "log")
    oracle.conditional_sample_batch("0", 2, rng)
    oracle.marginal_sample("1", rng)
    assert [r["kind"] for r in records] == ["conditional", "marginal"]
    assert records[0]["prefix"] == "0"
    assert records[0]["count"] == 2
    assert len(records[0]["result"]) == 2
    assert records[0]["budget_after"] == 2
    assert records[1]["budget_after"] == 3

import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from tnswac.exact_tests import fisher_combine_many
from tnswac.simulation import (
    SCENARIOS,
    SimulationConfig,
    or_to_prob,
    pvalue_scatter,
    run_study,
    scenario,
    simulate_count_array,
    simulate_counts,
    simulate_pvalues,
    summarize,
    truth_from_config,
)

from oracles import decisions_by_hand, fisher_exact_rational


def se(f, n):
    return math.sqrt(f * (1 - f) / n)


class TestOrToProb:
    def test_identity(self):
        assert or_to_prob(0.2, 1.0) == pytest.approx(0.2, rel=1e-15)

    def test_figure_alternative(self):
        assert or_to_prob(0.2, 1.75) == pytest.approx(0.4375 / 1.4375, rel=1e-14)
        assert or_to_prob(0.2, 1.75) == pytest.approx(0.304348, abs=1e-6)

    def test_even_odds(self):
        assert or_to_prob(0.5, 4.0) == pytest.approx(0.8, rel=1e-15)

    @pytest.mark.parametrize("base", [0.0, 1.0])
    def test_degenerate_base(self, base):
        with pytest.raises(ValueError, match="base_prob"):
            or_to_prob(base, 2.0)


class TestConfig:
    def test_scenarios(self):
        null = SCENARIOS["fig1-null"]
        assert (null.n_total, null.group_probs, null.exposure_probs) == (1250, (0.3, 0.3, 0.4), (0.2, 0.2, 0.2))
        assert (null.replicates, null.alpha) == (10_000, 0.05)
        alt = SCENARIOS["fig1-alt"]
        q_p, q_n, q_c = alt.exposure_probs
        assert q_p == pytest.approx(0.304348, abs=1e-6)
        assert q_n == pytest.approx(0.2, rel=1e-12) and q_c == 0.2
        assert truth_from_config(SCENARIOS["config-b"]) == {"i": True, "ii": False, "iii": False}
        assert truth_from_config(SCENARIOS["config-c"]) == {"i": False, "ii": True, "iii": False}
        assert truth_from_config(alt) == {"i": False, "ii": False, "iii": False}

    def test_validation(self):
        with pytest.raises(ValueError, match="sum to 1"):
            SimulationConfig(group_probs=(0.3, 0.3, 0.3))
        with pytest.raises(ValueError, match="replicates"):
            SimulationConfig(replicates=0)
        with pytest.raises(ValueError, match="exposure_probs"):
            SimulationConfig(exposure_probs=(0.2, 1.2, 0.2))

    def test_dict_round_trip(self):
        cfg = scenario("fig1-alt", seed=9)
        assert SimulationConfig.from_dict(cfg.to_dict()) == cfg
        with pytest.raises(ValueError, match="bogus"):
            SimulationConfig.from_dict({"bogus": 1})


class TestSimulateCounts:
    def test_no_exposure(self):
        c = simulate_counts(SimulationConfig(exposure_probs=(0, 0, 0), seed=3), 17)
        assert (c.n_P1, c.n_N1, c.n_C1) == (0, 0, 0)
        assert c.total == 1250

    def test_deterministic(self):
        cfg = SimulationConfig(seed=123)
        assert simulate_counts(cfg, 42) == simulate_counts(cfg, 42)
        assert simulate_counts(cfg, 42) != simulate_counts(cfg, 43)
        assert simulate_counts(cfg, 42) != simulate_counts(SimulationConfig(seed=124), 42)

    def test_null_design_frequencies(self):
        cfg = scenario("fig1-null", seed=2024)
        counts = simulate_count_array(cfg, 0, cfg.replicates)
        n = cfg.n_total * cfg.replicates
        sizes = counts[:, 0::2] + counts[:, 1::2]
        for g, share in enumerate((0.3, 0.3, 0.4)):
            f = sizes[:, g].sum() / n
            assert abs(f - share) <= 3 * se(share, n)
            exposed = counts[:, 2 * g].sum() / sizes[:, g].sum()
            assert abs(exposed - 0.2) <= 3 * se(0.2, sizes[:, g].sum())

    @settings(max_examples=200, deadline=None)
    @given(st.integers(0, 2**63), st.integers(0, 300), st.integers(0, 60))
    def test_blocks_agree_with_single_draws(self, seed, start, length):
        cfg = SimulationConfig(n_total=200, seed=seed)
        block = simulate_count_array(cfg, start, start + length)
        assert block.shape == (length, 6)
        for k in range(0, length, 17):
            assert tuple(block[k]) == tuple(simulate_counts(cfg, start + k).to_dict().values())

    def test_workers_and_chunks_do_not_matter(self):
        cfg = scenario("fig1-null", seed=77, replicates=900)
        ref = simulate_pvalues(cfg)
        assert np.array_equal(ref, simulate_pvalues(cfg, chunk_size=7))
        assert np.array_equal(ref, simulate_pvalues(cfg, chunk_size=250, workers=2))


class TestScatter:
    def test_empty(self):
        assert list(pvalue_scatter(scenario("fig1-null", seed=1), 0)) == []

    def test_reproducible(self):
        cfg = scenario("fig1-null", seed=5)
        assert list(pvalue_scatter(cfg, 50)) == list(pvalue_scatter(cfg, 50))
        rows = list(pvalue_scatter(cfg, 1200))
        assert [r[0] for r in rows] == list(range(1200))

    def test_null_validity_and_oracle_subsample(self):
        cfg = scenario("fig1-null", seed=8)
        rows = np.array([r[1:] for r in pvalue_scatter(cfg, 10_000)])
        n = len(rows)
        for t in (0.01, 0.05, 0.1, 0.25, 0.5):
            assert np.all((rows <= t).mean(axis=0) <= t + 3 * se(t, n))
        for r in range(0, 10_000, 1000):
            c = simulate_counts(cfg, r)
            exact = (
                fisher_exact_rational(c.n_P1, c.n_P0, c.n_N1, c.n_N0),
                fisher_exact_rational(c.n_P1, c.n_P0, c.n_C1, c.n_C0),
                fisher_exact_rational(c.n_PN1, c.n_PN0, c.n_C1, c.n_C0),
            )
            np.testing.assert_allclose(rows[r], [float(x) for x in exact], atol=1e-12)


class TestRunStudy:
    def test_inconsistent_truth(self):
        with pytest.raises(ValueError, match="inconsistent"):
            run_study(scenario("fig1-null", replicates=5), {"i": True, "ii": False, "iii": True})

    def test_null_standard_against_independent_rule(self):
        cfg = scenario("fig1-null", seed=1, replicates=3000)
        summary = run_study(cfg)
        pvals = simulate_pvalues(cfg)
        any_reject = [any(decisions_by_hand(a, b, c, 1.0, 0.05, "standard")) for a, b, c in pvals]
        fwer = summary.procedures["standard"]["fwer"]
        assert fwer["rate"] == pytest.approx(np.mean(any_reject), abs=1e-15)
        assert fwer["rate"] <= 0.05 + 3 * se(0.05, cfg.replicates)
        assert fwer["mcse"] == pytest.approx(se(fwer["rate"], cfg.replicates))

    def test_null_dependence_pattern(self):
        summary = run_study(scenario("fig1-null", seed=3, replicates=5000))
        assert summary.correlation["i,ii"] > 0.1
        assert abs(summary.correlation["i,iii"]) < 0.05

    def test_alternative_rates_are_interior(self):
        summary = run_study(scenario("fig1-alt", seed=4, replicates=2000))
        for metrics in summary.procedures.values():
            for h in ("i", "ii"):
                assert 0 < metrics[f"{h}:reject"]["rate"] < 1
        assert summary.procedures["standard"]["fwer"]["rate"] == 0.0

    def test_summary_is_pure_function_of_config(self):
        cfg = scenario("config-b", seed=10, replicates=1500)
        a, b = run_study(cfg), run_study(cfg, chunk_size=333)
        assert a.to_dict() == b.to_dict()
        assert a.to_tsv() == b.to_tsv()
        assert a.to_tsv().splitlines()[0] == "procedure\thypothesis\tmetric\tvalue\tmcse"

    def test_r_code_step3_defect_breaks_fwer(self):
        # A known defective step 3, r_i = 1*(r_i < lambda), compares the still-zero
        # flag with lambda and so rejects H0(i) whenever the union is rejected.
        # In configuration (b) H0(i) is true and the union is usually rejected,
        # so that rule would blow the FWER; the implemented rule must not.
        cfg = scenario("config-b", seed=6, replicates=2000)
        p = simulate_pvalues(cfg)
        lam = np.where(p[:, 1] <= 0.025, 0.05, 0.025)
        union = fisher_combine_many(p[:, 0], p[:, 2]) <= lam
        assert union.mean() > 0.5
        summary = summarize(cfg, p, truth_from_config(cfg))
        for key in ("method2:strict_lambda", "method2:example_consistent"):
            assert summary.procedures[key]["fwer"]["rate"] <= 0.05 + 3 * se(0.05, len(p))

import itertools
from fractions import Fraction

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from tnswac.confidence import BudgetError, Membership, confidence_set, confset_membership, lattice_size
from tnswac.procedures import decide
from tnswac.simulation import SimulationConfig, simulate_counts
from tnswac.study_model import NetEffectCounts, PValueSet, StudyCounts, comparison_tables, compute_pvalues

from oracles import fisher_exact_rational

small = st.integers(0, 7)
small_counts = st.builds(StudyCounts, small, small, small, small, small, small)
PROCS = [("method1", "example_consistent"), ("method2", "strict_lambda"), ("method2", "example_consistent")]


def lattice(c):
    return itertools.product(
        range(-c.n_PN1, c.n_PN1 + 1), range(-c.n_PC1, c.n_PC1 + 1), range(-c.n_NC1, c.n_NC1 + 1)
    )


def member_set(cs):
    return set(map(tuple, cs.members.tolist()))


def imbalanced_counts():
    # a study at odds ratio 5 whose three exact tests all reject
    cfg = SimulationConfig.from_odds_ratios(0.2, or_pc=5.0, or_pn=5.0, n_total=2000, seed=5)
    return simulate_counts(cfg, 0)


class TestMembership:
    def test_balanced_origin_is_member(self):
        c = StudyCounts(20, 80, 20, 80, 20, 80)
        assert confset_membership(c, NetEffectCounts(0, 0, 0), 0.05) == Membership.MEMBER

    def test_infeasible(self):
        c = StudyCounts(2, 5, 1, 5, 1, 5)
        assert confset_membership(c, NetEffectCounts(2, 1, 0)) == Membership.INFEASIBLE

    def test_imbalanced_origin_is_excluded(self):
        c = imbalanced_counts()
        for a, b, cc, d in (
            (c.n_P1, c.n_P0, c.n_N1, c.n_N0),
            (c.n_P1, c.n_P0, c.n_C1, c.n_C0),
            (c.n_PN1, c.n_PN0, c.n_C1, c.n_C0),
        ):
            assert fisher_exact_rational(a, b, cc, d) < 0.001
        for procedure, variant in PROCS:
            assert confset_membership(c, NetEffectCounts(), 0.05, procedure, variant) == Membership.NON_MEMBER


class TestConfidenceSet:
    def test_balanced_set_straddles_origin(self):
        c = StudyCounts(20, 80, 20, 80, 20, 80)
        cs = confidence_set(c, 0.05, "method2", stride=1, emit_members=True)
        assert cs.contains(NetEffectCounts())
        for axis in ("A_PN", "A_PC", "A_NC"):
            lo, hi = cs.projections[axis]
            assert lo < 0 < hi
        # the neighbourhood of the origin is kept too
        for d in itertools.product((-1, 0, 1), repeat=3):
            assert confset_membership(c, NetEffectCounts(*d)) == Membership.MEMBER
            assert cs.contains(NetEffectCounts(*d))

    def test_no_exposure_keeps_all_feasible_points(self):
        c = StudyCounts(0, 30, 0, 20, 0, 40)
        cs = confidence_set(c, 0.05, "method2", emit_members=True)
        assert cs.n_members == cs.feasible_evaluated == 1
        assert cs.projections == {"A_PN": (0, 0), "A_PC": (0, 0), "A_NC": (0, 0)}

    def test_tiny_alpha_keeps_all_feasible_points(self):
        c = StudyCounts(9, 20, 3, 25, 4, 30)
        cs = confidence_set(c, 1e-9, "method2", emit_members=True)
        feasible = {t for t in lattice(c) if confset_membership(c, NetEffectCounts(*t), 1e-9) != Membership.INFEASIBLE}
        assert member_set(cs) == feasible
        assert cs.feasible_evaluated == len(feasible)
        assert cs.feasible_evaluated + cs.infeasible_skipped == lattice_size(c, 1)

    @pytest.mark.parametrize("procedure,variant", PROCS + [("standard", "example_consistent")])
    @pytest.mark.parametrize("rule", ["product", "any"])
    def test_lattice_scan_matches_pointwise(self, procedure, variant, rule):
        c = StudyCounts(9, 20, 3, 25, 4, 30)
        cs = confidence_set(c, 0.05, procedure, variant, emit_members=True, rule=rule)
        expected = {
            t for t in lattice(c)
            if confset_membership(c, NetEffectCounts(*t), 0.05, procedure, variant, rule) == Membership.MEMBER
        }
        assert member_set(cs) == expected
        arr = np.array(sorted(expected))
        assert cs.projections == {k: (int(arr[:, j].min()), int(arr[:, j].max())) for j, k in enumerate(("A_PN", "A_PC", "A_NC"))}

    def test_stride_thins_around_origin(self):
        c = StudyCounts(9, 20, 3, 25, 4, 30)
        full = member_set(confidence_set(c, 0.05, emit_members=True))
        thin = confidence_set(c, 0.05, stride=3, emit_members=True)
        assert np.all(thin.members % 3 == 0)
        assert member_set(thin) == {t for t in full if all(x % 3 == 0 for x in t)}

    def test_workers_do_not_change_result(self):
        c = StudyCounts(14, 40, 9, 35, 11, 60)
        one = confidence_set(c, 0.05, emit_members=True)
        many = confidence_set(c, 0.05, emit_members=True, workers=3)
        assert np.array_equal(one.members, many.members)
        assert one.to_dict() == many.to_dict()

    def test_budget(self):
        c = StudyCounts(50, 10, 50, 10, 50, 10)
        with pytest.raises(BudgetError, match="stride >= 2"):
            confidence_set(c, budget=lattice_size(c, 1) - 1)
        assert confidence_set(c, stride=2, budget=lattice_size(c, 1) - 1).stride == 2

    def test_bad_stride(self):
        with pytest.raises(ValueError, match="stride"):
            confidence_set(StudyCounts(1, 1, 1, 1, 1, 1), stride=0)

    def test_member_cap_keeps_exact_projections(self):
        c = StudyCounts(9, 20, 3, 25, 4, 30)
        full = confidence_set(c, emit_members=True)
        capped = confidence_set(c, emit_members=True, max_members=10)
        assert capped.members_truncated and len(capped.members) == 10
        assert capped.projections == full.projections
        with pytest.raises(ValueError):
            capped.contains(NetEffectCounts())

    def test_output_dict_and_csv(self, tmp_path):
        c = StudyCounts(10, 30, 6, 30, 0, 40)
        cs = confidence_set(c, 0.05, emit_members=True)
        d = cs.to_dict(members_file="m.csv")
        assert d["projections"]["theta_PN"] == [x / 16 for x in d["projections"]["A_PN"]]
        assert d["projections"]["theta_NC_exact"][1] == str(Fraction(d["projections"]["A_NC"][1], 6))
        assert d["members_file"] == "m.csv" and d["counts_evaluated"] == cs.feasible_evaluated
        path = tmp_path / "m.csv"
        cs.write_members_csv(path)
        lines = path.read_text().splitlines()
        assert lines[0] == "A_PN,A_PC,A_NC" and len(lines) == cs.n_members + 1

    def test_zero_denominator_theta_is_null(self):
        cs = confidence_set(StudyCounts(0, 5, 0, 5, 0, 5))
        assert cs.to_dict()["projections"]["theta_PN"] is None


@settings(max_examples=200, deadline=None)
@given(small_counts, st.sampled_from([0.01, 0.05, 0.1]), st.sampled_from([0.05, 0.2, 0.4]), st.sampled_from(PROCS))
def test_alpha_nesting(c, a1, a2, proc):
    lo, hi = sorted((a1, a2))
    big = member_set(confidence_set(c, lo, *proc, emit_members=True))
    small_set = member_set(confidence_set(c, hi, *proc, emit_members=True))
    assert small_set <= big


@settings(max_examples=200, deadline=None)
@given(small_counts, st.sampled_from(PROCS))
def test_product_rule_contains_any_rule(c, proc):
    product = member_set(confidence_set(c, 0.05, *proc, emit_members=True))
    anyrule = member_set(confidence_set(c, 0.05, *proc, emit_members=True, rule="any"))
    assert anyrule <= product


def test_coverage_small_run():
    cfg = SimulationConfig(n_total=150, seed=21, replicates=100)
    hits = 0
    for r in range(cfg.replicates):
        c = simulate_counts(cfg, r)
        cs = confidence_set(c, 0.05, "method2", emit_members=True)
        inside = cs.contains(NetEffectCounts())
        assert inside == (confset_membership(c, NetEffectCounts()) == Membership.MEMBER)
        hits += inside
    assert hits >= 90


def test_decision_at_origin_matches_procedure():
    c = imbalanced_counts()
    p = compute_pvalues(comparison_tables(c))
    assert isinstance(p, PValueSet)
    assert decide(p, 0.05, "method2").rejections == (True, True, True)

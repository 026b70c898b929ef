import itertools
import math

import numpy as np
import pytest

from oofa.candidates import Constraint, build, full_candidates
from oofa.criteria import (
    chi2_summary,
    chi2_tuple,
    d_efficiency,
    evaluate,
    loo_summary,
    mean_vif,
    model_matrix,
    moments,
    rank_designs,
    report_value,
    rmv_ord,
    stage_counts,
)
from oofa.errors import ValidationError
from oofa.perm import Design, design_from_rows, full_design


def test_full_design_tuples_are_exactly_zero():
    d = full_design(4)
    cands = full_candidates(4)
    for cols in [(0, 1), (0, 5), (2, 4)]:
        assert chi2_tuple(d, cands, cols) == 0.0
    ave, mx, fo = chi2_summary(d, cands, 2)
    assert (ave, mx, fo) == (0.0, 0.0, 1.0)


def test_oa_design_pairs_zero(load_fixture):
    d = load_fixture("oa_12_4_2_design1")
    cands = full_candidates(4)
    for cols in itertools.combinations(range(6), 2):
        assert chi2_tuple(d, cands, cols) == 0.0


def test_chi2_outside_candidate_set_errors():
    cands = build(4, [Constraint("precedes", (0, 1))])
    bad = Design([[1, 0, 2, 3]])
    with pytest.raises(ValidationError):
        chi2_tuple(bad, cands, (0, 1))


def test_chi2_invariant_under_run_permutation():
    rng = np.random.default_rng(3)
    d = design_from_rows(5, list(rng.choice(120, size=14, replace=False) + 1))
    shuffled = Design(d.runs[rng.permutation(14)], m=5)
    cands = full_candidates(5)
    assert chi2_summary(d, cands, 2) == chi2_summary(shuffled, cands, 2)
    assert chi2_summary(d, cands, 3) == chi2_summary(shuffled, cands, 3)


def test_loo_of_full_design_is_zero():
    d = full_design(5)
    ave, fo = loo_summary(d, full_candidates(5), 2)
    assert ave == 0.0 and fo == 1.0


def test_deff_full_is_one_and_subdesigns_below():
    cands = full_candidates(4)
    assert d_efficiency(full_design(4), cands) == pytest.approx(1.0, abs=1e-12)
    rng = np.random.default_rng(1)
    for _ in range(5):
        rows = list(rng.choice(24, size=12, replace=False) + 1)
        assert d_efficiency(design_from_rows(4, rows), cands) <= 1.0 + 1e-9


def test_deff_singular_is_zero():
    d = design_from_rows(5, [1, 2, 3, 4])  # far below model rank
    assert d_efficiency(d, full_candidates(5)) == 0.0


@pytest.mark.parametrize("m", [3, 4, 5, 6])
def test_full_design_vif_closed_form(m):
    assert mean_vif(full_design(m)) == pytest.approx(3 * (m - 1) / (m + 1), abs=1e-9)


def test_vif_none_when_singular():
    assert mean_vif(design_from_rows(5, [1, 2])) is None


def test_full_design_effect_and_prediction_variance():
    # standardized effect variance 4*VIF; leverages all equal p/N
    for m in (3, 4, 5):
        d = full_design(m)
        X = model_matrix(d.pwo_matrix())
        n, p = X.shape
        xtx_inv = np.linalg.inv(X.T @ X)
        vif = mean_vif(d)
        effect_var = n * np.diag(xtx_inv)[1:]
        assert np.allclose(effect_var, 4 * vif, atol=1e-9)
        lev = np.einsum("ij,jk,ik->i", X, xtx_inv, X)
        assert np.allclose(lev, p / n, atol=1e-12)


def test_moments_full_design_anchors():
    sims4 = moments(full_design(4).pwo_matrix(), 2)
    assert sims4[0] == pytest.approx(3.0, abs=1e-12)
    assert sims4[1] == pytest.approx(3.3417, abs=5e-4)
    sims5 = moments(full_design(5).pwo_matrix(), 2)
    assert sims5[0] == pytest.approx(5.0, abs=1e-12)
    assert sims5[1] == pytest.approx(5.4006, abs=5e-4)


def test_moments_monotone_in_s():
    rng = np.random.default_rng(7)
    for _ in range(20):
        n = int(rng.integers(4, 16))
        rows = list(rng.choice(120, size=n, replace=False) + 1)
        sims = moments(design_from_rows(5, rows).pwo_matrix(), 5)
        assert all(a <= b + 1e-12 for a, b in zip(sims, sims[1:]))


def test_moments_validation():
    with pytest.raises(ValidationError):
        moments(full_design(3).pwo_matrix(), 0)


def test_rmv_zero_on_full_designs():
    for m in (3, 4, 5):
        assert rmv_ord(full_design(m)) == 0.0


def test_stage_counts_match_direct_tally(load_fixture):
    d = load_fixture("oa_24_5_2_id33")
    f = stage_counts(d)
    assert f[0].tolist() == [6, 2, 6, 6, 4]
    assert f[1].tolist() == [4, 8, 0, 8, 4]
    assert np.all(f.sum(axis=1) == 24)


def test_rmv_invariant_under_isomorphism_ops():
    rng = np.random.default_rng(11)
    d = design_from_rows(5, list(rng.choice(120, size=12, replace=False) + 1))
    base = rmv_ord(d)
    sigma = rng.permutation(5)
    relabeled = Design(sigma[d.runs], m=5)
    reversed_ = Design(d.runs[:, ::-1], m=5)
    shuffled = Design(d.runs[rng.permutation(12)], m=5)
    for other in (relabeled, reversed_, shuffled):
        assert rmv_ord(other) == pytest.approx(base, abs=1e-12)


def test_evaluate_equivalences(load_fixture):
    rep = evaluate(load_fixture("oa_12_5_2"))
    assert rep.is_oofa_oa_2 and rep.fo_2 == 1.0 and rep.chi2_ave_2 == 0.0
    assert not rep.is_oofa_oa_3
    assert rep.chi2_max_2 >= rep.chi2_ave_2
    assert rep.chi2_max_3 >= rep.chi2_ave_3
    assert rep.d_eff == pytest.approx(1.0, abs=1e-9)


def test_theorem_forward_direction(load_fixture):
    # exact strength-2 balance forces unit determinant efficiency
    for name in ("oa_12_4_2_design1", "oa_12_4_2_design2", "oa_24_5_2_id33", "oa_24_6_2_id6"):
        rep = evaluate(load_fixture(name))
        assert rep.chi2_ave_2 == 0.0
        assert rep.d_eff == pytest.approx(1.0, abs=1e-9)


def test_rank_single_design():
    rep = {"fo_3": 0.5, "sim": [1.0, 2.0, 3.0]}
    table = rank_designs([("only", rep)], [("fo_3", "max")])
    assert table.order == ["only"]
    assert table.average == [1.0]


def test_rank_ties_get_lowest_rank():
    a = {"x": 1.0}
    b = {"x": 1.0}
    c = {"x": 2.0}
    table = rank_designs([("a", a), ("b", b), ("c", c)], [("x", "min")])
    assert table.ranks["x"] == [1, 1, 3]


def test_rank_identical_reports_all_rank_one():
    rep = {"fo_3": 0.8, "chi2_ave_3": 0.5}
    table = rank_designs(
        [("a", dict(rep)), ("b", dict(rep))],
        [("fo_3", "max"), ("chi2_ave_3", "min")],
    )
    assert table.ranks["fo_3"] == [1, 1]
    assert table.average == [1.0, 1.0]
    assert table.order == ["a", "b"]  # id tie-break


def test_rank_validation():
    with pytest.raises(ValidationError):
        rank_designs([], [("x", "min")])
    with pytest.raises(ValidationError):
        rank_designs([("a", {"x": 1})], [("x", "down")])


def test_report_value_sim_expansion():
    rep = {"sim": [1.0, 2.0, 3.5]}
    assert report_value(rep, "sim_3") == 3.5


def test_restricted_candidate_evaluation():
    cands = build(4, [Constraint("precedes", (0, 1))])
    # the 12 admissible runs form the "full" design of this pool
    d = Design(cands.orders, m=4)
    ave, mx, fo = chi2_summary(d, cands, 2)
    assert (ave, mx, fo) == (0.0, 0.0, 1.0)
    assert d_efficiency(d, cands) == pytest.approx(1.0, abs=1e-12)

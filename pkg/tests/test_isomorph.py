import numpy as np
import pytest

from oofa.errors import ValidationError
from oofa.isomorph import canonical_form, d_isomorphic, wt_isomorphic, wt_signature
from oofa.perm import Design, design_from_rows


def _random_design(rng, m=4, n=10):
    import math

    rows = list(rng.choice(math.factorial(m), size=n, replace=False) + 1)
    return design_from_rows(m, rows)


def test_table2_designs_not_wt_isomorphic(load_fixture):
    d1 = load_fixture("oa_12_4_2_design1")
    d2 = load_fixture("oa_12_4_2_design2")
    assert not wt_isomorphic(d1, d2)
    assert not d_isomorphic(d1, d2)
    # strength 2 alone cannot separate them: pair types agree
    assert wt_signature(d1).pair_types == wt_signature(d2).pair_types
    assert wt_signature(d1).triple_types != wt_signature(d2).triple_types


def test_self_isomorphic(load_fixture):
    d = load_fixture("oa_12_5_2")
    assert wt_isomorphic(d, d)
    assert d_isomorphic(d, d)


def test_size_mismatch_errors():
    a = design_from_rows(4, [1, 2, 3])
    b = design_from_rows(4, [1, 2])
    with pytest.raises(ValidationError):
        wt_isomorphic(a, b)
    with pytest.raises(ValidationError):
        d_isomorphic(a, design_from_rows(5, [1, 2, 3]))


def test_isomorphism_operations_preserve_both_relations():
    rng = np.random.default_rng(23)
    for _ in range(20):
        d = _random_design(rng, m=4, n=8)
        sigma = rng.permutation(4)
        transformed = Design(sigma[d.runs], m=4)
        if rng.random() < 0.5:
            transformed = Design(np.asarray(transformed.runs)[:, ::-1], m=4)
        transformed = Design(transformed.runs[rng.permutation(8)], m=4)
        assert d_isomorphic(d, transformed)
        assert wt_isomorphic(d, transformed)


def test_reversal_flips_pwo_matrix():
    d = design_from_rows(4, [5, 9, 14])
    rev = Design(d.runs[:, ::-1], m=4)
    assert np.array_equal(rev.pwo_matrix(), 1 - d.pwo_matrix())
    assert d_isomorphic(d, rev)


def test_canonical_form_characterizes_classes():
    rng = np.random.default_rng(4)
    seen = {}
    for _ in range(12):
        d = _random_design(rng, m=4, n=6)
        cf = canonical_form(d)
        for other_cf, other in seen.items():
            assert d_isomorphic(d, other) == (cf == other_cf)
        seen[cf] = d


def test_canonical_form_invariant():
    rng = np.random.default_rng(9)
    d = _random_design(rng, m=5, n=8)
    sigma = rng.permutation(5)
    t = Design(sigma[d.runs][:, ::-1], m=5)
    assert canonical_form(d) == canonical_form(t)


def test_wt_signature_includes_process_columns(load_fixture):
    d = load_fixture("proc_aug_24_5_2_2x4")
    sig = wt_signature(d)
    n_pairs = sum(n for _, n in sig.pair_types)
    assert n_pairs == 14 * 13 // 2


def test_guard_on_large_m():
    d = Design([list(range(8)), list(range(8))[::-1]])
    with pytest.raises(ValidationError):
        canonical_form(d)

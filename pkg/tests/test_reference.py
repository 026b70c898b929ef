import itertools
import math

import numpy as np
import pytest

from oofa.candidates import ProcessFactorSpec, build, full_candidates
from oofa.errors import ValidationError
from oofa.perm import full_design
from oofa.reference import (
    admissible_min_N,
    classify_pair_structure,
    classify_pairs,
    classify_tuples,
    reference_counts,
)


def test_synergistic_pair_pattern_m4():
    cands = full_candidates(4)
    # F01 with F02 share "component 0 first"
    t = reference_counts(cands, (0, 1))
    assert sorted(t.counts) == [4, 4, 8, 8]
    assert t.total == 24


def test_independent_pair_uniform_m4():
    # brute force over the full expansion: F01 vs F23 is flat
    cands = full_candidates(4)
    t = reference_counts(cands, (0, 5))
    assert list(t.counts) == [6, 6, 6, 6]
    # independent oracle: count directly from permutations
    runs = full_design(4).runs
    pos = np.argsort(runs, axis=1)
    n11 = int(np.sum((pos[:, 0] < pos[:, 1]) & (pos[:, 2] < pos[:, 3])))
    assert n11 == 6


def test_pair_structure_counts():
    assert classify_pair_structure(4) == {
        "synergistic": 8,
        "antagonistic": 4,
        "independent": 3,
    }
    assert classify_pair_structure(3) == {
        "synergistic": 2,
        "antagonistic": 1,
        "independent": 0,
    }


def test_classify_pairs_wt_merging():
    types = classify_pairs(4)
    assert sorted(types.values()) == [3, 12]
    flat = {tt.signature: n for tt, n in types.items()}
    assert flat[(4, 4, 8, 8)] == 12  # synergistic and antagonistic merge
    assert flat[(6, 6, 6, 6)] == 3
    # m=3: one type only
    assert list(classify_pairs(3).values()) == [3]


def test_m6_triples_partition_into_five_types():
    types = classify_tuples(full_candidates(6), 3)
    assert len(types) == 5
    assert sorted(types.values()) == [15, 20, 60, 180, 180]


@pytest.mark.parametrize("m", [3, 4, 5, 6])
def test_full_pair_tables_from_three_patterns(m):
    # every pair table of the full pool is {M/3,M/6,M/6,M/3} or flat M/4
    cands = full_candidates(m)
    M = math.factorial(m)
    want = {(M // 6, M // 6, M // 3, M // 3)}
    if m >= 4:
        want.add((M // 4,) * 4)
    seen = {reference_counts(cands, c).table_type().signature
            for c in itertools.combinations(range(cands.n_columns), 2)}
    assert seen == want


@pytest.mark.parametrize("m,t,expected", [(4, 2, 12), (5, 2, 12), (4, 3, 24), (5, 3, 24)])
def test_admissible_min_n(m, t, expected):
    assert admissible_min_N(full_candidates(m), t) == expected


@pytest.mark.parametrize("m", [3, 4, 5, 6])
def test_admissible_divides_factorial(m):
    for t in (2, 3):
        assert math.factorial(m) % admissible_min_N(full_candidates(m), t) == 0


def test_admissible_strength_validation():
    with pytest.raises(ValidationError):
        admissible_min_N(full_candidates(4), 4)


def test_reference_counts_validation():
    cands = full_candidates(4)
    with pytest.raises(ValidationError):
        reference_counts(cands, (0, 0))
    with pytest.raises(ValidationError):
        reference_counts(cands, (0, 99))


def test_reference_counts_cached():
    cands = build(4)
    a = reference_counts(cands, (0, 1))
    b = reference_counts(cands, (0, 1))
    assert a is b


def test_crossed_reference_keeps_structural_zeros():
    proc = ProcessFactorSpec(factors=(("A", 2),))
    cands = build(3, process=proc)
    # triple (F01, F02, F12) has two impossible cells; crossing keeps them zero
    t = reference_counts(cands, (0, 1, 2))
    assert t.total == 12
    assert int(np.sum(t.counts == 0)) == 2

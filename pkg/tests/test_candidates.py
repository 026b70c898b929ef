import itertools
import math

import numpy as np
import pytest

from oofa.candidates import (
    CandidateSet,
    Constraint,
    ProcessFactorSpec,
    build,
    full_candidates,
    validate_against,
)
from oofa.errors import UnsatisfiableConstraintError, ValidationError
from oofa.perm import Design, design_from_rows, full_design
from oofa.reference import reference_counts


def test_unconstrained_sizes():
    for m in (2, 3, 4, 5):
        assert build(m).n_rows == math.factorial(m)


def test_precedes_halves_pool():
    assert build(4, [Constraint("precedes", (0, 1))]).n_rows == 12


@pytest.mark.parametrize("m", [4, 5, 6])
def test_independent_precedes_constraints_halve(m):
    # constraints on disjoint component pairs each halve the pool
    cons = []
    expect = math.factorial(m)
    for a in range(0, m - 1, 2):
        cons.append(Constraint("precedes", (a, a + 1)))
        expect //= 2
        assert build(m, cons).n_rows == expect


def test_chain_constraint():
    cs = build(4, [Constraint("chain", (0, 1, 2))])
    assert cs.n_rows == 24 // 6
    pos = np.argsort(cs.orders, axis=1)
    assert np.all(pos[:, 0] < pos[:, 1]) and np.all(pos[:, 1] < pos[:, 2])


def test_unsatisfiable_constraints():
    with pytest.raises(UnsatisfiableConstraintError):
        build(3, [Constraint("precedes", (0, 1)), Constraint("precedes", (1, 0))])


def test_base_with_process_grid(load_fixture):
    base = load_fixture("oa_24_5_2_id65")
    proc = ProcessFactorSpec(factors=(("X1", 2), ("X2", 2), ("X3", 2), ("X4", 2)))
    cs = build(5, process=proc, base=base)
    assert cs.n_rows == 24 * 16 == 384
    assert cs.reference.n_rows == 120 * 16 == 1920
    half = ProcessFactorSpec(
        factors=proc.factors,
        fraction=tuple((a, b, c, (a + b + c) % 2) for a in (0, 1) for b in (0, 1) for c in (0, 1)),
    )
    cs_half = build(5, process=half, base=base)
    assert cs_half.n_rows == 24 * 8 == 192
    assert cs_half.reference.n_rows == 120 * 8


def test_base_must_satisfy_constraints():
    base = design_from_rows(4, [7, 8])  # runs starting with component 1
    with pytest.raises(ValidationError):
        build(4, [Constraint("precedes", (0, 1))], base=base)


def test_base_duplicate_rows_rejected():
    base = Design([[0, 1, 2, 3], [0, 1, 2, 3]])
    with pytest.raises(ValidationError):
        build(4, base=base)


def test_validate_against_membership():
    cs = build(4, [Constraint("precedes", (0, 1))])
    ok = Design([[0, 1, 2, 3]])
    bad = Design([[1, 0, 2, 3]])
    assert validate_against(ok, cs)
    assert not validate_against(bad, cs)


def test_validate_against_shape_mismatch():
    with pytest.raises(ValidationError):
        validate_against(Design([[0, 1, 2]]), full_candidates(4))


def test_constrained_reference_differs_exactly_on_constrained_tuples():
    from oofa.perm import pwo_columns

    free = full_candidates(5)
    constrained = build(5, [Constraint("precedes", (0, 1))])
    cols5 = pwo_columns(5)
    for cols in itertools.combinations(range(free.n_columns), 2):
        tf = reference_counts(free, cols)
        tc = reference_counts(constrained, cols)
        same = np.allclose(tf.counts / tf.total, tc.counts / tc.total)
        touches = bool(({0, 1}) & (set(cols5[cols[0]]) | set(cols5[cols[1]])))
        assert same == (not touches), cols


def test_process_crossing_factorizes():
    # crossing with a full independent grid multiplies reference counts evenly
    proc = ProcessFactorSpec(factors=(("A", 2), ("B", 2)))
    crossed = build(4, process=proc)
    plain = full_candidates(4)
    for cols in itertools.combinations(range(plain.n_columns), 2):
        tp = reference_counts(plain, cols)
        tc = reference_counts(crossed, cols)
        assert np.array_equal(tc.counts, tp.counts * 4)
    # a PWO x process pair splits the PWO margin evenly over levels
    t = reference_counts(crossed, (0, crossed.n_columns - 1))
    assert tuple(t.counts) == (24, 24, 24, 24)


def test_leave_one_out_projection_of_constraints():
    cs = build(4, [Constraint("precedes", (0, 1)), Constraint("precedes", (2, 3))])
    sub = cs.leave_one_out(0)  # precedes(0,1) vanishes; precedes(2,3) -> (1,2)
    assert sub.m == 3
    assert sub.n_rows == 3
    pos = np.argsort(sub.orders, axis=1)
    assert np.all(pos[:, 1] < pos[:, 2])


def test_leave_one_out_keeps_process():
    proc = ProcessFactorSpec(factors=(("A", 2),))
    cs = build(4, process=proc)
    sub = cs.leave_one_out(2)
    assert sub.process_levels == (2,)
    assert sub.n_rows == 6 * 2


def test_constraint_parsing():
    assert Constraint.parse(["precedes", 0, 1]).pairs() == [(0, 1)]
    assert Constraint.parse(["chain", 0, 1, 2]).pairs() == [(0, 1), (1, 2)]
    with pytest.raises(ValidationError):
        Constraint.parse(["before", 0, 1])
    with pytest.raises(ValidationError):
        Constraint("precedes", (0, 0))


def test_process_spec_validation():
    with pytest.raises(ValidationError):
        ProcessFactorSpec(factors=(("A", 1),))
    with pytest.raises(ValidationError):
        ProcessFactorSpec(factors=(("A", 2),), fraction=((0,), (0,)))
    with pytest.raises(ValidationError):
        ProcessFactorSpec(factors=(("A", 2),), fraction=((2,),))

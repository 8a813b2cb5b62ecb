import random
from fractions import Fraction
from math import comb

import pytest
from hypothesis import given, strategies as st

from oracles import jet_to_taylor, taylor_compose, taylor_to_derivatives
from jetgroupoid.errors import SingularLinearPart, SourceTargetMismatch
from jetgroupoid.jets import (
    EquationSystem,
    JetContext,
    compose_jets,
    count_multi_indices,
    identity_jet,
    invert_jet,
    make_jet,
    multi_indices,
    multi_indices_upto,
    prolong_system,
    random_jet,
    total_derivative,
)
from jetgroupoid.kernel import SOURCE, TARGET, Expr, base_coord, jet_var, obj_deriv
from jetgroupoid.lieform import GeometricObject, builtin_action, lie_form


@pytest.mark.parametrize("n,r", [(1, 3), (2, 0), (2, 4), (3, 3), (4, 2)])
def test_multi_index_count(n, r):
    idx = multi_indices(n, r)
    assert len(idx) == comb(n + r - 1, r) == count_multi_indices(n, r)
    assert len(set(idx)) == len(idx)
    assert all(sum(a) == r and len(a) == n for a in idx)


def test_total_derivative_examples():
    ctx = JetContext(2, 2)
    assert total_derivative(Expr.of(jet_var(1, (0, 0))), 1, ctx) == Expr.of(jet_var(1, (1, 0)))
    w = Expr.of(obj_deriv("a", (0, 0), TARGET))
    expected = Expr.of(obj_deriv("a", (1, 0), TARGET)) * Expr.of(jet_var(1, (0, 1))) + Expr.of(
        obj_deriv("a", (0, 1), TARGET)
    ) * Expr.of(jet_var(2, (0, 1)))
    assert total_derivative(w, 2, ctx) == expected
    assert total_derivative(Expr.of(base_coord(2)), 1, ctx).is_zero()
    assert total_derivative(Expr.of(obj_deriv("a", (1, 0), SOURCE)), 2, ctx) == Expr.of(
        obj_deriv("a", (1, 1), SOURCE)
    )


def _random_jet_expr(rng):
    atoms = [
        base_coord(1),
        jet_var(1, (0, 0)),
        jet_var(2, (1, 0)),
        obj_deriv("a", (0, 0), SOURCE),
        obj_deriv("a", (0, 1), TARGET),
    ]
    num = Expr.const(rng.randint(-3, 3))
    for _ in range(3):
        t = Expr.const(rng.randint(1, 4))
        for _ in range(rng.randint(1, 3)):
            t = t * Expr.of(rng.choice(atoms))
        num = num + t
    den = Expr.const(1) + Expr.of(rng.choice(atoms)) ** 2
    return num / den


@given(st.integers(0, 10**6))
def test_total_derivatives_commute(seed):
    ctx = JetContext(2, 1)
    e = _random_jet_expr(random.Random(seed))
    assert total_derivative(total_derivative(e, 1, ctx), 2, ctx) == total_derivative(
        total_derivative(e, 2, ctx), 1, ctx
    )


def _metric_system():
    a = builtin_action("metric", 2)
    return lie_form(a, GeometricObject.symbolic(2, 3))


def _top_bearing(S, order):
    tops = S.context.jets_of_order(order)
    return [e for e in S.equations if e.has_any(tops)], tops


def test_prolongation_counts_metric():
    S = _metric_system()
    P1 = prolong_system(S, 1)
    assert len(P1) == 9
    rows, tops = _top_bearing(P1, 2)
    assert len(rows) == 6 and len(tops) == 6
    P2 = prolong_system(S, 2)
    assert len(P2) == 3 * len(multi_indices_upto(2, 2))
    rows, tops = _top_bearing(P2, 3)
    assert len(rows) == 9 and len(tops) == 8


def test_prolongation_is_monotone_and_affine_in_top_jets():
    S = _metric_system()
    P1, P2 = prolong_system(S, 1), prolong_system(S, 2)
    assert all(e in P2.equations for e in P1.equations)
    for e in P2.equations:
        for u in P2.context.jets_of_order(3):
            assert not e.diff(u).has_any(P2.context.jets_of_order(3))


def test_prolonging_prolongation_is_consistent():
    S = _metric_system()
    assert prolong_system(prolong_system(S, 1), 1).equations == prolong_system(S, 2).equations


def test_prolong_empty_system():
    S = EquationSystem(JetContext(2, 1), 1, [])
    assert len(prolong_system(S, 1)) == 0


def test_identity_jet():
    e = identity_jet([Fraction(1, 2), 3], 1)
    assert e.linear_part() == [[1, 0], [0, 1]]
    assert e.target == e.source
    assert invert_jet(identity_jet([0, 0], 3)) == identity_jet([0, 0], 3)


def test_linear_composition_is_matrix_product():
    f = make_jet([0, 0], {(1, (0, 0)): 1, (2, (0, 0)): 2, (1, (1, 0)): 2, (1, (0, 1)): 1, (2, (1, 0)): 3, (2, (0, 1)): 5}, 1)
    g = make_jet([1, 2], {(1, (0, 0)): 0, (2, (0, 0)): 0, (1, (1, 0)): 1, (1, (0, 1)): -1, (2, (1, 0)): 4, (2, (0, 1)): 7}, 1)
    gf = compose_jets(g, f)
    A, B = g.linear_part(), f.linear_part()
    assert gf.linear_part() == [[sum(A[i][k] * B[k][j] for k in range(2)) for j in range(2)] for i in range(2)]


def test_linear_inverse():
    f = make_jet([0, 0], {(1, (0, 0)): 0, (2, (0, 0)): 0, (1, (1, 0)): 2, (1, (0, 1)): 1, (2, (1, 0)): 1, (2, (0, 1)): 1}, 1)
    assert invert_jet(f).linear_part() == [[1, -1], [-1, 2]]


def test_singular_linear_part():
    f = make_jet([0], {(1, (0,)): 0, (1, (1,)): 0, (1, (2,)): 1}, 2)
    with pytest.raises(SingularLinearPart):
        invert_jet(f)


def test_source_target_mismatch():
    rng = random.Random(0)
    f, g = random_jet(2, 1, rng), random_jet(2, 1, rng)
    with pytest.raises(SourceTargetMismatch):
        compose_jets(g, f)


def test_one_dimensional_series_inversion():
    # y = 2x + x^2/2 near 0: the inverse has second derivative -f''/f'^3
    f = make_jet([0], {(1, (0,)): 0, (1, (1,)): 2, (1, (2,)): 1}, 2)
    g = invert_jet(f)
    assert g[(1, (1,))] == Fraction(1, 2)
    assert g[(1, (2,))] == Fraction(-1, 8)


def test_order_two_formula_n2():
    rng = random.Random(5)
    f = random_jet(2, 2, rng)
    g = random_jet(2, 2, rng, source=f.target)
    gf = compose_jets(g, f)
    for i in (1, 2):
        for k, l in [(1, 1), (1, 2), (2, 2)]:
            kl = tuple(int(k == t) + int(l == t) for t in (1, 2))
            ek = tuple(int(k == t) for t in (1, 2))
            el = tuple(int(l == t) for t in (1, 2))
            expected = Fraction(0)
            for j in (1, 2):
                ej = tuple(int(j == t) for t in (1, 2))
                expected += g[(i, ej)] * f[(j, kl)]
                for m in (1, 2):
                    jm = tuple(int(j == t) + int(m == t) for t in (1, 2))
                    expected += g[(i, jm)] * f[(j, ek)] * f[(m, el)]
            assert gf[(i, kl)] == expected


@given(st.integers(0, 10**6), st.sampled_from([(1, 3), (2, 2), (2, 3), (3, 2)]))
def test_composition_matches_polynomial_oracle(seed, nq):
    n, q = nq
    rng = random.Random(seed)
    f = random_jet(n, q, rng)
    g = random_jet(n, q, rng, source=f.target)
    expected = taylor_to_derivatives(
        taylor_compose(jet_to_taylor(g.components, n), jet_to_taylor(f.components, n), n, q), n, q
    )
    expected = {k: v for k, v in expected.items() if sum(k[1]) > 0}
    got = compose_jets(g, f)
    assert all(got[k] == v for k, v in expected.items())


@given(st.integers(0, 10**6), st.sampled_from([(1, 3), (2, 1), (2, 2), (2, 3), (3, 2)]))
def test_associativity_identity_and_inverse(seed, nq):
    n, q = nq
    rng = random.Random(seed)
    f = random_jet(n, q, rng)
    g = random_jet(n, q, rng, source=f.target)
    h = random_jet(n, q, rng, source=g.target)
    assert compose_jets(h, compose_jets(g, f)) == compose_jets(compose_jets(h, g), f)
    assert compose_jets(identity_jet(f.target, q), f) == f
    assert compose_jets(f, identity_jet(f.source, q)) == f
    fi = invert_jet(f)
    assert compose_jets(fi, f) == identity_jet(f.source, q)
    assert compose_jets(f, fi) == identity_jet(f.target, q)

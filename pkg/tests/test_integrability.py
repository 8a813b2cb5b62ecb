import random
from fractions import Fraction

import pytest
from hypothesis import given, settings, strategies as st

from elimination_oracle import A_ATOMS, random_affine_system, same_condition_space, symbolic_naive_conditions
from oracles import naive_left_kernel
from jetgroupoid.curvature import brioschi_concrete, brioschi_symbolic
from jetgroupoid.integrability import (
    FORMALLY_INTEGRABLE,
    INCONCLUSIVE,
    AffineTopSystem,
    check_invariance,
    eliminate,
    integrability_loop,
    numeric_rank,
    reduce_modulo,
    reduction_map,
    separate,
    split_top_order,
    to_target,
)
from jetgroupoid.jets import EquationSystem, JetContext, prolong_system
from jetgroupoid.kernel import SOURCE, TARGET, Expr, base_coord, eval_at, jet_var, obj_deriv, substitute
from jetgroupoid.lieform import GeometricObject, admissible_point, builtin_action, lie_form

METRIC = builtin_action("metric", 2)
SYM = GeometricObject.symbolic(2, 3)
S1 = lie_form(METRIC, SYM)
S2 = prolong_system(S1, 1)
S3 = prolong_system(S1, 2)


@pytest.fixture(scope="module")
def order3():
    A = split_top_order(S3, 3)
    return A, eliminate(A)


@pytest.fixture(scope="module")
def metric_equation(order3):
    _, E = order3
    (C,) = E.conditions
    return separate(C, S2, METRIC, random.Random(0))


# -- splitting ----------------------------------------------------------------


def test_split_counts():
    A2 = split_top_order(S2, 2)
    assert A2.shape == (6, 6)
    assert A2.unknowns == S2.context.jets_of_order(2)


def test_split_order_three_counts(order3):
    A, _ = order3
    assert A.shape == (9, 8)


def test_split_reconstructs_source_equations(order3):
    A, _ = order3
    rows = [e for j, e in enumerate(S3.equations) if S3.level(j) == 3]
    assert A.reconstruct() == rows
    tops = S3.context.jets_of_order(3)
    assert not any(c.has_any(tops) for row in A.matrix for c in row)
    assert not any(b.has_any(tops) for b in A.rhs)


def test_split_without_top_order_atoms():
    x1, x2 = Expr.of(base_coord(1)), Expr.of(base_coord(2))
    S = EquationSystem(JetContext(2, 2), 2, [x1 - 1, x1 * x2])
    A = split_top_order(S, 2)
    assert A.unknowns == [] and A.matrix == [[], []]
    assert A.rhs == [1 - x1, -x1 * x2]


# -- elimination ----------------------------------------------------------------


def test_toy_system():
    a, b = Expr.of(obj_deriv("a", (0,), SOURCE)), Expr.of(obj_deriv("b", (0,), SOURCE))
    A = AffineTopSystem([jet_var(1, (2,))], [[Expr.const(1)], [Expr.const(1)]], [a, b])
    E = eliminate(A)
    assert E.generic_rank == 1
    assert E.conditions == [a - b] or E.conditions == [b - a]
    assert E.solved() == {jet_var(1, (2,)): a}


def test_metric_order_two_elimination():
    E = eliminate(split_top_order(S2, 2))
    assert E.generic_rank == 6 and E.conditions == []


def test_metric_order_three_elimination(order3):
    A, E = order3
    assert E.generic_rank == 8 and len(E.conditions) == 1
    rng = random.Random(4)
    ranks = [numeric_rank(A, admissible_point(METRIC, SYM, 3, rng, obj_order=2)) for _ in range(5)]
    assert ranks == [8] * 5


def test_metric_reconstruction(order3):
    A, E = order3
    sol = E.solved()
    rows = A.reconstruct()
    for p, _ in E.pivots:
        assert substitute(rows[p], sol).is_zero()


def test_fraction_free_matches_naive_elimination_on_fifty_systems():
    rng = random.Random(2024)
    for trial in range(50):
        m, nu = (4, 4) if trial % 2 else (5, 4)
        A, bs = random_affine_system(rng, m, nu)
        E = eliminate(A)
        naive = symbolic_naive_conditions(A)
        assert len(E.conditions) == len(naive) == m - E.generic_rank
        assert same_condition_space(E.conditions, naive, bs)


def test_numeric_oracle_agrees_at_a_point():
    # the naive Fraction oracle on a specialization gives the same rank
    rng = random.Random(9)
    A, _ = random_affine_system(rng, 5, 4)
    E = eliminate(A)
    pt = {a: Fraction(rng.randint(1, 50), rng.randint(1, 7)) for a in A_ATOMS}
    mat = [[eval_at(c, pt) for c in row] for row in A.matrix]
    assert len(mat) - len(naive_left_kernel(mat)) == E.generic_rank


@settings(max_examples=15)
@given(st.integers(0, 10**6))
def test_conditions_independent_of_row_order(seed):
    rng = random.Random(seed)
    A, bs = random_affine_system(rng, 5, 4)
    perm = list(range(5))
    rng.shuffle(perm)
    B = AffineTopSystem(A.unknowns, [A.matrix[i] for i in perm], [A.rhs[i] for i in perm])
    assert same_condition_space(eliminate(A).conditions, eliminate(B).conditions, bs)


def test_metric_order_three_condition_independent_of_row_order(order3):
    A, E = order3
    perm = [8, 3, 5, 0, 7, 1, 6, 2, 4]
    B = AffineTopSystem(A.unknowns, [A.matrix[i] for i in perm], [A.rhs[i] for i in perm])
    (c1,), (c2,) = E.conditions, eliminate(B).conditions
    # equal up to a nonzero factor that carries no second derivatives of the metric
    ratio = c1 / c2
    assert not ratio.is_zero()
    assert not [x for x in ratio.atoms() if x.kind == "w" and x.order >= 2]


# -- reduction and invariants ---------------------------------------------------


def test_reduce_leaves_source_only_conditions_alone():
    e = Expr.of(METRIC.source_atom(0, (1, 0))) + 1
    assert reduce_modulo(e, S1, METRIC) == e


def test_reduce_lie_form_equation_to_zero():
    for e in S2.equations:
        assert reduce_modulo(e, S2, METRIC).is_zero()


def test_reduced_metric_condition_is_curvature_difference(order3, metric_equation):
    _, E = order3
    (C,) = E.conditions
    rmap = reduction_map(S2, METRIC)
    K = brioschi_symbolic()
    ratio = rmap(C) / rmap(K - to_target(K))
    second = [x for x in ratio.atoms() if x.kind == "w" and x.order >= 2]
    assert not ratio.is_zero() and not second


def test_hand_built_condition_is_already_separated():
    w = METRIC.source_atom(0)
    cond = Expr.of(w) - Expr.of(obj_deriv(w.comp, w.index, TARGET))
    se = separate(cond, S1, METRIC, random.Random(0))
    assert se.separated and se.invariant == Expr.of(w)


def test_metric_invariant_is_multiple_of_brioschi(metric_equation):
    se = metric_equation
    assert se.separated
    ratio = se.invariant / brioschi_symbolic()
    assert ratio.is_constant() and ratio.constant_value() == -4


def test_check_invariance():
    K = brioschi_symbolic()
    assert check_invariance(K, METRIC)
    assert check_invariance(K, METRIC, symbolic=False, trials=5)
    assert not check_invariance(Expr.of(METRIC.source_atom(0)), METRIC)
    assert not check_invariance(Expr.of(METRIC.source_atom(0)), METRIC, symbolic=False)
    assert check_invariance(Expr.const(7), METRIC)


def test_volume_density_ratio_invariance():
    vol = builtin_action("volume", 2)
    u = Expr.of(vol.source_atom(0))
    assert not check_invariance(u, vol)


def _sphere_isometry_point(rng):
    """Source and target 2-jets of the round sphere joined by a symmetry 2-jet."""
    x1, x2 = Expr.of(base_coord(1)), Expr.of(base_coord(2))
    lam = 4 / (1 + x1**2 + x2**2) ** 2
    sphere = GeometricObject(2, 3, [lam, Expr.const(0), lam])
    x = [Fraction(rng.randint(-9, 9), rng.randint(1, 5)) for _ in range(2)]
    y = [Fraction(rng.randint(-9, 9), rng.randint(1, 5)) for _ in range(2)]
    at_x = {base_coord(1): x[0], base_coord(2): x[1]}
    at_y = {base_coord(1): y[0], base_coord(2): y[1]}
    pt = {}
    for atom, val in sphere.jet_values(METRIC.components, 2).items():
        pt[atom] = eval_at(val, at_x)
        pt[obj_deriv(atom.comp, atom.index, TARGET)] = eval_at(val, at_y)
    s = (1 + y[0] ** 2 + y[1] ** 2) / (1 + x[0] ** 2 + x[1] ** 2)
    c, t = rng.choice([(Fraction(3, 5), Fraction(4, 5)), (Fraction(5, 13), Fraction(12, 13))])
    lin = {(1, (1, 0)): s * c, (1, (0, 1)): -s * t, (2, (1, 0)): s * t, (2, (0, 1)): s * c}
    for (i, al), v in lin.items():
        pt[jet_var(i, al)] = v
    pt[jet_var(1, (0, 0))], pt[jet_var(2, (0, 0))] = y
    pt[base_coord(1)], pt[base_coord(2)] = x
    # the second-order jets are determined by the prolonged equations
    level2 = [substitute(e, pt) for j, e in enumerate(S2.equations) if S2.level(j) == 2]
    sol = eliminate(split_top_order(EquationSystem(S2.context, 2, level2, [(0, (1, 0))] * 6, 1), 2)).solved()
    for atom, v in sol.items():
        pt[atom] = v.constant_value()
    return pt


def test_metric_condition_vanishes_on_constant_curvature(order3):
    _, E = order3
    (C,) = E.conditions
    rng = random.Random(12)
    for _ in range(5):
        pt = _sphere_isometry_point(rng)
        assert all(eval_at(e, pt) == 0 for e in S2.equations)
        assert eval_at(C, pt) == 0


def test_metric_condition_does_not_vanish_generically(order3):
    _, E = order3
    (C,) = E.conditions
    rng = random.Random(1)
    pt = {x: Fraction(rng.randint(1, 40), rng.randint(1, 6)) for x in C.atoms()}
    assert eval_at(C, pt) != 0
    # on the groupoid itself the condition holds by invariance of the curvature
    on = admissible_point(METRIC, SYM, 3, rng, obj_order=2)
    assert eval_at(C, on) == 0


# -- the loop ----------------------------------------------------------------------


def test_loop_rejects_small_max_order():
    with pytest.raises(ValueError):
        integrability_loop(METRIC, SYM, max_order=1)


@pytest.mark.parametrize("name,n", [("volume", 2), ("volume", 3), ("twoform", 2)])
def test_integrable_without_conditions(name, n):
    a = builtin_action(name, n)
    rep = integrability_loop(a, GeometricObject.symbolic(n, a.m), max_order=3)
    assert rep.verdict == FORMALLY_INTEGRABLE
    assert not rep.vessiot.equations


@pytest.mark.parametrize("name,n", [("covector", 2), ("twoform", 3)])
def test_relative_invariant_is_reported_unseparated(name, n):
    # d(omega)(x) = det(J) d(omega)(y) has no absolute separated form
    a = builtin_action(name, n)
    rep = integrability_loop(a, GeometricObject.symbolic(n, a.m), max_order=3)
    assert rep.verdict == INCONCLUSIVE
    assert [se.status for se in rep.vessiot.equations] == ["UNSEPARATED"]


@pytest.mark.parametrize(
    "name,n,closed,other",
    [("covector", 2, ["x2", "x1"], ["0", "x1"]), ("twoform", 3, ["1", "x1", "0"], ["x3", "0", "0"])],
)
def test_unseparated_condition_on_concrete_objects(name, n, closed, other):
    a = builtin_action(name, n)
    rep = integrability_loop(a, GeometricObject.from_strings(n, closed), max_order=3)
    assert rep.verdict == FORMALLY_INTEGRABLE
    assert rep.notes and "vanishes identically" in rep.notes[-1]
    rep = integrability_loop(a, GeometricObject.from_strings(n, other), max_order=3)
    assert rep.verdict == INCONCLUSIVE


def test_concrete_volume_is_integrable():
    a = builtin_action("volume", 2)
    rep = integrability_loop(a, GeometricObject.from_strings(2, ["1+x1^2"]), max_order=3)
    assert rep.verdict == FORMALLY_INTEGRABLE


def test_resource_limit_gives_partial_report():
    rep = integrability_loop(METRIC, SYM, max_order=3, term_cap_limit=40)
    assert rep.verdict == INCONCLUSIVE
    assert rep.obstruction.startswith("resource limit")


def test_exhaustive_marks_later_orders_implied():
    a = builtin_action("volume", 2)
    rep = integrability_loop(a, GeometricObject.symbolic(2, 1), max_order=3, exhaustive=True)
    assert [it.implied for it in rep.iterations] == [False, True]
    assert all(not it.conditions for it in rep.iterations)


def test_concrete_curvature_oracle():
    assert brioschi_concrete("1", "0", "1").is_zero()
    lam = "4/(1+x1^2+x2^2)^2"
    assert brioschi_concrete(lam, "0", lam) == Expr.const(1)
    x1 = Expr.of(base_coord(1))
    assert brioschi_concrete("1", "0", "1+x1^2") == -1 / (1 + x1**2) ** 2

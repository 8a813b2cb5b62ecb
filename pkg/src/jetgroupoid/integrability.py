"""Projection by top-order elimination, Vessiot structure equations and the prolong/project loop."""

from __future__ import annotations

import contextlib
import itertools
import random
from math import gcd, lcm
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Sequence

from .errors import NonAffineTopOrder, ReductionFailed, ResourceLimit
from .jets import EquationSystem, multi_indices, prolong_system, random_jet, random_rational
from .kernel import (
    SOURCE,
    TARGET,
    Atom,
    Expr,
    coefficients,
    eval_at,
    base_coord,
    factor,
    jet_var,
    obj_deriv,
    poly_gcd,
    substitute,
    to_string,
)
from .linalg import rank as exact_rank

# --------------------------------------------------------------------------
# affine top-order systems


@dataclass
class AffineTopSystem:
    """Rows ``matrix[i] . unknowns - rhs[i]`` of the equations bearing top-order jets."""

    unknowns: list[Atom]
    matrix: list[list[Expr]]
    rhs: list[Expr]

    @property
    def shape(self):
        return len(self.matrix), len(self.unknowns)

    def reconstruct(self) -> list[Expr]:
        out = []
        for row, b in zip(self.matrix, self.rhs):
            e = -b
            for c, u in zip(row, self.unknowns):
                if not c.is_zero():
                    e = e + c * Expr.of(u)
            out.append(e)
        return out

    def numeric_matrix(self, point) -> list[list[Fraction]]:
        return [[eval_at(c, point) for c in row] for row in self.matrix]


def split_top_order(S: EquationSystem, q_top: int) -> AffineTopSystem:
    """Split the equations of prolongation level ``q_top`` into coefficient matrix and rhs.

    The unknowns are the order-``q_top`` jets that actually occur, in
    context order.
    """
    rows = [e for j, e in enumerate(S.equations) if S.level(j) == q_top]
    unknowns = [u for u in S.context.jets_of_order(q_top) if any(e.has_any([u]) for e in rows)]
    zero = {u: 0 for u in unknowns}
    matrix, rhs = [], []
    for e in rows:
        if e.denominator().has_any(unknowns):
            raise NonAffineTopOrder(f"top-order jets occur in a denominator: {e}")
        row = []
        for u in unknowns:
            c = e.diff(u)
            if c.has_any(unknowns):
                raise NonAffineTopOrder(f"equation is not affine in {u}")
            row.append(c)
        matrix.append(row)
        rhs.append(-substitute(e, zero))
    return AffineTopSystem(unknowns, matrix, rhs)


# --------------------------------------------------------------------------
# fraction-free elimination


@dataclass
class EliminationResult:
    """Echelon form of an :class:`AffineTopSystem`.

    ``rows[i]`` and ``transform[i]`` satisfy ``rows[i] = transform[i] . matrix``
    (as row vectors), so the transformed equations read
    ``rows[i] . unknowns = transform[i] . rhs``.
    """

    system: AffineTopSystem
    rows: list[list[Expr]]
    transform: list[list[Expr]]
    pivots: list[tuple[int, int]]
    conditions: list[Expr]
    condition_rows: list[int]

    @property
    def generic_rank(self) -> int:
        return len(self.pivots)

    def transformed_rhs(self, i: int) -> Expr:
        out = Expr.const(0)
        for t, b in zip(self.transform[i], self.system.rhs):
            if not t.is_zero() and not b.is_zero():
                out = out + t * b
        return out

    def solved(self) -> dict[Atom, Expr]:
        """Pivot unknowns in terms of the free unknowns, by back substitution."""
        unknowns = self.system.unknowns
        sol: dict[Atom, Expr] = {}
        for i, c in reversed(self.pivots):
            acc = self.transformed_rhs(i)
            for j, coeff in enumerate(self.rows[i]):
                if j == c or coeff.is_zero():
                    continue
                u = unknowns[j]
                acc = acc - coeff * sol.get(u, Expr.of(u))
            sol[unknowns[c]] = acc / self.rows[i][c]
        return sol


def _row_content(row):
    g = None
    for c in row:
        if c.is_zero():
            continue
        g = c if g is None else poly_gcd(g, c)
        if g.is_constant():
            return None
    return g


def eliminate(A: AffineTopSystem) -> EliminationResult:
    """Fraction-free Gaussian elimination of the top-order block.

    Rows are first made polynomial.  A pivot row ``p`` with pivot entry
    ``a_p`` updates every later row by ``r_i <- (a_p/g) r_i - (a_i/g) r_p``
    with ``g = gcd(a_p, a_i)``, after which the polynomial content of the row
    is divided out.  The same operations are applied to a transform matrix
    so that conditions are read off as ``transform . rhs`` on zero rows.

    Pivot choice: the lowest-index row with a nonzero entry, then the
    column with the fewest nonzero entries among the unprocessed rows,
    ties broken by unknown order.
    """
    m, nu = A.shape
    rows, transform = [], []
    for i, row in enumerate(A.matrix):
        d = Expr.const(1)
        for c in row:
            den = c.denominator()
            if not den.is_constant():
                d = d * den / poly_gcd(d, den)
        rows.append([c * d for c in row])
        transform.append([d if j == i else Expr.const(0) for j in range(m)])
    remaining = list(range(m))
    pivots = []
    while True:
        cand = [i for i in remaining if any(not c.is_zero() for c in rows[i])]
        if not cand:
            break
        p = cand[0]
        cols = [c for c in range(nu) if not rows[p][c].is_zero()]
        c = min(cols, key=lambda c: (sum(1 for i in remaining if not rows[i][c].is_zero()), c))
        pivots.append((p, c))
        remaining.remove(p)
        ap = rows[p][c]
        for i in remaining:
            ai = rows[i][c]
            if ai.is_zero():
                continue
            g = poly_gcd(ap, ai)
            fp, fi = ap / g, ai / g
            rows[i] = [fp * x - fi * y for x, y in zip(rows[i], rows[p])]
            transform[i] = [fp * x - fi * y for x, y in zip(transform[i], transform[p])]
            content = _row_content(rows[i])
            if content is not None:
                rows[i] = [x / content for x in rows[i]]
                transform[i] = [x / content for x in transform[i]]
    res = EliminationResult(A, rows, transform, pivots, [], [])
    for i in remaining:
        cond = res.transformed_rhs(i)
        if cond.is_zero():
            continue
        res.conditions.append(_primitive(cond))
        res.condition_rows.append(i)
    return res


def _primitive(e: Expr) -> Expr:
    """Numerator of ``e`` with its rational content divided out."""
    num = e.numerator()
    lc = num.num.leading_coefficient()
    terms = [c for _, c in num.num.terms()]
    nums = [int(c.p) for c in terms]
    dens = [int(c.q) for c in terms]
    g = Fraction(gcd(*nums), lcm(*dens))
    if lc < 0:
        g = -g
    return num / Expr.const(g)


def numeric_rank(A: AffineTopSystem, point) -> int:
    return exact_rank(A.numeric_matrix(point)) if A.matrix else 0


# --------------------------------------------------------------------------
# reduction modulo the lower-order system


def _target_atoms(e: Expr) -> list[Atom]:
    return [a for a in e.atoms() if a.kind == "w" and a.side == TARGET]


def _solve_linear(eqs: Sequence[Expr], unknowns: Sequence[Atom]) -> dict[Atom, Expr]:
    """Solve equations that must be linear in ``unknowns``; free unknowns stay symbolic."""
    if not unknowns:
        return {}
    zero = {u: 0 for u in unknowns}
    matrix, rhs = [], []
    for e in eqs:
        if e.denominator().has_any(unknowns):
            raise ReductionFailed("unknowns occur in a denominator")
        row = []
        for u in unknowns:
            c = e.diff(u)
            if c.has_any(unknowns):
                raise ReductionFailed(f"equation is nonlinear in {u}")
            row.append(c)
        matrix.append(row)
        rhs.append(-substitute(e, zero))
    res = eliminate(AffineTopSystem(list(unknowns), matrix, rhs))
    if res.conditions:
        raise ReductionFailed("the lower-order system is not solvable for its target-side atoms")
    return res.solved()


@dataclass
class ReductionMap:
    """Target-side derivative atoms of the order-k system expressed in source atoms and jets."""

    order: int
    values: dict[Atom, Expr]

    def __call__(self, e: Expr) -> Expr:
        return substitute(e, self.values)


def reduction_map(S: EquationSystem, a) -> ReductionMap:
    """Solve the Lie form and its prolongations level by level for target-side atoms."""
    n = a.n
    values: dict[Atom, Expr] = {}
    for level in range(S.base_order, S.order + 1):
        r = level - S.base_order
        unknowns = [a.target_atom(b, beta) for b in range(a.m) for beta in multi_indices(n, r)]
        eqs = [substitute(e, values) for e in S.equations_at_level(level)]
        present = set()
        for e in eqs:
            present.update(_target_atoms(e))
        unknowns = [u for u in unknowns if u in present]
        sol = _solve_linear(eqs, unknowns)
        values = {k: substitute(v, sol) for k, v in values.items()}
        values.update(sol)
    return ReductionMap(S.order, values)


def reduce_modulo(cond: Expr, S: EquationSystem, a, rmap: ReductionMap | None = None) -> Expr:
    """Normal form of ``cond`` modulo the order-k system ``S``.

    Target-side atoms of order at most ``k - q`` are replaced by their
    expressions through source atoms and jets; what remains are source
    atoms, higher target atoms and jets.
    """
    if not _target_atoms(cond):
        return cond
    rmap = rmap or reduction_map(S, a)
    return rmap(cond)


# --------------------------------------------------------------------------
# differential invariants


def _source_atoms(e: Expr) -> list[Atom]:
    return [a for a in e.atoms() if a.kind == "w" and a.side == SOURCE]


def to_target(e: Expr) -> Expr:
    """Rename every source-side derivative atom to its target-side twin."""
    return substitute(e, {a: obj_deriv(a.comp, a.index, TARGET) for a in _source_atoms(e)})


def _max_beta_order(e: Expr) -> int:
    return max((a.order for a in e.atoms() if a.kind == "w"), default=0)


def check_invariance(inv: Expr, a, symbolic: bool = True, trials: int = 3, seed: int = 0) -> bool:
    """True iff ``inv`` is a differential invariant of the action ``a``.

    Source-side atoms are replaced by their transformation formulas
    ``d^beta omega(x) = D^beta law`` (target data and jets), and the result is
    compared with ``inv`` evaluated on target data.  The symbolic test is
    exact; with ``symbolic=False`` the comparison is made at random exact
    points only.
    """
    from .lieform import source_formulas

    inv = Expr.coerce(inv)
    bad = [x for x in inv.atoms() if not (x.kind == "w" and x.side == SOURCE)]
    if bad:
        raise ReductionFailed(f"invariant must only use source-side derivative atoms, found {bad[0]}")
    if inv.is_constant():
        return True
    order = _max_beta_order(inv)
    formulas = source_formulas(a, order)
    formulas = {k: v for k, v in formulas.items() if k in set(_source_atoms(inv))}
    if symbolic:
        return substitute(inv, formulas) == to_target(inv)
    rng = random.Random(seed)
    lhs_t, rhs_t = inv, to_target(inv)
    for _ in range(trials):
        pt = _random_groupoid_point(a, order, rng)
        try:
            src = {k: eval_at(v, pt) for k, v in formulas.items()}
            if eval_at(lhs_t, src) != eval_at(rhs_t, pt):
                return False
        except ZeroDivisionError:
            continue
    return True


def _random_groupoid_point(a, obj_order, rng):
    """Random target data of order ``obj_order`` and a random jet of order ``q + obj_order``."""
    f = random_jet(a.n, a.q + obj_order, rng)
    pt = dict(f.assignment())
    while True:
        vals = {c: random_rational(rng, nonzero=True) for c in a.components}
        if a.is_admissible(vals):
            break
    for b, c in enumerate(a.components):
        pt[a.target_atom(b)] = Fraction(vals[c])
        for r in range(1, obj_order + 1):
            for beta in multi_indices(a.n, r):
                pt[a.target_atom(b, beta)] = random_rational(rng)
    return pt


def _reference_slice(S: EquationSystem, a, rng, top_target_order: int) -> dict[Atom, Expr] | None:
    """A parametrized point of ``S`` with flat target data.

    Target derivatives of order >= 1 vanish, the jets of order <= q are
    frozen at random values, the target values follow from the Lie form
    and higher jets from its prolongations (a particular solution).  The
    only remaining parameters are source-side atoms.
    """
    n, q = a.n, a.q
    f = random_jet(n, q, rng)
    binding: dict[Atom, Expr] = {}
    for (i, alpha), v in f.components.items():
        if 1 <= sum(alpha) <= q:
            from .kernel import jet_var

            binding[jet_var(i, alpha)] = Expr.const(v)
    for b in range(a.m):
        for r in range(1, top_target_order + 1):
            for beta in multi_indices(n, r):
                binding[a.target_atom(b, beta)] = Expr.const(0)
    for level in range(S.base_order, S.order + 1):
        eqs = [substitute(e, binding) for e in S.equations_at_level(level)]
        if level == S.base_order:
            unknowns = [a.target_atom(b) for b in range(a.m)]
        else:
            unknowns = S.context.jets_of_order(level)
        try:
            sol = _solve_linear(eqs, unknowns)
        except ReductionFailed:
            return None
        sol = {k: substitute(v, {u: 0 for u in unknowns}) for k, v in sol.items()}
        for u in unknowns:
            binding[u] = sol.get(u, Expr.const(0))
    return binding


def _primitive_wrt(e: Expr, atoms: Sequence[Atom]) -> tuple[Expr, Expr]:
    """Split the numerator of ``e`` into content and primitive part with respect to ``atoms``."""
    coeffs = list(coefficients(e, atoms).values())
    g = None
    for c in coeffs:
        g = c if g is None else poly_gcd(g, c)
    prim = e.numerator() / g
    return g, prim


@dataclass
class StructureEquation:
    """``invariant(omega) = constant`` together with its provenance."""

    invariant: Expr | None
    condition: Expr
    separated: bool
    order: int
    weights: dict[str, int] = field(default_factory=dict)
    reference_factor: Fraction | None = None

    @property
    def status(self):
        return "SEPARATED" if self.separated else "UNSEPARATED"


@dataclass
class VessiotReport:
    equations: list[StructureEquation]
    concrete: list[dict] = field(default_factory=list)

    @property
    def invariants(self) -> list[Expr]:
        return [s.invariant for s in self.equations if s.separated]

    @property
    def unseparated(self) -> list[StructureEquation]:
        return [s for s in self.equations if not s.separated]


def _directly_separated(cond: Expr, rng) -> Expr | None:
    """Try ``cond = I(x) - I(y)`` exactly, freezing everything but source atoms."""
    others = [x for x in cond.atoms() if not (x.kind == "w" and x.side == SOURCE)]
    if not _source_atoms(cond):
        return None
    freeze = {x: random_rational(rng, nonzero=True) for x in others}
    try:
        cand = substitute(cond, freeze)
    except ZeroDivisionError:
        return None
    if cand.is_constant():
        return None
    if cand.is_polynomial():
        cand = cand - Expr.const(substitute(cand, {x: 0 for x in cand.atoms()}).constant_value())
    if cand - to_target(cand) == cond:
        return cand
    return None


def separate(
    cond: Expr, S: EquationSystem, a, rng, rmap: ReductionMap | None = None, max_weight: int = 4
) -> StructureEquation:
    """Bring one integrability condition into the form ``Inv(x) - Inv(y)``.

    First the condition is tested for being literally separated.  Otherwise
    it is restricted to a flat reference slice of the lower-order system,
    which leaves ``Delta * (Inv(x) - Inv(reference))`` in source atoms.  The
    primitive part in the highest-order source atoms is completed to an
    absolute invariant by a search over powers of the remaining factors,
    accepted only after an exact invariance check and an exact check that
    the condition is a multiple of ``Inv(x) - Inv(y)`` modulo ``S``.
    """
    order = _max_beta_order(cond)
    direct = _directly_separated(cond, rng)
    if direct is not None:
        return StructureEquation(direct, cond, True, order)
    rmap = rmap or reduction_map(S, a)
    reduced = rmap(cond)
    for _attempt in range(3):
        binding = _reference_slice(S, a, rng, order)
        if binding is None:
            break
        try:
            f = substitute(cond, binding)
        except ZeroDivisionError:
            continue
        if f.is_zero() or not _source_atoms(f):
            continue
        top = sorted({x for x in _source_atoms(f) if x.order == _max_beta_order(f)})
        content, prim = _primitive_wrt(f, top)
        facs = []
        for g, _m in factor(content) + factor(f.denominator()):
            if not g.is_constant() and g not in facs and not g.has_any(top):
                facs.append(g)
        found = _weight_search(prim, facs, a, rng, max_weight)
        if found is None:
            continue
        inv, weights = found
        diff = rmap(inv - to_target(inv))
        if diff.is_zero():
            continue
        ratio = reduced / diff
        top_atoms = [x for x in ratio.atoms() if x.kind == "w" and x.order >= order]
        if ratio.is_zero() or top_atoms:
            continue
        labels = {to_string(g): w for g, w in zip(facs, weights) if w}
        return StructureEquation(_normalized(inv), cond, True, order, labels)
    return StructureEquation(None, cond, False, order)


def _normalized(inv: Expr) -> Expr:
    """Scale so that the numerator has content one and a positive leading coefficient."""
    p = _primitive(inv.numerator())
    return inv / (inv.numerator() / p)


def _weight_search(prim, facs, a, rng, max_weight):
    order = _max_beta_order(prim)
    from .lieform import source_formulas

    formulas = source_formulas(a, order)
    pts = []
    for _ in range(4):
        pt = _random_groupoid_point(a, order, rng)
        try:
            src = {k: eval_at(v, pt) for k, v in formulas.items()}
            vals = [(eval_at(prim, src), eval_at(to_target(prim), pt))]
            for g in facs:
                vals.append((eval_at(g, src), eval_at(to_target(g), pt)))
        except ZeroDivisionError:
            continue
        if any(v == 0 for pair in vals for v in pair):
            continue
        pts.append(vals)
    if not pts:
        return None
    ranges = [range(-max_weight, max_weight + 1)] * len(facs)
    combos = sorted(itertools.product(*ranges), key=lambda w: (sum(map(abs, w)), w))
    for w in combos:
        ok = True
        for vals in pts:
            lhs = vals[0][0]
            rhs = vals[0][1]
            for (gs, gt), e in zip(vals[1:], w):
                lhs *= gs**e
                rhs *= gt**e
            if lhs != rhs:
                ok = False
                break
        if not ok:
            continue
        inv = prim
        for g, e in zip(facs, w):
            inv = inv * g**e
        if check_invariance(inv, a):
            return inv, list(w)
    return None


# --------------------------------------------------------------------------
# concrete objects


def evaluate_invariant(inv: Expr, a, omega) -> Expr:
    """The invariant of a concrete object as a rational function of x."""
    return substitute(inv, omega.jet_values(a.components, _max_beta_order(inv)))


def evaluate_condition(cond: Expr, a, omega) -> Expr:
    """A raw condition with the object's jets substituted on both sides (jets stay symbolic)."""
    order = _max_beta_order(cond)
    src = omega.jet_values(a.components, order)
    to_y = {base_coord(i): jet_var(i, (0,) * a.n) for i in range(1, a.n + 1)}
    binding = dict(src)
    for atom, value in src.items():
        binding[obj_deriv(atom.comp, atom.index, TARGET)] = substitute(value, to_y)
    return substitute(cond, binding)


def _concrete_point(a, omega, rng):
    from .kernel import base_coord

    while True:
        pt = {base_coord(i): random_rational(rng) for i in range(1, a.n + 1)}
        try:
            vals = {c: eval_at(omega.components[b], pt) for b, c in enumerate(a.components)}
        except ZeroDivisionError:
            continue
        if a.is_admissible(vals):
            return pt


def nonconstancy_witness(value: Expr, a, omega, rng, tries: int = 50) -> dict | None:
    """Two admissible points at which ``value`` differs, or None."""
    if value.is_constant():
        return None
    first = None
    for _ in range(tries):
        pt = _concrete_point(a, omega, rng)
        try:
            v = eval_at(value, pt)
        except ZeroDivisionError:
            continue
        if first is None:
            first = (pt, v)
        elif v != first[1]:
            return {
                "points": [[first[0][k] for k in sorted(first[0], key=lambda x: x.id)],
                           [pt[k] for k in sorted(pt, key=lambda x: x.id)]],
                "values": [first[1], v],
            }
    return None


# --------------------------------------------------------------------------
# the prolong/project loop

FORMALLY_INTEGRABLE = "FORMALLY_INTEGRABLE"
NOT_FORMALLY_INTEGRABLE = "NOT_FORMALLY_INTEGRABLE"
INCONCLUSIVE = "INCONCLUSIVE"


@dataclass
class Iteration:
    """One projection step: elimination of the order-``order`` jets from ``R_order``."""

    order: int
    equations: int
    rows: int
    unknowns: int
    generic_rank: int
    numeric_ranks: list[int]
    conditions: list[Expr]
    working_order: int
    symbol_dims: list[int]
    two_acyclic: bool
    involutive: bool
    certificate: str
    certified: bool
    implied: bool = False


@dataclass
class IntegrabilityReport:
    action: str
    n: int
    q: int
    mode: str
    max_order: int
    seed: int
    iterations: list[Iteration]
    symbol: "object"
    vessiot: VessiotReport
    verdict: str
    obstruction: str | None = None
    witness: dict | None = None
    certified_order: int | None = None
    conditional_on: list[Expr] = field(default_factory=list)
    rank_samples: list[list[int]] = field(default_factory=list)
    notes: list[str] = field(default_factory=list)
    timings: dict = field(default_factory=dict)


def _is_flat_metric_2d(a) -> bool:
    from .lieform import builtin_action

    return a.n == 2 and a.m == 3 and a.same_law(builtin_action("metric", 2))


def _reference_factor(inv: Expr, a) -> Fraction | None:
    if not _is_flat_metric_2d(a):
        return None
    from .curvature import brioschi_symbolic

    ratio = inv / brioschi_symbolic(tuple(a.components))
    return ratio.constant_value() if ratio.is_constant() else None


def integrability_loop(
    a,
    omega,
    max_order: int = 4,
    *,
    seed: int = 0,
    r_max: int = 3,
    exhaustive: bool = False,
    rank_points: int = 5,
    term_cap_limit: int | None = None,
) -> IntegrabilityReport:
    """Prolong, project and test the symbol until formal integrability is decided.

    Structure equations are always derived for a symbolic object.  For a
    concrete ``omega`` each invariant is evaluated on it: a nonconstant
    value is an obstruction (with a two-point witness), a constant means
    the condition holds.  Formal integrability is declared at the first
    working order whose symbol is 2-acyclic and whose projection has no
    new conditions.  With ``exhaustive`` the remaining orders up to
    ``max_order`` are still prolonged and eliminated, and their counts
    recorded.
    """
    import time
    import warnings

    from .kernel import term_cap
    from .lieform import GeometricObject, admissible_point, lie_form
    from .spencer import goldschmidt_inputs, spencer_cohomology, symbol_spaces

    if max_order < a.q + 1:
        raise ValueError(f"max_order must be at least {a.q + 1}")
    rng = random.Random(seed)
    q, n = a.q, a.n
    symbolic = omega.is_symbolic
    sym_obj = GeometricObject.symbolic(n, a.m)
    timings: dict[str, float] = {}
    t0 = time.perf_counter()

    S_base = lie_form(a, sym_obj)
    S_sym_or_concrete = S_base if symbolic else lie_form(a, omega)
    top = max_order + r_max + 2

    def symbol_point(r):
        if symbolic:
            return admissible_point(a, omega, q, r)
        return admissible_point(a, omega, q, r, identity=True)

    spaces = symbol_spaces(S_sym_or_concrete, q, top, symbol_point(rng), a)
    samples = []
    for _ in range(rank_points):
        sp = symbol_spaces(S_sym_or_concrete, q, q + r_max, symbol_point(rng), a)
        samples.append([sp[r].dim for r in range(q, q + r_max + 1)])
    notes = []
    if len({tuple(s) for s in samples}) > 1:
        msg = f"symbol dimensions vary across sample points: {samples}"
        warnings.warn(msg, stacklevel=2)
        notes.append(msg)
    symbol = spencer_cohomology(spaces, q, r_max)
    timings["symbol"] = time.perf_counter() - t0

    report = IntegrabilityReport(
        a.name, n, q, "symbolic" if symbolic else "concrete", max_order, seed, [], symbol,
        VessiotReport([]), INCONCLUSIVE, rank_samples=samples, notes=notes, timings=timings,
    )
    cap = term_cap_limit
    try:
        with term_cap(cap) if cap else contextlib.nullcontext():
            _run(report, a, omega, S_base, spaces, rng, max_order, r_max, exhaustive, symbolic,
                 goldschmidt_inputs, spencer_cohomology, admissible_point, sym_obj)
    except ResourceLimit as err:
        report.verdict = INCONCLUSIVE
        report.obstruction = f"resource limit: {err}"
    timings["total"] = time.perf_counter() - t0
    return report


def _run(report, a, omega, S_base, spaces, rng, max_order, r_max, exhaustive, symbolic,
         goldschmidt_inputs, spencer_cohomology, admissible_point, sym_obj):
    import time

    q = a.q
    timings = report.timings
    for k in range(q, max_order):
        t = time.perf_counter()
        S_next = prolong_system(S_base, k + 1 - q)
        A = split_top_order(S_next, k + 1)
        E = eliminate(A)
        numeric = []
        for _ in range(3):
            pt = admissible_point(a, sym_obj, k + 1, rng, obj_order=k + 1 - q)
            numeric.append(numeric_rank(A, pt))
        timings[f"eliminate_{k + 1}"] = time.perf_counter() - t
        coh = spencer_cohomology(spaces, k, r_max)
        implied = report.certified_order is not None
        it = Iteration(
            k + 1, len(S_next), A.shape[0], A.shape[1], E.generic_rank, numeric, list(E.conditions),
            k, coh.dims, coh.two_acyclic, coh.involutive, "", False, implied,
        )
        report.iterations.append(it)
        if implied:
            it.certificate = "implied by the certificate at order %d" % report.certified_order
            continue
        t = time.perf_counter()
        S_k = prolong_system(S_base, k - q) if k > q else S_base
        rmap = reduction_map(S_k, a) if E.conditions else None
        new = []
        for C in E.conditions:
            se = separate(C, S_k, a, rng, rmap)
            if se.separated:
                se.reference_factor = _reference_factor(se.invariant, a)
            new.append(se)
            report.vessiot.equations.append(se)
        timings[f"separate_{k + 1}"] = time.perf_counter() - t
        unseparated = [se for se in new if not se.separated]
        if unseparated and not symbolic:
            # an unseparated condition still holds if it vanishes on the object itself
            held = [se for se in unseparated if evaluate_condition(se.condition, a, omega).is_zero()]
            for se in held:
                report.notes.append(f"an unseparated condition at order {k + 1} vanishes identically on this object")
            unseparated = [se for se in unseparated if se not in held]
        if unseparated:
            report.verdict = INCONCLUSIVE
            report.obstruction = f"a condition at order {k + 1} could not be separated"
            it.certificate = "withheld: unseparated condition"
            return
        if symbolic:
            no_new = True
            report.conditional_on.extend(se.invariant for se in new if se.separated)
        else:
            no_new = True
            for se in new:
                if not se.separated:
                    continue
                value = evaluate_invariant(se.invariant, a, omega)
                entry = {"invariant": se.invariant, "value": value, "constant": value.is_constant()}
                if se.reference_factor is not None:
                    entry["curvature"] = value / Expr.const(se.reference_factor)
                report.vessiot.concrete.append(entry)
                if not value.is_constant():
                    no_new = False
                    report.verdict = NOT_FORMALLY_INTEGRABLE
                    report.obstruction = "invariant not constant"
                    report.witness = nonconstancy_witness(value, a, omega, rng)
            if not no_new:
                it.certificate = "withheld: the object violates a structure equation"
                return
        cert = goldschmidt_inputs(coh, no_new)
        it.certificate = cert.reason
        it.certified = cert.ok
        if cert.ok:
            report.certified_order = k
            report.verdict = FORMALLY_INTEGRABLE
            if not exhaustive:
                return
    if report.certified_order is None:
        report.verdict = INCONCLUSIVE
        report.obstruction = f"no certificate up to order {max_order}"

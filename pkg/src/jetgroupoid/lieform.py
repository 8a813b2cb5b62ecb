"""Natural-bundle actions, geometric objects and the Lie form of their symmetry groupoid."""

from __future__ import annotations

import random
import warnings
from dataclasses import dataclass, field
from fractions import Fraction
from itertools import permutations
from typing import Callable, Sequence

from .dsl import format_action, parse_action_text, parse_expr
from .errors import DimensionMismatch, UnknownName
from .jets import (
    EquationSystem,
    JetContext,
    JetPoint,
    compose_jets,
    identity_jet,
    multi_indices,
    multi_indices_upto,
    random_jet,
    random_rational,
    total_derivative,
    unit,
)
from .jets import _det as _det_values
from .kernel import (
    SOURCE,
    TARGET,
    Atom,
    Expr,
    base_coord,
    eval_at,
    jet_var,
    obj_deriv,
    substitute,
)

BUILTINS = ("metric", "volume", "twoform", "covector")


@dataclass
class NaturalBundleAction:
    """Transformation law of a geometric object under q-jets.

    ``law[a]`` gives component ``a`` of ``u f`` at the source of ``f`` in
    terms of the fibre coordinates ``u_b`` at the target (represented by the
    atoms ``obj_deriv(name_b, 0, TARGET)``) and the jet coordinates of ``f``.
    """

    name: str
    n: int
    q: int
    components: list[str]
    law: list[Expr]
    symmetry: str | None = None
    nondegenerate: Callable[[dict], bool] | None = field(default=None, compare=False, repr=False)
    warnings: list[str] = field(default_factory=list, compare=False)

    @property
    def m(self):
        return len(self.components)

    def placeholder(self, b: int) -> Atom:
        return obj_deriv(self.components[b], (0,) * self.n, TARGET)

    def source_atom(self, b: int, beta=None) -> Atom:
        return obj_deriv(self.components[b], beta or (0,) * self.n, SOURCE)

    def target_atom(self, b: int, beta=None) -> Atom:
        return obj_deriv(self.components[b], beta or (0,) * self.n, TARGET)

    def is_admissible(self, values: dict) -> bool:
        """Nondegeneracy of fibre values ``{component name: value}``."""
        if self.nondegenerate is None:
            return True
        return bool(self.nondegenerate(values))

    def apply(self, u: dict, f: JetPoint) -> dict:
        """``u f``: fibre values at the target of ``f`` pulled back to its source."""
        point = {self.placeholder(b): Fraction(u[c]) for b, c in enumerate(self.components)}
        point.update(_jet_assignment(f, self.q))
        return {c: eval_at(e, point) for c, e in zip(self.components, self.law)}

    def to_text(self) -> str:
        return format_action(self.name, self.n, self.q, self.components, self.symmetry, self.law)

    def same_law(self, other: "NaturalBundleAction") -> bool:
        return (
            self.n == other.n
            and self.q == other.q
            and self.components == other.components
            and all(a == b for a, b in zip(self.law, other.law))
        )


def _jet_assignment(f: JetPoint, q: int) -> dict:
    return {jet_var(i, a): v for (i, a), v in f.components.items() if 1 <= sum(a) <= q}


@dataclass
class GeometricObject:
    """A section of a natural bundle: rational components in x, or SYMBOLIC."""

    n: int
    m: int
    components: list[Expr] | None = None

    @classmethod
    def symbolic(cls, n: int, m: int) -> "GeometricObject":
        return cls(n, m, None)

    @classmethod
    def from_strings(cls, n: int, texts: Sequence[str]) -> "GeometricObject":
        return cls(n, len(texts), [parse_expr(t, n) for t in texts])

    @property
    def is_symbolic(self) -> bool:
        return self.components is None

    def __post_init__(self):
        if self.components is not None:
            self.components = [Expr.coerce(c) for c in self.components]
            if len(self.components) != self.m:
                raise DimensionMismatch(f"expected {self.m} components, got {len(self.components)}")
            allowed = {base_coord(i).id for i in range(1, self.n + 1)}
            for c in self.components:
                bad = [a for a in c.atoms() if a.id not in allowed]
                if bad:
                    raise ValueError(f"object components may only use x1..x{self.n}, found {bad[0]}")

    def derivative(self, a: int, beta) -> Expr:
        e = self.components[a]
        for k, times in enumerate(beta, start=1):
            for _ in range(times):
                e = e.diff(base_coord(k))
        return e

    def at_target(self, a: int) -> Expr:
        """Component ``a`` composed with the target coordinates y."""
        return substitute(
            self.components[a], {base_coord(i): jet_var(i, (0,) * self.n) for i in range(1, self.n + 1)}
        )

    def jet_values(self, names: Sequence[str], order: int) -> dict[Atom, Expr]:
        """Source-side derivative atoms up to ``order`` mapped to their values as functions of x."""
        out = {}
        for a, name in enumerate(names):
            for beta in multi_indices_upto(self.n, order):
                out[obj_deriv(name, beta, SOURCE)] = self.derivative(a, beta)
        return out


# --------------------------------------------------------------------------
# builtin actions


def _jac(n, i, k):
    return Expr.of(jet_var(i, unit(n, k)))


def _det(rows):
    n = len(rows)
    out = Expr.const(0)
    for perm in permutations(range(n)):
        sign = 1
        for a in range(n):
            for b in range(a + 1, n):
                if perm[a] > perm[b]:
                    sign = -sign
        term = Expr.const(sign)
        for r, c in enumerate(perm):
            term = term * rows[r][c]
        out = out + term
    return out


def _pair_name(i, j, n):
    return f"u{i}{j}" if n < 10 else f"u{i}_{j}"


def builtin_action(name: str, n: int) -> NaturalBundleAction:
    """Transformation laws of standard tensor bundles (all of order 1)."""
    if n < 1:
        raise ValueError("dimension must be positive")
    if name == "metric":
        pairs = [(i, j) for i in range(1, n + 1) for j in range(i, n + 1)]
        comps = [_pair_name(i, j, n) for i, j in pairs]

        def u(i, j):
            a, b = min(i, j), max(i, j)
            return Expr.of(obj_deriv(_pair_name(a, b, n), (0,) * n, TARGET))

        law = []
        for k, l in pairs:
            e = Expr.const(0)
            for i in range(1, n + 1):
                for j in range(1, n + 1):
                    e = e + u(i, j) * _jac(n, i, k) * _jac(n, j, l)
            law.append(e)

        def nondeg(vals):
            mat = [[vals[_pair_name(min(i, j), max(i, j), n)] for j in range(1, n + 1)] for i in range(1, n + 1)]
            return _det_values(mat) != 0

        return NaturalBundleAction(f"metric{n}", n, 1, comps, law, "symmetric", nondeg)
    if name == "volume":
        u = Expr.of(obj_deriv("u", (0,) * n, TARGET))
        det = _det([[_jac(n, i, k) for k in range(1, n + 1)] for i in range(1, n + 1)])
        return NaturalBundleAction(f"volume{n}", n, 1, ["u"], [u * det], None, lambda v: v["u"] != 0)
    if name == "twoform":
        pairs = [(i, j) for i in range(1, n + 1) for j in range(i + 1, n + 1)]
        if not pairs:
            raise ValueError("two-forms need n >= 2")
        comps = [_pair_name(i, j, n) for i, j in pairs]

        def u(i, j):
            if i == j:
                return Expr.const(0)
            a, b = min(i, j), max(i, j)
            s = 1 if i < j else -1
            return s * Expr.of(obj_deriv(_pair_name(a, b, n), (0,) * n, TARGET))

        law = []
        for k, l in pairs:
            e = Expr.const(0)
            for i in range(1, n + 1):
                for j in range(1, n + 1):
                    if i != j:
                        e = e + u(i, j) * _jac(n, i, k) * _jac(n, j, l)
            law.append(e)
        return NaturalBundleAction(
            f"twoform{n}", n, 1, comps, law, "antisymmetric", lambda v: any(v[c] != 0 for c in comps)
        )
    if name == "covector":
        comps = [f"u{i}" for i in range(1, n + 1)]
        law = []
        for k in range(1, n + 1):
            e = Expr.const(0)
            for i in range(1, n + 1):
                e = e + Expr.of(obj_deriv(comps[i - 1], (0,) * n, TARGET)) * _jac(n, i, k)
            law.append(e)
        return NaturalBundleAction(
            f"covector{n}", n, 1, comps, law, None, lambda v: any(v[c] != 0 for c in comps)
        )
    raise UnknownName(f"unknown builtin action {name!r}; choose from {', '.join(BUILTINS)}")


def parse_action(text: str, trials: int = 5, seed: int = 0) -> NaturalBundleAction:
    """Parse an action file; axiom failures are attached as warnings, not raised."""
    p = parse_action_text(text)
    a = NaturalBundleAction(p.name, p.n, p.q, p.components, p.laws, p.symmetry)
    report = check_action_axioms(a, trials, seed)
    if not report.identity_ok:
        a.warnings.append("identity axiom fails")
    if not report.composition_ok:
        a.warnings.append("composition axiom fails")
    for w in a.warnings:
        warnings.warn(f"action {a.name}: {w}", stacklevel=2)
    return a


# --------------------------------------------------------------------------
# action axioms


@dataclass
class AxiomReport:
    identity_ok: bool
    composition_ok: bool
    failures: list[dict]
    trials: int
    seed: int

    @property
    def ok(self):
        return self.identity_ok and self.composition_ok


def random_fibre_values(a: NaturalBundleAction, rng) -> dict:
    while True:
        vals = {c: random_rational(rng, nonzero=True) for c in a.components}
        if a.is_admissible(vals):
            return vals


def check_action_axioms(a: NaturalBundleAction, trials: int = 10, seed: int = 0) -> AxiomReport:
    """Identity axiom exactly, composition axiom f(ab) = (fa)b at random exact jets."""
    if trials < 1:
        raise ValueError("trials must be at least 1")
    n = a.n
    failures = []
    ident = {jet_var(i, alpha): (1 if alpha == unit(n, i) else 0)
             for r in range(1, a.q + 1) for alpha in multi_indices(n, r) for i in range(1, n + 1)}
    identity_ok = True
    for b, e in enumerate(a.law):
        if substitute(e, ident) != Expr.of(a.placeholder(b)):
            identity_ok = False
            failures.append({"axiom": "identity", "component": a.components[b]})
    rng = random.Random(seed)
    composition_ok = True
    for _ in range(trials):
        f = random_jet(n, a.q, rng)
        g = random_jet(n, a.q, rng, source=f.target)
        u = random_fibre_values(a, rng)
        try:
            lhs = a.apply(u, compose_jets(g, f, a.q))
            rhs = a.apply(a.apply(u, g), f)
        except ZeroDivisionError:
            continue
        if lhs != rhs:
            composition_ok = False
            failures.append({"axiom": "composition", "u": u, "g": g, "f": f, "u(gf)": lhs, "(ug)f": rhs})
    return AxiomReport(identity_ok, composition_ok, failures, trials, seed)


# --------------------------------------------------------------------------
# Lie form


def lie_form(a: NaturalBundleAction, omega: GeometricObject) -> EquationSystem:
    """Equations ``omega(y) f - omega(x) = 0`` of the symmetry groupoid of ``omega``."""
    if omega.n != a.n or omega.m != a.m:
        raise DimensionMismatch(
            f"action has n={a.n}, m={a.m} but object has n={omega.n}, m={omega.m}"
        )
    ctx = JetContext(a.n, a.q)
    eqs = []
    if omega.is_symbolic:
        for b, law in enumerate(a.law):
            eqs.append(law - Expr.of(a.source_atom(b)))
    else:
        at_y = {a.placeholder(b): omega.at_target(b) for b in range(a.m)}
        for b, law in enumerate(a.law):
            eqs.append(substitute(law, at_y) - omega.components[b])
    return EquationSystem(ctx, a.q, eqs)


def stab_membership(a: NaturalBundleAction, omega: GeometricObject, f: JetPoint) -> bool:
    """True iff ``f`` is a symmetry jet of the concrete object ``omega``."""
    if omega.is_symbolic:
        raise ValueError("membership needs a concrete object")
    if f.order < a.q:
        raise ValueError(f"jet order {f.order} is below the action order {a.q}")
    point = f.assignment()
    return all(eval_at(e, point) == 0 for e in lie_form(a, omega).equations)


# --------------------------------------------------------------------------
# points of the groupoid and rank sampling


def source_formulas(a: NaturalBundleAction, order: int, ctx: JetContext | None = None) -> dict[Atom, Expr]:
    """Source-side derivative atoms expressed through target atoms and jets.

    Solving the Lie form for the source side is explicit:
    ``omega_a(x) = law_a`` and ``d^beta omega_a(x) = D^beta law_a``.
    """
    ctx = ctx or JetContext(a.n, a.q + order)
    out = {}
    for b, law in enumerate(a.law):
        cur = {(0,) * a.n: law}
        out[a.source_atom(b)] = law
        for r in range(1, order + 1):
            for beta in multi_indices(a.n, r):
                k = next(i for i, v in enumerate(beta, start=1) if v)
                parent = tuple(v - (1 if i == k - 1 else 0) for i, v in enumerate(beta))
                cur[beta] = total_derivative(cur[parent], k, ctx)
                out[a.source_atom(b, beta)] = cur[beta]
    return out


def admissible_point(
    a: NaturalBundleAction,
    omega: GeometricObject,
    jet_order: int,
    rng,
    obj_order: int | None = None,
    identity: bool = False,
) -> dict[Atom, Fraction]:
    """A random exact point for evaluating equations of order ``jet_order``.

    For a symbolic object the point lies on the symmetry groupoid: target
    data and jets are random and the source data is computed from them.
    For a concrete object the target point is random and the jets are
    random (or the identity jet), satisfying the nondegeneracy predicates.
    """
    n = a.n
    obj_order = jet_order - a.q if obj_order is None else obj_order
    while True:
        if identity:
            f = identity_jet([random_rational(rng) for _ in range(n)], jet_order)
        else:
            f = random_jet(n, jet_order, rng)
        point = dict(f.assignment())
        if omega.is_symbolic:
            vals = random_fibre_values(a, rng)
            for b, c in enumerate(a.components):
                point[a.target_atom(b)] = vals[c]
                for r in range(1, obj_order + 1):
                    for beta in multi_indices(n, r):
                        point[a.target_atom(b, beta)] = random_rational(rng)
            try:
                for atom, e in source_formulas(a, max(obj_order, 0)).items():
                    point[atom] = eval_at(e, point)
            except ZeroDivisionError:
                continue
            return point
        tgt = {base_coord(i): f.target[i - 1] for i in range(1, n + 1)}
        try:
            vals = {c: eval_at(omega.components[b], tgt) for b, c in enumerate(a.components)}
            if identity:
                point.update(tgt)
            else:
                src = {base_coord(i): f.source[i - 1] for i in range(1, n + 1)}
                for b in range(a.m):
                    eval_at(omega.components[b], src)
                point.update(src)
        except ZeroDivisionError:
            continue
        if a.is_admissible(vals):
            return point


def jacobian_rank(eqs: Sequence[Expr], unknowns: Sequence[Atom], point: dict) -> int:
    from .linalg import rank

    mat = [[eval_at(e.diff(u), point) for u in unknowns] for e in eqs]
    return rank(mat)


def check_rank_constancy(
    system: EquationSystem, a: NaturalBundleAction, omega: GeometricObject, points: int = 5, seed: int = 0
) -> list[int]:
    """Rank of the system's Jacobian in the jet variables at random admissible points.

    A warning is issued when the rank varies (the fibre may not be
    homogeneous, or the point sampling hit a singular locus).
    """
    rng = random.Random(seed)
    unknowns = [jet_var(i, al) for r in range(1, system.order + 1)
                for al in multi_indices(a.n, r) for i in range(1, a.n + 1)]
    ranks = []
    for _ in range(points):
        pt = admissible_point(a, omega, system.order, rng)
        ranks.append(jacobian_rank(system.equations, unknowns, pt))
    if len(set(ranks)) > 1:
        warnings.warn(f"rank of the {a.name} system varies across sample points: {ranks}", stacklevel=2)
    return ranks

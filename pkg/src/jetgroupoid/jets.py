"""Multi-indices, total derivatives, prolongation and numeric jet groupoid operations."""

from __future__ import annotations

import threading
from dataclasses import dataclass, field
from fractions import Fraction
from functools import lru_cache
from math import comb
from typing import Mapping, Sequence

from .errors import ResourceLimit, SingularLinearPart, SourceTargetMismatch
from .kernel import (
    SOURCE,
    TARGET,
    Atom,
    Expr,
    base_coord,
    eval_at,
    jet_var,
    obj_deriv,
)

DEFAULT_ORDER_CAP = 6


# --------------------------------------------------------------------------
# multi-indices


@lru_cache(maxsize=None)
def multi_indices(n: int, r: int) -> tuple[tuple[int, ...], ...]:
    """All multi-indices of length ``n`` and order exactly ``r``, lexicographically descending."""
    if n == 0:
        return ((),) if r == 0 else ()
    if n == 1:
        return ((r,),)
    out = []
    for first in range(r, -1, -1):
        for rest in multi_indices(n - 1, r - first):
            out.append((first, *rest))
    return tuple(out)


def multi_indices_upto(n: int, r: int) -> list[tuple[int, ...]]:
    return [a for k in range(r + 1) for a in multi_indices(n, k)]


def count_multi_indices(n: int, r: int) -> int:
    return comb(n + r - 1, r)


def unit(n: int, k: int) -> tuple[int, ...]:
    """Unit multi-index e_k (``k`` is 1-based)."""
    return tuple(1 if j == k - 1 else 0 for j in range(n))


def add_index(a, b):
    return tuple(x + y for x, y in zip(a, b))


def sub_index(a, b):
    return tuple(x - y for x, y in zip(a, b))


def first_direction(alpha) -> int:
    for k, a in enumerate(alpha, start=1):
        if a:
            return k
    raise ValueError("zero multi-index has no direction")


def directions(alpha) -> list[int]:
    out = []
    for k, a in enumerate(alpha, start=1):
        out.extend([k] * a)
    return out


# --------------------------------------------------------------------------
# jet context and total derivatives


class JetContext:
    """Bookkeeping of the atoms used for jets of local diffeomorphisms of R^n.

    ``Q`` grows automatically when a total derivative produces a jet of
    higher order, up to ``order_cap``.
    """

    def __init__(self, n: int, Q: int = 1, order_cap: int = DEFAULT_ORDER_CAP):
        if n < 1:
            raise ValueError("base dimension must be positive")
        self.n = n
        self.Q = Q
        self.order_cap = order_cap
        self._lock = threading.Lock()
        self._dcache: dict[tuple[int, int], Expr] = {}

    def x(self, i: int) -> Atom:
        return base_coord(i)

    def y(self, i: int, alpha=None) -> Atom:
        return jet_var(i, alpha if alpha is not None else (0,) * self.n)

    def w(self, name: str, beta=None, side: str = SOURCE) -> Atom:
        return obj_deriv(name, beta if beta is not None else (0,) * self.n, side)

    def jets_of_order(self, r: int) -> list[Atom]:
        return [jet_var(i, a) for a in multi_indices(self.n, r) for i in range(1, self.n + 1)]

    def _note_order(self, r):
        if r > self.Q:
            if r > self.order_cap:
                raise ResourceLimit(f"jet order {r} exceeds the cap {self.order_cap}")
            with self._lock:
                self.Q = max(self.Q, r)

    def derivative_of_atom(self, a: Atom, k: int) -> Expr:
        """D_k applied to a single atom."""
        key = (a.id, k)
        hit = self._dcache.get(key)
        if hit is not None:
            return hit
        n = self.n
        if a.kind == "x":
            out = Expr.const(1 if a.comp == k else 0)
        elif a.kind == "y":
            alpha = add_index(a.index, unit(n, k))
            self._note_order(sum(alpha))
            out = Expr.of(jet_var(a.comp, alpha))
        elif a.side == SOURCE:
            out = Expr.of(obj_deriv(a.comp, add_index(a.index, unit(n, k)), SOURCE))
        else:
            out = Expr.const(0)
            for j in range(1, n + 1):
                up = obj_deriv(a.comp, add_index(a.index, unit(n, j)), TARGET)
                out = out + Expr.of(up) * Expr.of(jet_var(j, unit(n, k)))
        self._dcache[key] = out
        return out


def total_derivative(e: Expr, k: int, ctx: JetContext) -> Expr:
    """Total derivative D_k, extended from atoms as a derivation."""
    e = Expr.coerce(e)
    if e.is_constant():
        return Expr.const(0)
    # D(N/D) = (D N * D - N * D D) / D^2, computed on the polynomial parts
    dnum = _poly_total_derivative(e, "num", k, ctx)
    if e.is_polynomial():
        return dnum * e.denominator().inverse()
    dden = _poly_total_derivative(e, "den", k, ctx)
    num, den = e.numerator(), e.denominator()
    return (dnum * den - num * dden) / (den * den)


def _poly_total_derivative(e, part, k, ctx):
    p = getattr(e, part)
    out = Expr.const(0)
    whole = Expr(p, p.context().constant(1), _canonical=True)
    for a in _atoms_of_poly(p):
        da = ctx.derivative_of_atom(a, k)
        if da.is_zero():
            continue
        out = out + whole.diff(a) * da
    return out


def _atoms_of_poly(p):
    from .kernel import atom_by_id

    return [atom_by_id(k) for k, d in enumerate(p.degrees()) if d > 0]


def total_derivative_multi(e: Expr, gamma, ctx: JetContext) -> Expr:
    for k in directions(gamma):
        e = total_derivative(e, k, ctx)
    return e


# --------------------------------------------------------------------------
# equation systems


@dataclass
class EquationSystem:
    """A finite set of expressions required to vanish.

    ``labels[j] = (base, gamma)`` records that equation ``j`` is ``D^gamma``
    of base equation ``base``; ``base_order`` is the order of the unprolonged
    equations.
    """

    context: JetContext
    order: int
    equations: list[Expr]
    labels: list[tuple[int, tuple[int, ...]]] = field(default_factory=list)
    base_order: int | None = None

    def __post_init__(self):
        if not self.labels:
            self.labels = [(j, (0,) * self.context.n) for j in range(len(self.equations))]
        if self.base_order is None:
            self.base_order = self.order

    def __len__(self):
        return len(self.equations)

    def level(self, j: int) -> int:
        """Order of the prolongation level that produced equation ``j``."""
        return self.base_order + sum(self.labels[j][1])

    def equations_at_level(self, level: int) -> list[Expr]:
        return [e for j, e in enumerate(self.equations) if self.level(j) == level]

    def base(self) -> "EquationSystem":
        keep = [j for j in range(len(self)) if not any(self.labels[j][1])]
        return EquationSystem(
            self.context,
            self.base_order,
            [self.equations[j] for j in keep],
            [self.labels[j] for j in keep],
            self.base_order,
        )


def prolong_system(S: EquationSystem, r: int) -> EquationSystem:
    """Adjoin all total derivatives D^gamma, 1 <= |gamma| <= r, of the base equations.

    Output order is deterministic: by level, then base equation, then
    multi-index.  A system that is itself a prolongation is prolonged from
    its base equations, reusing the derivatives it already holds.
    """
    if r < 1:
        raise ValueError("prolongation order must be positive")
    ctx = S.context
    n = ctx.n
    done = dict(zip(S.labels, S.equations))
    bases = [b for b, g in S.labels if not any(g)]
    top = S.order - S.base_order + r
    eqs, labels = [], []
    for level in range(top + 1):
        for b in bases:
            for gamma in multi_indices(n, level):
                key = (b, gamma)
                if key not in done:
                    k = first_direction(gamma)
                    done[key] = total_derivative(done[(b, sub_index(gamma, unit(n, k)))], k, ctx)
                eqs.append(done[key])
                labels.append(key)
    return EquationSystem(ctx, S.order + r, eqs, labels, S.base_order)


# --------------------------------------------------------------------------
# numeric jets


@dataclass(frozen=True)
class JetPoint:
    """A q-jet of a local diffeomorphism: source point and Taylor data.

    ``components[(i, alpha)]`` is the value of y^i_alpha; ``alpha = 0`` is
    the target coordinate.
    """

    source: tuple
    components: Mapping[tuple[int, tuple[int, ...]], Fraction]
    order: int

    @property
    def n(self):
        return len(self.source)

    @property
    def target(self):
        n = self.n
        return tuple(self.components[(i, (0,) * n)] for i in range(1, n + 1))

    def __getitem__(self, key):
        i, alpha = key
        return self.components.get((i, tuple(alpha)), Fraction(0))

    def linear_part(self):
        n = self.n
        return [[self[(i, unit(n, k))] for k in range(1, n + 1)] for i in range(1, n + 1)]

    def truncate(self, q):
        comps = {k: v for k, v in self.components.items() if sum(k[1]) <= q}
        return JetPoint(self.source, comps, q)

    def assignment(self) -> dict[Atom, Fraction]:
        """Values of x^i and y^i_alpha as an evaluation point."""
        pt = {base_coord(i + 1): Fraction(v) for i, v in enumerate(self.source)}
        for (i, alpha), v in self.components.items():
            pt[jet_var(i, alpha)] = Fraction(v)
        return pt

    def __eq__(self, other):
        if not isinstance(other, JetPoint):
            return NotImplemented
        if self.n != other.n or self.order != other.order:
            return False
        if tuple(map(Fraction, self.source)) != tuple(map(Fraction, other.source)):
            return False
        keys = set(self.components) | set(other.components)
        return all(self[k] == other[k] for k in keys)

    def __hash__(self):
        return hash((tuple(self.source), self.order))


def make_jet(source: Sequence, components: Mapping, order: int) -> JetPoint:
    n = len(source)
    comps = {}
    for alpha in multi_indices_upto(n, order):
        for i in range(1, n + 1):
            comps[(i, alpha)] = Fraction(components.get((i, alpha), 0))
    return JetPoint(tuple(Fraction(v) for v in source), comps, order)


def identity_jet(x: Sequence, q: int) -> JetPoint:
    n = len(x)
    comps = {(i, (0,) * n): Fraction(x[i - 1]) for i in range(1, n + 1)}
    for i in range(1, n + 1):
        comps[(i, unit(n, i))] = Fraction(1)
    return make_jet(x, comps, q)


_G = "g"  # component name prefix for the outer map in composition formulas


@lru_cache(maxsize=None)
def composition_formulas(n: int, q: int) -> dict:
    """Symbolic Taylor coefficients of g o f.

    The outer map g is represented by target-side derivative atoms
    ``g<i>[beta]@y`` (its Taylor data at y = f(x)); the inner map f by jet
    atoms.  Each coefficient of order r >= 1 is obtained by total
    differentiation, i.e. by the chain rule applied r times.
    """
    ctx = JetContext(n, q, order_cap=max(q, DEFAULT_ORDER_CAP))
    out = {}
    for i in range(1, n + 1):
        e = Expr.of(obj_deriv(f"{_G}{i}", (0,) * n, TARGET))
        out[(i, (0,) * n)] = e
        for r in range(1, q + 1):
            for alpha in multi_indices(n, r):
                k = first_direction(alpha)
                parent = out[(i, sub_index(alpha, unit(n, k)))]
                out[(i, alpha)] = total_derivative(parent, k, ctx)
    return out


def compose_jets(g: JetPoint, f: JetPoint, q: int | None = None) -> JetPoint:
    """The q-jet of g o f (f is applied first)."""
    n = f.n
    if g.n != n:
        raise SourceTargetMismatch("jets live over different dimensions")
    if q is None:
        q = min(f.order, g.order)
    if f.order < q or g.order < q:
        raise ValueError(f"both jets need order >= {q}")
    if tuple(map(Fraction, g.source)) != tuple(map(Fraction, f.target)):
        raise SourceTargetMismatch(f"target {f.target} of f differs from source {g.source} of g")
    point = {}
    for (i, alpha), v in f.components.items():
        if sum(alpha) <= q:
            point[jet_var(i, alpha)] = v
    for (i, beta), v in g.components.items():
        if sum(beta) <= q:
            point[obj_deriv(f"{_G}{i}", beta, TARGET)] = v
    formulas = composition_formulas(n, q)
    comps = {key: eval_at(e, point) for key, e in formulas.items()}
    return JetPoint(tuple(Fraction(v) for v in f.source), comps, q)


def _solve(matrix, rhs):
    """Exact solve of a square system over Q (raises on singular matrices)."""
    m = len(matrix)
    a = [list(map(Fraction, row)) + [Fraction(b)] for row, b in zip(matrix, rhs)]
    for c in range(m):
        p = next((r for r in range(c, m) if a[r][c] != 0), None)
        if p is None:
            raise SingularLinearPart("linear part is singular")
        a[c], a[p] = a[p], a[c]
        piv = a[c][c]
        a[c] = [v / piv for v in a[c]]
        for r in range(m):
            if r != c and a[r][c] != 0:
                f = a[r][c]
                a[r] = [v - f * w for v, w in zip(a[r], a[c])]
    return [a[r][m] for r in range(m)]


def invert_jet(f: JetPoint, q: int | None = None) -> JetPoint:
    """The q-jet g with g o f = identity at the source of f.

    The linear part is the inverse matrix; each higher order is obtained
    from a linear solve in which the lower orders of g are already known.
    """
    n = f.n
    q = f.order if q is None else q
    lin = f.linear_part()
    # column k of the inverse solves lin * c = e_k
    cols = [_solve(lin, [1 if i == k else 0 for i in range(n)]) for k in range(n)]
    comps = {(i, (0,) * n): Fraction(f.source[i - 1]) for i in range(1, n + 1)}
    for i in range(1, n + 1):
        for k in range(1, n + 1):
            comps[(i, unit(n, k))] = cols[k - 1][i - 1]
    formulas = composition_formulas(n, q)
    base = {}
    for (i, alpha), v in f.components.items():
        if sum(alpha) <= q:
            base[jet_var(i, alpha)] = v
    for r in range(2, q + 1):
        unknowns = [obj_deriv(f"{_G}{i}", b, TARGET) for b in multi_indices(n, r) for i in range(1, n + 1)]
        point = dict(base)
        for (i, beta), v in comps.items():
            point[obj_deriv(f"{_G}{i}", beta, TARGET)] = v
        rows, rhs = [], []
        for alpha in multi_indices(n, r):
            for i in range(1, n + 1):
                e = formulas[(i, alpha)]
                # affine in the order-r unknowns: constant part and coefficients
                at0 = {**point, **{u: 0 for u in unknowns}}
                c0 = eval_at(e, at0)
                rows.append([eval_at(e.diff(u), at0) for u in unknowns])
                rhs.append(-c0)
        sol = _solve(rows, rhs)
        for u, v in zip(unknowns, sol):
            comps[(int(u.comp[len(_G):]), u.index)] = v
    return make_jet(f.target, comps, q)


# --------------------------------------------------------------------------
# random data for property checks


def random_rational(rng, bound: int = 5, den: int = 4, nonzero: bool = False) -> Fraction:
    while True:
        v = Fraction(rng.randint(-bound * den, bound * den), rng.randint(1, den))
        if v or not nonzero:
            return v


def random_jet(n: int, q: int, rng, source=None, target=None) -> JetPoint:
    """A random invertible q-jet with rational entries."""
    src = tuple(source) if source is not None else tuple(random_rational(rng) for _ in range(n))
    tgt = tuple(target) if target is not None else tuple(random_rational(rng) for _ in range(n))
    while True:
        comps = {(i, (0,) * n): Fraction(tgt[i - 1]) for i in range(1, n + 1)}
        for r in range(1, q + 1):
            for alpha in multi_indices(n, r):
                for i in range(1, n + 1):
                    comps[(i, alpha)] = random_rational(rng)
        f = JetPoint(tuple(map(Fraction, src)), comps, q)
        if _det(f.linear_part()) != 0:
            return f


def _det(m):
    m = [list(map(Fraction, row)) for row in m]
    n = len(m)
    det = Fraction(1)
    for c in range(n):
        p = next((r for r in range(c, n) if m[r][c] != 0), None)
        if p is None:
            return Fraction(0)
        if p != c:
            m[c], m[p] = m[p], m[c]
            det = -det
        det *= m[c][c]
        for r in range(c + 1, n):
            f = m[r][c] / m[c][c]
            m[r] = [a - f * b for a, b in zip(m[r], m[c])]
    return det

"""Exact rational functions over a growing registry of atoms.

Polynomials are stored as ``flint.fmpq_mpoly`` in graded-lexicographic
order, with one generator per atom (generator ``v<k>`` is the atom with
interning id ``k``).  Contexts have a power-of-two capacity so that the
registry can grow without re-creating every expression; expressions of
different capacity are lifted on demand.

An :class:`Expr` is always canonical: numerator and denominator are coprime
and the denominator is monic.  Two expressions are mathematically equal iff
their canonical forms are identical.
"""

from __future__ import annotations

import threading
from contextlib import contextmanager
from dataclasses import dataclass
from fractions import Fraction
from functools import lru_cache
from typing import Iterable, Mapping

import flint

from .errors import (
    DivisionByZero,
    IdenticallyZeroDenominator,
    ResourceLimit,
    UnboundAtom,
)

__all__ = [
    "Atom",
    "Expr",
    "SOURCE",
    "TARGET",
    "base_coord",
    "jet_var",
    "obj_deriv",
    "atom_by_id",
    "normalize",
    "partial_wrt_atom",
    "substitute",
    "eval_at",
    "poly_gcd",
    "term_cap",
]

SOURCE = "x"
TARGET = "y"

_MIN_CAPACITY = 64
DEFAULT_TERM_CAP = 200_000
_term_cap = DEFAULT_TERM_CAP


# --------------------------------------------------------------------------
# atoms


@dataclass(frozen=True, eq=False)
class Atom:
    """An interned indeterminate.

    ``kind`` is ``"x"`` (base coordinate x^i), ``"y"`` (jet variable
    y^i_alpha, alpha may be zero for the target coordinate) or ``"w"``
    (derivative of an object component at the source or the target).
    """

    kind: str
    comp: object
    index: tuple
    side: str | None
    id: int

    @property
    def order(self):
        return sum(self.index)

    def __repr__(self):
        return f"Atom({self})"

    def __str__(self):
        if self.kind == "x":
            return f"x{self.comp}"
        if self.kind == "y":
            if not any(self.index):
                return f"y{self.comp}"
            dirs = _directions(self.index)
            return "J[" + ",".join(str(v) for v in (self.comp, *dirs)) + "]"
        dirs = _directions(self.index)
        d = "[" + ",".join(str(k) for k in dirs) + "]" if dirs else ""
        return f"{self.comp}{d}@{self.side}"

    def __lt__(self, other):
        return self.id < other.id


def _directions(alpha):
    out = []
    for k, a in enumerate(alpha, start=1):
        out.extend([k] * a)
    return out


_lock = threading.Lock()
_atoms: list[Atom] = []
_by_key: dict[tuple, Atom] = {}


def _intern(kind, comp, index, side):
    key = (kind, comp, tuple(index), side)
    atom = _by_key.get(key)
    if atom is not None:
        return atom
    with _lock:
        atom = _by_key.get(key)
        if atom is None:
            atom = Atom(kind, comp, tuple(index), side, len(_atoms))
            _atoms.append(atom)
            _by_key[key] = atom
    return atom


def base_coord(i: int) -> Atom:
    """Source coordinate x^i (1-based)."""
    return _intern("x", int(i), (), None)


def jet_var(i: int, alpha) -> Atom:
    """Jet coordinate y^i_alpha; ``alpha`` all zero gives the target coordinate y^i."""
    alpha = tuple(int(a) for a in alpha)
    if any(a < 0 for a in alpha):
        raise ValueError(f"negative multi-index {alpha}")
    return _intern("y", int(i), alpha, None)


def obj_deriv(name: str, beta, side: str) -> Atom:
    """Formal derivative d^beta of the object component ``name`` at source or target."""
    if side not in (SOURCE, TARGET):
        raise ValueError(f"side must be {SOURCE!r} or {TARGET!r}, got {side!r}")
    beta = tuple(int(b) for b in beta)
    return _intern("w", str(name), beta, side)


def atom_by_id(k: int) -> Atom:
    return _atoms[k]


def registered_atoms() -> list[Atom]:
    return list(_atoms)


# --------------------------------------------------------------------------
# flint contexts


def _capacity_for(nvars):
    cap = _MIN_CAPACITY
    while cap < nvars:
        cap *= 2
    return cap


@lru_cache(maxsize=None)
def _ctx(cap):
    return flint.fmpq_mpoly_ctx.get(("v", cap), "deglex")


@lru_cache(maxsize=None)
def _hctx(cap):
    names = tuple(f"v{k}" for k in range(cap)) + ("h",)
    return flint.fmpq_mpoly_ctx.get(names, "deglex")


def _cap(p):
    return p.context().nvars()


def _lift(p, cap):
    if _cap(p) == cap:
        return p
    return p.project_to_context(_ctx(cap))


def _to_fraction(q) -> Fraction:
    return Fraction(int(q.p), int(q.q))


def _fmpq(v) -> flint.fmpq:
    v = Fraction(v)
    return flint.fmpq(v.numerator, v.denominator)


@contextmanager
def term_cap(limit: int):
    """Temporarily change the hard cap on polynomial term counts."""
    global _term_cap
    old = _term_cap
    _term_cap = int(limit)
    try:
        yield
    finally:
        _term_cap = old


def current_term_cap() -> int:
    return _term_cap


# --------------------------------------------------------------------------
# expressions


class Expr:
    """Canonical rational function ``num/den`` in registered atoms."""

    __slots__ = ("num", "den", "_hash")

    def __init__(self, num, den, _canonical=False):
        if not _canonical:
            num, den = _canonicalize(num, den)
        self.num = num
        self.den = den
        self._hash = None

    # construction ---------------------------------------------------------

    @staticmethod
    def const(value) -> "Expr":
        ctx = _ctx(_MIN_CAPACITY)
        return Expr(ctx.constant(_fmpq(value)), ctx.constant(1), _canonical=True)

    @staticmethod
    def of(atom: Atom) -> "Expr":
        ctx = _ctx(_capacity_for(atom.id + 1))
        return Expr(ctx.gen(atom.id), ctx.constant(1), _canonical=True)

    @staticmethod
    def coerce(value) -> "Expr":
        if isinstance(value, Expr):
            return value
        if isinstance(value, Atom):
            return Expr.of(value)
        if isinstance(value, (int, Fraction)):
            return Expr.const(value)
        if isinstance(value, flint.fmpq):
            return Expr.const(_to_fraction(value))
        raise TypeError(f"cannot convert {type(value).__name__} to Expr")

    # predicates and accessors --------------------------------------------

    @property
    def capacity(self):
        return _cap(self.num)

    def is_zero(self) -> bool:
        return self.num.is_zero()

    def is_constant(self) -> bool:
        return self.num.is_constant() and self.den.is_constant()

    def is_polynomial(self) -> bool:
        return self.den.is_constant()

    def constant_value(self) -> Fraction:
        if not self.is_constant():
            raise ValueError("expression is not constant")
        if self.num.is_zero():
            return Fraction(0)
        return _to_fraction(self.num.leading_coefficient())

    def numerator(self) -> "Expr":
        return Expr(self.num, self.num.context().constant(1), _canonical=True)

    def denominator(self) -> "Expr":
        return Expr(self.den, self.den.context().constant(1), _canonical=True)

    def term_count(self) -> int:
        return len(self.num) + len(self.den)

    def atoms(self) -> list[Atom]:
        """Atoms occurring in numerator or denominator, in interning order."""
        used = set()
        for p in (self.num, self.den):
            for k, d in enumerate(p.degrees()):
                if d > 0:
                    used.add(k)
        return [_atoms[k] for k in sorted(used)]

    def has_any(self, atoms: Iterable[Atom]) -> bool:
        ids = {a.id for a in atoms}
        for p in (self.num, self.den):
            degs = p.degrees()
            if any(k < len(degs) and degs[k] > 0 for k in ids):
                return True
        return False

    def degree_in(self, atom: Atom) -> int:
        degs = self.num.degrees()
        return max(degs[atom.id], 0) if atom.id < len(degs) else 0

    # arithmetic -----------------------------------------------------------

    def __add__(self, other):
        try:
            other = Expr.coerce(other)
        except TypeError:
            return NotImplemented
        if other.num.is_zero():
            return self
        if self.num.is_zero():
            return other
        cap = max(self.capacity, other.capacity)
        n1, d1 = _lift(self.num, cap), _lift(self.den, cap)
        n2, d2 = _lift(other.num, cap), _lift(other.den, cap)
        if d1 == d2:
            return Expr(n1 + n2, d1)
        if d1.is_constant() and d2.is_constant():
            return Expr(n1 * d2 + n2 * d1, d1 * d2)
        g = d1.gcd(d2)
        if g.is_one():
            return Expr(n1 * d2 + n2 * d1, d1 * d2)
        d2g = d2 / g
        return Expr(n1 * d2g + n2 * (d1 / g), d1 * d2g)

    __radd__ = __add__

    def __neg__(self):
        return Expr(-self.num, self.den, _canonical=True)

    def __sub__(self, other):
        try:
            other = Expr.coerce(other)
        except TypeError:
            return NotImplemented
        return self + (-other)

    def __rsub__(self, other):
        return Expr.coerce(other) - self

    def __mul__(self, other):
        try:
            other = Expr.coerce(other)
        except TypeError:
            return NotImplemented
        if self.num.is_zero() or other.num.is_zero():
            return Expr.const(0)
        cap = max(self.capacity, other.capacity)
        n1, d1 = _lift(self.num, cap), _lift(self.den, cap)
        n2, d2 = _lift(other.num, cap), _lift(other.den, cap)
        if d1.is_constant() and d2.is_constant():
            return Expr(n1 * n2, d1 * d2)
        g1 = n1.gcd(d2)
        g2 = n2.gcd(d1)
        if not g1.is_one():
            n1, d2 = n1 / g1, d2 / g1
        if not g2.is_one():
            n2, d1 = n2 / g2, d1 / g2
        return Expr(*_monic(n1 * n2, d1 * d2), _canonical=True)._checked()

    __rmul__ = __mul__

    def __truediv__(self, other):
        try:
            other = Expr.coerce(other)
        except TypeError:
            return NotImplemented
        if other.num.is_zero():
            raise IdenticallyZeroDenominator("division by an identically zero expression")
        return self * other.inverse()

    def __rtruediv__(self, other):
        return Expr.coerce(other) / self

    def inverse(self) -> "Expr":
        if self.num.is_zero():
            raise IdenticallyZeroDenominator("inverse of an identically zero expression")
        return Expr(*_monic(self.den, self.num), _canonical=True)

    def __pow__(self, k):
        if not isinstance(k, int):
            return NotImplemented
        if k < 0:
            return self.inverse() ** (-k)
        if k == 0:
            return Expr.const(1)
        return Expr(self.num**k, self.den**k, _canonical=True)._checked()

    # comparison -----------------------------------------------------------

    def __eq__(self, other):
        try:
            other = Expr.coerce(other)
        except TypeError:
            return NotImplemented
        cap = max(self.capacity, other.capacity)
        return (
            _lift(self.num, cap) == _lift(other.num, cap)
            and _lift(self.den, cap) == _lift(other.den, cap)
        )

    def __hash__(self):
        if self._hash is None:
            self._hash = hash((str(self.num), str(self.den)))
        return self._hash

    def __bool__(self):
        return not self.num.is_zero()

    # calculus and substitution --------------------------------------------

    def diff(self, atom: Atom) -> "Expr":
        """Formal partial derivative, treating all atoms as independent."""
        if atom.id >= self.capacity:
            return Expr.const(0)
        k = atom.id
        dn = self.num.derivative(k)
        dd = self.den.derivative(k)
        if dd.is_zero():
            if dn.is_zero():
                return Expr.const(0)
            return Expr(dn, self.den)
        return Expr(dn * self.den - self.num * dd, self.den * self.den)

    def subs(self, bindings: Mapping[Atom, object]) -> "Expr":
        return substitute(self, bindings)

    def eval_at(self, point: Mapping[Atom, object]) -> Fraction:
        return eval_at(self, point)

    # display --------------------------------------------------------------

    def __str__(self):
        return to_string(self)

    def __repr__(self):
        return f"Expr({to_string(self)!r})"

    def _checked(self):
        if len(self.num) + len(self.den) > _term_cap:
            raise ResourceLimit(
                f"expression has {len(self.num) + len(self.den)} terms, cap is {_term_cap}"
            )
        return self


def _monic(num, den):
    lc = den.leading_coefficient()
    if lc != 1:
        num = num / lc
        den = den / lc
    return num, den


def _canonicalize(num, den):
    if den.is_zero():
        raise IdenticallyZeroDenominator("denominator is identically zero")
    cap = max(_cap(num), _cap(den))
    num, den = _lift(num, cap), _lift(den, cap)
    if num.is_zero():
        ctx = _ctx(cap)
        return ctx.constant(0), ctx.constant(1)
    if not den.is_constant():
        g = num.gcd(den)
        if not g.is_one():
            num, den = num / g, den / g
    num, den = _monic(num, den)
    if len(num) + len(den) > _term_cap:
        raise ResourceLimit(f"expression has {len(num) + len(den)} terms, cap is {_term_cap}")
    return num, den


# --------------------------------------------------------------------------
# module-level operations


def normalize(raw) -> Expr:
    """Canonical form of ``raw``.

    ``raw`` may be an :class:`Expr` (returned unchanged, it is already
    canonical), an :class:`Atom`, a rational number, or a string in the
    expression grammar of :mod:`jetgroupoid.dsl`.
    """
    if isinstance(raw, str):
        from .dsl import parse_expr

        return parse_expr(raw)
    return Expr.coerce(raw)


def partial_wrt_atom(e: Expr, v: Atom) -> Expr:
    return Expr.coerce(e).diff(v)


def substitute(e, bindings: Mapping[Atom, object]) -> Expr:
    """Simultaneous substitution ``atom -> value`` followed by normalization."""
    e = Expr.coerce(e)
    if not bindings:
        return e
    values = {a: Expr.coerce(v) for a, v in bindings.items()}
    present = {a.id for a in e.atoms()}
    values = {a: v for a, v in values.items() if a.id in present}
    if not values:
        return e
    if all(v.is_constant() for v in values.values()):
        consts = {a.id: _fmpq(v.constant_value()) for a, v in values.items()}
        num = e.num.subs(consts)
        den = e.den.subs(consts)
        if den.is_zero():
            raise IdenticallyZeroDenominator("substitution made the denominator vanish")
        return Expr(num, den)
    cap = max([e.capacity] + [v.capacity for v in values.values()])
    cap = max(cap, _capacity_for(max(a.id for a in values) + 1))
    ctx = _ctx(cap)
    # common denominator q of all values; p_a = value * q is a polynomial
    q = ctx.constant(1)
    for v in values.values():
        d = _lift(v.den, cap)
        if not d.is_constant():
            q = q * (d / q.gcd(d))
    polys = {a.id: _lift(v.num, cap) * (q / _lift(v.den, cap)) for a, v in values.items()}
    num, dn = _homogeneous_compose(_lift(e.num, cap), polys, q, cap)
    den, dd = _homogeneous_compose(_lift(e.den, cap), polys, q, cap)
    if dn > dd:
        den = den * q ** (dn - dd)
    elif dd > dn:
        num = num * q ** (dd - dn)
    if den.is_zero():
        raise IdenticallyZeroDenominator("substitution made the denominator vanish")
    return Expr(num, den)


def _homogeneous_compose(p, polys, q, cap):
    """Return (P, D) with P = q^D * p(v -> polys[v]/q) a polynomial."""
    ids = list(polys)
    if q.is_one():
        args = [polys.get(k, g) for k, g in enumerate(_ctx(cap).gens())]
        return p.compose(*args, ctx=_ctx(cap)), 0
    terms = p.to_dict()
    if not terms:
        return p, 0
    deg = {m: sum(m[k] for k in ids) for m in terms}
    top = max(deg.values())
    hdict = {m + (top - deg[m],): c for m, c in terms.items()}
    ph = _hctx(cap).from_dict(hdict)
    args = [polys.get(k, g) for k, g in enumerate(_ctx(cap).gens())] + [q]
    return ph.compose(*args, ctx=_ctx(cap)), top


def eval_at(e, point: Mapping[Atom, object]) -> Fraction:
    """Exact value of ``e`` at a point binding every atom of ``e``."""
    e = Expr.coerce(e)
    consts = {}
    for a in e.atoms():
        if a not in point:
            raise UnboundAtom(str(a))
        consts[a.id] = _fmpq(point[a])
    num = e.num.subs(consts) if consts else e.num
    den = e.den.subs(consts) if consts else e.den
    if den.is_zero():
        raise DivisionByZero("denominator vanishes at the evaluation point")
    n = Fraction(0) if num.is_zero() else _to_fraction(num.leading_coefficient())
    return n / _to_fraction(den.leading_coefficient())


def poly_gcd(a: Expr, b: Expr) -> Expr:
    """Monic gcd of the numerators of two expressions (zero-safe)."""
    a, b = Expr.coerce(a), Expr.coerce(b)
    cap = max(a.capacity, b.capacity)
    g = _lift(a.num, cap).gcd(_lift(b.num, cap))
    if g.is_zero():
        return Expr.const(0)
    return Expr(*_monic(g, g.context().constant(1)), _canonical=True)


def factor(e: Expr) -> list[tuple[Expr, int]]:
    """Irreducible factors of the numerator (with multiplicity) and, negated, of the denominator."""
    out = []
    for p, sign in ((e.num, 1), (e.den, -1)):
        if p.is_constant():
            continue
        _, facs = p.factor()
        for f, m in facs:
            f = _monic(f, f.context().constant(1))[0]
            out.append((Expr(f, f.context().constant(1), _canonical=True), sign * int(m)))
    return out


def poly_terms(p):
    """Terms of a flint polynomial as (Fraction, ((atom, exponent), ...)) in monomial order."""
    out = []
    for mono, c in p.terms():
        out.append((_to_fraction(c), tuple((_atoms[k], d) for k, d in enumerate(mono) if d)))
    return out


def to_string(e: Expr, name_of=None) -> str:
    """Render ``e`` in the expression grammar; ``name_of`` overrides atom names."""
    name_of = name_of or str
    num = _poly_str(e.num, name_of)
    if e.den.is_one():
        return num
    den = _poly_str(e.den, name_of)
    if len(e.num) > 1:
        num = f"({num})"
    return f"{num}/({den})"


def _poly_str(p, name_of) -> str:
    if p.is_zero():
        return "0"
    parts = []
    for c, mono in poly_terms(p):
        factors = [name_of(a) if d == 1 else f"{name_of(a)}^{d}" for a, d in mono]
        sign = "-" if c < 0 else "+"
        c = abs(c)
        if not factors:
            body = str(c)
        elif c == 1:
            body = "*".join(factors)
        else:
            body = str(c) + "*" + "*".join(factors)
        parts.append((sign, body))
    first_sign, first = parts[0]
    out = ("-" if first_sign == "-" else "") + first
    for sign, body in parts[1:]:
        out += f" {sign} {body}"
    return out


def coefficients(e: Expr, atoms: Iterable[Atom]) -> dict[tuple, Expr]:
    """Numerator of ``e`` as a polynomial in ``atoms``.

    Returns ``{exponents: coefficient}`` where the coefficients are
    polynomials in the remaining atoms.
    """
    e = Expr.coerce(e)
    ids = [a.id for a in atoms]
    ctx = e.num.context()
    groups: dict[tuple, dict] = {}
    for mono, c in e.num.to_dict().items():
        key = tuple(mono[k] if k < len(mono) else 0 for k in ids)
        rest = list(mono)
        for k in ids:
            if k < len(rest):
                rest[k] = 0
        groups.setdefault(key, {})[tuple(rest)] = c
    return {k: Expr(ctx.from_dict(d), ctx.constant(1), _canonical=True) for k, d in groups.items()}

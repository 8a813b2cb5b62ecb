import random
from fractions import Fraction

import flint
import pytest
from hypothesis import settings, strategies as st

from jetgroupoid.kernel import Expr, base_coord

settings.register_profile("default", deadline=None, max_examples=40)
settings.load_profile("default")

X = [base_coord(i) for i in (1, 2, 3)]


def random_poly(rng, atoms=X, terms=4, degree=3, coeff=5):
    e = Expr.const(0)
    for _ in range(terms):
        t = Expr.const(rng.randint(-coeff, coeff))
        for _ in range(rng.randint(0, degree)):
            t = t * Expr.of(rng.choice(atoms))
        e = e + t
    return e


def random_rational_function(rng, atoms=X):
    while True:
        den = random_poly(rng, atoms, terms=3, degree=2)
        if not den.is_zero():
            return random_poly(rng, atoms) / den


@st.composite
def exprs(draw, atoms=X):
    seed = draw(st.integers(0, 10**9))
    return random_rational_function(random.Random(seed), atoms)


@st.composite
def polys(draw, atoms=X):
    seed = draw(st.integers(0, 10**9))
    return random_poly(random.Random(seed), atoms)


def rational_point(rng, atoms=X):
    return {a: Fraction(rng.randint(-30, 30), rng.randint(1, 7)) for a in atoms}


@pytest.fixture
def rng():
    return random.Random(20240613)


def pole_distance(e, atom, pt):
    """Distance from ``pt`` to the nearest complex pole of ``e`` along ``atom``.

    Central differences lose accuracy like h**2 / d**2 near a pole at
    distance d, so finite-difference checks sample only where d is not tiny.
    """
    from jetgroupoid.kernel import coefficients, substitute

    others = {a: v for a, v in pt.items() if a != atom}
    line = substitute(e.denominator(), others)
    coeffs = coefficients(line, [atom])
    degree = max((k[0] for k in coeffs), default=0)
    if degree == 0:
        return float("inf")
    dense = [Fraction(0)] * (degree + 1)
    for (k,), c in coeffs.items():
        dense[k] = c.constant_value()
    poly = flint.fmpq_poly([flint.fmpq(c.numerator, c.denominator) for c in dense])
    x0 = complex(float(pt[atom]), 0.0)
    return min(abs(complex(r) - x0) for r, _ in poly.complex_roots())


FD_STEP = Fraction(1, 10**4)
FD_TOL = 1e-6


def finite_difference_ok(e, atom, rng, h=FD_STEP, tol=FD_TOL, points=5):
    """Central differences against ``partial_wrt_atom`` at ``points`` rational points."""
    from jetgroupoid.errors import DivisionByZero
    from jetgroupoid.kernel import eval_at, partial_wrt_atom

    d = partial_wrt_atom(e, atom)
    checked = 0
    while checked < points:
        pt = rational_point(rng, e.atoms() + [atom])
        if pole_distance(e, atom, pt) < 1:
            continue
        plus, minus = dict(pt), dict(pt)
        plus[atom] += h
        minus[atom] -= h
        try:
            exact = eval_at(d, pt)
            fd = (eval_at(e, plus) - eval_at(e, minus)) / (2 * h)
        except DivisionByZero:
            continue
        checked += 1
        scale = max(abs(exact), Fraction(1))
        if abs(float((fd - exact) / scale)) >= tol:
            return False
    return True


def pytest_terminal_summary(terminalreporter):
    import sys

    acceptance = sys.modules.get("test_acceptance")
    if acceptance is None or not acceptance.RESULTS:
        return
    terminalreporter.section("acceptance criteria")
    for line in acceptance.result_lines():
        terminalreporter.write_line(line)

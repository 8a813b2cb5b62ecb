"""Closed-form Gaussian curvature of a 2D metric (Brioschi formula).

Kept independent of the elimination machinery so it can serve as a
reference for the derived metric invariant.
"""

from __future__ import annotations

from .kernel import SOURCE, Expr, base_coord, normalize, obj_deriv


def _det3(m):
    return (
        m[0][0] * (m[1][1] * m[2][2] - m[1][2] * m[2][1])
        - m[0][1] * (m[1][0] * m[2][2] - m[1][2] * m[2][0])
        + m[0][2] * (m[1][0] * m[2][1] - m[1][1] * m[2][0])
    )


def brioschi(E, F, G, d) -> Expr:
    """Curvature of ``E du^2 + 2F du dv + G dv^2``.

    Parameters
    ----------
    E, F, G : Expr
        Metric coefficients.
    d : callable
        ``d(name, i, j)`` returns the derivative of ``name`` (one of
        ``"E"``, ``"F"``, ``"G"``) taken ``i`` times in u and ``j`` times in v.
    """
    half = Expr.const(1) / 2
    a = [
        [-half * d("E", 0, 2) + d("F", 1, 1) - half * d("G", 2, 0), half * d("E", 1, 0), d("F", 1, 0) - half * d("E", 0, 1)],
        [d("F", 0, 1) - half * d("G", 1, 0), E, F],
        [half * d("G", 0, 1), F, G],
    ]
    zero = Expr.const(0)
    b = [
        [zero, half * d("E", 0, 1), half * d("G", 1, 0)],
        [half * d("E", 0, 1), E, F],
        [half * d("G", 1, 0), F, G],
    ]
    w = E * G - F * F
    return (_det3(a) - _det3(b)) / (w * w)


def brioschi_symbolic(names=("u11", "u12", "u22"), side: str = SOURCE) -> Expr:
    """Curvature in the formal derivative atoms of a metric with the given component names."""
    label = dict(zip("EFG", names))

    def d(name, i, j):
        return Expr.of(obj_deriv(label[name], (i, j), side))

    return brioschi(d("E", 0, 0), d("F", 0, 0), d("G", 0, 0), d)


def brioschi_concrete(E, F, G) -> Expr:
    """Curvature of a metric given by rational functions of x1, x2 (Exprs or strings)."""
    comps = {"E": normalize(E), "F": normalize(F), "G": normalize(G)}
    u, v = base_coord(1), base_coord(2)

    def d(name, i, j):
        e = comps[name]
        for _ in range(i):
            e = e.diff(u)
        for _ in range(j):
            e = e.diff(v)
        return e

    return brioschi(comps["E"], comps["F"], comps["G"], d)

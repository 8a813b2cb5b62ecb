"""Exact dense linear algebra over the rationals.

Matrices are passed around as lists of rows with :class:`~fractions.Fraction`
(or int) entries; the work is done by FLINT's ``fmpq_mat``.
"""

from __future__ import annotations

from fractions import Fraction

import flint


def _to_flint(rows, ncols=None):
    nrows = len(rows)
    ncols = len(rows[0]) if rows else (ncols or 0)
    flat = []
    for row in rows:
        for v in row:
            flat.append(flint.fmpq(v.numerator, v.denominator) if isinstance(v, Fraction) else flint.fmpq(v))
    return flint.fmpq_mat(nrows, ncols, flat)


def _from_flint(m) -> list[list[Fraction]]:
    return [[Fraction(int(x.p), int(x.q)) for x in row] for row in m.tolist()]


def rref(rows):
    """Reduced row echelon form.  Returns ``(matrix, pivot_columns)``."""
    if not rows:
        return [], []
    r, rk = _to_flint(rows).rref()
    m = _from_flint(r)
    pivots = []
    for i in range(rk):
        pivots.append(next(j for j, v in enumerate(m[i]) if v != 0))
    return m, pivots


def rank(rows) -> int:
    if not rows or not rows[0]:
        return 0
    return _to_flint(rows).rank()


def nullspace(rows, ncols: int | None = None):
    """Basis of ``{v : rows v = 0}``; vector ``j`` is 1 at the j-th free column."""
    if ncols is None:
        ncols = len(rows[0]) if rows else 0
    if not rows:
        return [[Fraction(int(i == j)) for i in range(ncols)] for j in range(ncols)]
    m, pivots = rref(rows)
    free = [c for c in range(ncols) if c not in set(pivots)]
    basis = []
    for f in free:
        v = [Fraction(0)] * ncols
        v[f] = Fraction(1)
        for r, pc in enumerate(pivots):
            v[pc] = -m[r][f]
        basis.append(v)
    return basis


def matmul(a, b):
    if not a:
        return []
    if not b or not b[0]:
        return [[] for _ in a]
    return _from_flint(_to_flint(a) * _to_flint(b))


def is_zero(a) -> bool:
    return all(v == 0 for row in a for v in row)

"""Symbols of jet systems, the Spencer delta-complex and its cohomology.

Elements of ``S^r T* (x) V`` are stored in derivative coordinates
``c[i, alpha]`` (the same coordinates as the jet variables ``y^i_alpha``).
In these coordinates the contraction with ``d/dx^k`` is the shift
``(d_k c)[i, beta] = c[i, beta + e_k]``, which keeps every map below an
integer matrix.
"""

from __future__ import annotations

import random
from dataclasses import dataclass, field
from fractions import Fraction
from itertools import combinations
from typing import Sequence

from .errors import InadmissiblePoint
from .jets import EquationSystem, add_index, multi_indices, unit
from .jets import _det as det_values
from .kernel import eval_at, jet_var
from .linalg import matmul, nullspace, rank, rref


def ambient_basis(n: int, r: int) -> list[tuple[int, tuple[int, ...]]]:
    """Coordinates ``(i, alpha)`` of ``S^r T* (x) V`` in column order."""
    if r < 0:
        return []
    return [(i, alpha) for alpha in multi_indices(n, r) for i in range(1, n + 1)]


@dataclass
class SymbolSpace:
    """Kernel of the symbol matrix at one order, with an exact basis."""

    order: int
    n: int
    basis: list[list[Fraction]]
    free_columns: list[int]

    @property
    def ambient_dim(self) -> int:
        return len(ambient_basis(self.n, self.order))

    @property
    def dim(self) -> int:
        return len(self.basis)

    def coordinates(self, v: Sequence[Fraction]) -> list[Fraction]:
        """Coordinates of a member ``v`` in :attr:`basis` (read off at the free columns)."""
        return [Fraction(v[c]) for c in self.free_columns]

    def contains(self, v, matrix) -> bool:
        return all(sum((a * b for a, b in zip(row, v)), Fraction(0)) == 0 for row in matrix)


def _kernel_space(matrix, n: int, r: int) -> SymbolSpace:
    ncols = len(ambient_basis(n, r))
    if not matrix:
        basis = [[Fraction(int(i == j)) for i in range(ncols)] for j in range(ncols)]
        return SymbolSpace(r, n, basis, list(range(ncols)))
    _, pivots = rref(matrix)
    return SymbolSpace(r, n, nullspace(matrix, ncols), [c for c in range(ncols) if c not in pivots])


# --------------------------------------------------------------------------
# symbol matrices


def _check_point(point, action=None):
    if action is None:
        return
    vals = {}
    for b, c in enumerate(action.components):
        key = action.target_atom(b)
        if key in point:
            vals[c] = point[key]
    if len(vals) == action.m and not action.is_admissible(vals):
        raise InadmissiblePoint("fibre values violate the nondegeneracy condition")
    n = action.n
    lin = [[point.get(jet_var(i, unit(n, k)), 0) for k in range(1, n + 1)] for i in range(1, n + 1)]
    if det_values(lin) == 0:
        raise InadmissiblePoint("the linear part of the jet is singular")


def symbol_matrix(S: EquationSystem, order: int, point, action=None) -> list[list[Fraction]]:
    """Coefficients of the order-``order`` jets in the equations of that prolongation level."""
    _check_point(point, action)
    cols = [jet_var(i, alpha) for i, alpha in ambient_basis(S.context.n, order)]
    rows = [e for j, e in enumerate(S.equations) if S.level(j) == order]
    out = []
    for e in rows:
        row = []
        for u in cols:
            c = e.diff(u)
            try:
                row.append(eval_at(c, point))
            except KeyError as err:
                raise InadmissiblePoint(f"point does not bind {err}") from None
            except ZeroDivisionError:
                raise InadmissiblePoint("a coefficient is singular at the point") from None
        out.append(row)
    return out


def prolong_symbol(matrix, n: int, q: int, r: int) -> list[list[Fraction]]:
    """Symbol matrix of the r-th prolongation, built from the order-q symbol.

    The top-order part of ``D^gamma e`` is ``sum sigma[i, alpha] y^i_{alpha+gamma}``,
    so every row of the order-q symbol is shifted by each ``gamma`` of order r.
    """
    src = ambient_basis(n, q)
    dst = {c: j for j, c in enumerate(ambient_basis(n, q + r))}
    out = []
    for gamma in multi_indices(n, r):
        for row in matrix:
            new = [Fraction(0)] * len(dst)
            for (i, alpha), v in zip(src, row):
                if v:
                    new[dst[(i, add_index(alpha, gamma))]] += v
            out.append(new)
    return out


def symbol_spaces(S: EquationSystem, q: int, top: int, point, action=None) -> dict[int, SymbolSpace]:
    """``g_r`` for ``0 <= r <= top``: the full space below ``q``, prolonged kernels from ``q`` on."""
    n = S.context.n
    base = symbol_matrix(S, q, point, action)
    spaces = {}
    for r in range(0, top + 1):
        if r < q:
            spaces[r] = _kernel_space([], n, r)
        else:
            spaces[r] = _kernel_space(prolong_symbol(base, n, q, r - q), n, r)
    return spaces


def symbol_dims(S: EquationSystem, q: int, r_max: int, point, action=None) -> list[int]:
    """``dim g_q, ..., dim g_{q+r_max}``."""
    spaces = symbol_spaces(S, q, q + r_max, point, action)
    return [spaces[r].dim for r in range(q, q + r_max + 1)]


# --------------------------------------------------------------------------
# the delta complex


def _shift(v, n, r, k):
    """``d_k`` from ``S^r`` to ``S^{r-1}`` in ambient coordinates."""
    src = {c: j for j, c in enumerate(ambient_basis(n, r))}
    out = []
    for i, beta in ambient_basis(n, r - 1):
        out.append(v[src[(i, add_index(beta, unit(n, k)))]])
    return out


def forms(n: int, s: int) -> list[tuple[int, ...]]:
    return list(combinations(range(1, n + 1), s))


def delta_map(s: int, r: int, g_hi: SymbolSpace, g_lo: SymbolSpace) -> list[list[Fraction]]:
    """Matrix of ``delta : L^s (x) g_{r+1} -> L^{s+1} (x) g_r``.

    Bases are ordered (form, symbol basis vector); columns index the
    domain.  ``(delta phi)_L = sum_j (-1)^j d_{l_j} phi_{L - l_j}``.
    """
    n = g_hi.n
    dom = [(K, b) for K in forms(n, s) for b in range(g_hi.dim)]
    cod_forms = forms(n, s + 1)
    cod_index = {(L, b): j for j, (L, b) in enumerate((L, b) for L in cod_forms for b in range(g_lo.dim))}
    mat = [[Fraction(0)] * len(dom) for _ in range(len(cod_index))]
    for col, (K, b) in enumerate(dom):
        v = g_hi.basis[b]
        for k in range(1, n + 1):
            if k in K:
                continue
            L = tuple(sorted(K + (k,)))
            sign = -1 if L.index(k) % 2 else 1
            dv = _shift(v, n, r + 1, k)
            coords = g_lo.coordinates(dv)
            for j, c in enumerate(coords):
                if c:
                    mat[cod_index[(L, j)]][col] += sign * c
    return mat


def _dim_forms(n, s, g):
    return len(forms(n, s)) * g.dim if 0 <= s <= n else 0


@dataclass
class CohomologyReport:
    q: int
    n: int
    dims: list[int]
    cohomology: dict[tuple[int, int], int]
    cartan_characters: list[int]
    character_sum: int
    two_acyclic: bool
    involutive: bool
    finite_type: bool
    euler_ok: bool
    delta_squared_zero: bool
    flag_seed: int
    notes: list[str] = field(default_factory=list)

    def H(self, r, s):
        return self.cohomology[(r, s)]


def _cohomology_at(spaces, n, r, s, cache):
    """dim H at ``L^s (x) g_r``."""
    g = spaces

    def delta(s_, r_):
        key = (s_, r_)
        if key not in cache:
            if r_ < 0 or r_ + 1 not in g or s_ < 0 or s_ + 1 > n:
                cache[key] = None
            else:
                cache[key] = delta_map(s_, r_, g[r_ + 1], g[r_])
        return cache[key]

    dim_here = _dim_forms(n, s, g[r]) if r in g else 0
    out_map = delta(s, r - 1) if r >= 1 else None
    rank_out = rank(out_map) if out_map else 0
    in_map = delta(s - 1, r) if s >= 1 else None
    rank_in = rank(in_map) if in_map else 0
    return dim_here - rank_out - rank_in


def cartan_characters(g: SymbolSpace, seed: int = 0, attempts: int = 4) -> tuple[list[int], int]:
    """Dimensions of ``g_{q,j} = {v in g_q : i(w_1)v = ... = i(w_j)v = 0}`` for a generic flag.

    Returns the characters ``dim g_{q,j-1} - dim g_{q,j}`` (j = 1..n) and
    the sum ``sum_{j<n} dim g_{q,j}``.  Several seeded flags are tried and
    the smallest sum kept, since a degenerate flag can only increase it.
    """
    n, q = g.n, g.order
    rng = random.Random(seed)
    best = None
    for _ in range(attempts):
        while True:
            w = [[Fraction(rng.randint(-9, 9)) for _ in range(n)] for _ in range(n)]
            if det_values(w) != 0:
                break
        dims = [g.dim]
        for j in range(1, n + 1):
            cons = []
            for t in range(j):
                for v_row in _contraction_rows(w[t], g, n, q):
                    cons.append(v_row)
            if not cons or g.dim == 0:
                dims.append(g.dim)
            else:
                dims.append(len(nullspace(cons, g.dim)))
        total = sum(dims[:n])
        if best is None or total < best[1]:
            best = (dims, total)
    dims, total = best
    chars = [dims[j - 1] - dims[j] for j in range(1, n + 1)]
    return chars, total


def _contraction_rows(wvec, g, n, q):
    """Rows of ``i(w)`` restricted to ``g`` (in basis coordinates)."""
    if q == 0:
        return []
    cols = []
    for v in g.basis:
        out = [Fraction(0)] * len(ambient_basis(n, q - 1))
        for k in range(1, n + 1):
            if wvec[k - 1]:
                for idx, x in enumerate(_shift(v, n, q, k)):
                    out[idx] += wvec[k - 1] * x
        cols.append(out)
    return [list(row) for row in zip(*cols)] if cols else []


def spencer_cohomology(spaces: dict[int, SymbolSpace], q: int, r_max: int, flag_seed: int = 0) -> CohomologyReport:
    """Cohomology of the delta-complex for ``g_q .. g_{q+r_max}``.

    ``spaces`` must contain ``g_r`` for ``0 <= r <= q + r_max + 1``.
    """
    n = spaces[q].n
    cache: dict = {}
    coh = {}
    for r in range(q, q + r_max + 1):
        for s in (1, 2):
            if s <= n:
                coh[(r, s)] = _cohomology_at(spaces, n, r, s, cache)
            else:
                coh[(r, s)] = 0
    dims = [spaces[r].dim for r in range(q, q + r_max + 1)]
    finite = any(d == 0 for d in dims)
    chars, total = cartan_characters(spaces[q], flag_seed)
    nxt = spaces[q + 1].dim
    notes = []
    if total < nxt:
        notes.append("character sum below dim g_{q+1}: flag not generic")
    involutive = total == nxt
    two_acyclic = all(v == 0 for v in coh.values())
    # delta^2 = 0 and Euler characteristics on every complex that is fully available
    top = max(spaces)
    d2 = True
    euler = True
    for d in range(1, top + 1):
        terms = [(s, d - s) for s in range(0, n + 1) if 0 <= d - s]
        if any(r not in spaces for _, r in terms):
            continue
        maps = {}
        for s, r in terms:
            if r >= 1 and s + 1 <= n:
                maps[s] = cache.get((s, r - 1)) or delta_map(s, r - 1, spaces[r], spaces[r - 1])
        for s in maps:
            if s + 1 in maps and maps[s] and maps[s + 1]:
                prod = matmul(maps[s + 1], maps[s])
                if any(x != 0 for row in prod for x in row):
                    d2 = False
        dims_c = [_dim_forms(n, s, spaces[r]) for s, r in terms]
        ranks = [rank(maps[s]) if maps.get(s) else 0 for s, _ in terms]
        hs = [dims_c[t] - ranks[t] - (ranks[t - 1] if t > 0 else 0) for t in range(len(terms))]
        chi = sum((-1) ** s * dims_c[t] for t, (s, _) in enumerate(terms))
        chi_h = sum((-1) ** s * hs[t] for t, (s, _) in enumerate(terms))
        if chi != chi_h:
            euler = False
    return CohomologyReport(
        q, n, dims, coh, chars, total, two_acyclic, involutive, finite, euler, d2, flag_seed, notes
    )


def analyse_symbol(S: EquationSystem, q: int, r_max: int, point, action=None, flag_seed: int = 0) -> CohomologyReport:
    spaces = symbol_spaces(S, q, q + r_max + 2, point, action)
    return spencer_cohomology(spaces, q, r_max, flag_seed)


@dataclass
class Certificate:
    ok: bool
    reason: str


def goldschmidt_inputs(report: CohomologyReport, projection_no_new_conditions: bool) -> Certificate:
    """Formal integrability may be declared iff the symbol is 2-acyclic and the projection is onto."""
    if not projection_no_new_conditions:
        return Certificate(False, "projection produces new conditions")
    if report.dims and report.dims[0] == 0:
        return Certificate(True, "vanishing symbol and surjective projection")
    if report.involutive:
        return Certificate(True, "involutive symbol and surjective projection")
    if report.two_acyclic:
        return Certificate(True, "2-acyclic symbol and surjective projection")
    return Certificate(False, "symbol not 2-acyclic at this order; prolong further")

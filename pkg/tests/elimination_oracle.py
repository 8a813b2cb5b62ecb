"""Random affine blocks and a naive elimination over the rational function field.

The oracle runs plain Gauss-Jordan with full division on Exprs, which
shares no code with the fraction-free elimination under test.
"""

from jetgroupoid.integrability import AffineTopSystem
from jetgroupoid.kernel import SOURCE, Expr, jet_var, obj_deriv

A_ATOMS = [obj_deriv(f"a{k}", (0,), SOURCE) for k in (1, 2, 3)]


def _random_entry(rng):
    e = Expr.const(rng.randint(-3, 3))
    for atom in A_ATOMS:
        e = e + rng.randint(-2, 2) * Expr.of(atom)
    return e


def random_affine_system(rng, m, nu):
    """A random affine block of deficient rank with symbolic right-hand side."""
    k = rng.randint(1, nu - 1)
    L = [[_random_entry(rng) for _ in range(k)] for _ in range(m)]
    R = [[_random_entry(rng) for _ in range(nu)] for _ in range(k)]
    matrix = [[sum((L[i][t] * R[t][j] for t in range(k)), Expr.const(0)) for j in range(nu)] for i in range(m)]
    bs = [Expr.of(obj_deriv(f"b{i}", (0,), SOURCE)) for i in range(m)]
    rhs = [bs[i] + _random_entry(rng) * bs[(i + 1) % m] for i in range(m)]
    unknowns = [jet_var(1, (j + 2,)) for j in range(nu)]
    return AffineTopSystem(unknowns, matrix, rhs), bs


def gauss_jordan(rows, ncols):
    """Reduced row echelon form with full division; returns ``(rows, rank)``."""
    rows = [list(r) for r in rows]
    rank = 0
    for c in range(ncols):
        p = next((r for r in range(rank, len(rows)) if not rows[r][c].is_zero()), None)
        if p is None:
            continue
        rows[rank], rows[p] = rows[p], rows[rank]
        piv = rows[rank][c]
        rows[rank] = [v / piv for v in rows[rank]]
        for r in range(len(rows)):
            if r != rank and not rows[r][c].is_zero():
                f = rows[r][c]
                rows[r] = [a - f * b for a, b in zip(rows[r], rows[rank])]
        rank += 1
    return rows, rank


def expr_rank(rows):
    return gauss_jordan(rows, len(rows[0]))[1] if rows else 0


def symbolic_naive_conditions(A):
    """Conditions ``t . rhs`` for ``t`` in the left kernel of the block."""
    m, nu = A.shape
    aug = [list(A.matrix[i]) + [Expr.const(int(i == j)) for j in range(m)] for i in range(m)]
    reduced, _ = gauss_jordan(aug, nu)
    out = []
    for row in reduced:
        if all(v.is_zero() for v in row[:nu]):
            out.append(sum((t * b for t, b in zip(row[nu:], A.rhs)), Expr.const(0)))
    return out


def coefficient_vectors(conds, bs):
    return [[c.diff(b.atoms()[0]) for b in bs] for c in conds]


def same_condition_space(c1, c2, bs):
    """Mutual membership of two condition lists, as spans of linear forms in ``bs``."""
    v1, v2 = coefficient_vectors(c1, bs), coefficient_vectors(c2, bs)
    return expr_rank(v1) == expr_rank(v2) == expr_rank(v1 + v2)

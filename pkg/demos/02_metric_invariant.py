"""
The curvature of a surface from the symmetry groupoid of its metric
===================================================================

Starting from nothing but the transformation law of a metric, prolonging
the symmetry equations twice and eliminating the third-order jets leaves a
single integrability condition.  Splitting it into a source half and a
target half gives a differential invariant, and comparing it with the
classical Brioschi formula shows that it is the Gaussian curvature up to a
constant factor.
"""

from jetgroupoid.curvature import brioschi_symbolic
from jetgroupoid.integrability import check_invariance, integrability_loop
from jetgroupoid.kernel import Expr, to_string
from jetgroupoid.lieform import GeometricObject, builtin_action

a = builtin_action("metric", 2)
report = integrability_loop(a, GeometricObject.symbolic(2, 3), max_order=3)

for it in report.iterations:
    print(f"order {it.order}: {it.rows} x {it.unknowns} block, rank {it.generic_rank}, "
          f"{len(it.conditions)} new condition(s)")

(eq,) = report.vessiot.equations
print("invariant size:", eq.invariant.term_count(), "terms")
print(to_string(eq.invariant)[:200], "...")

# The invariant against the closed-form curvature
ratio = eq.invariant / brioschi_symbolic()
print("invariant / curvature =", ratio.constant_value())

# It really is invariant, while a bare component is not
print("invariant passes the equivariance test:", check_invariance(eq.invariant, a))
print("u11 passes the equivariance test:", check_invariance(Expr.of(a.source_atom(0)), a))
print("verdict for a generic metric:", report.verdict, "given", len(report.conditional_on), "structure equation")

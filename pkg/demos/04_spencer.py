"""
Symbols, Spencer cohomology and the Cartan test
===============================================

The symbol of the symmetry system is computed at a point of the groupoid.
For the metric it dies at order two (finite type).  For the volume form it
grows at every order, and the Cartan test shows it is involutive already at
order one.
"""

import random

from jetgroupoid.lieform import GeometricObject, admissible_point, builtin_action, lie_form
from jetgroupoid.spencer import analyse_symbol

for name, n in [("metric", 2), ("volume", 2), ("volume", 3)]:
    a = builtin_action(name, n)
    omega = GeometricObject.symbolic(n, a.m)
    pt = admissible_point(a, omega, a.q, random.Random(0))
    rep = analyse_symbol(lie_form(a, omega), a.q, 3, pt, a)
    print(f"{name} in dimension {n}")
    print("   dim g_1..g_4:", rep.dims)
    print("   nonzero cohomology:", {k: v for k, v in rep.cohomology.items() if v})
    print("   Cartan characters", rep.cartan_characters, "sum", rep.character_sum,
          "involutive" if rep.involutive else "not involutive")
    print("   delta^2 = 0:", rep.delta_squared_zero, " Euler check:", rep.euler_ok)

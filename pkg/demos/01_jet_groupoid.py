"""
Jets of diffeomorphisms form a groupoid
=======================================

A q-jet records a point, its image and the Taylor coefficients of a map up
to order q.  Composition follows the chain rule, inversion is solved order
by order.  Everything here is exact rational arithmetic.
"""

import random
from fractions import Fraction

from jetgroupoid.jets import compose_jets, identity_jet, invert_jet, random_jet

rng = random.Random(1)

# A random invertible 2-jet at a random point of the plane
f = random_jet(2, 2, rng)
def show(v):
    return "(" + ", ".join(str(x) for x in v) + ")"


print("f: source", show(f.source), "target", show(f.target))
print("linear part", [show(row) for row in f.linear_part()])

# g starts where f ends, so g o f is defined
g = random_jet(2, 2, rng, source=f.target)
gf = compose_jets(g, f)
print("g o f maps", show(gf.source), "to", show(gf.target))

# Inverting undoes f up to order 2
back = compose_jets(invert_jet(f), f)
print("inv(f) o f is the identity jet:", back == identity_jet(f.source, 2))

# In one dimension the second coefficient of the inverse is -f''/f'^3
h = random_jet(1, 2, rng)
d1, d2 = h[(1, (1,))], h[(1, (2,))]
inv = invert_jet(h)
print("series inversion check:", inv[(1, (2,))] == -Fraction(d2) / d1**3)

"""
Deciding formal integrability for concrete metrics
==================================================

For a given metric the derived invariant is evaluated.  A constant value
means the structure equation holds and the symmetry system is formally
integrable.  A non-constant value is an obstruction, and two points with
different values are reported as a witness.
"""

from jetgroupoid.integrability import integrability_loop
from jetgroupoid.kernel import to_string
from jetgroupoid.lieform import GeometricObject, builtin_action

a = builtin_action("metric", 2)
metrics = {
    "flat plane": ["1", "0", "1"],
    "round sphere": ["4/(1+x1^2+x2^2)^2", "0", "4/(1+x1^2+x2^2)^2"],
    "diag(1, 1+x1^2)": ["1", "0", "1+x1^2"],
}

for label, comps in metrics.items():
    rep = integrability_loop(a, GeometricObject.from_strings(2, comps), max_order=4)
    (c,) = rep.vessiot.concrete
    print(f"{label}: {rep.verdict}")
    print("   invariant on this metric:", to_string(c["value"]))
    print("   Gaussian curvature:", to_string(c["curvature"]))
    if rep.witness:
        pts = [tuple(str(v) for v in p) for p in rep.witness["points"]]
        print("   witness:", list(zip(pts, map(str, rep.witness["values"]))))

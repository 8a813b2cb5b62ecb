"""
Defining your own geometric object
==================================

Transformation laws can be written in a small text format.  Parsing runs
the groupoid-action axioms automatically, so a law that is not an action is
flagged straight away.
"""

import warnings
from pathlib import Path

from jetgroupoid.lieform import builtin_action, check_action_axioms, parse_action

here = Path(__file__).parent / "objects"

metric = parse_action((here / "metric2.obj").read_text())
print("hand-written metric equals the builtin:", metric.same_law(builtin_action("metric", 2)))
print(metric.to_text())

with warnings.catch_warnings():
    warnings.simplefilter("ignore")
    broken = parse_action((here / "broken.obj").read_text())
print("warnings on the broken law:", broken.warnings)

rep = check_action_axioms(broken, trials=3)
print("identity axiom:", rep.identity_ok, " composition axiom:", rep.composition_ok)

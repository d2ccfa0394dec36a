"""The two relaxations that make the queue hierarchy conform.

Abstract-class lifting drops the applicability obligation against an
abstract superclass, since nobody can call its operations directly.  The
virtual-operation relaxation compares an extra subclass operation with its
own projection onto the superclass instead of with ``skip``.

Run with ``python demos/02_relaxations.py``.
"""

from bicheck import fixtures
from bicheck.refinement import CheckConfig, check_hierarchy
from bicheck.semantics import Projection, build_relation, format_relation, lift_relation

h = fixtures.load("queues.bi")

for relax in ([], ["abstract-classes"], ["virtual-ops"], ["abstract-classes", "virtual-ops"]):
    cfg = CheckConfig(relax_virtual_ops="virtual-ops" in relax, relax_abstract_classes="abstract-classes" in relax)
    report = check_hierarchy(h, cfg)
    failed = ", ".join(f.obligation.label for f in report.failures) or "nothing"
    print(f"relax={','.join(relax) or 'none':<28} {report.overall:<14} fails: {failed}")

print()
print("The virtual operation that stands in for RBQueue.reset inside BQueue:")
co = build_relation(h, "RBQueue", "reset")
ao = lift_relation(co, Projection(h, "RBQueue", "BQueue"), "BQueue")
print(format_relation(ao), end="")

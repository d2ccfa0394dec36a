"""Strict refinement rules on the queue hierarchy.

Queue is an unbounded (here: length 4) abstract queue, BQueue bounds it at
maxQ = 3 and RBQueue adds a ``reset`` operation.  Checked edge by edge with no
relaxation, two obligations fail:

* BQueue.join is blocked on a full queue where Queue.join is still enabled.
* RBQueue.reset empties the queue, so it cannot be simulated by ``skip``.

Run with ``python demos/01_strict_rules.py``.
"""

from bicheck import fixtures
from bicheck.refinement import NONBLOCKING, CheckConfig, check_hierarchy, replay_witness
from bicheck.report import finding_dict, finding_line

h = fixtures.load("queues.bi")
report = check_hierarchy(h, CheckConfig(mode=NONBLOCKING))

for f in report.findings:
    print(finding_line(finding_dict(f)))
print("overall:", report.overall)

print()
print("Each failure comes with a witness that is re-checked against the raw predicates:")
for f in report.failures:
    print(f"  {f.obligation.label}: replays = {replay_witness(h, f)}")

"""Global constraints and substitutability.

A constraint over all RBQueue objects (``#o.items < 2``) limits RBQueue but
not BQueue, so a client that cannot tell the two apart sees the third join
behave differently.  Moving the constraint up to BQueue restores
substitutability, and the freeness lint points at the first placement.

Run with ``python demos/03_global_constraints.py``.
"""

from bicheck import fixtures
from bicheck.system import BLOCKING, compare_substitutability, lint_freeness

for name in ("queues_global_rbq.bi", "queues_global_bq.bi"):
    h = fixtures.load(name)
    print(f"== {name}")
    for f in lint_freeness(h, strict=True):
        print(f"  lint [{f.severity}] {f.class_name}: {f.message}")
    for depth in (2, 3, 6):
        div = compare_substitutability(h, "BQueue", "RBQueue", depth, mode=BLOCKING)
        if div is None:
            print(f"  depth {depth}: no divergence")
        else:
            print(f"  depth {depth}: {div.reason} at step {div.step}: {div.detail}")
            for line in div.transcript:
                print("    " + line)
            break

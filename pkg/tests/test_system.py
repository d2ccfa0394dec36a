import pytest
from hypothesis import HealthCheck, given, settings
from hypothesis import strategies as st

from bicheck.dsl import parse
from bicheck.model import EnumDomain, EnumLit
from bicheck.refinement import BLOCKING, NONBLOCKING
from bicheck.semantics import Binding, build_relation
from bicheck.system import (
    BLOCKED,
    ENABLED,
    GUARD,
    INVARIANT,
    VIOLATED,
    Call,
    Delete,
    DepthTooLarge,
    New,
    PoolExhausted,
    SimulationError,
    Simulator,
    SystemState,
    UnknownObject,
    UnknownOperation,
    compare_substitutability,
    lint_freeness,
    state_invariant_violations,
    transcript,
)

AB = EnumDomain(("a", "b"))
A, B = EnumLit(AB, "a"), EnumLit(AB, "b")


def join(oid, x=A, via=None):
    return Call(oid, "join", Binding.of({"item": x}), via)


def run(sim, events, sys=None):
    sys = sys or SystemState.empty(sim.h)
    outcomes = []
    for ev in events:
        out = sim.step(sys, ev)
        outcomes.append(out)
        sys = out.state
    return sys, outcomes


class TestStep:
    def test_two_joins_then_blocked_under_rbqueue_constraint(self, queues_rbq):
        sim = Simulator(queues_rbq, BLOCKING)
        sys, outs = run(sim, [New("RBQueue", "o1"), join("o1"), join("o1")])
        assert [o.status for o in outs] == [ENABLED] * 3
        assert sys.local["o1"]["items"] == (A, A)
        third = sim.step(sys, join("o1"))
        assert third.status == BLOCKED
        assert third.state == sys

    def test_nonblocking_mode_reports_a_violation(self, queues_rbq):
        sim = Simulator(queues_rbq, NONBLOCKING)
        sys, _ = run(sim, [New("RBQueue", "o1"), join("o1"), join("o1")])
        assert sim.step(sys, join("o1")).status == VIOLATED

    def test_bqueue_objects_are_not_covered_by_the_rbqueue_constraint(self, queues_rbq):
        sim = Simulator(queues_rbq)
        _, outs = run(sim, [New("BQueue", "o1")] + [join("o1")] * 3)
        assert all(o.status == ENABLED for o in outs)

    def test_invariant_semantics_blocks_earlier(self, queues_rbq):
        sim = Simulator(queues_rbq, constraint_semantics=INVARIANT)
        _, outs = run(sim, [New("RBQueue", "o1"), join("o1"), join("o1")])
        assert [o.status for o in outs] == [ENABLED, ENABLED, BLOCKED]

    def test_dispatch_via_superclass_name_uses_direct_class(self, queues):
        sim = Simulator(queues)
        sys, _ = run(sim, [New("BQueue", "o1")])
        out = sim.step(sys, join("o1", B, via="Queue"))
        assert out.status == ENABLED
        assert out.state.local["o1"]["items"] == (B,)
        # a superclass view of the object is a projection of its own state
        assert out.state.view(queues, "o1", "Queue") == out.state.local["o1"]

    def test_dispatch_matches_the_direct_class_relation(self, queues):
        sim = Simulator(queues)
        sys, _ = run(sim, [New("RBQueue", "o1"), join("o1"), join("o1", B)])
        before = sys.local["o1"]
        out = sim.step(sys, Call("o1", "leave"))
        rel = build_relation(queues, "RBQueue", "leave")
        assert (before, Binding(), out.state.local["o1"], out.outputs) in rel
        assert out.outputs["item"] == A

    def test_rbqueue_is_bounded_by_inherited_invariant(self, queues):
        sim = Simulator(queues)
        sys, outs = run(sim, [New("RBQueue", "o1")] + [join("o1")] * 4)
        assert [o.status for o in outs] == [ENABLED] * 4 + [BLOCKED]

    def test_delete_with_default_final(self, queues):
        sim = Simulator(queues)
        sys, _ = run(sim, [New("BQueue", "o1"), join("o1")])
        out = sim.step(sys, Delete("o1"))
        assert out.status == ENABLED
        assert "o1" not in out.state.local
        assert out.state.ext(queues, "Queue") == frozenset()

    def test_delete_requires_final(self):
        h = parse("class C { var n : int 0..1; init n' = 0; final n = 1; op set() { n' = 1 } }")
        sim = Simulator(h)
        sys, _ = run(sim, [New("C", "o1")])
        assert sim.step(sys, Delete("o1")).status == BLOCKED
        sys, _ = run(sim, [Call("o1", "set")], sys)
        assert sim.step(sys, Delete("o1")).status == ENABLED

    def test_errors(self, queues):
        sim = Simulator(queues, pool=1)
        sys, _ = run(sim, [New("BQueue")])
        with pytest.raises(UnknownObject):
            sim.step(sys, join("o9"))
        with pytest.raises(UnknownOperation):
            sim.step(sys, Call("o1", "reset"))
        with pytest.raises(PoolExhausted):
            sim.step(sys, New("RBQueue"))
        with pytest.raises(SimulationError):
            sim.step(SystemState.empty(queues), New("Queue"))

    def test_fresh_identities_come_from_the_pool(self, queues):
        sim = Simulator(queues)
        sys, outs = run(sim, [New("BQueue"), New("RBQueue")])
        assert [o.detail for o in outs] == ["o1", "o2"]
        assert sys.ext(queues, "BQueue") == {"o1", "o2"}
        assert sys.ext(queues, "RBQueue") == {"o2"}


@settings(max_examples=60, deadline=None, suppress_health_check=[HealthCheck.too_slow])
@given(st.lists(st.tuples(st.sampled_from(["new", "join", "leave", "reset", "delete"]),
                          st.sampled_from(["o1", "o2", "o3"]),
                          st.sampled_from(["BQueue", "RBQueue"]),
                          st.sampled_from([A, B])), max_size=12),
       st.sampled_from([GUARD, INVARIANT]))
def test_random_runs_keep_population_invariants(queues_rbq, script, semantics):
    sim = Simulator(queues_rbq, BLOCKING, semantics)
    sys = SystemState.empty(queues_rbq)
    for kind, oid, cls, x in script:
        exists = oid in sys.local
        if kind == "new" and not exists:
            ev = New(cls, oid)
        elif kind == "delete" and exists:
            ev = Delete(oid)
        elif kind in ("join", "leave", "reset") and exists:
            if kind == "reset" and sys.direct_class(oid) != "RBQueue":
                continue
            ev = join(oid, x) if kind == "join" else Call(oid, kind)
        else:
            continue
        out = sim.step(sys, ev)
        if out.status == ENABLED:
            sys = out.state
        assert state_invariant_violations(queues_rbq, sys, semantics) == []
        assert sys.ext(queues_rbq, "RBQueue") <= sys.ext(queues_rbq, "BQueue") <= sys.ext(queues_rbq, "Queue")


class TestLint:
    def test_constraint_on_rbqueue_is_flagged(self, queues_rbq):
        (f,) = lint_freeness(queues_rbq)
        assert (f.class_name, f.severity) == ("RBQueue", "Warning")

    def test_constraint_on_bqueue_is_a_warning(self, queues_bq):
        (f,) = lint_freeness(queues_bq)
        assert (f.class_name, f.severity) == ("BQueue", "Warning")
        assert f.message == "BQueue has ancestor Queue; constrain the topmost class instead"

    def test_strict_severity_depends_on_concrete_ancestors(self, queues_rbq, queues_bq):
        assert [f.severity for f in lint_freeness(queues_rbq, strict=True)] == ["Error"]
        # BQueue's only ancestor is the abstract Queue
        assert [f.severity for f in lint_freeness(queues_bq, strict=True)] == ["Warning"]

    def test_no_system_block(self, queues):
        assert lint_freeness(queues) == []

    def test_root_constraint_is_clean(self):
        h = parse("class R { var n : int 0..2; }\nsystem { constraint on R : forall o : ext . o.n < 2; }")
        assert lint_freeness(h, strict=True) == []


class TestCompare:
    def test_divergence_at_third_join(self, queues_rbq):
        div = compare_substitutability(queues_rbq, "BQueue", "RBQueue", 3)
        assert div is not None
        assert div.step == 3
        assert div.reason == "EnablednessMismatch"
        assert [str(t) for t in div.trace] == ["join(item?=a)"] * 3

    def test_swapping_classes_finds_the_same_step(self, queues_rbq):
        div = compare_substitutability(queues_rbq, "RBQueue", "BQueue", 3)
        assert (div.step, div.reason) == (3, "EnablednessMismatch")

    def test_depth_two_is_not_enough(self, queues_rbq):
        assert compare_substitutability(queues_rbq, "BQueue", "RBQueue", 2) is None

    def test_constraint_on_bqueue_removes_the_divergence(self, queues_bq):
        assert compare_substitutability(queues_bq, "BQueue", "RBQueue", 6) is None

    def test_no_constraints(self, queues):
        assert compare_substitutability(queues, "BQueue", "RBQueue", 5) is None

    def test_invariant_semantics_diverges_at_step_two(self, queues_rbq):
        div = compare_substitutability(queues_rbq, "BQueue", "RBQueue", 3, constraint_semantics=INVARIANT)
        assert div.step == 2

    @pytest.mark.parametrize("cls", ["BQueue", "RBQueue"])
    def test_class_against_itself(self, queues_rbq, cls):
        assert compare_substitutability(queues_rbq, cls, cls, 4) is None

    def test_output_mismatch(self):
        h = parse("""
        class P { var n : int 0..1; init n' = 0; op peek() -> v : int 0..1 { n' = n /\\ v! = n } }
        class Q extends P { override op peek() -> v : int 0..1 { n' = n /\\ v! = 1 - n } }
        """)
        div = compare_substitutability(h, "P", "Q", 2)
        assert (div.step, div.reason) == (1, "OutputMismatch")

    def test_depth_cap(self, queues):
        with pytest.raises(DepthTooLarge):
            compare_substitutability(queues, "BQueue", "RBQueue", 7)
        with pytest.raises(ValueError):
            compare_substitutability(queues, "BQueue", "RBQueue", 0)

    def test_abstract_class_rejected(self, queues):
        with pytest.raises(SimulationError):
            compare_substitutability(queues, "Queue", "BQueue", 2)

    def test_transcript_lines(self, queues_rbq):
        div = compare_substitutability(queues_rbq, "BQueue", "RBQueue", 3, mode=BLOCKING)
        assert div.transcript[-1] == "[RBQueue] step 3: join(item?=a) -> blocked"
        assert "[BQueue] step 3: join(item?=a) -> enabled" in div.transcript
        sim = Simulator(queues_rbq, NONBLOCKING)
        assert transcript(sim, "RBQueue", div.trace)[-1].endswith("-> violated")

    def test_detail_uses_the_mode_vocabulary(self, queues_rbq):
        nb = compare_substitutability(queues_rbq, "BQueue", "RBQueue", 3, mode=NONBLOCKING)
        b = compare_substitutability(queues_rbq, "BQueue", "RBQueue", 3, mode=BLOCKING)
        assert nb.detail == "join(item?=a): BQueue enabled, RBQueue violated"
        assert b.detail == "join(item?=a): BQueue enabled, RBQueue blocked"

    def test_to_dict(self, queues_rbq):
        d = compare_substitutability(queues_rbq, "BQueue", "RBQueue", 3).to_dict()
        assert set(d) == {"classA", "classB", "trace", "step", "reason", "detail", "transcript"}
        assert d["step"] < len(d["trace"]) + 1

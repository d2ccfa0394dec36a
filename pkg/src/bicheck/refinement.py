"""Behavioural-inheritance proof obligations, discharged by enumeration.

For a subclass ``C`` of ``A`` with the projection ``f`` from ``C`` states to
``A`` states, each subclassing edge yields:

* initialisation:  every initial ``C`` state projects to an initial ``A`` state
* applicability:   ``(f s, i) in pre AO  ==>  (s, i) in pre CO``
* correctness:     ``(s, i, s', o) in CO  ==>  (f s, i, f s', o) in AO``,
                   restricted to ``pre AO`` in the non-blocking setting
* finalisation:    every final ``C`` state projects to a final ``A`` state

Operations new in ``C`` are checked against ``skip`` (the abstract state is
left unchanged) or, with ``relax_virtual_ops``, accepted and compared with the
virtual operation obtained by projecting their own relation onto ``A``.
With ``relax_abstract_classes`` applicability is not required when ``A`` is
an abstract class, since its operations never run on direct instances.
"""

from __future__ import annotations

import enum
from dataclasses import dataclass, field
from typing import Optional

from bicheck.model import Hierarchy, format_value
from bicheck.semantics import (
    DEFAULT_STATE_CAP,
    Binding,
    OpRelation,
    Projection,
    RelationCache,
    enumerate_states,
    evaluate,
    final_holds,
    find_operation,
    init_holds,
    lift_relation,
    precondition,
    product_bindings,
    state_env,
)

NONBLOCKING = "nonblocking"
BLOCKING = "blocking"


class Kind(str, enum.Enum):
    INITIALISATION = "Initialisation"
    APPLICABILITY = "Applicability"
    CORRECTNESS_NB = "CorrectnessNB"
    CORRECTNESS_B = "CorrectnessB"
    FINALISATION = "Finalisation"
    SKIP_APPLICABILITY = "SkipApplicability"
    SKIP_CORRECTNESS = "SkipCorrectness"
    VIRTUAL_OP_THEOREM = "VirtualOpTheorem"


KIND_ORDER = list(Kind)

RULE_TAGS = {
    Kind.INITIALISATION: "rule 1 / Initialisation",
    Kind.APPLICABILITY: "rule 2 / Applicability",
    Kind.CORRECTNESS_NB: "rule 3 / NB Correctness",
    Kind.CORRECTNESS_B: "rule 3a / B Correctness",
    Kind.FINALISATION: "rule 4 / Finalisation",
    Kind.SKIP_APPLICABILITY: "rule 2 vs skip / Applicability",
    Kind.SKIP_CORRECTNESS: "rule 3 vs skip / Correctness",
    Kind.VIRTUAL_OP_THEOREM: "virtual operation / Refinement",
}


class Verdict(str, enum.Enum):
    HOLDS = "Holds"
    FAILS = "Fails"
    LIFTED = "Lifted"
    ACCEPTED = "AcceptedByRelaxation"
    # a failed diagnostic (virtual-op applicability); carries a witness but
    # does not count against conformance
    ANOMALY = "Anomaly"


@dataclass(frozen=True)
class CheckConfig:
    mode: str = NONBLOCKING
    relax_virtual_ops: bool = False
    relax_abstract_classes: bool = False
    state_cap: int = DEFAULT_STATE_CAP

    def __post_init__(self):
        if self.mode not in (NONBLOCKING, BLOCKING):
            raise ValueError(f"mode must be {NONBLOCKING!r} or {BLOCKING!r}, not {self.mode!r}")
        if self.state_cap <= 0:
            raise ValueError("state_cap must be positive")


@dataclass(frozen=True)
class Obligation:
    kind: Kind
    subclass: str
    superclass: str
    op: Optional[str] = None
    aspect: Optional[str] = None  # "applicability"/"correctness" for VirtualOpTheorem

    @property
    def label(self) -> str:
        s = f"{self.kind.value}({self.subclass}"
        if self.op:
            s += f".{self.op}"
        s += f" vs {self.superclass})"
        if self.aspect:
            s += f" [{self.aspect}]"
        return s


@dataclass(frozen=True)
class Finding:
    obligation: Obligation
    verdict: Verdict
    witness: Optional[dict] = None  # decorated name -> value
    note: str = ""

    @property
    def failed(self) -> bool:
        return self.verdict is Verdict.FAILS

    def witness_text(self) -> str:
        if not self.witness:
            return ""
        return ", ".join(f"{k}={format_value(v)}" for k, v in self.witness.items())


@dataclass
class CheckReport:
    per_edge: dict = field(default_factory=dict)  # (sub, super) -> list[Finding]

    @property
    def findings(self) -> list[Finding]:
        return [f for fs in self.per_edge.values() for f in fs]

    @property
    def failures(self) -> list[Finding]:
        return [f for f in self.findings if f.failed]

    @property
    def conformant(self) -> bool:
        return not self.failures

    @property
    def overall(self) -> str:
        return "Conformant" if self.conformant else "NonConformant"


def _witness(*parts: tuple[Binding, str]) -> dict:
    out = {}
    for b, suffix in parts:
        for k, v in b.pairs:
            out[k + suffix] = v
    return out


class EdgeChecker:
    """Obligations between one subclass and one ancestor (or itself).

    State spaces and relations are built lazily and cached, so the individual
    ``check_*`` methods can be called in any order.
    """

    def __init__(
        self,
        h: Hierarchy,
        sub: str,
        sup: str,
        config: CheckConfig = CheckConfig(),
        cache: Optional[RelationCache] = None,
    ):
        self.h, self.sub, self.sup, self.config = h, sub, sup, config
        self.f = Projection(h, sub, sup)
        if cache is None or cache.h is not h or cache.cap != config.state_cap:
            cache = RelationCache(h, config.state_cap)
        self.cache = cache

    def space(self, cls: str):
        return self.cache.space(cls)

    def relation(self, cls: str, op: str) -> OpRelation:
        return self.cache.relation(cls, op)

    def _ob(self, kind: Kind, op=None, aspect=None) -> Obligation:
        return Obligation(kind, self.sub, self.sup, op, aspect)

    def _inputs(self, op: str):
        return list(product_bindings(find_operation(self.h, self.sub, op).inputs))

    # -- rules ----------------------------------------------------------------

    def check_initialisation(self) -> Finding:
        ob = self._ob(Kind.INITIALISATION)
        for s in self.space(self.sub):
            if init_holds(self.h, self.sub, s) and not init_holds(self.h, self.sup, self.f(s)):
                return Finding(ob, Verdict.FAILS, _witness((s, "'")), "initial state has no abstract counterpart")
        return Finding(ob, Verdict.HOLDS)

    def check_finalisation(self) -> Finding:
        ob = self._ob(Kind.FINALISATION)
        for s in self.space(self.sub):
            if final_holds(self.h, self.sub, s) and not final_holds(self.h, self.sup, self.f(s)):
                return Finding(ob, Verdict.FAILS, _witness((s, "")), "finalisable state is not finalisable abstractly")
        return Finding(ob, Verdict.HOLDS)

    def _applicability(self, ob: Obligation, abstract_pre, co: OpRelation) -> Finding:
        pre_co = precondition(co)
        for s in self.space(self.sub):
            for i in self._inputs(co.op):
                if (self.f(s), i) in abstract_pre and (s, i) not in pre_co:
                    return Finding(ob, Verdict.FAILS, _witness((s, ""), (i, "?")),
                                   "abstract operation enabled, concrete operation blocked")
        return Finding(ob, Verdict.HOLDS)

    def _correctness(self, ob: Obligation, ao: OpRelation, co: OpRelation, restrict: bool) -> Finding:
        pre_ao = precondition(ao)
        f = self.f
        for s, i, s2, o in co:
            a = f(s)
            if restrict and (a, i) not in pre_ao:
                continue
            if (a, i, f(s2), o) not in ao:
                return Finding(ob, Verdict.FAILS, _witness((s, ""), (i, "?"), (s2, "'"), (o, "!")),
                               "concrete step not allowed by the abstract operation")
        return Finding(ob, Verdict.HOLDS)

    def check_applicability(self, op: str) -> Finding:
        ob = self._ob(Kind.APPLICABILITY, op)
        if self.config.relax_abstract_classes and self.h[self.sup].abstract:
            return Finding(ob, Verdict.LIFTED, note=f"{self.sup} is abstract; its operations are never called directly")
        ao = self.relation(self.sup, op)
        return self._applicability(ob, precondition(ao), self.relation(self.sub, op))

    def check_correctness(self, op: str, mode: Optional[str] = None) -> Finding:
        mode = mode or self.config.mode
        kind = Kind.CORRECTNESS_B if mode == BLOCKING else Kind.CORRECTNESS_NB
        return self._correctness(
            self._ob(kind, op), self.relation(self.sup, op), self.relation(self.sub, op), restrict=(mode != BLOCKING)
        )

    def skip_relation(self, op: str) -> OpRelation:
        """``skip`` over the abstract state, widened to the extra operation's signature."""
        spec = find_operation(self.h, self.sub, op)
        ins = list(product_bindings(spec.inputs))
        outs = list(product_bindings(spec.outputs))
        tuples = tuple((a, i, a, o) for a in self.space(self.sup) for i in ins for o in outs)
        return OpRelation(self.sup, op, tuple(n for n, _ in spec.inputs), tuple(n for n, _ in spec.outputs), tuples)

    def check_extra_op(self, op: str) -> list[Finding]:
        co = self.relation(self.sub, op)
        if not self.config.relax_virtual_ops:
            skip = self.skip_relation(op)
            return [
                self._applicability(self._ob(Kind.SKIP_APPLICABILITY, op), precondition(skip), co),
                self._correctness(self._ob(Kind.SKIP_CORRECTNESS, op), skip, co, restrict=True),
            ]
        ao = lift_relation(co, self.f, self.sup)
        accepted = Finding(
            self._ob(Kind.VIRTUAL_OP_THEOREM, op),
            Verdict.ACCEPTED,
            note=f"{op} is simulated by a virtual {self.sup} operation that the environment never calls",
        )
        appl = self._applicability(self._ob(Kind.VIRTUAL_OP_THEOREM, op, "applicability"), precondition(ao), co)
        if appl.failed:
            appl = Finding(appl.obligation, Verdict.ANOMALY, appl.witness,
                           "diagnostic only: projected precondition is wider than the concrete one")
        corr = self._correctness(self._ob(Kind.VIRTUAL_OP_THEOREM, op, "correctness"), ao, co, restrict=False)
        if corr.failed:
            corr = Finding(corr.obligation, Verdict.ANOMALY, corr.witness,
                           "diagnostic only: concrete operation does not refine its own projection")
        return [accepted, appl, corr]

    def check_all(self) -> list[Finding]:
        sup_ops = self.h.effective_operations(self.sup)
        sub_ops = self.h.effective_operations(self.sub)
        out = [self.check_initialisation()]
        for op in sup_ops:
            out.append(self.check_applicability(op))
            out.append(self.check_correctness(op))
        for op in sub_ops:
            if op not in sup_ops:
                out.extend(self.check_extra_op(op))
        out.append(self.check_finalisation())
        return sorted(out, key=_finding_key)


def _finding_key(f: Finding):
    ob = f.obligation
    return (KIND_ORDER.index(ob.kind), ob.op or "", ob.aspect or "")


def check_pair(
    h: Hierarchy, sub: str, sup: str, config: CheckConfig = CheckConfig(), cache: Optional[RelationCache] = None
) -> list[Finding]:
    return EdgeChecker(h, sub, sup, config, cache).check_all()


def check_edge(
    h: Hierarchy, sub: str, config: CheckConfig = CheckConfig(), cache: Optional[RelationCache] = None
) -> list[Finding]:
    parent = h[sub].parent
    if parent is None:
        return []
    return check_pair(h, sub, parent, config, cache)


def check_hierarchy(
    h: Hierarchy, config: CheckConfig = CheckConfig(), cache: Optional[RelationCache] = None
) -> CheckReport:
    """Check every subclassing edge against its direct parent."""
    cache = cache or RelationCache(h, config.state_cap)
    report = CheckReport()
    for c in h.classes:
        if c.parent is not None:
            report.per_edge[(c.name, c.parent)] = check_edge(h, c.name, config, cache)
    return report


# ---------------------------------------------------------------------------
# Witness replay


def replay_witness(h: Hierarchy, finding: Finding) -> bool:
    """Re-derive a failure straight from the predicates, bypassing relations.

    Returns True when the witness really violates the obligation.
    """
    ob, w = finding.obligation, finding.witness
    if w is None:
        return False
    sub, sup = ob.subclass, ob.superclass
    f = Projection(h, sub, sup)
    fields = [n for n, _ in h.effective_fields(sub)]
    s = Binding(tuple((n, w[n]) for n in fields if n in w))
    s2 = Binding(tuple((n, w[n + "'"]) for n in fields if n + "'" in w))

    def inv(cls, b):
        return evaluate(h.effective_invariant(cls), state_env(h, cls, b)) is True

    if ob.kind is Kind.INITIALISATION:
        return inv(sub, s2) and init_holds(h, sub, s2) and not init_holds(h, sup, f(s2))
    if ob.kind is Kind.FINALISATION:
        return inv(sub, s) and final_holds(h, sub, s) and not final_holds(h, sup, f(s))

    spec = find_operation(h, sub, ob.op)
    i = Binding(tuple((n, w[n + "?"]) for n, _ in spec.inputs))

    def body_holds(cls, pre, post, out):
        body = find_operation(h, cls, ob.op).body
        env = state_env(h, cls, pre)
        env.update(post.decorated("'"))
        env.update(i.decorated("?"))
        env.update(out.decorated("!"))
        return evaluate(body, env) is True

    def enabled(cls, pre):
        posts = enumerate_states(h, cls)
        outs = list(product_bindings(spec.outputs))
        return any(body_holds(cls, pre, p, o) for p in posts for o in outs)

    if ob.kind is Kind.APPLICABILITY:
        return inv(sub, s) and enabled(sup, f(s)) and not enabled(sub, s)
    if ob.kind is Kind.SKIP_APPLICABILITY:
        return inv(sub, s) and not enabled(sub, s)

    o = Binding(tuple((n, w[n + "!"]) for n, _ in spec.outputs))
    step_ok = inv(sub, s) and inv(sub, s2) and body_holds(sub, s, s2, o)
    if ob.kind is Kind.SKIP_CORRECTNESS:
        return step_ok and f(s) != f(s2)
    if ob.kind in (Kind.CORRECTNESS_NB, Kind.CORRECTNESS_B):
        allowed = inv(sup, f(s2)) and body_holds(sup, f(s), f(s2), o)
        if ob.kind is Kind.CORRECTNESS_NB and not enabled(sup, f(s)):
            return False
        return step_ok and not allowed
    return False

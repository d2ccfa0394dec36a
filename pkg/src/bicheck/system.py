"""Extensional semantics: object populations, dispatch and global constraints.

Each object stores only the state of its direct class; its view as an
instance of an ancestor is the projection of that state, so the views can
never disagree.  Global constraints ``forall o : ext . P`` are attached to a
class and apply to every object of its derived extension (direct objects of
the class and of all descendants).

Two readings of a global constraint are supported:

``guard`` (default)
    ``P`` must hold of the object's current state for a call to proceed.
    Under this reading a constraint ``#items < 2`` lets two joins through and
    blocks the third, which is the behaviour the queue scenario describes.
``invariant``
    ``P`` must hold of the state after every step (Z's ``Delta`` reading).
    The same constraint then blocks the second join.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Mapping, Optional, Union

from bicheck.model import Hierarchy
from bicheck.refinement import BLOCKING, NONBLOCKING
from bicheck.semantics import (
    DEFAULT_STATE_CAP,
    EMPTY,
    Binding,
    OpRelation,
    Projection,
    RelationCache,
    evaluate,
    final_holds,
    init_holds,
    product_bindings,
    state_env,
)

GUARD = "guard"
INVARIANT = "invariant"
DEFAULT_POOL = 4
DEFAULT_DEPTH_CAP = 6

ENABLED, BLOCKED, VIOLATED = "enabled", "blocked", "violated"


class SimulationError(Exception):
    pass


class UnknownObject(SimulationError):
    pass


class UnknownOperation(SimulationError):
    pass


class PoolExhausted(SimulationError):
    pass


class DepthTooLarge(Exception):
    pass


# ---------------------------------------------------------------------------
# Events and states


@dataclass(frozen=True)
class New:
    cls: str
    oid: Optional[str] = None

    def __str__(self) -> str:
        return f"new {self.cls}" + (f" as {self.oid}" if self.oid else "")


@dataclass(frozen=True)
class Delete:
    oid: str

    def __str__(self) -> str:
        return f"delete {self.oid}"


@dataclass(frozen=True)
class Call:
    oid: str
    op: str
    inputs: Binding = EMPTY
    via: Optional[str] = None  # class name the caller sees the object as

    def __str__(self) -> str:
        return f"{self.oid}.{self.op}{_args(self.inputs)}"


SystemEvent = Union[New, Delete, Call]


def _args(b: Binding) -> str:
    from bicheck.model import format_value

    return "(" + ", ".join(f"{k}?={format_value(v)}" for k, v in b.pairs) + ")"


@dataclass(frozen=True)
class SystemState:
    existing: Mapping[str, frozenset]  # class -> direct objects
    local: Mapping[str, Binding]  # object -> state of its direct class

    @classmethod
    def empty(cls, h: Hierarchy) -> "SystemState":
        return cls({c: frozenset() for c in h.names}, {})

    def direct_class(self, oid: str) -> str:
        for c, objs in self.existing.items():
            if oid in objs:
                return c
        raise UnknownObject(oid)

    def ext(self, h: Hierarchy, cls: str) -> frozenset:
        out = set(self.existing.get(cls, ()))
        for d in h.descendants(cls):
            out |= self.existing.get(d, frozenset())
        return frozenset(out)

    def view(self, h: Hierarchy, oid: str, as_class: str) -> Binding:
        """The object's state seen as an instance of ``as_class``."""
        return Projection(h, self.direct_class(oid), as_class)(self.local[oid])


@dataclass(frozen=True)
class StepOutcome:
    status: str
    state: SystemState
    outputs: Optional[Binding] = None
    detail: str = ""


# ---------------------------------------------------------------------------
# Global constraints


def constraint_ok(h: Hierarchy, cls: str, s: Binding) -> bool:
    """Do all constraints covering objects of direct class ``cls`` hold at ``s``?"""
    for g in h.constraints_on(cls):
        view = Projection(h, cls, g.class_name)(s)
        if evaluate(g.body, state_env(h, g.class_name, view)) is not True:
            return False
    return True


@dataclass(frozen=True)
class LintFinding:
    class_name: str
    severity: str  # "Warning" | "Error"
    message: str

    def __str__(self) -> str:
        return f"{self.severity}: constraint on {self.class_name}: {self.message}"


def lint_freeness(h: Hierarchy, strict: bool = False) -> list[LintFinding]:
    """Flag global constraints that constrain a class below the top of its tree.

    Every constraint on a class with an ancestor is a Warning.  With
    ``strict`` it becomes an Error when some proper ancestor is concrete,
    i.e. the constraint could make subclass objects behave differently from
    direct instances of that ancestor.
    """
    out = []
    for g in h.constraints:
        if g.class_name not in h:
            continue
        ancestors = h.ancestors(g.class_name)
        if not ancestors:
            continue
        concrete = [a for a in ancestors if not h[a].abstract]
        severity = "Error" if strict and concrete else "Warning"
        noun = "ancestor" if len(ancestors) == 1 else "ancestors"
        msg = f"{g.class_name} has {noun} {', '.join(ancestors)}; constrain the topmost class instead"
        if concrete:
            msg += f" (concrete ancestor: {concrete[0]})"
        out.append(LintFinding(g.class_name, severity, msg))
    return out


# ---------------------------------------------------------------------------
# Single-step simulation


class Simulator:
    def __init__(
        self,
        h: Hierarchy,
        mode: str = BLOCKING,
        constraint_semantics: str = GUARD,
        cap: int = DEFAULT_STATE_CAP,
        pool: int = DEFAULT_POOL,
    ):
        if mode not in (BLOCKING, NONBLOCKING):
            raise ValueError(mode)
        if constraint_semantics not in (GUARD, INVARIANT):
            raise ValueError(constraint_semantics)
        self.h, self.mode, self.semantics, self.cap = h, mode, constraint_semantics, cap
        self.pool = tuple(f"o{k}" for k in range(1, pool + 1))
        self.cache = RelationCache(h, cap)
        self._succ: dict = {}
        self._order: dict = {}

    def space(self, cls: str):
        return self.cache.space(cls)

    def order(self, cls: str) -> dict:
        """State -> enumeration position, for deterministic iteration over sets."""
        if cls not in self._order:
            self._order[cls] = {s: k for k, s in enumerate(self.space(cls))}
        return self._order[cls]

    def relation(self, cls: str, op: str) -> OpRelation:
        return self.cache.relation(cls, op)

    def initial(self, cls: str) -> list[Binding]:
        return [s for s in self.space(cls) if init_holds(self.h, cls, s) and constraint_ok(self.h, cls, s)]

    def successors(self, cls: str, op: str, s: Binding, i: Binding) -> list[tuple[Binding, Binding]]:
        """Permitted ``(state', output)`` pairs for one call, in enumeration order."""
        if self.semantics == GUARD and not constraint_ok(self.h, cls, s):
            return []
        key = (cls, op)
        if key not in self._succ:
            index: dict = {}
            for pre, inp, post, o in self.relation(cls, op):
                index.setdefault((pre, inp), []).append((post, o))
            self._succ[key] = index
        out = self._succ[key].get((s, i), [])
        if self.semantics == INVARIANT:
            out = [(post, o) for post, o in out if constraint_ok(self.h, cls, post)]
        return list(out)

    def _refused(self, sys: SystemState, detail: str) -> StepOutcome:
        return StepOutcome(BLOCKED if self.mode == BLOCKING else VIOLATED, sys, None, detail)

    def step(self, sys: SystemState, ev: SystemEvent) -> StepOutcome:
        h = self.h
        if isinstance(ev, New):
            if ev.cls not in h:
                raise SimulationError(f"unknown class {ev.cls!r}")
            if h[ev.cls].abstract:
                raise SimulationError(f"{ev.cls} is abstract and has no direct instances")
            used = set(sys.local)
            oid = ev.oid
            if oid is None:
                free = [o for o in self.pool if o not in used]
                if not free:
                    raise PoolExhausted(f"all {len(self.pool)} object identities are in use")
                oid = free[0]
            elif oid not in self.pool:
                raise UnknownObject(f"{oid!r} is not in the object pool")
            elif oid in used:
                raise SimulationError(f"{oid} already exists")
            inits = self.initial(ev.cls)
            if not inits:
                return self._refused(sys, f"no initial {ev.cls} state satisfies the constraints")
            existing = dict(sys.existing)
            existing[ev.cls] = existing.get(ev.cls, frozenset()) | {oid}
            local = dict(sys.local)
            local[oid] = inits[0]
            return StepOutcome(ENABLED, SystemState(existing, local), None, oid)
        if isinstance(ev, Delete):
            if ev.oid not in sys.local:
                raise UnknownObject(ev.oid)
            cls = sys.direct_class(ev.oid)
            if not final_holds(h, cls, sys.local[ev.oid]):
                return self._refused(sys, "finalisation condition does not hold")
            existing = dict(sys.existing)
            existing[cls] = existing[cls] - {ev.oid}
            local = {k: v for k, v in sys.local.items() if k != ev.oid}
            return StepOutcome(ENABLED, SystemState(existing, local))
        if isinstance(ev, Call):
            if ev.oid not in sys.local:
                raise UnknownObject(ev.oid)
            cls = sys.direct_class(ev.oid)
            if ev.via is not None:
                if not h.is_ancestor_or_self(ev.via, cls) or ev.op not in h.effective_operations(ev.via):
                    raise UnknownOperation(f"{ev.via} offers no operation {ev.op!r} on {ev.oid}")
            if ev.op not in h.effective_operations(cls):
                raise UnknownOperation(f"{cls} has no operation {ev.op!r}")
            succ = self.successors(cls, ev.op, sys.local[ev.oid], ev.inputs)
            if not succ:
                return self._refused(sys, f"{cls}.{ev.op} is not enabled")
            post, out = succ[0]
            local = dict(sys.local)
            local[ev.oid] = post
            return StepOutcome(ENABLED, SystemState(sys.existing, local), out)
        raise TypeError(ev)


def state_invariant_violations(h: Hierarchy, sys: SystemState, constraint_semantics: str = GUARD) -> list[str]:
    """Every broken population invariant of ``sys`` (empty when consistent)."""
    out = []
    seen: dict = {}
    for c, objs in sys.existing.items():
        for o in objs:
            if o in seen:
                out.append(f"{o} is a direct object of both {seen[o]} and {c}")
            seen[o] = c
        if objs and h[c].abstract:
            out.append(f"abstract class {c} has direct objects")
    if set(seen) != set(sys.local):
        out.append("state map domain differs from the existing objects")
    for c in h.classes:
        if c.parent is not None and not sys.ext(h, c.name) <= sys.ext(h, c.parent):
            out.append(f"ext({c.name}) is not a subset of ext({c.parent})")
    for o, s in sys.local.items():
        c = seen.get(o)
        if c is None:
            continue
        env = state_env(h, c, s)
        if evaluate(h.effective_invariant(c), env) is not True:
            out.append(f"{o} breaks the {c} invariant")
        if constraint_semantics == INVARIANT and not constraint_ok(h, c, s):
            out.append(f"{o} breaks a global constraint")
    return out


# ---------------------------------------------------------------------------
# Bounded substitutability comparison


@dataclass(frozen=True)
class TraceStep:
    op: str
    inputs: Binding
    outputs: Optional[Binding] = None  # observed output, None on the divergent step

    def __str__(self) -> str:
        s = f"{self.op}{_args(self.inputs)}"
        if self.outputs:
            from bicheck.model import format_value

            s += " / " + ", ".join(f"{k}!={format_value(v)}" for k, v in self.outputs.pairs)
        return s


@dataclass(frozen=True)
class TraceDivergence:
    class_a: str
    class_b: str
    trace: tuple[TraceStep, ...]
    step: int  # 1-based index of the divergent call; 0 means object creation
    reason: str  # EnablednessMismatch | OutputMismatch
    detail: str
    transcript: tuple[str, ...] = field(default=(), compare=False)

    def to_dict(self) -> dict:
        return {
            "classA": self.class_a,
            "classB": self.class_b,
            "trace": [str(t) for t in self.trace],
            "step": self.step,
            "reason": self.reason,
            "detail": self.detail,
            "transcript": list(self.transcript),
        }


class _Side:
    def __init__(self, sim: Simulator, cls: str):
        self.sim, self.cls = sim, cls

    def signature(self, states: frozenset, op: str, i: Binding):
        """(can proceed, can block, output -> successor states)."""
        by_out: dict = {}
        can_block = False
        for s in sorted(states, key=self.sim.order(self.cls).__getitem__):
            succ = self.sim.successors(self.cls, op, s, i)
            if not succ:
                can_block = True
            for post, o in succ:
                by_out.setdefault(o, set()).add(post)
        return bool(by_out), can_block, {o: frozenset(v) for o, v in by_out.items()}


def _describe(enabled: bool, can_block: bool, mode: str = BLOCKING) -> str:
    refused = BLOCKED if mode == BLOCKING else VIOLATED
    if enabled and can_block:
        return "may block" if mode == BLOCKING else "may violate"
    return ENABLED if enabled else refused


def compare_substitutability(
    h: Hierarchy,
    class_a: str,
    class_b: str,
    depth: int,
    mode: str = BLOCKING,
    cap: int = DEFAULT_STATE_CAP,
    depth_cap: int = DEFAULT_DEPTH_CAP,
    constraint_semantics: str = GUARD,
) -> Optional[TraceDivergence]:
    """Search call sequences of length <= ``depth`` for an observable difference.

    A fresh object of ``class_a`` and one of ``class_b`` receive the same
    calls, drawn from the operations both classes offer.  Nondeterminism is
    tracked as sets of possible states; observed outputs split the search.
    Returns the first divergence by (length, call order), or None.
    """
    if depth < 1:
        raise ValueError("depth must be positive")
    if depth > depth_cap:
        raise DepthTooLarge(f"depth {depth} exceeds the cap of {depth_cap}")
    for c in (class_a, class_b):
        if h[c].abstract:
            raise SimulationError(f"{c} is abstract and cannot be instantiated")
    if h.lineage(class_a)[0] != h.lineage(class_b)[0]:
        raise SimulationError(f"{class_a} and {class_b} are not in the same hierarchy")

    sim = Simulator(h, mode, constraint_semantics, cap)
    a, b = _Side(sim, class_a), _Side(sim, class_b)
    ops_b = h.effective_operations(class_b)
    alphabet = []
    for op, (_, spec) in h.effective_operations(class_a).items():
        if op in ops_b:
            for i in product_bindings(spec.inputs):
                alphabet.append((op, i))

    def divergence(trace, step, reason, detail):
        return TraceDivergence(
            class_a, class_b, tuple(trace), step, reason, detail,
            tuple(transcript(sim, class_a, trace) + transcript(sim, class_b, trace)),
        )

    init_a, init_b = frozenset(sim.initial(class_a)), frozenset(sim.initial(class_b))
    if bool(init_a) != bool(init_b):
        return divergence((), 0, "EnablednessMismatch",
                          f"creation: {class_a} {_describe(bool(init_a), False, mode)}, "
                          f"{class_b} {_describe(bool(init_b), False, mode)}")
    if not init_a:
        return None

    frontier = [((), init_a, init_b)]
    seen = {(init_a, init_b)}
    for k in range(1, depth + 1):
        nxt = []
        for trace, sa, sb in frontier:
            for op, i in alphabet:
                ea, ba, outs_a = a.signature(sa, op, i)
                eb, bb, outs_b = b.signature(sb, op, i)
                here = trace + (TraceStep(op, i),)
                if (ea, ba) != (eb, bb):
                    return divergence(here, k, "EnablednessMismatch",
                                      f"{op}{_args(i)}: {class_a} {_describe(ea, ba, mode)}, "
                                      f"{class_b} {_describe(eb, bb, mode)}")
                if set(outs_a) != set(outs_b):
                    return divergence(here, k, "OutputMismatch",
                                      f"{op}{_args(i)}: outputs {sorted(map(str, outs_a))} vs "
                                      f"{sorted(map(str, outs_b))}")
                for o in sorted(outs_a, key=str):
                    pair = (outs_a[o], outs_b[o])
                    if pair in seen:
                        continue
                    seen.add(pair)
                    nxt.append((trace + (TraceStep(op, i, o),), *pair))
        frontier = nxt
    return None


def transcript(sim: Simulator, cls: str, trace) -> list[str]:
    """Replay ``trace`` on one fresh object, one ``step k: EVENT -> status`` line per call."""
    lines = [f"[{cls}] step 0: new {cls} -> " + (ENABLED if sim.initial(cls) else BLOCKED)]
    states = frozenset(sim.initial(cls))
    side = _Side(sim, cls)
    for k, t in enumerate(trace, 1):
        enabled, _, outs = side.signature(states, t.op, t.inputs)
        if enabled:
            status = ENABLED
        else:
            status = BLOCKED if sim.mode == BLOCKING else VIOLATED
        lines.append(f"[{cls}] step {k}: {t.op}{_args(t.inputs)} -> {status}")
        if not enabled:
            break
        if t.outputs is not None and t.outputs in outs:
            states = outs[t.outputs]
        else:
            states = frozenset().union(*outs.values())
    return lines

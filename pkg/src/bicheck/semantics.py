"""Exhaustive finite-state semantics.

States are enumerated over the product of field domains, predicates are
evaluated on plain dict environments keyed by decorated variable names
(``items``, ``items'``, ``item?``, ``item!``), and every operation becomes a
fully enumerated relation of ``(state, input, state', output)`` tuples.

Partial operators (``head``/``tail`` on ``<>``) make a predicate undefined.
Undefinedness is strict: it propagates through every connective, and an
undefined predicate is treated as false wherever a truth value is needed.
"""

from __future__ import annotations

import itertools
import os
from dataclasses import dataclass, field
from functools import cached_property
from pathlib import Path
from typing import Callable, Iterable, Iterator, Mapping, Optional

from bicheck.model import (
    OUTPUT,
    PRIMED,
    Binary,
    EmptySeq,
    Expr,
    Hierarchy,
    Lit,
    NotAnAncestor,
    OperationSpec,
    Unary,
    Var,
    conj,
    format_value,
    free_vars,
)

DEFAULT_STATE_CAP = 1_000_000


class StateSpaceTooLarge(Exception):
    pass


class _UndefinedType:
    _inst = None

    def __new__(cls):
        if cls._inst is None:
            cls._inst = super().__new__(cls)
        return cls._inst

    def __repr__(self) -> str:
        return "Undefined"

    def __bool__(self) -> bool:
        return False


UNDEFINED = _UndefinedType()


class Undefined(Exception):
    """Raised internally when a partial operator is applied outside its domain."""


# ---------------------------------------------------------------------------
# Bindings


@dataclass(frozen=True)
class Binding:
    """Immutable name -> value map that keeps declaration order."""

    pairs: tuple = ()

    def __post_init__(self):
        object.__setattr__(self, "_hash", hash(self.pairs))

    def __hash__(self) -> int:
        return self._hash

    @classmethod
    def of(cls, mapping: Mapping | Iterable = ()) -> "Binding":
        if isinstance(mapping, Mapping):
            mapping = mapping.items()
        return cls(tuple(mapping))

    def __getitem__(self, name: str):
        for k, v in self.pairs:
            if k == name:
                return v
        raise KeyError(name)

    def __iter__(self):
        return (k for k, _ in self.pairs)

    def __len__(self) -> int:
        return len(self.pairs)

    def keys(self):
        return [k for k, _ in self.pairs]

    def items(self):
        return list(self.pairs)

    def as_dict(self) -> dict:
        return dict(self.pairs)

    def restrict(self, names: Iterable[str]) -> "Binding":
        keep = set(names)
        return Binding(tuple((k, v) for k, v in self.pairs if k in keep))

    def decorated(self, suffix: str) -> dict:
        return {k + suffix: v for k, v in self.pairs}

    def __str__(self) -> str:
        return "{" + ", ".join(f"{k}={format_value(v)}" for k, v in self.pairs) + "}"


EMPTY = Binding()


def product_bindings(decls) -> Iterator[Binding]:
    """All bindings of ``(name, domain)`` declarations in lexicographic order."""
    names = [n for n, _ in decls]
    for combo in itertools.product(*(list(d.values()) for _, d in decls)):
        yield Binding(tuple(zip(names, combo)))


def product_size(decls) -> int:
    n = 1
    for _, d in decls:
        n *= d.cardinality()
    return n


# ---------------------------------------------------------------------------
# Evaluation


def _apply_unary(op: str, v):
    if op == "not":
        return not v
    if op == "len":
        return len(v)
    if op == "isEmpty":
        return len(v) == 0
    if not v:
        raise Undefined(op)
    return v[0] if op == "head" else v[1:]


def _apply_binary(op: str, a, b):
    if op == "=":
        return a == b
    if op == "!=":
        return a != b
    if op == "<":
        return a < b
    if op == "<=":
        return a <= b
    if op == ">":
        return a > b
    if op == ">=":
        return a >= b
    if op == "+":
        return a + b
    if op == "-":
        return a - b
    if op == "and":
        return a and b
    if op == "or":
        return a or b
    if op == "=>":
        return (not a) or b
    if op == "append":
        return a + (b,)
    if op == "concat":
        return a + b
    raise ValueError(f"unknown operator {op!r}")


def _eval(e: Expr, env: Mapping):
    if isinstance(e, Var):
        return env[e.key]
    if isinstance(e, Lit):
        return e.value
    if isinstance(e, EmptySeq):
        return ()
    if isinstance(e, Unary):
        return _apply_unary(e.op, _eval(e.arg, env))
    # both operands are evaluated so undefinedness is order independent
    a = _eval(e.left, env)
    b = _eval(e.right, env)
    return _apply_binary(e.op, a, b)


def evaluate(e: Expr, env: Mapping):
    """Evaluate ``e`` in ``env``; returns :data:`UNDEFINED` for partial-operator failures.

    A missing variable is a ``KeyError``: the predicate was not type-checked
    against the environment.
    """
    try:
        return _eval(e, env)
    except Undefined:
        return UNDEFINED


def holds(e: Expr, env: Mapping) -> bool:
    return evaluate(e, env) is True


def compile_expr(e: Expr) -> Callable[[Mapping], object]:
    """Closure form of :func:`evaluate` used on hot paths; raises :class:`Undefined`."""
    if isinstance(e, Var):
        key = e.key
        return lambda env: env[key]
    if isinstance(e, Lit):
        v = e.value
        return lambda env: v
    if isinstance(e, EmptySeq):
        return lambda env: ()
    if isinstance(e, Unary):
        f = compile_expr(e.arg)
        op = e.op
        if op == "not":
            return lambda env: not f(env)
        return lambda env: _apply_unary(op, f(env))
    f, g = compile_expr(e.left), compile_expr(e.right)
    op = e.op
    if op == "=":
        return lambda env: f(env) == g(env)
    if op == "and":
        def conj(env):
            a = f(env)
            b = g(env)
            return a and b
        return conj
    return lambda env: _apply_binary(op, f(env), g(env))


def conjuncts(e: Expr) -> list[Expr]:
    """The operands of a top-level chain of conjunctions, left to right."""
    if isinstance(e, Binary) and e.op == "and":
        return conjuncts(e.left) + conjuncts(e.right)
    return [e]


def compile_predicate(e: Expr) -> Callable[[Mapping], bool]:
    f = compile_expr(e)

    def pred(env) -> bool:
        try:
            return f(env) is True
        except Undefined:
            return False

    return pred


def constant_env(h: Hierarchy, cls: str) -> dict:
    return {k: v for k, (_, v) in h.effective_constants(cls).items()}


# ---------------------------------------------------------------------------
# State spaces


@dataclass(frozen=True)
class StateSpace:
    class_name: str
    fields: tuple
    states: tuple[Binding, ...]
    _index: frozenset = field(default=frozenset(), compare=False, repr=False)

    def __post_init__(self):
        object.__setattr__(self, "_index", frozenset(self.states))

    def __contains__(self, s: Binding) -> bool:
        return s in self._index

    def __len__(self) -> int:
        return len(self.states)

    def __iter__(self):
        return iter(self.states)


def enumerate_states(h: Hierarchy, cls: str, cap: int = DEFAULT_STATE_CAP) -> StateSpace:
    fields = h.effective_fields(cls)
    size = product_size(fields)
    if size > cap:
        raise StateSpaceTooLarge(f"{cls}: {size} candidate states exceed the cap of {cap}")
    inv = compile_predicate(h.effective_invariant(cls))
    consts = constant_env(h, cls)
    states = []
    for b in product_bindings(fields):
        env = dict(consts)
        env.update(b.pairs)
        if inv(env):
            states.append(b)
    return StateSpace(cls, fields, tuple(states))


def state_env(h: Hierarchy, cls: str, s: Binding, primed: bool = False) -> dict:
    env = constant_env(h, cls)
    env.update(s.decorated("'") if primed else s.pairs)
    return env


def init_holds(h: Hierarchy, cls: str, s: Binding) -> bool:
    return holds(h.effective_init(cls), state_env(h, cls, s, primed=True))


def final_holds(h: Hierarchy, cls: str, s: Binding) -> bool:
    return holds(h.effective_final(cls), state_env(h, cls, s))


def initial_states(h: Hierarchy, cls: str, space: Optional[StateSpace] = None) -> list[Binding]:
    space = space or enumerate_states(h, cls)
    return [s for s in space if init_holds(h, cls, s)]


def init_entailment_failure(h: Hierarchy, cls: str, cap: int = DEFAULT_STATE_CAP) -> Optional[Binding]:
    """First binding satisfying the effective init but not the effective invariant."""
    fields = h.effective_fields(cls)
    if all(h[c].init is None for c in h.lineage(cls)) or product_size(fields) > cap:
        return None
    init = compile_predicate(h.effective_init(cls))
    inv = compile_predicate(h.effective_invariant(cls))
    consts = constant_env(h, cls)
    for b in product_bindings(fields):
        env = dict(consts)
        env.update(b.decorated("'"))
        if init(env):
            env.update(b.pairs)
            if not inv(env):
                return b
    return None


# ---------------------------------------------------------------------------
# Operation relations


@dataclass(frozen=True)
class OpRelation:
    class_name: str
    op: str
    inputs: tuple[str, ...]
    outputs: tuple[str, ...]
    tuples: tuple  # of (pre, in, post, out) Bindings, deterministic order
    _set: frozenset = field(default=frozenset(), compare=False, repr=False)

    def __post_init__(self):
        # dedupe while keeping first-seen order
        seen = dict.fromkeys(self.tuples)
        object.__setattr__(self, "tuples", tuple(seen))
        object.__setattr__(self, "_set", frozenset(seen))

    def __contains__(self, t) -> bool:
        return t in self._set

    @cached_property
    def domain(self) -> frozenset:
        return frozenset((s, i) for s, i, _, _ in self.tuples)

    def __iter__(self):
        return iter(self.tuples)

    def __len__(self) -> int:
        return len(self.tuples)

    def union(self, other: "OpRelation") -> "OpRelation":
        return OpRelation(self.class_name, self.op, self.inputs, self.outputs, self.tuples + other.tuples)


def find_operation(h: Hierarchy, cls: str, op: str) -> OperationSpec:
    ops = h.effective_operations(cls)
    if op not in ops:
        raise KeyError(f"class {cls} has no operation {op!r}")
    return ops[op][1]


def candidate_count(h: Hierarchy, cls: str, op: str, space: Optional[StateSpace] = None) -> int:
    spec = find_operation(h, cls, op)
    n = len(space) if space is not None else product_size(h.effective_fields(cls))
    return n * n * product_size(spec.inputs) * product_size(spec.outputs)


def build_relation(
    h: Hierarchy,
    cls: str,
    op: str,
    cap: int = DEFAULT_STATE_CAP,
    space: Optional[StateSpace] = None,
) -> OpRelation:
    """Every ``(s, i, s', o)`` with ``s, s'`` valid states of ``cls`` and the body true.

    An operation inherited without being restated keeps its ancestor's body;
    fields added below the declaring class are then left unconstrained.
    """
    spec = find_operation(h, cls, op)
    space = space or enumerate_states(h, cls, cap)
    n = candidate_count(h, cls, op, space)
    if n > cap:
        raise StateSpaceTooLarge(f"{cls}.{op}: {n} candidate tuples exceed the cap of {cap}")
    # The body holds only if every top-level conjunct is true, so each
    # conjunct is tested as soon as the variables it mentions are bound.
    # This is exact under strict undefinedness.
    pre, mid, post = [], [], []
    for part in conjuncts(spec.body):
        kinds = {v.kind for v in free_vars(part)}
        (post if OUTPUT in kinds else mid if PRIMED in kinds else pre).append(part)
    pre_ok, mid_ok, post_ok = (compile_predicate(conj(*ps)) for ps in (pre, mid, post))
    inputs = list(product_bindings(spec.inputs))
    outputs = [(o, o.decorated("!")) for o in product_bindings(spec.outputs)]
    primed = [(s, s.decorated("'")) for s in space]
    consts = constant_env(h, cls)
    tuples = []
    for s in space:
        for i in inputs:
            env = dict(consts)
            env.update(s.pairs)
            env.update(i.decorated("?"))
            if not pre_ok(env):
                continue
            for s2, s2env in primed:
                env.update(s2env)
                if not mid_ok(env):
                    continue
                for o, oenv in outputs:
                    env.update(oenv)
                    if post_ok(env):
                        tuples.append((s, i, s2, o))
    return OpRelation(
        cls,
        op,
        tuple(n for n, _ in spec.inputs),
        tuple(n for n, _ in spec.outputs),
        tuple(tuples),
    )


def precondition(r: OpRelation) -> frozenset:
    """The ``(state, input)`` pairs from which the operation can fire."""
    return r.domain


class RelationCache:
    """Memoised state spaces and relations of one hierarchy under one cap."""

    def __init__(self, h: Hierarchy, cap: int = DEFAULT_STATE_CAP):
        self.h, self.cap = h, cap
        self._spaces: dict = {}
        self._rels: dict = {}

    def space(self, cls: str) -> StateSpace:
        if cls not in self._spaces:
            self._spaces[cls] = enumerate_states(self.h, cls, self.cap)
        return self._spaces[cls]

    def relation(self, cls: str, op: str) -> OpRelation:
        if (cls, op) not in self._rels:
            self._rels[(cls, op)] = build_relation(self.h, cls, op, self.cap, self.space(cls))
        return self._rels[(cls, op)]


# ---------------------------------------------------------------------------
# Projection onto an ancestor and lifted (virtual) operations


class Projection:
    """Restriction of subclass states to an ancestor's effective fields."""

    def __init__(self, h: Hierarchy, sub: str, sup: str):
        if not h.is_ancestor_or_self(sup, sub):
            raise NotAnAncestor(f"{sup} is not an ancestor of {sub}")
        self.sub, self.sup = sub, sup
        self.names = tuple(n for n, _ in h.effective_fields(sup))
        self._identity = self.names == tuple(n for n, _ in h.effective_fields(sub))
        self._cache: dict[Binding, Binding] = {}

    def __call__(self, s: Binding) -> Binding:
        if self._identity:
            return s
        out = self._cache.get(s)
        if out is None:
            # prefix property: inherited fields come first
            out = Binding(s.pairs[: len(self.names)])
            self._cache[s] = out
        return out


def project(h: Hierarchy, sub: str, sup: str, s: Binding) -> Binding:
    return Projection(h, sub, sup)(s)


def lift_relation(r: OpRelation, f: Callable[[Binding], Binding], target: Optional[str] = None) -> OpRelation:
    """Image of ``r`` under ``f`` on both state columns; inputs and outputs pass through."""
    target = target or getattr(f, "sup", r.class_name)
    tuples = tuple((f(s), i, f(s2), o) for s, i, s2, o in r.tuples)
    return OpRelation(target, r.op, r.inputs, r.outputs, tuples)


# ---------------------------------------------------------------------------
# Relation dump


def format_relation(r: OpRelation) -> str:
    lines = [f"{s} | {i} -> {s2} | {o}" for s, i, s2, o in r.tuples]
    return "\n".join(lines) + ("\n" if lines else "")


def dump_relations(h: Hierarchy, directory, cap: int = DEFAULT_STATE_CAP) -> list[Path]:
    """Write ``<Class>.<op>.rel`` for every operation of every class."""
    directory = Path(directory)
    os.makedirs(directory, exist_ok=True)
    written = []
    for c in h.classes:
        space = enumerate_states(h, c.name, cap)
        for op in h.effective_operations(c.name):
            r = build_relation(h, c.name, op, cap, space)
            path = directory / f"{c.name}.{op}.rel"
            path.write_text(format_relation(r))
            written.append(path)
    return written

"""Static typing of predicates against a class scope."""

from __future__ import annotations

from dataclasses import dataclass
from typing import Optional

from bicheck.model import (
    BOOL,
    CONST,
    INPUT,
    INT,
    OUTPUT,
    PRIMED,
    STATE,
    Binary,
    EmptySeq,
    EnumDomain,
    Expr,
    Hierarchy,
    Lit,
    SeqType,
    SourceSpan,
    StructuralError,
    Type,
    Unary,
    Var,
    format_type,
    type_of,
    type_of_value,
    types_compatible,
)


@dataclass(frozen=True)
class TypeIssue:
    message: str
    span: Optional[SourceSpan]


class Scope:
    """Variables visible to one predicate, keyed by decorated name."""

    def __init__(self, types: dict[str, Type], kinds: frozenset[str], consts=frozenset()):
        self.types = types
        self.kinds = kinds
        self.consts = frozenset(consts)

    @classmethod
    def for_class(cls, h: Hierarchy, name: str, kinds, op=None) -> "Scope":
        types: dict[str, Type] = {}
        for f, d in h.effective_fields(name):
            if STATE in kinds:
                types[f] = type_of(d)
            if PRIMED in kinds:
                types[f + "'"] = type_of(d)
        consts = h.effective_constants(name)
        for k, (d, _) in consts.items():
            types.setdefault(k, type_of(d))
        if op is not None:
            for n, d in op.inputs:
                types[n + "?"] = type_of(d)
            for n, d in op.outputs:
                types[n + "!"] = type_of(d)
        return cls(types, frozenset(kinds) | {CONST}, consts)


def _join(a: Type, b: Type) -> Type:
    """The more informative of two compatible types."""
    if isinstance(a, SeqType) and isinstance(b, SeqType):
        if a.elem is None:
            return b
        if b.elem is None:
            return a
        return SeqType(_join(a.elem, b.elem))
    return a


def infer(e: Expr, scope: Scope, issues: list[TypeIssue]) -> Optional[Type]:
    """Type of ``e``; appends to ``issues`` and returns None on error."""
    if isinstance(e, Lit):
        return type_of_value(e.value)
    if isinstance(e, EmptySeq):
        return SeqType(None)
    if isinstance(e, Var):
        if e.kind not in scope.kinds:
            issues.append(TypeIssue(f"{e.kind} variable {e.key!r} is not allowed here", e.span))
            return None
        t = scope.types.get(e.key)
        if (e.kind == CONST) != (e.key in scope.consts):
            t = None
        if t is None:
            issues.append(TypeIssue(f"undeclared variable {e.key!r}", e.span))
        return t
    if isinstance(e, Unary):
        t = infer(e.arg, scope, issues)
        if t is None:
            return None
        if e.op == "not":
            if t != BOOL:
                issues.append(TypeIssue(f"'~' expects bool, got {format_type(t)}", e.span))
                return None
            return BOOL
        if not isinstance(t, SeqType):
            issues.append(TypeIssue(f"{e.op!r} expects a sequence, got {format_type(t)}", e.span))
            return None
        if e.op == "head":
            if t.elem is None:
                issues.append(TypeIssue("head of an untyped empty sequence", e.span))
            return t.elem
        if e.op == "tail":
            return t
        return INT if e.op == "len" else BOOL
    assert isinstance(e, Binary), e
    lt = infer(e.left, scope, issues)
    rt = infer(e.right, scope, issues)
    if lt is None or rt is None:
        return None
    op = e.op
    if op in ("=", "!="):
        if not types_compatible(lt, rt):
            issues.append(
                TypeIssue(f"cannot compare {format_type(lt)} with {format_type(rt)}", e.span)
            )
            return None
        return BOOL
    if op in ("<", "<=", ">", ">=", "+", "-"):
        if lt != INT or rt != INT:
            issues.append(TypeIssue(f"{op!r} expects int operands", e.span))
            return None
        return BOOL if op not in ("+", "-") else INT
    if op in ("and", "or", "=>"):
        if lt != BOOL or rt != BOOL:
            issues.append(TypeIssue(f"{op!r} expects bool operands", e.span))
            return None
        return BOOL
    if op == "append":
        if not isinstance(lt, SeqType) or (lt.elem is not None and not types_compatible(lt.elem, rt)):
            issues.append(TypeIssue(f"cannot append {format_type(rt)} to {format_type(lt)}", e.span))
            return None
        if isinstance(rt, SeqType):
            issues.append(TypeIssue("nested sequences are not supported", e.span))
            return None
        return SeqType(rt if lt.elem is None else lt.elem)
    if op == "concat":
        if not (isinstance(lt, SeqType) and isinstance(rt, SeqType) and types_compatible(lt, rt)):
            issues.append(TypeIssue(f"cannot concatenate {format_type(lt)} and {format_type(rt)}", e.span))
            return None
        return _join(lt, rt)
    issues.append(TypeIssue(f"unknown operator {op!r}", e.span))
    return None


def check_predicate(e: Expr, scope: Scope) -> list[TypeIssue]:
    issues: list[TypeIssue] = []
    t = infer(e, scope, issues)
    if t is not None and t != BOOL:
        issues.append(TypeIssue(f"predicate must be bool, got {format_type(t)}", getattr(e, "span", None)))
    return issues


def enum_literals_in_scope(h: Hierarchy, name: str, op=None) -> dict[str, list[EnumDomain]]:
    """Literal name -> enum domains declaring it, over everything visible in a class."""
    doms = [d for _, d in h.effective_fields(name)]
    doms += [d for d, _ in h.effective_constants(name).values()]
    if op is not None:
        doms += [d for _, d in op.inputs + op.outputs]
    out: dict[str, list[EnumDomain]] = {}

    def visit(d):
        if isinstance(d, EnumDomain):
            for lit in d.literals:
                if d not in out.setdefault(lit, []):
                    out[lit].append(d)
        elif hasattr(d, "elem"):
            visit(d.elem)

    for d in doms:
        visit(d)
    return out


def check_hierarchy_types(h: Hierarchy) -> list[StructuralError]:
    errs: list[StructuralError] = []

    def add(where, issues):
        for i in issues:
            errs.append(StructuralError("TypeError", where, i.message))

    for c in h.classes:
        names = {f for f, _ in h.effective_fields(c.name)} | set(h.effective_constants(c.name))
        for lit in enum_literals_in_scope(h, c.name):
            if lit in names:
                errs.append(StructuralError("NameClash", c.name, f"enum literal {lit!r} shadows a field or constant"))
        if c.invariant is not None:
            add(f"{c.name}.invariant", check_predicate(c.invariant, Scope.for_class(h, c.name, {STATE})))
        if c.init is not None:
            add(f"{c.name}.init", check_predicate(c.init, Scope.for_class(h, c.name, {PRIMED})))
        if c.final is not None:
            add(f"{c.name}.final", check_predicate(c.final, Scope.for_class(h, c.name, {STATE})))
        for op in c.operations:
            scope = Scope.for_class(h, c.name, {STATE, PRIMED, INPUT, OUTPUT}, op=op)
            add(f"{c.name}.{op.name}", check_predicate(op.body, scope))
    for g in h.constraints:
        if g.class_name in h:
            add(f"constraint on {g.class_name}", check_predicate(g.body, Scope.for_class(h, g.class_name, {STATE})))
    return errs

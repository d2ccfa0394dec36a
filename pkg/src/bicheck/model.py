"""Data model for class-hierarchy specifications.

Domains, values, predicate syntax trees, operation and class intensions, and
the single-inheritance hierarchy that the checker works on.  Everything here
is immutable; evaluation lives in :mod:`bicheck.semantics`.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass, field
from typing import Iterator, Optional, Union

# ---------------------------------------------------------------------------
# Domains


@dataclass(frozen=True)
class BoolDomain:
    def values(self) -> Iterator[bool]:
        yield False
        yield True

    def cardinality(self) -> int:
        return 2

    def contains(self, v) -> bool:
        return isinstance(v, bool)


@dataclass(frozen=True)
class IntRange:
    lo: int
    hi: int

    def values(self) -> Iterator[int]:
        return iter(range(self.lo, self.hi + 1))

    def cardinality(self) -> int:
        return max(0, self.hi - self.lo + 1)

    def contains(self, v) -> bool:
        return isinstance(v, int) and not isinstance(v, bool) and self.lo <= v <= self.hi


@dataclass(frozen=True)
class EnumDomain:
    """A finite set of named literals.

    Enums are structural: two enums with the same literals are the same type.
    ``name`` is cosmetic only.
    """

    literals: tuple[str, ...]
    name: Optional[str] = field(default=None, compare=False)

    def __post_init__(self):
        object.__setattr__(self, "_hash", hash(self.literals))

    def __hash__(self) -> int:
        return self._hash

    def values(self) -> Iterator["EnumLit"]:
        for lit in self.literals:
            yield EnumLit(self, lit)

    def cardinality(self) -> int:
        return len(self.literals)

    def contains(self, v) -> bool:
        return isinstance(v, EnumLit) and v.domain == self and v.literal in self.literals


@dataclass(frozen=True)
class SeqDomain:
    elem: "Domain"
    max_len: int

    def values(self) -> Iterator[tuple]:
        elems = list(self.elem.values())
        for n in range(self.max_len + 1):
            yield from itertools.product(elems, repeat=n)

    def cardinality(self) -> int:
        k = self.elem.cardinality()
        return sum(k**n for n in range(self.max_len + 1))

    def contains(self, v) -> bool:
        return (
            isinstance(v, tuple)
            and len(v) <= self.max_len
            and all(self.elem.contains(x) for x in v)
        )


Domain = Union[BoolDomain, IntRange, EnumDomain, SeqDomain]


# ---------------------------------------------------------------------------
# Values
#
# Booleans and integers are plain Python ``bool``/``int``; sequences are
# tuples.  Enum literals carry their domain so they never compare equal to a
# literal of a different enum.


@dataclass(frozen=True)
class EnumLit:
    domain: EnumDomain
    literal: str

    def __post_init__(self):
        # values are hashed constantly during enumeration; compute once
        object.__setattr__(self, "_hash", hash((self.domain, self.literal)))

    def __hash__(self) -> int:
        return self._hash

    def __repr__(self) -> str:
        return self.literal


Value = Union[bool, int, EnumLit, tuple]


def format_value(v: Value) -> str:
    """Canonical concrete syntax for a value (same as the DSL literal form)."""
    if isinstance(v, bool):
        return "true" if v else "false"
    if isinstance(v, EnumLit):
        return v.literal
    if isinstance(v, tuple):
        if not v:
            return "<>"
        return "<" + ", ".join(format_value(x) for x in v) + ">"
    return str(v)


# ---------------------------------------------------------------------------
# Types (used by the checker; derived from domains)


@dataclass(frozen=True)
class SeqType:
    elem: Optional["Type"]  # None: element type not yet known (empty literal)


Type = Union[str, EnumDomain, SeqType]  # "bool" | "int" | enum | seq
BOOL = "bool"
INT = "int"


def type_of(d: Domain) -> Type:
    if isinstance(d, BoolDomain):
        return BOOL
    if isinstance(d, IntRange):
        return INT
    if isinstance(d, EnumDomain):
        return d
    return SeqType(type_of(d.elem))


def type_of_value(v: Value) -> Type:
    if isinstance(v, bool):
        return BOOL
    if isinstance(v, int):
        return INT
    if isinstance(v, EnumLit):
        return v.domain
    elem = type_of_value(v[0]) if v else None
    return SeqType(elem)


def types_compatible(a: Type, b: Type) -> bool:
    if isinstance(a, SeqType) and isinstance(b, SeqType):
        if a.elem is None or b.elem is None:
            return True
        return types_compatible(a.elem, b.elem)
    return a == b


def format_type(t: Type) -> str:
    if isinstance(t, EnumDomain):
        return "enum {" + ", ".join(t.literals) + "}"
    if isinstance(t, SeqType):
        return "seq(" + ("?" if t.elem is None else format_type(t.elem)) + ")"
    return t


# ---------------------------------------------------------------------------
# Expressions


@dataclass(frozen=True)
class SourceSpan:
    """1-based line/column range; ``end_col`` is the column of the last character."""

    file: str
    start_line: int
    start_col: int
    end_line: int
    end_col: int

    def __str__(self) -> str:
        return f"{self.file}:{self.start_line}:{self.start_col}"


STATE, PRIMED, INPUT, OUTPUT, CONST = "state", "primed", "input", "output", "const"
VAR_KINDS = (STATE, PRIMED, INPUT, OUTPUT, CONST)
_DECORATION = {STATE: "", PRIMED: "'", INPUT: "?", OUTPUT: "!", CONST: ""}

UNARY_OPS = ("not", "head", "tail", "len", "isEmpty")
BINARY_OPS = (
    "=", "!=", "<", "<=", ">", ">=", "+", "-",
    "and", "or", "=>", "append", "concat",
)


@dataclass(frozen=True)
class Var:
    name: str
    kind: str
    span: Optional[SourceSpan] = field(default=None, compare=False, repr=False)

    @property
    def key(self) -> str:
        """Environment key: the name with its Z-style decoration."""
        return self.name + _DECORATION[self.kind]


@dataclass(frozen=True)
class Lit:
    value: Value
    span: Optional[SourceSpan] = field(default=None, compare=False, repr=False)


@dataclass(frozen=True)
class EmptySeq:
    span: Optional[SourceSpan] = field(default=None, compare=False, repr=False)


@dataclass(frozen=True)
class Unary:
    op: str
    arg: "Expr"
    span: Optional[SourceSpan] = field(default=None, compare=False, repr=False)


@dataclass(frozen=True)
class Binary:
    op: str
    left: "Expr"
    right: "Expr"
    span: Optional[SourceSpan] = field(default=None, compare=False, repr=False)


Expr = Union[Var, Lit, EmptySeq, Unary, Binary]

TRUE = Lit(True)


def conj(*exprs: Optional[Expr]) -> Expr:
    """Left-nested conjunction of the non-``None`` arguments (``true`` if none)."""
    parts = [e for e in exprs if e is not None]
    if not parts:
        return TRUE
    out = parts[0]
    for e in parts[1:]:
        out = Binary("and", out, e)
    return out


def walk(e: Expr) -> Iterator[Expr]:
    yield e
    if isinstance(e, Unary):
        yield from walk(e.arg)
    elif isinstance(e, Binary):
        yield from walk(e.left)
        yield from walk(e.right)


def free_vars(e: Expr) -> set[Var]:
    return {n for n in walk(e) if isinstance(n, Var)}


# ---------------------------------------------------------------------------
# Specifications

SPECIALIZES = "specializes"
INTRODUCES = "introduces"


@dataclass(frozen=True)
class OperationSpec:
    name: str
    inputs: tuple[tuple[str, Domain], ...]
    outputs: tuple[tuple[str, Domain], ...]
    body: Expr
    mode: str = INTRODUCES

    @property
    def signature(self):
        return (self.inputs, self.outputs)


@dataclass(frozen=True)
class ClassSpec:
    name: str
    abstract: bool = False
    parent: Optional[str] = None
    fields: tuple[tuple[str, Domain], ...] = ()
    invariant: Optional[Expr] = None
    init: Optional[Expr] = None
    final: Optional[Expr] = None
    operations: tuple[OperationSpec, ...] = ()
    constants: tuple[tuple[str, Domain, Value], ...] = ()

    def op(self, name: str) -> Optional[OperationSpec]:
        for o in self.operations:
            if o.name == name:
                return o
        return None


@dataclass(frozen=True)
class GlobalConstraint:
    """``forall <var> : ext . <body>`` attached to the extension of a class.

    ``body`` refers to the object's fields as state variables.
    """

    class_name: str
    var: str
    body: Expr
    span: Optional[SourceSpan] = field(default=None, compare=False, repr=False)


class HierarchyError(Exception):
    pass


class NotAnAncestor(HierarchyError):
    pass


@dataclass(frozen=True)
class Hierarchy:
    classes: tuple[ClassSpec, ...]
    constraints: tuple[GlobalConstraint, ...] = ()

    def __post_init__(self):
        object.__setattr__(self, "_by_name", {c.name: c for c in self.classes})

    def __getitem__(self, name: str) -> ClassSpec:
        try:
            return self._by_name[name]
        except KeyError:
            raise HierarchyError(f"unknown class {name!r}") from None

    def __contains__(self, name: str) -> bool:
        return name in self._by_name

    @property
    def names(self) -> list[str]:
        return [c.name for c in self.classes]

    @property
    def roots(self) -> list[str]:
        return [c.name for c in self.classes if c.parent is None]

    def ancestors(self, name: str) -> list[str]:
        """Proper ancestors, nearest first.  Stops on cycles or unknown parents."""
        out: list[str] = []
        seen = {name}
        cur = self._by_name.get(name)
        while cur is not None and cur.parent is not None:
            p = cur.parent
            if p in seen or p not in self._by_name:
                break
            out.append(p)
            seen.add(p)
            cur = self._by_name[p]
        return out

    def lineage(self, name: str) -> list[str]:
        """Root first, ending with ``name`` itself."""
        return list(reversed(self.ancestors(name))) + [name]

    def children(self, name: str) -> list[str]:
        return [c.name for c in self.classes if c.parent == name]

    def descendants(self, name: str) -> list[str]:
        out = []
        for c in self.classes:
            if c.name != name and name in self.ancestors(c.name):
                out.append(c.name)
        return out

    def is_ancestor_or_self(self, anc: str, name: str) -> bool:
        return anc == name or anc in self.ancestors(name)

    def effective_fields(self, name: str) -> tuple[tuple[str, Domain], ...]:
        out: list[tuple[str, Domain]] = []
        for c in self.lineage(name):
            out.extend(self[c].fields)
        return tuple(out)

    def effective_constants(self, name: str) -> dict[str, tuple[Domain, Value]]:
        out: dict[str, tuple[Domain, Value]] = {}
        for c in self.lineage(name):
            for cname, dom, val in self[c].constants:
                out[cname] = (dom, val)
        return out

    def effective_invariant(self, name: str) -> Expr:
        return conj(*(self[c].invariant for c in self.lineage(name)))

    def effective_init(self, name: str) -> Expr:
        # nearest declared init wins; subclasses restate it to strengthen
        for c in reversed(self.lineage(name)):
            if self[c].init is not None:
                return self[c].init
        return TRUE

    def effective_final(self, name: str) -> Expr:
        for c in reversed(self.lineage(name)):
            if self[c].final is not None:
                return self[c].final
        return TRUE

    def effective_operations(self, name: str) -> dict[str, tuple[str, OperationSpec]]:
        """Operation name -> (declaring class, spec), in first-declaration order."""
        out: dict[str, tuple[str, OperationSpec]] = {}
        for c in self.lineage(name):
            for op in self[c].operations:
                out[op.name] = (c, op)
        return out

    def constraints_on(self, name: str) -> list[GlobalConstraint]:
        """Constraints whose attached class extension contains objects of ``name``."""
        scope = set(self.lineage(name))
        return [g for g in self.constraints if g.class_name in scope]


# ---------------------------------------------------------------------------
# Structural validation


@dataclass(frozen=True)
class StructuralError:
    rule: str
    where: str
    message: str

    def __str__(self) -> str:
        return f"{self.rule} at {self.where}: {self.message}"


def _domain_errors(d: Domain, where: str) -> list[StructuralError]:
    if isinstance(d, IntRange) and d.lo > d.hi:
        return [StructuralError("EmptyRange", where, f"int {d.lo}..{d.hi} is empty")]
    if isinstance(d, EnumDomain):
        if not d.literals:
            return [StructuralError("EmptyEnum", where, "enum has no literals")]
        if len(set(d.literals)) != len(d.literals):
            return [StructuralError("DuplicateLiteral", where, "enum literals must be distinct")]
    if isinstance(d, SeqDomain):
        errs = []
        if d.max_len < 0:
            errs.append(StructuralError("NegativeBound", where, "sequence bound must be >= 0"))
        if isinstance(d.elem, SeqDomain):
            errs.append(StructuralError("NestedSeq", where, "nested sequences are not supported"))
        return errs + _domain_errors(d.elem, where)
    return []


def _parent_cycle(h: Hierarchy, name: str) -> bool:
    seen = set()
    cur = name
    while cur is not None and cur in h:
        if cur in seen:
            return True
        seen.add(cur)
        cur = h[cur].parent
    return False


def validate(h: Hierarchy, check_init: bool = True, cap: int = 1_000_000) -> list[StructuralError]:
    """Return every structural problem in ``h`` (empty list when valid).

    Besides the structural rules this type-checks every predicate and, when
    ``check_init`` is set, confirms each class's initialisation entails its
    effective invariant over the full field-domain product (skipped for
    classes whose product exceeds ``cap``).
    """
    from bicheck.typecheck import check_hierarchy_types

    errors: list[StructuralError] = []
    names = [c.name for c in h.classes]
    for n in sorted({n for n in names if names.count(n) > 1}):
        errors.append(StructuralError("DuplicateClass", n, "class declared more than once"))

    cyclic = set()
    for c in h.classes:
        if c.parent is not None and c.parent not in h:
            errors.append(StructuralError("UnknownParent", c.name, f"parent {c.parent!r} is not declared"))
        if _parent_cycle(h, c.name):
            cyclic.add(c.name)
    for n in sorted(cyclic):
        errors.append(StructuralError("CyclicParent", n, "parent links form a cycle"))
    if errors:
        return sorted(errors, key=lambda e: (e.where, e.rule, e.message))

    for c in h.classes:
        inherited = {f for a in h.ancestors(c.name) for f, _ in h[a].fields}
        own_seen: set[str] = set()
        for fname, dom in c.fields:
            where = f"{c.name}.{fname}"
            if fname in inherited or fname in own_seen:
                errors.append(StructuralError("DuplicateField", where, f"field {fname!r} already declared"))
            own_seen.add(fname)
            errors.extend(_domain_errors(dom, where))
        inherited_consts = {k for a in h.ancestors(c.name) for k, _, _ in h[a].constants}
        seen_consts: set[str] = set()
        field_names = {f for f, _ in h.effective_fields(c.name)}
        for kname, dom, val in c.constants:
            where = f"{c.name}.{kname}"
            if kname in inherited_consts or kname in seen_consts or kname in field_names:
                errors.append(StructuralError("DuplicateConstant", where, f"name {kname!r} already declared"))
            seen_consts.add(kname)
            errors.extend(_domain_errors(dom, where))
            if not dom.contains(val):
                errors.append(StructuralError("ConstantOutOfDomain", where, "value not in declared domain"))

        ancestor_ops: dict[str, OperationSpec] = {}
        for a in reversed(h.ancestors(c.name)):
            for op in h[a].operations:
                ancestor_ops[op.name] = op
        seen_ops: set[str] = set()
        for op in c.operations:
            where = f"{c.name}.{op.name}"
            if op.name in seen_ops:
                errors.append(StructuralError("DuplicateOperation", where, "operation declared twice"))
            seen_ops.add(op.name)
            params = [n for n, _ in op.inputs] + [n for n, _ in op.outputs]
            if len(set(params)) != len(params):
                errors.append(StructuralError("DuplicateParameter", where, "parameter names must be distinct"))
            for _, dom in op.inputs + op.outputs:
                errors.extend(_domain_errors(dom, where))
            if op.mode == SPECIALIZES:
                base = ancestor_ops.get(op.name)
                if base is None:
                    errors.append(StructuralError("NothingToOverride", where, "no ancestor declares this operation"))
                elif base.signature != op.signature:
                    errors.append(StructuralError("SignatureMismatch", where, "signature differs from the inherited one"))
            elif op.mode == INTRODUCES:
                if op.name in ancestor_ops:
                    errors.append(StructuralError("MissingOverride", where, "ancestor already declares this operation"))
            else:
                errors.append(StructuralError("BadMode", where, f"unknown mode {op.mode!r}"))

    for g in h.constraints:
        if g.class_name not in h:
            errors.append(StructuralError("UnknownClass", f"constraint on {g.class_name}", "class is not declared"))

    errors.extend(check_hierarchy_types(h))
    if errors:
        return sorted(errors, key=lambda e: (e.where, e.rule, e.message))

    if check_init:
        from bicheck.semantics import init_entailment_failure

        for c in h.classes:
            witness = init_entailment_failure(h, c.name, cap=cap)
            if witness is not None:
                errors.append(
                    StructuralError(
                        "InitViolatesInvariant",
                        c.name,
                        "initial state breaks the invariant: " + format_binding(witness),
                    )
                )
    return sorted(errors, key=lambda e: (e.where, e.rule, e.message))


def format_binding(b) -> str:
    items = b.items() if hasattr(b, "items") else b
    return "{" + ", ".join(f"{k}={format_value(v)}" for k, v in items) + "}"

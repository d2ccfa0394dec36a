"""Canonical pretty-printer; ``parse(format_hierarchy(h)) == h``."""

from __future__ import annotations

from typing import Optional

from bicheck.model import (
    CONST,
    SPECIALIZES,
    STATE,
    Binary,
    BoolDomain,
    ClassSpec,
    EmptySeq,
    EnumDomain,
    Expr,
    Hierarchy,
    IntRange,
    Lit,
    SeqDomain,
    Unary,
    Var,
    format_value,
)

_BINARY = {
    "=>": ("=>", 1, "right"),
    "or": ("\\/", 2, "left"),
    "and": ("/\\", 3, "left"),
    "=": ("=", 5, "none"),
    "!=": ("!=", 5, "none"),
    "<": ("<", 5, "none"),
    "<=": ("<=", 5, "none"),
    ">": (">", 5, "none"),
    ">=": (">=", 5, "none"),
    "+": ("+", 6, "left"),
    "-": ("-", 6, "left"),
    "concat": ("++", 6, "left"),
    "append": ("++", 6, "left"),
}
_ATOM = 8


def _prec(e: Expr) -> int:
    if isinstance(e, Binary):
        return _BINARY[e.op][1]
    if isinstance(e, Unary):
        return {"not": 4, "len": 7}.get(e.op, _ATOM)
    if isinstance(e, Lit) and isinstance(e.value, int) and not isinstance(e.value, bool) and e.value < 0:
        return 7
    return _ATOM


def format_expr(e: Expr, bound: Optional[str] = None, min_prec: int = 0) -> str:
    """Render ``e``; ``bound`` names the object variable of a global constraint."""

    def go(x: Expr, p: int) -> str:
        s = _fmt(x)
        return f"({s})" if _prec(x) < p else s

    def _fmt(x: Expr) -> str:
        if isinstance(x, Var):
            if bound is not None and x.kind == STATE:
                return f"{bound}.{x.name}"
            return x.name if x.kind == CONST else x.key
        if isinstance(x, Lit):
            return format_value(x.value)
        if isinstance(x, EmptySeq):
            return "<>"
        if isinstance(x, Unary):
            if x.op == "not":
                return "~" + go(x.arg, 4)
            if x.op == "len":
                return "#" + go(x.arg, 7)
            return f"{x.op}({go(x.arg, 0)})"
        sym, p, assoc = _BINARY[x.op]
        lp = p + (assoc != "left")
        rp = p + (assoc != "right")
        if x.op == "append":
            return f"{go(x.left, lp)} ++ <{go(x.right, 6)}>"
        right = go(x.right, rp)
        if x.op == "concat" and isinstance(x.right, Lit) and x.right.value:
            right = f"({right})"
        return f"{go(x.left, lp)} {sym} {right}"

    return go(e, min_prec)


def format_domain(d) -> str:
    if isinstance(d, BoolDomain):
        return "bool"
    if isinstance(d, IntRange):
        return f"int {d.lo}..{d.hi}"
    if isinstance(d, EnumDomain):
        return "enum {" + ", ".join(d.literals) + "}"
    if isinstance(d, SeqDomain):
        return f"seq({format_domain(d.elem)}, {d.max_len})"
    raise TypeError(d)


def _params(ps) -> str:
    return ", ".join(f"{n} : {format_domain(d)}" for n, d in ps)


def format_class(c: ClassSpec) -> str:
    head = f"class {c.name}"
    if c.parent:
        head += f" extends {c.parent}"
    if c.abstract:
        head += " abstract"
    lines = [head + " {"]
    for n, d, v in c.constants:
        lines.append(f"  const {n} : {format_domain(d)} = {format_value(v)};")
    for n, d in c.fields:
        lines.append(f"  var {n} : {format_domain(d)};")
    for kw, e in (("invariant", c.invariant), ("init", c.init), ("final", c.final)):
        if e is not None:
            lines.append(f"  {kw} {format_expr(e)};")
    for op in c.operations:
        kw = "override op" if op.mode == SPECIALIZES else "op"
        sig = f"{kw} {op.name}({_params(op.inputs)})"
        if op.outputs:
            sig += f" -> {_params(op.outputs)}"
        lines.append(f"  {sig} {{ {format_expr(op.body)} }}")
    lines.append("}")
    return "\n".join(lines)


def format_hierarchy(h: Hierarchy) -> str:
    blocks = [format_class(c) for c in h.classes]
    if h.constraints:
        rows = ["system {"]
        for g in h.constraints:
            rows.append(f"  constraint on {g.class_name} : forall {g.var} : ext . {format_expr(g.body, bound=g.var)};")
        rows.append("}")
        blocks.append("\n".join(rows))
    return "\n\n".join(blocks) + "\n"


print_hierarchy = format_hierarchy

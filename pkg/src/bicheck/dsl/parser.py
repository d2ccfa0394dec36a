"""Recursive-descent parser for ``.bi`` hierarchy specifications.

Parsing runs in two passes: a syntactic pass that leaves plain identifiers
unresolved, then a resolution pass that turns them into state variables,
constants or enum literals using each class's inherited scope, followed by
type checking.  Every failure becomes a :class:`ParseError` with a span.
"""

from __future__ import annotations

import dataclasses
from dataclasses import dataclass, field
from typing import Optional

from bicheck.dsl.lexer import LexError, Token, tokenize
from bicheck.model import (
    CONST,
    INPUT,
    INTRODUCES,
    OUTPUT,
    PRIMED,
    SPECIALIZES,
    STATE,
    Binary,
    BoolDomain,
    ClassSpec,
    EmptySeq,
    EnumDomain,
    EnumLit,
    Expr,
    GlobalConstraint,
    Hierarchy,
    IntRange,
    Lit,
    OperationSpec,
    SeqDomain,
    SourceSpan,
    Unary,
    Var,
    conj,
)
from bicheck.typecheck import Scope, check_predicate, enum_literals_in_scope


@dataclass(frozen=True)
class ParseError:
    span: SourceSpan
    message: str
    expected: tuple[str, ...] = ()

    def __str__(self) -> str:
        msg = f"{self.span}: {self.message}"
        listed = ", ".join(self.expected)
        if self.expected and not self.message.startswith(f"expected {listed}"):
            msg += f" (expected {listed})"
        return msg


class ParseFailure(Exception):
    """Raised by :func:`parse`; ``errors`` holds every diagnostic found."""

    def __init__(self, errors: list[ParseError]):
        self.errors = errors
        super().__init__("\n".join(str(e) for e in errors))


class _Abort(Exception):
    def __init__(self, err: ParseError):
        self.err = err


@dataclass(frozen=True)
class _Name:
    """Identifier awaiting resolution; ``qualifier`` is set for ``o.field``."""

    ident: str
    qualifier: Optional[str] = None
    span: Optional[SourceSpan] = field(default=None, compare=False)


def _join(a: Optional[SourceSpan], b: Optional[SourceSpan]) -> Optional[SourceSpan]:
    if a is None or b is None:
        return a or b
    return SourceSpan(a.file, a.start_line, a.start_col, b.end_line, b.end_col)


_CMP = ("=", "!=", "<", "<=", ">", ">=")


class _Parser:
    def __init__(self, tokens: list[Token]):
        self.toks = tokens
        self.pos = 0

    # -- token helpers ------------------------------------------------------

    @property
    def tok(self) -> Token:
        return self.toks[self.pos]

    def advance(self) -> Token:
        t = self.toks[self.pos]
        if t.kind != "EOF":
            self.pos += 1
        return t

    def at(self, text: str) -> bool:
        t = self.tok
        return t.kind in ("KW", "SYM") and t.text == text

    def accept(self, text: str) -> Optional[Token]:
        if self.at(text):
            return self.advance()
        return None

    def fail(self, message: str, expected=(), tok: Optional[Token] = None):
        tok = tok or self.tok
        raise _Abort(ParseError(tok.span, message, tuple(expected)))

    def expect(self, text: str) -> Token:
        if not self.at(text):
            self.fail(f"expected {text!r}, found {self.tok.describe()}", [repr(text)])
        return self.advance()

    def ident(self, what: str = "identifier") -> Token:
        if self.tok.kind != "IDENT":
            self.fail(f"expected {what}, found {self.tok.describe()}", [what])
        return self.advance()

    def integer(self) -> int:
        neg = self.accept("-")
        if self.tok.kind != "INT":
            self.fail(f"expected integer, found {self.tok.describe()}", ["integer"])
        v = self.advance().value
        return -v if neg else v

    # -- declarations -------------------------------------------------------

    def spec(self):
        classes, spans = [], {}
        if not self.at("class"):
            self.fail("expected 'class'", ["'class'"])
        while self.at("class"):
            c, sp = self.class_decl()
            classes.append(c)
            spans[c.name] = sp
        constraints = []
        if self.accept("system"):
            self.expect("{")
            while not self.accept("}"):
                constraints.append(self.constraint_decl())
        if self.tok.kind != "EOF":
            self.fail(f"expected 'class' or 'system', found {self.tok.describe()}", ["'class'", "'system'"])
        return classes, constraints, spans

    def class_decl(self):
        self.expect("class")
        name_tok = self.ident("class name")
        parent = None
        parent_tok = None
        if self.accept("extends"):
            parent_tok = self.ident("superclass name")
            parent = parent_tok.text
        abstract = bool(self.accept("abstract"))
        self.expect("{")
        fields, consts, ops = [], [], []
        inv, init, final = [], [], []
        while not self.accept("}"):
            if self.accept("const"):
                n = self.ident("constant name").text
                self.expect(":")
                d = self.domain()
                self.expect("=")
                v = self.value(d)
                self.expect(";")
                consts.append((n, d, v))
            elif self.accept("var"):
                n = self.ident("field name").text
                self.expect(":")
                d = self.domain()
                self.expect(";")
                fields.append((n, d))
            elif self.at("invariant") or self.at("init") or self.at("final"):
                which = self.advance().text
                e = self.expr()
                self.expect(";")
                {"invariant": inv, "init": init, "final": final}[which].append(e)
            elif self.at("op") or self.at("override"):
                ops.append(self.op_decl())
            else:
                self.fail(
                    f"expected a class member, found {self.tok.describe()}",
                    ["'const'", "'var'", "'invariant'", "'init'", "'final'", "'op'", "'override'", "'}'"],
                )
        spec = ClassSpec(
            name=name_tok.text,
            abstract=abstract,
            parent=parent,
            fields=tuple(fields),
            invariant=conj(*inv) if inv else None,
            init=conj(*init) if init else None,
            final=conj(*final) if final else None,
            operations=tuple(ops),
            constants=tuple(consts),
        )
        return spec, (name_tok.span, parent_tok.span if parent_tok else None)

    def op_decl(self) -> OperationSpec:
        mode = SPECIALIZES if self.accept("override") else INTRODUCES
        self.expect("op")
        name = self.ident("operation name").text
        self.expect("(")
        inputs = self.params(")") if not self.at(")") else ()
        self.expect(")")
        outputs = ()
        if self.accept("->"):
            outputs = self.params("{")
        self.expect("{")
        body = self.expr()
        self.expect("}")
        return OperationSpec(name, tuple(inputs), tuple(outputs), body, mode)

    def params(self, closer: str):
        out = []
        while True:
            n = self.ident("parameter name").text
            self.expect(":")
            out.append((n, self.domain()))
            if not self.accept(","):
                return out

    def constraint_decl(self) -> GlobalConstraint:
        start = self.expect("constraint")
        self.expect("on")
        cls = self.ident("class name").text
        self.expect(":")
        self.expect("forall")
        var = self.ident("bound variable").text
        self.expect(":")
        self.expect("ext")
        self.expect(".")
        body = self.expr()
        end = self.expect(";")
        return GlobalConstraint(cls, var, body, _join(start.span, end.span))

    def domain(self):
        if self.accept("bool"):
            return BoolDomain()
        if self.accept("int"):
            lo = self.integer()
            self.expect("..")
            hi = self.integer()
            return IntRange(lo, hi)
        if self.accept("enum"):
            self.expect("{")
            lits = [self.ident("enum literal").text]
            while self.accept(","):
                lits.append(self.ident("enum literal").text)
            self.expect("}")
            return EnumDomain(tuple(lits))
        if self.accept("seq"):
            self.expect("(")
            elem = self.domain()
            self.expect(",")
            n = self.integer()
            self.expect(")")
            return SeqDomain(elem, n)
        self.fail(f"expected a domain, found {self.tok.describe()}", ["'bool'", "'int'", "'enum'", "'seq'"])

    def value(self, d):
        start = self.tok
        if isinstance(d, BoolDomain):
            if self.accept("true"):
                return True
            if self.accept("false"):
                return False
            self.fail("expected 'true' or 'false'", ["'true'", "'false'"])
        if isinstance(d, IntRange):
            return self.integer()
        if isinstance(d, EnumDomain):
            t = self.ident("enum literal")
            if t.text not in d.literals:
                self.fail(f"{t.text!r} is not a literal of this enum", tok=t)
            return EnumLit(d, t.text)
        if isinstance(d, SeqDomain):
            if self.accept("<>"):
                return ()
            self.expect("<")
            items = [self.value(d.elem)]
            while self.accept(","):
                items.append(self.value(d.elem))
            self.expect(">")
            return tuple(items)
        self.fail("bad constant", tok=start)

    # -- expressions --------------------------------------------------------
    # =>  <  \/  <  /\  <  ~  <  comparisons  <  + - ++  <  #  <  atoms

    def expr(self) -> Expr:
        left = self.disj()
        if self.accept("=>"):
            right = self.expr()
            return Binary("=>", left, right, _join(left.span, right.span))
        return left

    def disj(self) -> Expr:
        e = self.conj()
        while self.accept("\\/"):
            r = self.conj()
            e = Binary("or", e, r, _join(e.span, r.span))
        return e

    def conj(self) -> Expr:
        e = self.neg()
        while self.accept("/\\"):
            r = self.neg()
            e = Binary("and", e, r, _join(e.span, r.span))
        return e

    def neg(self) -> Expr:
        t = self.accept("~")
        if t:
            arg = self.neg()
            return Unary("not", arg, _join(t.span, arg.span))
        return self.comparison()

    def comparison(self) -> Expr:
        e = self.additive()
        for op in _CMP:
            if self.at(op):
                self.advance()
                r = self.additive()
                e = Binary(op, e, r, _join(e.span, r.span))
                if any(self.at(o) for o in _CMP):
                    self.fail("comparisons do not chain; add parentheses")
                break
        return e

    def additive(self) -> Expr:
        e = self.length()
        while True:
            if self.accept("+"):
                r = self.length()
                e = Binary("+", e, r, _join(e.span, r.span))
            elif self.accept("-"):
                r = self.length()
                e = Binary("-", e, r, _join(e.span, r.span))
            elif self.accept("++"):
                if self.accept("<"):
                    x = self.additive()
                    end = self.expect(">")
                    e = Binary("append", e, x, _join(e.span, end.span))
                else:
                    r = self.length()
                    e = Binary("concat", e, r, _join(e.span, r.span))
            else:
                return e

    def length(self) -> Expr:
        t = self.accept("#")
        if t:
            arg = self.length()
            return Unary("len", arg, _join(t.span, arg.span))
        return self.atom()

    def atom(self) -> Expr:
        t = self.tok
        if t.kind == "INT":
            self.advance()
            return Lit(t.value, t.span)
        if self.at("-"):
            self.advance()
            if self.tok.kind != "INT":
                self.fail("expected integer after '-'", ["integer"])
            n = self.advance()
            return Lit(-n.value, _join(t.span, n.span))
        if self.at("true") or self.at("false"):
            self.advance()
            return Lit(t.text == "true", t.span)
        if self.at("<>"):
            self.advance()
            return EmptySeq(t.span)
        if self.at("head") or self.at("tail") or self.at("isEmpty"):
            self.advance()
            self.expect("(")
            arg = self.expr()
            end = self.expect(")")
            return Unary(t.text, arg, _join(t.span, end.span))
        if self.at("("):
            self.advance()
            e = self.expr()
            self.expect(")")
            return e
        if t.kind == "DECOR":
            self.advance()
            name, deco = t.value
            kind = {"'": PRIMED, "?": INPUT, "!": OUTPUT}[deco]
            return Var(name, kind, t.span)
        if t.kind == "IDENT":
            self.advance()
            if self.at(".") and self.toks[self.pos + 1].kind == "IDENT":
                self.advance()
                f = self.advance()
                return _Name(f.text, t.text, _join(t.span, f.span))
            return _Name(t.text, None, t.span)
        self.fail(
            f"expected an expression, found {t.describe()}",
            ["identifier", "integer", "'true'", "'false'", "'<>'", "'('", "'~'", "'#'"],
        )


# ---------------------------------------------------------------------------
# Resolution


class _Resolver:
    def __init__(self, h: Hierarchy, cls: str, errors: list[ParseError], op=None, bound: Optional[str] = None):
        self.fields = {f for f, _ in h.effective_fields(cls)}
        self.consts = set(h.effective_constants(cls))
        self.literals = enum_literals_in_scope(h, cls, op)
        self.errors = errors
        self.bound = bound

    def __call__(self, e):
        if isinstance(e, _Name):
            return self.name(e)
        if isinstance(e, Unary):
            return dataclasses.replace(e, arg=self(e.arg))
        if isinstance(e, Binary):
            return dataclasses.replace(e, left=self(e.left), right=self(e.right))
        return e

    def name(self, n: _Name):
        if n.qualifier is not None:
            if n.qualifier != self.bound:
                self.errors.append(ParseError(n.span, f"unknown object variable {n.qualifier!r}"))
                return Lit(True, n.span)
            if n.ident not in self.fields:
                self.errors.append(ParseError(n.span, f"undeclared field {n.ident!r}"))
            return Var(n.ident, STATE, n.span)
        if n.ident in self.fields:
            return Var(n.ident, STATE, n.span)
        if n.ident in self.consts:
            return Var(n.ident, CONST, n.span)
        doms = self.literals.get(n.ident)
        if doms:
            if len(doms) > 1:
                self.errors.append(ParseError(n.span, f"enum literal {n.ident!r} is ambiguous"))
            return Lit(EnumLit(doms[0], n.ident), n.span)
        self.errors.append(ParseError(n.span, f"undeclared name {n.ident!r}"))
        return Lit(True, n.span)


def _resolve(classes, constraints, spans, errors) -> Hierarchy:
    raw = Hierarchy(tuple(classes), ())
    for c in classes:
        if c.parent is not None and c.parent not in raw:
            errors.append(ParseError(spans[c.name][1], f"unknown superclass {c.parent!r}"))
    out = []
    for c in classes:
        def resolve(e, op=None, kinds=None):
            if e is None:
                return None
            r = _Resolver(raw, c.name, errors, op)(e)
            if kinds is not None:
                scope = Scope.for_class(raw, c.name, kinds, op=op)
                errors.extend(ParseError(i.span or spans[c.name][0], i.message) for i in check_predicate(r, scope))
            return r

        ops = []
        for op in c.operations:
            body = resolve(op.body, op, {STATE, PRIMED, INPUT, OUTPUT})
            ops.append(dataclasses.replace(op, body=body))
        out.append(
            dataclasses.replace(
                c,
                invariant=resolve(c.invariant, kinds={STATE}),
                init=resolve(c.init, kinds={PRIMED}),
                final=resolve(c.final, kinds={STATE}),
                operations=tuple(ops),
            )
        )
    resolved = Hierarchy(tuple(out), ())
    gcs = []
    for g in constraints:
        if g.class_name not in resolved:
            errors.append(ParseError(g.span, f"constraint on unknown class {g.class_name!r}"))
            continue
        body = _Resolver(resolved, g.class_name, errors, bound=g.var)(g.body)
        scope = Scope.for_class(resolved, g.class_name, {STATE})
        errors.extend(ParseError(i.span or g.span, i.message) for i in check_predicate(body, scope))
        gcs.append(dataclasses.replace(g, body=body))
    return Hierarchy(tuple(out), tuple(gcs))


def parse(source: str, file: str = "<string>") -> Hierarchy:
    """Parse a ``.bi`` source text.  Raises :class:`ParseFailure` on any error."""
    try:
        p = _Parser(tokenize(source, file))
        classes, constraints, spans = p.spec()
    except LexError as e:
        raise ParseFailure([ParseError(e.span, e.message)]) from None
    except _Abort as a:
        raise ParseFailure([a.err]) from None
    errors: list[ParseError] = []
    h = _resolve(classes, constraints, spans, errors)
    if errors:
        raise ParseFailure(errors)
    return h


def parse_file(path) -> Hierarchy:
    with open(path, encoding="utf-8") as fh:
        return parse(fh.read(), str(path))

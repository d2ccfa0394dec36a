from pathlib import Path

import pytest
from hypothesis import HealthCheck, given, settings

from bicheck import fixtures
from bicheck.dsl import ParseFailure, format_expr, format_hierarchy, parse
from bicheck.dsl.lexer import LexError, tokenize
from bicheck.model import (
    INPUT,
    OUTPUT,
    PRIMED,
    SPECIALIZES,
    STATE,
    Binary,
    ClassSpec,
    EmptySeq,
    Hierarchy,
    Lit,
    Unary,
    Var,
    validate,
)

from strategies import hierarchies

GOLDEN = Path(__file__).parent / "golden"


def parse_errors(src):
    with pytest.raises(ParseFailure) as info:
        parse(src, "t.bi")
    return info.value.errors


def in_bounds(span, src):
    lines = src.split("\n")
    for line, col in ((span.start_line, span.start_col), (span.end_line, span.end_col)):
        if not 1 <= line <= len(lines):
            return False
        if not 1 <= col <= len(lines[line - 1]) + 1:
            return False
    return True


class TestLexer:
    def test_decorations_attach_to_identifiers(self):
        kinds = [(t.kind, t.text) for t in tokenize("items' = x? ++ <y!>")][:-1]
        assert kinds == [("DECOR", "items'"), ("SYM", "="), ("DECOR", "x?"), ("SYM", "++"),
                         ("SYM", "<"), ("DECOR", "y!"), ("SYM", ">")]

    def test_bang_equals_is_not_an_output(self):
        kinds = [(t.kind, t.text) for t in tokenize("x!=y")][:-1]
        assert kinds == [("IDENT", "x"), ("SYM", "!="), ("IDENT", "y")]

    def test_comments_are_skipped(self):
        assert [t.kind for t in tokenize("// nothing here\n")] == ["EOF"]

    def test_bad_character(self):
        with pytest.raises(LexError):
            tokenize("class $")


class TestParseQueues:
    def test_three_classes(self, queues):
        assert [c.name for c in queues.classes] == ["Queue", "BQueue", "RBQueue"]
        assert queues["Queue"].abstract
        assert not queues["BQueue"].abstract
        assert set(queues.effective_operations("RBQueue")) == {"join", "leave", "reset"}

    def test_override_and_constant(self, queues):
        bq = queues["BQueue"]
        assert all(op.mode == SPECIALIZES for op in bq.operations)
        assert [(n, v) for n, _, v in bq.constants] == [("maxQ", 3)]

    def test_join_body(self, queues):
        join = queues["Queue"].operations[0]
        assert join.body == Binary("=", Var("items", PRIMED),
                                   Binary("append", Var("items", STATE), Var("item", INPUT)))

    def test_leave_body_uses_output(self, queues):
        leave = queues["Queue"].operations[1]
        assert Var("item", OUTPUT) in {n for n in _walk(leave.body)}

    def test_global_constraint(self, queues_rbq):
        (g,) = queues_rbq.constraints
        assert g.class_name == "RBQueue" and g.var == "o"
        assert format_expr(g.body, bound="o") == "#o.items < 2"

    def test_parsing_is_deterministic(self):
        src = fixtures.source("queues_global_rbq.bi")
        assert parse(src) == parse(src)


def _walk(e):
    yield e
    for child in (getattr(e, "arg", None), getattr(e, "left", None), getattr(e, "right", None)):
        if child is not None:
            yield from _walk(child)


class TestPrecedence:
    def parse_inv(self, text):
        src = f"class A {{ var x : int 0..3; var b : bool; var s : seq(enum {{a, b2}}, 2); invariant {text}; }}"
        return parse(src).classes[0].invariant

    def test_and_binds_tighter_than_or_and_implies(self):
        e = self.parse_inv("b => b \\/ b /\\ b")
        assert e.op == "=>" and e.right.op == "or" and e.right.right.op == "and"

    def test_implication_is_right_associative(self):
        e = self.parse_inv("b => b => b")
        assert e.right.op == "=>"

    def test_length_binds_tighter_than_arithmetic(self):
        e = self.parse_inv("#s + 1 = x")
        assert e.left == Binary("+", Unary("len", Var("s", STATE)), Lit(1))

    def test_append_versus_concat(self):
        e = self.parse_inv("s ++ <a> = s ++ s")
        assert e.left.op == "append" and e.right.op == "concat"

    def test_not_applies_to_a_comparison(self):
        e = self.parse_inv("~x = 1")
        assert e == Unary("not", Binary("=", Var("x", STATE), Lit(1)))

    def test_empty_sequence_literal(self):
        assert self.parse_inv("s = <>").right == EmptySeq()


class TestErrors:
    def test_empty_file(self):
        (err,) = parse_errors("")
        assert err.message == "expected 'class'"
        assert (err.span.start_line, err.span.start_col) == (1, 1)

    def test_undeclared_input_is_reported_at_its_span(self):
        src = "class A {\n  var n : int 0..3;\n  op f() { n' = x? }\n}\n"
        (err,) = parse_errors(src)
        assert "x?" in err.message
        assert (err.span.start_line, err.span.start_col) == (3, 17)
        # end columns are inclusive
        assert src.split("\n")[2][err.span.start_col - 1:err.span.end_col] == "x?"

    def test_undeclared_enum_literal(self):
        errs = parse_errors("class A { var y : enum {a}; init y' = c; }")
        assert any("'c'" in e.message for e in errs)

    def test_missing_range(self):
        (err,) = parse_errors("class A { var x : int 3; }")
        assert "'..'" in err.message

    def test_chained_comparison_is_rejected(self):
        assert parse_errors("class A { var x : int 0..3; invariant 0 < x < 3; }")

    @pytest.mark.parametrize("src", [
        "",
        "class",
        "class A {",
        "class A { var x : int 3; }",
        "class A { op f() { x? = 1 } }",
        "class A { var x : bool; invariant x = ; }",
        "class A {}\nclass B extends A { var y : enum {a}; init y' = c; }",
        "@",
        "class A { var s : seq(bool, 2); invariant head(<>) ; }",
        "class A{var x:int 0..1; op f() { x' = x + } }\n\n",
        "class A { var x : int 0..1; }\nsystem { constraint on A : forall o : ext . o.y = 1; }",
        "class A { }\n\n   \nclass",
        "class A { var x : int 0..1; op f() { x' = x + true } }",
    ])
    def test_every_error_span_is_in_bounds(self, src):
        errs = parse_errors(src)
        assert errs
        for e in errs:
            assert in_bounds(e.span, src), (e, e.span)


class TestPrinter:
    @pytest.mark.parametrize("name", fixtures.NAMES)
    def test_fixture_round_trip(self, name):
        h = fixtures.load(name)
        assert parse(format_hierarchy(h)) == h

    def test_printing_is_a_fixed_point(self, queues):
        once = format_hierarchy(queues)
        assert format_hierarchy(parse(once)) == once

    def test_single_empty_class(self):
        h = Hierarchy((ClassSpec("A"),))
        assert format_hierarchy(h) == "class A {\n}\n"
        assert parse(format_hierarchy(h)) == h

    def test_system_block_matches_golden_file(self, queues_rbq):
        assert format_hierarchy(queues_rbq) == (GOLDEN / "queues_global_rbq.txt").read_text()

    def test_parentheses_are_kept_where_needed(self):
        src = "class A { var b : bool; var x : int 0..3; invariant (b \\/ b) /\\ ~(x = 1 => b) /\\ (b => b) => b; }"
        h = parse(src)
        assert parse(format_hierarchy(h)) == h


@settings(max_examples=200, deadline=None, suppress_health_check=[HealthCheck.too_slow])
@given(hierarchies())
def test_round_trip_on_generated_hierarchies(h):
    assert validate(h, check_init=False) == []
    assert parse(format_hierarchy(h)) == h

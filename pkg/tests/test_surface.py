"""Parser, printer and validator."""

import pytest
from hypothesis import given, settings, strategies as st

import graft
from graft import ast as A
from graft.errors import GraftSyntaxError, ResolutionError
from graft.parser import parse_program
from graft.printer import print_program
from graft.validate import validate_program

from conftest import corpus, fused_corpus


def wrap(body: str, fields: str = "int x; int y; child A n;") -> str:
    return f"node A {{ {fields} traversal f(int p) {{ {body} }} }}\nmain {{ let A r = input; r->f(1); }}"


def test_fig2_shape(fig2):
    assert [n.name for n in fig2.nodes] == ["Element", "End", "TextBox", "Group"]
    families = {t.name for n in fig2.nodes for t in n.traversals if t.virtual}
    assert families == {"computeWidth", "computeHeight"}
    assert [type(i).__name__ for i in fig2.entry] == ["Bind", "EntryCall", "EntryCall"]


def test_empty_text_is_syntax_error():
    with pytest.raises(GraftSyntaxError) as ei:
        parse_program("   \n")
    assert ei.value.line == 1


def test_syntax_error_reports_position_and_expectation():
    with pytest.raises(GraftSyntaxError) as ei:
        parse_program("node A {\n  int x\n}\nmain { }")
    e = ei.value
    assert (e.line, e.expected) == (3, "';'")
    assert e.to_json()["error"] == "SyntaxError"


def test_keyword_is_not_an_identifier():
    with pytest.raises(GraftSyntaxError, match="identifier"):
        parse_program("node A { int on; }\nmain { }")


@pytest.mark.parametrize("body, reason", [
    ("x = 1;", "Unresolved"),  # receiver fields need an explicit this
    ("this.z = 1;", "UnknownField"),
    ("this.x = true;", "TypeError"),
    ("this->n = this->n;", "IllegalChildWrite"),
    ("this->n->g();", "UnknownTraversal"),
])
def test_resolution_errors(body, reason):
    with pytest.raises(ResolutionError) as ei:
        graft.load_program(wrap(body))
    assert ei.value.reason == reason


def test_override_must_match_signature():
    src = ("abstract node A { virtual traversal f(int a) { } }\n"
           "node B : A { override traversal f() { } }\nmain { }")
    with pytest.raises(ResolutionError) as ei:
        graft.load_program(src)
    assert ei.value.reason == "SignatureMismatch"


def test_entry_arity_checked():
    with pytest.raises(ResolutionError) as ei:
        graft.load_program("node A { traversal f(int a) { } }\nmain { let A r = input; r->f(); }")
    assert ei.value.reason == "Arity"


def test_statements_are_simple_or_traverse():
    for name in graft.CORPUS:
        for n in corpus(name).nodes:
            for t in n.traversals:
                for s in A.walk_stmts(t.body):
                    assert A.is_simple(s) != isinstance(s, A.Traverse)


# -- printing --------------------------------------------------------------------


@pytest.mark.parametrize("name", graft.CORPUS)
def test_print_parse_round_trip(name):
    prog = corpus(name)
    text = print_program(prog)
    again = parse_program(text)
    assert again == parse_program(print_program(again))
    assert print_program(again) == text


@pytest.mark.parametrize("name", graft.CORPUS)
def test_fused_print_is_idempotent(name):
    text = graft.pretty_print_program(graft.fuse_program(corpus(name)))
    reparsed = graft.load_program(text)
    assert print_program(reparsed) == text


OPS = ["+", "-", "*", "/", "%", "<", "<=", ">", ">=", "==", "!=", "&&", "||"]


@st.composite
def int_exprs(draw, depth=3):
    if depth == 0 or draw(st.booleans()):
        return draw(st.sampled_from(["this.x", "this->n.y", "p", "3", "0", "(-2)"]))
    op = draw(st.sampled_from(OPS[:5]))
    return f"({draw(int_exprs(depth=depth - 1))} {op} {draw(int_exprs(depth=depth - 1))})"


@settings(max_examples=60, deadline=None)
@given(int_exprs(), int_exprs(), st.sampled_from(OPS[5:11]))
def test_expression_round_trip(a, b, cmp):
    src = wrap(f"this.x = {a}; if ({a} {cmp} {b}) {{ this.y = {b}; }}")
    p1 = parse_program(src)
    p2 = parse_program(print_program(p1))
    assert p1 == p2


# -- validation ------------------------------------------------------------------


def test_corpus_validates():
    for name in graft.CORPUS:
        assert validate_program(corpus(name)).ok, name


@pytest.mark.parametrize("body, code", [
    ("alias A a = this->n; alias A a = this->n;", "AliasReassigned"),
    ("delete this->n; this->n = new A(1);", "NontrivialCtor"),
    ("if (p > 0) { this->n->f(p); }", "NestedTraverse"),
    ("int q = 1; int q = 2;", "DuplicateName"),
])
def test_violations(body, code):
    report = validate_program(graft.load_program(wrap(body)))
    assert code in report.codes()
    assert "A.f" in report.unfusible


def test_self_call_cycle_reported():
    src = "node A { traversal f() { this->f(); } }\nmain { let A r = input; r->f(); }"
    assert validate_program(graft.load_program(src)).codes() == ["SelfCallCycle"]


def test_fused_output_keeps_original_declarations():
    prog = fused_corpus("fig2")
    assert [t.label for n in prog.nodes for t in n.traversals] == \
        [t.label for n in corpus("fig2").nodes for t in n.traversals]
    assert validate_program(prog).ok

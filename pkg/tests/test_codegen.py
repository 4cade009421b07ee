"""Fused functions, dispatch stubs and the rewritten entry block."""

from collections import Counter

import pytest

import graft
from graft import ast as A
from graft.codegen import emit_program
from graft.fusion import FusionConfig
from graft.parser import parse_program
from graft.printer import print_program

from conftest import corpus


def fused_decl(prog, *labels):
    for d in prog.fused:
        if d.constituents == list(labels):
            return d
    raise KeyError(labels)


def origins(stmts):
    return [s.origin for s in A.walk_stmts(stmts)
            if not isinstance(s, (A.Guard, A.StubCall, A.AliasDef, A.Traverse)) and s.origin]


def test_textbox_unit_structure(fig2_fused):
    d = fused_decl(fig2_fused, "TextBox.computeWidth", "TextBox.computeHeight")
    body = [s for s in d.body if not isinstance(s, A.AliasDef)]
    assert [type(s).__name__ for s in body] == ["StubCall", "Guard", "Guard"]
    call, width, height = body
    assert call.stub == "__stub1" and [bit for bit, _ in call.members] == [0, 1]
    assert (width.mask, height.mask) == (0b1, 0b10)
    assert origins(width.body) == ["TextBox.computeWidth:1", "TextBox.computeWidth:2"]
    assert origins(height.body)[0] == "TextBox.computeHeight:1"


def test_fig2_stub_and_entry(fig2_fused):
    (stub,) = fig2_fused.stubs
    assert stub.families == ["computeWidth", "computeHeight"] and stub.base == "Element"
    assert list(stub.overrides) == ["End", "TextBox", "Group"]
    assert all(len(t) == 1 and t[0].members == [0, 1] for t in stub.overrides.values())
    calls = [i for i in fig2_fused.entry if isinstance(i, A.EntryStubCall)]
    assert [(c.stub, c.mask) for c in calls] == [("__stub1", 0b11)]


def test_single_concrete_kind_stub_has_one_override():
    prog = graft.load_program("node A { child A n; int x; traversal f() { this->n->f(); this.x = 1; } "
                              "traversal g() { this->n->g(); } }\nmain { let A r = input; r->f(); r->g(); }")
    fused = graft.fused_program(graft.fuse_program(prog))
    assert [list(s.overrides) for s in fused.stubs] == [["A"]]


def test_partial_stubs():
    fused = graft.fused_program(graft.fuse_program(corpus("partial")))
    by_fams = {tuple(s.families): s for s in fused.stubs}
    assert set(by_fams) == {("f1", "f2"), ("f1",), ("f2",)}
    d = fused_decl(fused, "Bumper.f1", "Bumper.f2")
    calls = [s for s in d.body if isinstance(s, A.StubCall)]
    # Bumper's two calls on Next go through separate single-family stubs
    assert [by_fams_key(fused, c.stub) for c in calls] == [("f1",), ("f2",)]
    plain = fused_decl(fused, "Plain.f1", "Plain.f2")
    assert [by_fams_key(fused, c.stub) for c in plain.body if isinstance(c, A.StubCall)] == [("f1", "f2")]


def by_fams_key(prog, name):
    return next(tuple(s.families) for s in prog.stubs if s.name == name)


def test_cutoff_stub_lists_several_targets(fig2):
    res = graft.fuse_program(fig2, FusionConfig(1, 3))
    stub = emit_program(res).stubs[0]
    assert all([t.members for t in targets] == [[0], [1]] for targets in stub.overrides.values())


@pytest.mark.parametrize("name", graft.CORPUS)
def test_every_statement_emitted_once_per_unit(name):
    res = graft.fuse_program(corpus(name))
    prog = emit_program(res)
    by_name = {d.name: d for d in prog.fused}
    for u in res.units.values():
        want = Counter(o for d in u.decls for o in origins(d.body))
        assert Counter(origins(by_name[u.name].body)) == want


def test_singleton_units_keep_statement_order(fig2):
    res = graft.fuse_program(fig2, FusionConfig(1, 3))
    prog = emit_program(res)
    for u in res.units.values():
        (d,) = u.decls
        (f,) = [x for x in prog.fused if x.name == u.name]
        assert origins(f.body) == origins(d.body)


@pytest.mark.parametrize("name", graft.CORPUS)
def test_fused_text_round_trips(name):
    text = graft.pretty_print_program(graft.fuse_program(corpus(name)))
    assert print_program(parse_program(text)) == text


def test_fused_program_resolves(fig2_fused):
    assert fig2_fused.is_fused
    assert fig2_fused.model is not None

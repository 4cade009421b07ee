"""Access paths, statement and call summaries, conflicts."""

import pytest

import graft
from graft import ast as A
from graft import automata as fa
from graft.access import (AccessAnalysis, AccessPath, CATEGORIES, PathSets, build_statement_summary,
                          collect_access_paths, conflicts, summary_from_paths)
from graft.automata import ROOT
from graft.interp import execute
from graft.model import SELF, build_labeled_call_graph

from conftest import corpus, corpus_spec


def stmt(prog, label, i):
    return prog.model.decl_by_label(label).body[i]


def strs(paths):
    return {str(p) for p in paths if p.category == "tree"}


def test_group_width_statement_paths(fig2):
    s = stmt(fig2, "Group.computeWidth", 2)  # Width = Content->Width + Border.Size * 2
    ps = collect_access_paths(s, fig2.model)
    # the receiver itself is read to reach the assigned field
    assert strs(ps.reads) == {"root", "root.Content.Width", "root.Border.Size"}
    assert strs(ps.writes) == {"root.Width"}
    alpha = [ROOT] + fig2.model.alphabet
    reads = fa.language_upto(build_statement_summary(s, fig2.model).reads["tree"], alpha, 4)
    assert reads == {(ROOT,), (ROOT, "Content"), (ROOT, "Content", "Width"),
                     (ROOT, "Border"), (ROOT, "Border", "Size")}


SMALL = """
node A {
    child A Content;
    int Width = 0;
    traversal f(int p) {
        int x = p;
        x = x;
        alias A l = this->Content;
        l.Width = 1;
        delete this->Content;
        return;
    }
}
main { let A r = input; r->f(1); }
"""


@pytest.fixture(scope="module")
def small():
    return graft.load_program(SMALL)


def test_local_self_assignment(small):
    ps = collect_access_paths(stmt(small, "A.f", 1), small.model)
    assert {str(p) for p in ps.reads} == {"x"} and {str(p) for p in ps.writes} == {"x"}


def test_alias_is_inlined(small):
    ps = collect_access_paths(stmt(small, "A.f", 3), small.model, small.model.decl_by_label("A.f"))
    assert strs(ps.writes) == {"root.Content.Width"}


def test_delete_writes_whole_subtree(small):
    s = build_statement_summary(stmt(small, "A.f", 4), small.model)
    alpha = [ROOT, "Content", "Width"]
    got = fa.language_upto(s.writes["tree"], alpha, 4)
    want = {(ROOT, "Content") + tail for n in range(3) for tail in _words(["Content", "Width"], n)}
    assert got == want


def _words(alpha, n):
    if n == 0:
        return [()]
    return [w + (x,) for w in _words(alpha, n - 1) for x in alpha]


def test_return_has_empty_summary(small):
    s = build_statement_summary(stmt(small, "A.f", 5), small.model)
    assert all(fa.is_empty(s.automaton(c, m)) for c in CATEGORIES for m in ("read", "write"))


# -- call summaries ----------------------------------------------------------------


def expand(path, read, alpha, max_len):
    """Words a primitive path denotes, up to ``max_len`` symbols."""
    syms = path.symbols
    out = set()
    if read:
        out |= {syms[:i] for i in range(1, len(syms) + 1)}
    else:
        out.add(syms)
    if path.any_tail:
        members = [s for s in alpha if s != ROOT]
        for n in range(1, max_len - len(syms) + 1):
            out |= {syms + w for w in _words(members, n)}
    return {w for w in out if len(w) <= max_len}


def call_language(prog, call, mode, alpha, max_len):
    """Breadth-first path closure over the labeled call graph."""
    h = prog.model
    an = AccessAnalysis(h)
    g = build_labeled_call_graph(call, h)
    first = call.child_sym
    frontier = {((first,) if first else (), lab) for src, lab2, lab in g.edges if src is None}
    seen = set(frontier)
    out = set()
    while frontier:
        nxt = set()
        for prefix, lab in frontier:
            for ps in an.decl_paths(g.decls[lab]):
                for p in (ps.reads if mode == "read" else ps.writes):
                    if p.category == "tree":
                        for w in expand(p, mode == "read", alpha, max_len):
                            w2 = (ROOT,) + prefix + w[1:]
                            if len(w2) <= max_len:
                                out.add(w2)
            for src, edge, dst in g.edges:
                if src == lab:
                    p2 = prefix if edge == SELF else prefix + (edge,)
                    if len(p2) < max_len and (p2, dst) not in seen:
                        seen.add((p2, dst))
                        nxt.add((p2, dst))
        frontier = nxt
    if mode == "read":
        out |= {(ROOT,), (ROOT,) + ((first,) if first else ())}  # the child pointer itself
    return out


def test_content_call_write_language(fig2):
    call = stmt(fig2, "Group.computeWidth", 0)  # this->Content->computeWidth()
    s = AccessAnalysis(fig2.model).call_summary(call)
    alpha = [ROOT, "Content", "Next", "Width", "TotalWidth", "Height"]
    got = fa.language_upto(s.writes["tree"], alpha, 5)
    # root . Content . (Next | Content)* . (Width | TotalWidth)
    want = {(ROOT, "Content") + mid + (f,) for n in range(3) for mid in _words(["Next", "Content"], n)
            for f in ("Width", "TotalWidth")}
    assert got == want
    m = fa.minimize(s.writes["tree"])
    assert m.n == 4  # initial, after root, the Content/Next loop, the accepting field state
    assert call_language(fig2, call, "write", alpha, 5) == want


@pytest.mark.parametrize("mode", ["read", "write"])
def test_call_summaries_match_closure_oracle(fig2, mode):
    h = fig2.model
    an = AccessAnalysis(h)
    alpha = [ROOT] + h.alphabet
    for label in ("TextBox.computeHeight", "Group.computeHeight"):
        for s in h.decl_by_label(label).body:
            if isinstance(s, A.Traverse):
                a = an.call_summary(s).automaton("tree", mode)
                assert fa.language_upto(a, alpha, 4) == call_language(fig2, s, mode, alpha, 4)


MUTUAL = """
node P { child Q c; int x; traversal f() { this.x = 1; this->c->g(); } traversal g() { } }
node Q { child P d; int y; traversal f() { } traversal g() { this.y = 2; this->d->f(); } }
node R { child P c; traversal f() { this->c->f(); } }
main { let R r = input; r->f(); }
"""


def test_mutual_recursion_summary_has_two_cycle():
    prog = graft.load_program(MUTUAL)
    call = stmt(prog, "R.f", 0)
    alpha = [ROOT] + prog.model.alphabet
    a = AccessAnalysis(prog.model).call_summary(call).writes["tree"]
    got = fa.language_upto(a, alpha, 6)
    assert got == call_language(prog, call, "write", alpha, 6)
    # P.f and Q.g alternate down the c/d chain
    assert got == {(ROOT, "R::c", "x"), (ROOT, "R::c", "P::c", "y"), (ROOT, "R::c", "P::c", "d", "x"),
                   (ROOT, "R::c", "P::c", "d", "P::c", "y")}


def test_call_to_returning_traversal_touches_nothing():
    prog = graft.load_program("node A { child A n; traversal f() { return; } traversal g() { this->n->f(); } }\n"
                              "main { }")
    s = AccessAnalysis(prog.model).call_summary(stmt(prog, "A.g", 0))
    assert fa.is_empty(s.writes["tree"])
    assert fa.language_upto(s.reads["tree"], [ROOT, "n"], 3) == {(ROOT,), (ROOT, "n")}


# -- conflicts -----------------------------------------------------------------------


def summary(reads=(), writes=(), any_tail=False):
    ps = PathSets({AccessPath("tree", (ROOT,) + tuple(p)) for p in reads},
                  {AccessPath("tree", (ROOT,) + tuple(p), any_tail) for p in writes})
    return summary_from_paths(ps)


def test_write_read_same_field_conflicts():
    assert conflicts(summary(writes=[("x",)]), summary(reads=[("x",)]))


def test_disjoint_fields_do_not_conflict():
    assert not conflicts(summary(writes=[("x",)]), summary(reads=[("y",)]))


def test_subtree_write_conflicts_with_deep_read():
    assert conflicts(summary(writes=[("Content",)], any_tail=True), summary(reads=[("Content", "Width")]))
    assert not conflicts(summary(writes=[("Content",)], any_tail=True), summary(reads=[("Next", "Width")]))


def test_reads_alone_never_conflict():
    assert not conflicts(summary(reads=[("x",)]), summary(reads=[("x",)]))


# -- soundness against the interpreter ---------------------------------------------


@pytest.mark.parametrize("name", graft.CORPUS)
def test_logged_accesses_are_in_summaries(name):
    prog = corpus(name)
    h = prog.model
    an = AccessAnalysis(h)
    for seed in range(3):
        tree = graft.materialize_tree(corpus_spec(name, seed, size=40), h)
        _, _, log = execute(prog, tree, log_accesses=True)
        assert log.records
        for rec in log.records:
            s = an.summary(rec.stmt, h.decl_by_label(rec.decl_label))
            assert not rec.escaped
            for mode, cat, syms in rec.paths:
                a = s.automaton(cat, "read" if mode == "r" else "write")
                word = (ROOT,) + syms if cat == "tree" else syms
                assert a.accepts(word), (rec.stmt.origin, mode, word)

"""The bundled programs: golden statistics, intended semantics, differential runs."""

import pytest

import graft
from graft.corpora import entry, same_stats
from graft.interp import diff_states, execute
from graft.trees import format_tree

from conftest import corpus, corpus_spec, equivalent, fused_corpus, run_pair


@pytest.mark.parametrize("name", graft.CORPUS)
def test_fusion_stats_match_golden(name):
    got = graft.fuse_program(corpus(name)).stats_json()
    assert same_stats(got, entry(name).golden()) == []


def test_same_stats_reports_differences():
    golden = entry("fig2").golden()
    other = graft.fuse_program(corpus("fig2"), graft.FusionConfig(1, 3)).stats_json()
    diffs = same_stats(golden, other)
    assert any(d.startswith("unitsCreated") for d in diffs)
    assert any("only in" in d for d in diffs)


AST_LITERAL = """\
Function Name="f" {
    Body: StmtCons {
        Head: AssignStmt Var="a" {
            Rhs: IntLit Value=5
        }
        Tail: StmtCons {
            Head: IncStmt Var="a"
            Tail: StmtCons {
                Head: IfStmt {
                    Cond: LessExpr {
                        Left: IntLit Value=0
                        Right: IntLit Value=1
                    }
                    Then: StmtCons {
                        Head: AssignStmt Var="b" {
                            Rhs: VarRef Name="a"
                        }
                        Tail: StmtNil
                    }
                    Else: StmtCons {
                        Head: AssignStmt Var="b" {
                            Rhs: IntLit Value=0
                        }
                        Tail: StmtNil
                    }
                }
                Tail: StmtNil
            }
        }
    }
    Next: FunctionEnd
}
"""


@pytest.mark.parametrize("fused", [False, True])
def test_ast_passes(fused):
    prog = fused_corpus("ast") if fused else corpus("ast")
    t = graft.parse_tree(AST_LITERAL, prog.model)
    execute(prog, t)
    text = format_tree(t, prog.model)
    # a++ became a = a + 1, with a replaced by its constant and the sum folded
    assert "IncStmt" not in text
    assert 'AssignStmt Var="a" {\n                Rhs: AddExpr IsLit=true Value=6' in text
    # if (0 < 1) keeps its then-branch and drops the else-branch
    assert "Else: StmtNil" in text and "Value=0\n" not in text.split("Else:")[1]


def test_render_passes_depend_on_each_other():
    prog = corpus("render")
    src = graft.corpus_path("render").read_text()
    # computing heights before fonts are set changes the result
    swapped = src.replace("    Doc->setFontStyle(BASE_FONT);\n    Doc->computeHeight();\n",
                          "    Doc->computeHeight();\n    Doc->setFontStyle(BASE_FONT);\n")
    assert swapped != src
    other = graft.load_program(swapped)
    spec = corpus_spec("render", 2, pages=3)
    s1, _ = execute(prog, graft.materialize_tree(spec, prog.model))
    s2, _ = execute(other, graft.materialize_tree(spec, other.model))
    assert diff_states(s1, s2)
    assert equivalent(prog, fused_corpus("render"), spec)


def test_render_flat_documents_fuse_fully():
    for seed in range(3):
        d, m1, m2 = run_pair(corpus("render"), fused_corpus("render"),
                             corpus_spec("render", seed, size=200, nested=False))
        assert d == [] and m2.node_visits * 5 == m1.node_visits


@pytest.mark.parametrize("params", [{"size": 300}, {"functions": 4, "body": "replicated"}])
def test_ast_fusion_saves_visits(params):
    d, m1, m2 = run_pair(corpus("ast"), fused_corpus("ast"), corpus_spec("ast", 1, **params))
    assert d == [] and m2.node_visits < m1.node_visits


@pytest.mark.parametrize("name", graft.CORPUS)
@pytest.mark.parametrize("seed", range(6))
def test_differential_sweep(name, seed):
    assert equivalent(corpus(name), fused_corpus(name), corpus_spec(name, seed, size=[3, 40, 150][seed % 3]))


SHADOW = """
abstract node A {
    child A n;
    int x = 0;
    virtual traversal f() { }
    virtual traversal g() { }
}
node E : A { }
node B : A {
    int x = 1;
    override traversal f() { this->n->f(); this.x = this.x + 2; }
    override traversal g() { this->n->g(); this.x = this.x * 3; }
}
main { let A r = input; r->f(); r->g(); }
"""

MUTUAL = """
abstract node P {
    int v = 0;
    virtual traversal f() { }
    virtual traversal g() { }
}
node PEnd : P { }
node PNode : P {
    child Q c;
    override traversal f() { this->c->g(); this.v = this->c.w + 1; }
    override traversal g() { this->c->f(); this.v = this.v * 2; }
}
abstract node Q {
    int w = 0;
    virtual traversal f() { }
    virtual traversal g() { }
}
node QNode : Q {
    child P d;
    override traversal f() { this->d->g(); this.w = this.w + 5; }
    override traversal g() { this->d->f(); this.w = this->d.v; }
}
main { let P r = input; r->f(); r->g(); }
"""


@pytest.mark.parametrize("src", [SHADOW, MUTUAL], ids=["shadowing", "mutual"])
def test_small_programs_run_differentially(src):
    prog = graft.load_program(src)
    fused = graft.fused_program(graft.fuse_program(prog))
    for seed in range(8):
        spec = graft.TreeSpec(generator="random", params={"size": 5 + 10 * seed}, seed=seed)
        assert equivalent(prog, fused, spec)

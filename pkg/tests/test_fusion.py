"""Grouping, scheduling, memoized units and cutoffs."""

import itertools
import random
from collections import Counter

import pytest

import graft
from graft import ast as A
from graft.dependence import DependenceGraph, Vertex
from graft.errors import FusionRejected
from graft.fusion import (FusionConfig, find_seed_sequences, fused_name, group_calls, schedule, split_key,
                          unit_bound)
from graft.parser import parse_program

from conftest import corpus, corpus_spec, equivalent
from test_dependence import REORDER


# -- unit bound and key splitting ----------------------------------------------


def brute_bound(n, L, R):
    total = 0
    for k in range(1, L + 1):
        for w in itertools.product(range(n), repeat=k):
            if max(Counter(w).values()) <= R:
                total += 1
    return total


@pytest.mark.parametrize("n, L, R", [(1, 1, 1), (1, 5, 3), (2, 3, 1), (3, 4, 2), (4, 5, 3), (3, 5, 5), (5, 3, 1)])
def test_unit_bound_matches_enumeration(n, L, R):
    assert unit_bound(n, FusionConfig(L, R)) == brute_bound(n, L, R)


def test_split_key():
    key = ("a", "a", "a", "a", "b")
    assert split_key(key, FusionConfig(5, 3)) == [[0, 1, 2], [3, 4]]
    assert split_key(key, FusionConfig(2, 3)) == [[0, 1], [2, 3], [4]]
    assert split_key(key, FusionConfig(1, 1)) == [[0], [1], [2], [3], [4]]
    assert split_key(("a", "b"), FusionConfig()) == [[0, 1]]


def test_config_bounds():
    with pytest.raises(ValueError):
        FusionConfig(0, 3)
    with pytest.raises(ValueError):
        FusionConfig(33, 3)


def test_fused_names_are_stable():
    assert fused_name(("A.f", "A.g")) == fused_name(("A.f", "A.g")) != fused_name(("A.g", "A.f"))


# -- seeds -----------------------------------------------------------------------


def test_fig2_has_one_seed(fig2):
    seeds = find_seed_sequences(fig2)
    assert [s.families for s in seeds] == [("computeWidth", "computeHeight")]


def test_interleaved_bindings_give_separate_seeds():
    prog = parse_program("node A { child A n; traversal f() { } traversal g() { } }\n"
                         "main { let A r = input; let A s = r->n; r->f(); s->f(); r->g(); r->f(); }")
    seeds = find_seed_sequences(prog)
    assert [(s.receiver, s.families) for s in seeds] == [("r", ("f",)), ("s", ("f",)), ("r", ("g", "f"))]


# -- grouping and scheduling -------------------------------------------------------


def test_grouping_moves_statement_before_calls():
    prog = graft.load_program(REORDER)
    res = graft.fuse_program(prog)
    u = res.unit_for("N.f1", "N.f2")
    assert [cg.members for cg in u.groups] == [[0, 3]]
    # f2's first statement moves ahead of the grouped calls, so f1 runs pre-order
    assert u.order == [("stmt", 1), ("stmt", 2), ("group", [0, 3])]
    assert u.grouped_calls == 1 and u.split_events == 0


def call(label, name="f"):
    t = A.Traverse(label, name, [])
    t.child_sym = label
    return t


def random_graph(rng, n, labels=("c", "d")):
    vs = []
    for i in range(n):
        stmt = call(rng.choice(labels), rng.choice("fg")) if rng.random() < 0.6 else A.Return()
        vs.append(Vertex(i, 0, i, stmt))
    edges = {(u, v): "data" for u in range(n) for v in range(u + 1, n) if rng.random() < 0.3}
    return DependenceGraph(vs, edges)


def legal_orders(g, groups):
    """Every quotient order (as head lists) of a topological order keeping groups contiguous."""
    head = {v: min(grp) for grp in groups for v in grp}
    out = set()
    for perm in itertools.permutations(range(len(g.vertices))):
        if not g.is_topological(perm):
            continue
        seq = [head.get(v, v) for v in perm]
        items = [k for k, _ in itertools.groupby(seq)]
        if len(items) == len(set(items)):  # each group came out as one run
            out.add(tuple(items))
    return out


def as_heads(order):
    return tuple(item if kind == "stmt" else item[0] for kind, item in order)


@pytest.mark.parametrize("seed", range(60))
def test_grouping_and_schedule_against_exhaustive_search(seed):
    rng = random.Random(seed)
    g = random_graph(rng, rng.randint(2, 6))
    cfg = FusionConfig(rng.randint(1, 4), rng.randint(1, 2))
    groups = group_calls(g, cfg)
    calls = [v.index for v in g.vertices if v.is_call]
    assert sorted(i for grp in groups for i in grp) == calls
    for grp in groups:
        assert len({g.vertices[i].stmt.child_sym for i in grp}) == 1
        assert len(grp) <= cfg.max_seq_len
        assert max(Counter(g.vertices[i].stmt.name for i in grp).values()) <= cfg.max_repeat
    legal = legal_orders(g, groups)
    assert legal, "groups admit no contiguous schedule"
    # the deterministic schedule is the least order by original position
    assert as_heads(schedule(g, groups)) == min(legal)
    for k in range(5):
        assert as_heads(schedule(g, groups, random.Random(k))) in legal


@pytest.mark.parametrize("seed", range(40))
def test_single_label_class_fuses_whole_when_legal(seed):
    rng = random.Random(1000 + seed)
    g = random_graph(rng, rng.randint(2, 6), labels=("c",))
    calls = [v.index for v in g.vertices if v.is_call]
    if not calls:
        return
    cfg = FusionConfig(32, 32)
    groups = group_calls(g, cfg)
    if legal_orders(g, [calls]):
        assert groups == [calls]
    else:
        assert len(groups) > 1


def test_edgeless_schedule_keeps_program_order():
    g = DependenceGraph([Vertex(i, 0, i, A.Return()) for i in range(4)], {})
    assert schedule(g, []) == [("stmt", i) for i in range(4)]


# -- driver ------------------------------------------------------------------------


def test_fig2_units(fig2):
    res = graft.fuse_program(fig2)
    assert list(res.units) == [("Element.computeWidth", "Element.computeHeight"),
                               ("TextBox.computeWidth", "TextBox.computeHeight"),
                               ("Group.computeWidth", "Group.computeHeight")]
    stats = res.stats_json()
    assert (stats["sequencesFound"], stats["unitsCreated"], stats["cutoffSplits"]) == (1, 3, 0)
    assert stats["unitsCreated"] <= unit_bound(sum(len(n.traversals) for n in fig2.nodes), FusionConfig())


def test_units_are_memoized(fig2):
    res = graft.fuse_program(fig2)
    names = [u.name for u in res.units.values()]
    assert len(names) == len(set(names))
    again = graft.fuse_program(fig2)
    assert graft.pretty_print_program(res) == graft.pretty_print_program(again)


def test_call_free_sequence_keeps_bodies():
    prog = graft.load_program("node A { int x; int y; traversal f() { this.x = 1; } "
                              "traversal g() { this.y = this.x; } }\nmain { let A r = input; r->f(); r->g(); }")
    u = graft.fuse_program(prog).unit_for("A.f", "A.g")
    assert u.order == [("stmt", 0), ("stmt", 1)] and u.groups == []


def test_violation_rejects_fusion():
    prog = graft.load_program("node A { traversal f() { this->f(); } }\nmain { let A r = input; r->f(); }")
    with pytest.raises(FusionRejected):
        graft.fuse_program(prog)


def test_fused_program_is_not_fused_again(fig2_fused):
    with pytest.raises(FusionRejected):
        graft.fuse_program(fig2_fused)


def test_seq_len_one_gives_singletons(fig2):
    res = graft.fuse_program(fig2, FusionConfig(1, 3))
    assert all(len(key) == 1 for key in res.units)
    assert res.stats.cutoff_splits >= 1
    fused = graft.fused_program(res)
    for seed in range(5):
        assert equivalent(fig2, fused, corpus_spec("fig2", seed, size=30))


def test_cutoffs_split_but_preserve_semantics():
    prog = corpus("ast")
    res = graft.fuse_program(prog, FusionConfig(3, 1))
    assert all(len(key) <= 3 and max(Counter(key).values()) <= 1 for key in res.units)
    fused = graft.fused_program(res)
    for seed in range(3):
        assert equivalent(prog, fused, corpus_spec("ast", seed, size=60))


def test_partial_fusion_splits_one_kind():
    res = graft.fuse_program(corpus("partial"))
    plain = res.unit_for("Plain.f1", "Plain.f2")
    bumper = res.unit_for("Bumper.f1", "Bumper.f2")
    assert (plain.grouped_calls, plain.split_events) == (1, 0)
    assert (bumper.grouped_calls, bumper.split_events) == (0, 1)
    assert sum(u.split_events for u in res.units.values()) == 1


def test_conditional_return_unit_is_equivalent():
    src = """
    abstract node A {
        child A n;
        int x = 0; int y = 0;
        virtual traversal f() { }
        virtual traversal g() { }
    }
    node E : A { }
    node C : A {
        override traversal f() { if (this.x > 2) { return; } this->n->f(); this.x = this.x + 1; }
        override traversal g() { this->n->g(); this.y = this.x * 2; }
    }
    main { let A r = input; r->f(); r->g(); }
    """
    prog = graft.load_program(src)
    fused = graft.fused_program(graft.fuse_program(prog))
    deep = "C x=1 {\n  n: C x=3 {\n    n: C x=0 {\n      n: E\n    }\n  }\n}"
    for t in (deep, "E", "C x=7 {\n  n: E\n}"):
        s1, m1 = graft.execute(prog, graft.parse_tree(t, prog.model))
        s2, m2 = graft.execute(fused, graft.parse_tree(t, fused.model))
        assert not graft.diff_states(s1, s2)
        assert m1.simple_statements == m2.simple_statements

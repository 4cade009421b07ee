"""Automata engine against brute-force word enumeration."""

import random

import pytest
from hypothesis import given, settings, strategies as st

from graft import automata as fa
from graft.automata import ANY, EPS, ROOT

from oracles import common_word, language, random_nfa, simulate

LETTERS = "abc"
ALPHA = list(LETTERS) + ["z"]  # z stands for any member the automata never name


def nfas(root=False):
    return st.integers(0, 2**32 - 1).map(lambda s: random_nfa(random.Random(s), LETTERS, 5, root))


def test_intersect_with_empty_is_empty():
    a = fa.word(["a", "b"])
    assert fa.is_empty(fa.intersect(a, fa.empty()))
    assert fa.is_empty(fa.empty())
    assert not fa.is_empty(fa.epsilon())


def test_union_of_two_words():
    u = fa.union(fa.word(["a"]), fa.word(["b"]))
    assert language(u, ALPHA, 3) == {("a",), ("b",)}


def test_concatenate_and_star():
    c = fa.concatenate(fa.word(["a"]), fa.star(fa.word(["b"])))
    assert language(c, ALPHA, 3) == {("a",), ("a", "b"), ("a", "b", "b")}


def test_read_word_accepts_every_nonempty_prefix():
    r = fa.word([ROOT, "Content", "Width"], accept_prefixes=True)
    assert language(r, [ROOT, "Content", "Width"], 3) == {
        (ROOT,), (ROOT, "Content"), (ROOT, "Content", "Width")}


def test_any_never_matches_root():
    a = fa.from_edges(2, 0, [1], [(0, ANY, 1)])
    assert simulate(a, ("a",)) and a.accepts(("a",))
    assert not a.accepts((ROOT,))


@settings(max_examples=300, deadline=None)
@given(nfas(), nfas())
def test_intersection_emptiness_matches_enumeration(a, b):
    w = fa.intersection_witness(a, b)
    bf = common_word(a, b, ALPHA, 8)
    assert (w is None) == (bf is None)
    if w is not None:
        assert simulate(a, w) and simulate(b, w)
        assert len(w) == len(bf)  # the witness is a shortest word
    assert fa.is_empty(fa.intersect(a, b)) == (w is None)


@settings(max_examples=200, deadline=None)
@given(nfas(root=True))
def test_accepts_matches_simulation(a):
    for w in language(a, ALPHA + [ROOT], 4) | {("a", "b"), ()}:
        assert a.accepts(w) == simulate(a, w)


@settings(max_examples=200, deadline=None)
@given(nfas(root=True))
def test_determinize_and_minimize_preserve_language(a):
    alpha = ALPHA + [ROOT]
    want = language(a, alpha, 5)
    d = fa.determinize(a)
    m = fa.minimize(a)
    assert fa.language_upto(d, alpha, 5) == want
    assert fa.language_upto(m, alpha, 5) == want
    assert m.n <= max(d.n, 1)


@settings(max_examples=100, deadline=None)
@given(nfas(), nfas())
def test_minimize_is_canonical(a, b):
    # a | b and b | a denote one language, so their minimal forms coincide
    assert fa.minimize(fa.union(a, b)).canonical() == fa.minimize(fa.union(b, a)).canonical()


def test_minimize_collapses_redundant_states():
    # two parallel a-branches into separate accepting states
    a = fa.from_edges(3, 0, [1, 2], [(0, "a", 1), (0, "a", 2), (1, EPS, 2)])
    m = fa.minimize(a)
    assert m.n == 2
    assert m.canonical()["transitions"] == [[0, "a", 1]]


def test_trim_drops_useless_states():
    a = fa.from_edges(4, 0, [1], [(0, "a", 1), (0, "b", 2), (3, "c", 1)])
    t = fa.trim(a)
    assert t.n == 2
    assert language(t, ALPHA, 2) == {("a",)}


@pytest.mark.parametrize("seed", range(5))
def test_language_upto_agrees_for_nfa_and_dfa(seed):
    a = random_nfa(random.Random(seed), LETTERS)
    assert fa.language_upto(a, ALPHA, 4) == language(a, ALPHA, 4)

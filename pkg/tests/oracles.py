"""Independent brute-force oracles shared by the unit and acceptance tests."""

import itertools
import random

from graft.automata import ANY, EPS, ROOT, from_edges


def random_nfa(rng: random.Random, letters, max_states: int = 6, root: bool = False):
    """Random automaton over ``letters`` plus ANY and EPS (and ROOT if asked)."""
    n = rng.randint(1, max_states)
    syms = list(letters) + [ANY, EPS] + ([ROOT] if root else [])
    edges = []
    for _ in range(rng.randint(0, 3 * n)):
        edges.append((rng.randrange(n), rng.choice(syms), rng.randrange(n)))
    accept = [q for q in range(n) if rng.random() < 0.35]
    return from_edges(n, 0, accept, edges)


def _closure(edges, states):
    out, stack = set(states), list(states)
    while stack:
        q = stack.pop()
        for s, sym, d in edges:
            if s == q and sym == EPS and d not in out:
                out.add(d)
                stack.append(d)
    return out


def simulate(a, word) -> bool:
    """Direct subset simulation; ANY matches any letter except ROOT."""
    cur = _closure(a.edges, {a.start})
    for x in word:
        nxt = set()
        for s, sym, d in a.edges:
            if s in cur and (sym == x or (sym == ANY and x != ROOT)):
                nxt.add(d)
        cur = _closure(a.edges, nxt)
        if not cur:
            return False
    return bool(cur & set(a.accept))


def words(alphabet, max_len: int):
    for n in range(max_len + 1):
        yield from itertools.product(alphabet, repeat=n)


def language(a, alphabet, max_len: int) -> set:
    return {w for w in words(alphabet, max_len) if simulate(a, w)}


def common_word(a, b, alphabet, max_len: int):
    """First word (shortlex) of length <= max_len accepted by both, or None."""
    # breadth-first over pairs of subsets keeps this exhaustive but fast
    start = (frozenset(_closure(a.edges, {a.start})), frozenset(_closure(b.edges, {b.start})))
    layer = {start: ()}
    seen = {start}
    for _ in range(max_len + 1):
        for (p, q), w in sorted(layer.items(), key=lambda kv: kv[1]):
            if p & set(a.accept) and q & set(b.accept):
                return w
        nxt = {}
        for (p, q), w in layer.items():
            for x in alphabet:
                p2 = frozenset(_closure(a.edges, {d for s, sym, d in a.edges
                                                  if s in p and (sym == x or (sym == ANY and x != ROOT))}))
                q2 = frozenset(_closure(b.edges, {d for s, sym, d in b.edges
                                                  if s in q and (sym == x or (sym == ANY and x != ROOT))}))
                if p2 and q2 and (p2, q2) not in seen:
                    seen.add((p2, q2))
                    nxt[(p2, q2)] = w + (x,)
        layer = nxt
    return None

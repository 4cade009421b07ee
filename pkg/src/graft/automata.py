"""A small NFA engine over field-label alphabets.

Labels are member symbols (plain strings) plus three reserved ones: ``ROOT``
(the traversed node), ``ANY`` (a wildcard matching every member symbol but
never ``ROOT``) and ``EPS``.  Automata are immutable values; every operation
returns a fresh automaton.
"""

from __future__ import annotations

from collections import deque
from dataclasses import dataclass, field
from functools import cached_property
from typing import Iterable, Optional

ROOT = "<root>"
ANY = "<any>"
EPS = "<eps>"

RESERVED = (ROOT, ANY, EPS)


def show(sym: str) -> str:
    return {ROOT: "root", ANY: "any", EPS: "eps"}.get(sym, sym)


def sym_match(s: str, t: str) -> Optional[str]:
    """Label of a joint step on ``s`` and ``t``, or None if they cannot agree."""
    if s == t:
        return s
    if s == ANY and t != ROOT:
        return t
    if t == ANY and s != ROOT:
        return s
    return None


@dataclass(frozen=True)
class NFA:
    n: int
    start: int
    accept: frozenset
    edges: tuple  # (src, sym, dst) triples

    @cached_property
    def out(self) -> list:
        out = [[] for _ in range(self.n)]
        for src, sym, dst in self.edges:
            out[src].append((sym, dst))
        return out

    @cached_property
    def symbols(self) -> set:
        return {s for _, s, _ in self.edges if s != EPS}

    def closure(self, states: Iterable[int]) -> frozenset:
        seen = set(states)
        stack = list(seen)
        while stack:
            q = stack.pop()
            for sym, dst in self.out[q]:
                if sym == EPS and dst not in seen:
                    seen.add(dst)
                    stack.append(dst)
        return frozenset(seen)

    def step(self, states: frozenset, sym: str) -> frozenset:
        nxt = set()
        for q in states:
            for s, dst in self.out[q]:
                if s != EPS and sym_match(s, sym) == sym:
                    nxt.add(dst)
        return self.closure(nxt)

    def accepts(self, word) -> bool:
        """Membership of a word over concrete symbols (``ANY`` in the word is literal)."""
        cur = self.closure([self.start])
        for sym in word:
            cur = self.step(cur, sym)
            if not cur:
                return False
        return bool(cur & self.accept)

    def is_empty(self) -> bool:
        return witness(self) is None

    def to_dot(self, name: str = "A") -> str:
        return _dot(name, self.n, self.start, self.accept, self.edges)

    def __repr__(self) -> str:
        return f"NFA(states={self.n}, edges={len(self.edges)}, accept={sorted(self.accept)})"


class Builder:
    """Mutable scratch space for assembling an NFA."""

    def __init__(self):
        self.n = 0
        self.edges: list = []
        self.accept: set = set()

    def state(self, accepting: bool = False) -> int:
        q = self.n
        self.n += 1
        if accepting:
            self.accept.add(q)
        return q

    def edge(self, src: int, sym: str, dst: int):
        self.edges.append((src, sym, dst))

    def embed(self, a: NFA, accepting: bool = True) -> int:
        """Copy ``a`` in; return the offset of its states."""
        off = self.n
        self.n += a.n
        self.edges.extend((s + off, sym, d + off) for s, sym, d in a.edges)
        if accepting:
            self.accept.update(q + off for q in a.accept)
        return off

    def build(self, start: int = 0) -> NFA:
        if self.n == 0:
            self.state()
        return NFA(self.n, start, frozenset(self.accept), tuple(dict.fromkeys(self.edges)))


# -- constructors --------------------------------------------------------------


def empty() -> NFA:
    """The automaton of the empty language."""
    return NFA(1, 0, frozenset(), ())


def epsilon() -> NFA:
    """The automaton accepting only the empty word."""
    return NFA(1, 0, frozenset({0}), ())


def word(symbols, accept_prefixes: bool = False, any_loop: bool = False) -> NFA:
    """Accept ``symbols`` (and optionally each non-empty prefix, or any extension)."""
    b = Builder()
    q = b.state()
    for s in symbols:
        nxt = b.state(accepting=accept_prefixes)
        b.edge(q, s, nxt)
        q = nxt
    b.accept.add(q)
    if any_loop:
        b.edge(q, ANY, q)
    return b.build()


def from_edges(n: int, start: int, accept, edges) -> NFA:
    return NFA(n, start, frozenset(accept), tuple(dict.fromkeys(tuple(e) for e in edges)))


# -- language operations -----------------------------------------------------


def union(*automata: NFA) -> NFA:
    parts = [a for a in automata if not is_trivially_empty(a)]
    if not parts:
        return empty()
    if len(parts) == 1:
        return parts[0]
    b = Builder()
    s = b.state()
    for a in parts:
        off = b.embed(a)
        b.edge(s, EPS, a.start + off)
    return b.build(s)


def concatenate(a: NFA, c: NFA) -> NFA:
    b = Builder()
    off_a = b.embed(a, accepting=False)
    off_c = b.embed(c)
    for q in a.accept:
        b.edge(q + off_a, EPS, c.start + off_c)
    return b.build(a.start + off_a)


def star(a: NFA) -> NFA:
    b = Builder()
    s = b.state(accepting=True)
    off = b.embed(a, accepting=False)
    b.edge(s, EPS, a.start + off)
    for q in a.accept:
        b.edge(q + off, EPS, s)
    return b.build(s)


def is_trivially_empty(a: NFA) -> bool:
    return not a.accept


def _joint_moves(a: NFA, c: NFA, p: int, q: int):
    """Successor pairs of a product state, with the label of the joint step."""
    for s, p2 in a.out[p]:
        if s == EPS:
            yield EPS, p2, q
    for t, q2 in c.out[q]:
        if t == EPS:
            yield EPS, p, q2
    for s, p2 in a.out[p]:
        if s == EPS:
            continue
        for t, q2 in c.out[q]:
            if t == EPS:
                continue
            m = sym_match(s, t)
            if m is not None:
                yield m, p2, q2


def intersect(a: NFA, c: NFA) -> NFA:
    """Product automaton; ``ANY`` meets a member symbol as that symbol."""
    if not a.accept or not c.accept:
        return empty()
    index = {(a.start, c.start): 0}
    work = deque([(a.start, c.start)])
    b = Builder()
    b.state()
    while work:
        p, q = work.popleft()
        src = index[(p, q)]
        if p in a.accept and q in c.accept:
            b.accept.add(src)
        for m, p2, q2 in _joint_moves(a, c, p, q):
            key = (p2, q2)
            if key not in index:
                index[key] = b.state()
                work.append(key)
            b.edge(src, m, index[key])
    return trim(b.build(0))


def witness(a: NFA) -> Optional[tuple]:
    """A shortest accepted word (``EPS`` steps are free), or None if the language is empty."""
    if not a.accept:
        return None
    dist = {a.start: 0}
    prev: dict = {a.start: None}
    dq = deque([a.start])
    done = set()
    while dq:
        q = dq.popleft()
        if q in done:
            continue
        done.add(q)
        if q in a.accept:
            out = []
            while prev[q] is not None:
                q, s = prev[q]
                if s != EPS:
                    out.append(s)
            return tuple(reversed(out))
        for s, dst in a.out[q]:
            w = 0 if s == EPS else 1
            if dst not in dist or dist[q] + w < dist[dst]:
                dist[dst] = dist[q] + w
                prev[dst] = (q, s)
                if w:
                    dq.append(dst)
                else:
                    dq.appendleft(dst)
    return None


def is_empty(a: NFA) -> bool:
    return witness(a) is None


def intersection_witness(a: NFA, c: NFA) -> Optional[tuple]:
    """Shortest word in both languages, found without materialising the product."""
    if not a.accept or not c.accept:
        return None
    start = (a.start, c.start)
    prev: dict = {start: None}
    dist = {start: 0}
    dq = deque([start])
    done = set()
    while dq:
        st = dq.popleft()
        if st in done:
            continue
        done.add(st)
        p, q = st
        if p in a.accept and q in c.accept:
            out = []
            while prev[st] is not None:
                st, s = prev[st]
                if s != EPS:
                    out.append(s)
            return tuple(reversed(out))
        for m, p2, q2 in _joint_moves(a, c, p, q):
            w = 0 if m == EPS else 1
            key = (p2, q2)
            if key not in dist or dist[st] + w < dist[key]:
                dist[key] = dist[st] + w
                prev[key] = (st, m)
                if w:
                    dq.append(key)
                else:
                    dq.appendleft(key)
    return None


def intersects(a: NFA, c: NFA) -> bool:
    return intersection_witness(a, c) is not None


def trim(a: NFA) -> NFA:
    """Drop states that are unreachable or cannot reach acceptance."""
    fwd = {a.start}
    stack = [a.start]
    while stack:
        q = stack.pop()
        for _, d in a.out[q]:
            if d not in fwd:
                fwd.add(d)
                stack.append(d)
    back_edges: dict = {}
    for s, sym, d in a.edges:
        back_edges.setdefault(d, []).append(s)
    live = set(q for q in a.accept if q in fwd)
    stack = list(live)
    while stack:
        q = stack.pop()
        for s in back_edges.get(q, ()):
            if s in fwd and s not in live:
                live.add(s)
                stack.append(s)
    if a.start not in live:
        return empty()
    order = sorted(live)
    ren = {q: i for i, q in enumerate(order)}
    edges = [(ren[s], sym, ren[d]) for s, sym, d in a.edges if s in live and d in live]
    return NFA(len(order), ren[a.start], frozenset(ren[q] for q in a.accept if q in live),
               tuple(dict.fromkeys(edges)))


# -- determinisation ---------------------------------------------------------


@dataclass(frozen=True)
class DFA:
    """Deterministic, trimmed automaton in canonical numbering.

    ``delta[q]`` maps symbols to successor states.  When ``closed`` is False
    the ``ANY`` key is an *otherwise* branch: it covers every member symbol
    without an explicit entry in that state.
    """

    n: int
    start: int
    accept: frozenset
    delta: tuple  # tuple of dicts
    closed: bool = False
    alphabet: tuple = field(default=(), compare=False)

    def accepts(self, word) -> bool:
        q = self.start
        for sym in word:
            d = self.delta[q]
            if sym in d:
                q = d[sym]
            elif not self.closed and sym != ROOT and ANY in d:
                q = d[ANY]
            else:
                return False
        return q in self.accept

    def transitions(self) -> list:
        return sorted((q, s, d) for q in range(self.n) for s, d in self.delta[q].items())

    def canonical(self) -> dict:
        return {"states": self.n, "start": self.start, "accept": sorted(self.accept),
                "transitions": [[q, show(s), d] for q, s, d in self.transitions()]}

    def to_dot(self, name: str = "A") -> str:
        return _dot(name, self.n, self.start, self.accept, self.transitions())


def determinize(a: NFA, alphabet: Optional[Iterable[str]] = None) -> DFA:
    """Subset construction.

    With an ``alphabet`` the wildcard is expanded over it and the result is
    closed over that alphabet; without one, member symbols that the NFA never
    names are folded into a single ``ANY`` otherwise-branch.
    """
    closed = alphabet is not None
    if closed:
        syms = sorted(set(alphabet) - set(RESERVED))
    else:
        syms = sorted(a.symbols - {ROOT, ANY})
    has_root = ROOT in a.symbols
    start = a.closure([a.start])
    index = {start: 0}
    subsets = [start]
    delta: list = []
    i = 0
    while i < len(subsets):
        cur = subsets[i]
        d = {}
        moves = ([ROOT] if has_root else []) + syms
        for s in moves:
            nxt = a.step(cur, s)
            if nxt:
                d[s] = nxt
        if not closed:
            other = set()
            for q in cur:
                for s, dst in a.out[q]:
                    if s == ANY:
                        other.add(dst)
            if other:
                d[ANY] = a.closure(other)
        out = {}
        for s, nxt in d.items():
            if nxt not in index:
                index[nxt] = len(subsets)
                subsets.append(nxt)
            out[s] = index[nxt]
        delta.append(out)
        i += 1
    accept = frozenset(j for j, sub in enumerate(subsets) if sub & a.accept)
    return _canon(DFA(len(subsets), 0, accept, tuple(delta), closed, tuple(syms)))


def _canon(d: DFA) -> DFA:
    """Trim dead states and renumber breadth-first with sorted symbols."""
    rev: dict = {}
    for q in range(d.n):
        for _, dst in d.delta[q].items():
            rev.setdefault(dst, set()).add(q)
    live = set(d.accept)
    stack = list(live)
    while stack:
        q = stack.pop()
        for s in rev.get(q, ()):
            if s not in live:
                live.add(s)
                stack.append(s)
    if d.start not in live:
        return DFA(1, 0, frozenset(), ({},), d.closed, d.alphabet)
    order = {d.start: 0}
    work = deque([d.start])
    while work:
        q = work.popleft()
        for s in sorted(d.delta[q], key=_symkey):
            dst = d.delta[q][s]
            if dst in live and dst not in order:
                order[dst] = len(order)
                work.append(dst)
    delta = [None] * len(order)
    for q, i in order.items():
        delta[i] = {s: order[t] for s, t in d.delta[q].items() if t in order}
    return DFA(len(order), 0, frozenset(order[q] for q in d.accept if q in order), tuple(delta),
               d.closed, d.alphabet)


def _symkey(s: str):
    return (0 if s == ROOT else 2 if s == ANY else 1, s)


def minimize(a, alphabet: Optional[Iterable[str]] = None) -> DFA:
    """Minimal trimmed DFA (Moore partition refinement) in canonical numbering."""
    d = a if isinstance(a, DFA) else determinize(a, alphabet)
    if not d.accept:
        return d
    syms = sorted({s for m in d.delta for s in m}, key=_symkey)

    def target(q, s):
        m = d.delta[q]
        if s in m:
            return m[s]
        if not d.closed and s != ROOT and s != ANY and ANY in m:
            return m[ANY]
        return -1  # dead

    block = [1 if q in d.accept else 0 for q in range(d.n)]
    while True:
        sig = {}
        new = []
        for q in range(d.n):
            key = (block[q],) + tuple(block[target(q, s)] if target(q, s) >= 0 else -1 for s in syms)
            new.append(sig.setdefault(key, len(sig)))
        if len(sig) == len(set(block)):
            break
        block = new
    block = new
    reps: dict = {}
    for q in range(d.n):
        reps.setdefault(block[q], q)
    delta = []
    nb = len(reps)
    for b in range(nb):
        q = reps[b]
        m = {}
        for s in syms:
            t = target(q, s)
            if t >= 0:
                m[s] = block[t]
        if not d.closed and ANY in m:
            # explicit entries that agree with the otherwise-branch are redundant
            m = {s: t for s, t in m.items() if s == ANY or s == ROOT or t != m[ANY]}
        delta.append(m)
    accept = frozenset(block[q] for q in d.accept)
    return _canon(DFA(nb, block[d.start], accept, tuple(delta), d.closed, d.alphabet))


def language_upto(a, alphabet, max_len: int) -> set:
    """Every word over ``alphabet`` of length at most ``max_len`` accepted by ``a``."""
    out = set()
    if isinstance(a, DFA):
        frontier = [((), a.start)]
        if a.start in a.accept:
            out.add(())
        for _ in range(max_len):
            nxt = []
            for w, q in frontier:
                for s in alphabet:
                    m = a.delta[q]
                    t = m.get(s)
                    if t is None and not a.closed and s != ROOT and ANY in m:
                        t = m[ANY]
                    if t is not None:
                        w2 = w + (s,)
                        nxt.append((w2, t))
                        if t in a.accept:
                            out.add(w2)
            frontier = nxt
        return out
    frontier = {(): a.closure([a.start])}
    if frontier[()] & a.accept:
        out.add(())
    for _ in range(max_len):
        nxt = {}
        for w, cur in frontier.items():
            for s in alphabet:
                st = a.step(cur, s)
                if st:
                    w2 = w + (s,)
                    nxt[w2] = st
                    if st & a.accept:
                        out.add(w2)
        frontier = nxt
    return out


def _dot(name, n, start, accept, edges) -> str:
    lines = [f"digraph {name} {{", "  rankdir=LR;", '  _start [shape=point];']
    for q in range(n):
        shape = "doublecircle" if q in accept else "circle"
        lines.append(f"  {q} [shape={shape}];")
    lines.append(f"  _start -> {start};")
    for s, sym, d in edges:
        lines.append(f'  {s} -> {d} [label="{show(sym)}"];')
    lines.append("}")
    return "\n".join(lines) + "\n"

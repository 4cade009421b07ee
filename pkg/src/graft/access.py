"""Access paths and the six read/write access automata of each statement."""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Optional

from . import ast as A
from . import automata as fa
from .automata import ANY, EPS, ROOT, NFA
from .model import SELF, Hierarchy, call_targets

CATEGORIES = ("tree", "global", "local")


@dataclass(frozen=True)
class AccessPath:
    category: str  # 'tree' | 'global' | 'local'
    symbols: tuple  # tree paths start with ROOT
    any_tail: bool = False  # the whole object below the path is touched

    def __str__(self) -> str:
        text = ".".join(fa.show(s) if s == ROOT else s for s in self.symbols)
        return text + (".(any)*" if self.any_tail else "")

    def prefix(self) -> "AccessPath":
        return AccessPath(self.category, self.symbols[:-1])


@dataclass
class PathSets:
    reads: set = field(default_factory=set)
    writes: set = field(default_factory=set)

    def update(self, other: "PathSets"):
        self.reads |= other.reads
        self.writes |= other.writes


@dataclass(frozen=True)
class StatementSummary:
    """Read and write automata per storage category."""

    reads: dict  # category -> NFA
    writes: dict

    def automaton(self, category: str, mode: str) -> NFA:
        return (self.reads if mode == "read" else self.writes)[category]

    @staticmethod
    def empty() -> "StatementSummary":
        return StatementSummary({c: fa.empty() for c in CATEGORIES}, {c: fa.empty() for c in CATEGORIES})


# -- path collection ---------------------------------------------------------


class PathCollector:
    """Collects access paths of statements in a resolved traversal body.

    Alias variables are replaced by the path they were bound to, so every
    tree path is rooted at the traversed node.
    """

    def __init__(self, h: Hierarchy):
        self.h = h

    def is_struct(self, ty) -> bool:
        return ty in self.h.structs

    def path_of(self, e, aliases: dict) -> Optional[AccessPath]:
        if isinstance(e, A.This):
            return AccessPath("tree", (ROOT,))
        if isinstance(e, A.Name):
            if e.binding == "alias":
                return aliases.get(e.ident)
            if e.binding == "global":
                return AccessPath("global", (e.ident,))
            if e.binding in ("local", "param"):
                return AccessPath("local", (e.ident,))
            return None
        if isinstance(e, A.Cast):
            return self.path_of(e.operand, aliases)
        if isinstance(e, A.Member):
            base = self.path_of(e.base, aliases)
            if base is None:
                return None
            return AccessPath(base.category, base.symbols + (e.sym,))
        return None

    def expr_reads(self, e, aliases: dict, out: PathSets):
        if e is None:
            return
        p = self.path_of(e, aliases)
        if p is not None:
            if self.is_struct(e.ty):
                p = AccessPath(p.category, p.symbols, True)
            out.reads.add(p)
            if isinstance(e, A.Member):
                self._inner_reads(e.base, aliases, out)
            return
        self._inner_reads(e, aliases, out)

    def _inner_reads(self, e, aliases, out):
        if isinstance(e, A.Member):
            self.expr_reads(e.base, aliases, out)
        elif isinstance(e, A.Cast):
            self.expr_reads(e.operand, aliases, out)
        elif isinstance(e, A.Binary):
            self.expr_reads(e.left, aliases, out)
            self.expr_reads(e.right, aliases, out)
        elif isinstance(e, A.Unary):
            self.expr_reads(e.operand, aliases, out)
        elif isinstance(e, A.Call):
            for a in e.args:
                self.expr_reads(a, aliases, out)

    def write(self, target, aliases, out: PathSets, any_tail: bool = False):
        p = self.path_of(target, aliases)
        if p is None:
            return
        if self.is_struct(target.ty):
            any_tail = True
        out.writes.add(AccessPath(p.category, p.symbols, any_tail))
        if len(p.symbols) > 1:
            out.reads.add(p.prefix())
        if isinstance(target, A.Member):
            self.expr_reads(target.base, aliases, out)

    def stmt(self, s, aliases: dict, out: PathSets):
        """Paths of ``s``; updates ``aliases`` with any alias it binds."""
        if isinstance(s, A.Assign):
            self.expr_reads(s.value, aliases, out)
            self.write(s.target, aliases, out)
        elif isinstance(s, A.If):
            self.expr_reads(s.cond, aliases, out)
            for branch in (s.then, s.orelse):
                inner = dict(aliases)
                for t in branch:
                    self.stmt(t, inner, out)
        elif isinstance(s, A.LocalDef):
            self.expr_reads(s.init, aliases, out)
            out.writes.add(AccessPath("local", (s.name,), self.is_struct(s.type)))
        elif isinstance(s, A.AliasDef):
            self.expr_reads(s.target, aliases, out)
            aliases[s.name] = self.path_of(s.target, aliases)
        elif isinstance(s, (A.New, A.Delete)):
            for a in getattr(s, "args", ()):
                self.expr_reads(a, aliases, out)
            self.write(s.target, aliases, out, any_tail=True)
        elif isinstance(s, A.PureCallStmt):
            self.expr_reads(s.call, aliases, out)
        elif isinstance(s, A.Traverse):
            for a in s.args:
                self.expr_reads(a, aliases, out)
        return out


def alias_env_before(body: list, index: int, collector: PathCollector) -> dict:
    """Alias bindings in scope at top-level position ``index`` of ``body``."""
    aliases: dict = {}
    for s in body[:index]:
        if isinstance(s, A.AliasDef):
            aliases[s.name] = collector.path_of(s.target, aliases)
    return aliases


# -- automata from paths -----------------------------------------------------


class _Trie:
    """Builds a prefix-shared automaton from a set of paths."""

    def __init__(self, builder: Optional[fa.Builder] = None):
        self.b = builder or fa.Builder()
        self.kids: dict = {}

    def add(self, start: int, symbols, read: bool, any_tail: bool):
        q = start
        for sym in symbols:
            key = (q, sym)
            if key not in self.kids:
                nxt = self.b.state()
                self.kids[key] = nxt
                self.b.edge(q, sym, nxt)
            q = self.kids[key]
            if read:
                self.b.accept.add(q)
        self.b.accept.add(q)
        if any_tail and (q, ANY, "loop") not in self.kids:
            self.kids[(q, ANY, "loop")] = q
            self.b.edge(q, ANY, q)


def paths_automaton(paths, read: bool) -> NFA:
    """Union of the primitive automata of ``paths``."""
    paths = list(paths)
    if not paths:
        return fa.empty()
    t = _Trie()
    start = t.b.state()
    for p in sorted(paths, key=lambda p: (p.symbols, p.any_tail)):
        t.add(start, p.symbols, read, p.any_tail)
    return t.b.build(start)


def summary_from_paths(ps: PathSets) -> StatementSummary:
    reads, writes = {}, {}
    for c in CATEGORIES:
        reads[c] = paths_automaton([p for p in ps.reads if p.category == c], True)
        writes[c] = paths_automaton([p for p in ps.writes if p.category == c], False)
    return StatementSummary(reads, writes)


# -- the analysis ------------------------------------------------------------


class AccessAnalysis:
    """Memoized statement and call summaries for one resolved program."""

    def __init__(self, h: Hierarchy):
        self.h = h
        self.collector = PathCollector(h)
        self._paths: dict = {}
        self._summaries: dict = {}
        self._decl_paths: dict = {}

    def _decl_of(self, stmt) -> Optional[A.TraversalDecl]:
        label = stmt.origin.split(":", 1)[0] if stmt.origin else None
        return self.h.decl_by_label(label) if label else None

    def statement_paths(self, stmt, decl: Optional[A.TraversalDecl] = None) -> PathSets:
        key = id(stmt)
        if key not in self._paths:
            decl = decl or self._decl_of(stmt)
            aliases = {}
            if decl is not None:
                idx = next(i for i, s in enumerate(decl.body) if s is stmt)
                aliases = alias_env_before(decl.body, idx, self.collector)
            self._paths[key] = (stmt, self.collector.stmt(stmt, aliases, PathSets()))
        return self._paths[key][1]

    def decl_paths(self, d: A.TraversalDecl) -> list:
        """Per-statement paths of ``d``'s body (calls contribute their argument reads)."""
        if d.label not in self._decl_paths:
            self._decl_paths[d.label] = [self.statement_paths(s, d) for s in d.body]
        return self._decl_paths[d.label]

    def summary(self, stmt, decl: Optional[A.TraversalDecl] = None) -> StatementSummary:
        key = id(stmt)
        if key not in self._summaries:
            if isinstance(stmt, A.Traverse):
                s = self.call_summary(stmt, decl)
            else:
                s = summary_from_paths(self.statement_paths(stmt, decl))
            self._summaries[key] = (stmt, s)
        return self._summaries[key][1]

    def call_summary(self, call: A.Traverse, decl: Optional[A.TraversalDecl] = None) -> StatementSummary:
        """Summary of everything a traverse call may touch, relative to the caller's node."""
        own = self.statement_paths(call, decl)  # argument reads, caller-relative
        tr, tw = _Trie(), _Trie()
        r0 = tr.b.state()
        w0 = tw.b.state()
        r1 = tr.b.state(accepting=True)
        w1 = tw.b.state()
        tr.b.edge(r0, ROOT, r1)
        tw.b.edge(w0, ROOT, w1)
        for p in own.reads:
            if p.category == "tree":
                tr.add(r0, p.symbols, True, p.any_tail)
        state_r: dict = {}
        state_w: dict = {}
        glob = PathSets()
        work = []

        def attach(c: A.Traverse, fr: int, fw: int):
            label = c.child_sym if c.child is not None else EPS
            for d in call_targets(c, self.h):
                if d.label not in state_r:
                    state_r[d.label] = tr.b.state(accepting=True)
                    state_w[d.label] = tw.b.state()
                    work.append(d)
                tr.b.edge(fr, label, state_r[d.label])
                tw.b.edge(fw, label, state_w[d.label])

        attach(call, r1, w1)
        while work:
            d = work.pop(0)
            sr, sw = state_r[d.label], state_w[d.label]
            for s, ps in zip(d.body, self.decl_paths(d)):
                for p in ps.reads:
                    if p.category == "tree":
                        tr.add(sr, p.symbols[1:], True, p.any_tail)
                    elif p.category == "global":
                        glob.reads.add(p)
                for p in ps.writes:
                    if p.category == "tree":
                        tw.add(sw, p.symbols[1:], False, p.any_tail)
                    elif p.category == "global":
                        glob.writes.add(p)
                if isinstance(s, A.Traverse):
                    attach(s, sr, sw)
        tree_r = fa.trim(tr.b.build(r0))
        tree_w = fa.trim(tw.b.build(w0))
        reads = {
            "tree": tree_r,
            "global": paths_automaton(glob.reads | {p for p in own.reads if p.category == "global"}, True),
            "local": paths_automaton([p for p in own.reads if p.category == "local"], True),
        }
        writes = {"tree": tree_w, "global": paths_automaton(glob.writes, False), "local": fa.empty()}
        return StatementSummary(reads, writes)

    def call_summary_size_bound(self, call: A.Traverse) -> int:
        """Upper bound on the tree automaton states of a call summary."""
        from .model import build_labeled_call_graph
        g = build_labeled_call_graph(call, self.h)
        total = 2 + len(g.nodes)
        for lab in g.nodes:
            for ps in self.decl_paths(g.decls[lab]):
                total += sum(len(p.symbols) for p in ps.reads | ps.writes)
        return total


def collect_access_paths(stmt, h: Hierarchy, decl: Optional[A.TraversalDecl] = None) -> PathSets:
    return AccessAnalysis(h).statement_paths(stmt, decl)


def build_statement_summary(stmt, h: Hierarchy, decl: Optional[A.TraversalDecl] = None) -> StatementSummary:
    return summary_from_paths(collect_access_paths(stmt, h, decl))


def build_call_summary(call: A.Traverse, h: Hierarchy, decl: Optional[A.TraversalDecl] = None) -> StatementSummary:
    return AccessAnalysis(h).call_summary(call, decl)


def conflicts(a: StatementSummary, b: StatementSummary, same_origin: bool = True) -> bool:
    """True iff the two summaries may touch a common location with at least one write.

    Local storage is only compared when both statements come from the same
    traversal instance; locals of different functions never alias.
    """
    cats = CATEGORIES if same_origin else ("tree", "global")
    for c in cats:
        if a.writes[c].accept and (fa.intersects(a.writes[c], b.reads[c]) or fa.intersects(a.writes[c], b.writes[c])):
            return True
        if b.writes[c].accept and fa.intersects(a.reads[c], b.writes[c]):
            return True
    return False

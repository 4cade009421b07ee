"""Fusion of consecutive traversal calls into memoized fused units.

The driver starts from call sequences in the entry block.  For every concrete
receiver kind it resolves the sequence to a key of traversal declarations,
builds (or reuses) a unit for the key, and recurses on the call groups that
scheduling produces inside the unit.
"""

from __future__ import annotations

import hashlib
import heapq
from collections import Counter, deque
from dataclasses import dataclass, field
from math import comb
from typing import Optional

from . import ast as A
from .access import AccessAnalysis
from .dependence import DependenceBuilder, DependenceGraph
from .errors import CycleDetected, FusionRejected
from .model import SELF, Hierarchy
from .validate import validate_program

MAX_FLAGS = 32


@dataclass(frozen=True)
class FusionConfig:
    max_seq_len: int = 5
    max_repeat: int = 3

    def __post_init__(self):
        if self.max_seq_len < 1 or self.max_repeat < 1:
            raise ValueError("fusion cutoffs must be at least 1")
        if self.max_seq_len > MAX_FLAGS:
            raise ValueError(f"at most {MAX_FLAGS} traversals fit in one activity mask")


def fused_name(key: tuple) -> str:
    digest = hashlib.sha1(",".join(key).encode()).hexdigest()[:8]
    return f"_fuse__{digest}"


def split_key(key, config: FusionConfig) -> list:
    """Cut a sequence into maximal legal prefixes, left to right.

    Returns index lists into ``key``.
    """
    chunks, cur, counts = [], [], Counter()
    for i, label in enumerate(key):
        if cur and (len(cur) >= config.max_seq_len or counts[label] >= config.max_repeat):
            chunks.append(cur)
            cur, counts = [], Counter()
        cur.append(i)
        counts[label] += 1
    if cur:
        chunks.append(cur)
    return chunks


def unit_bound(n_decls: int, config: FusionConfig) -> int:
    """Number of sequences of length 1..max_seq_len over ``n_decls`` symbols
    in which no symbol occurs more than max_repeat times."""
    L, R = config.max_seq_len, config.max_repeat
    # f[n] = number of length-n words over the symbols seen so far
    f = [1] + [0] * L
    for _ in range(n_decls):
        g = [0] * (L + 1)
        for n in range(L + 1):
            g[n] = sum(comb(n, k) * f[n - k] for k in range(0, min(R, n) + 1))
        f = g
    return sum(f[1:])


# -- seeds -------------------------------------------------------------------


@dataclass
class Seed:
    position: int  # index of the first call in the entry block
    receiver: str
    calls: list  # EntryCall items

    @property
    def families(self) -> tuple:
        return tuple(c.name for c in self.calls)


def find_seed_sequences(prog: A.Program) -> list:
    """Maximal runs of consecutive entry calls on the same binding."""
    seeds, cur = [], None
    for i, item in enumerate(prog.entry):
        if isinstance(item, A.EntryCall):
            if cur is not None and cur.receiver == item.receiver and len(cur.calls) < MAX_FLAGS:
                cur.calls.append(item)
                continue
            cur = Seed(i, item.receiver, [item])
            seeds.append(cur)
        else:
            cur = None
    return seeds


# -- grouping and scheduling -------------------------------------------------


def call_label(stmt: A.Traverse) -> str:
    return stmt.child_sym if stmt.child is not None else SELF


def _quotient_acyclic(g: DependenceGraph, rep: dict) -> bool:
    """Is the graph with every group collapsed to its representative acyclic?"""
    nodes = set(rep.values())
    succ = {n: set() for n in nodes}
    indeg = {n: 0 for n in nodes}
    for u, v in g.edges:
        a, b = rep[u], rep[v]
        if a != b and b not in succ[a]:
            succ[a].add(b)
            indeg[b] += 1
    work = [n for n in nodes if indeg[n] == 0]
    seen = 0
    while work:
        n = work.pop()
        seen += 1
        for m in succ[n]:
            indeg[m] -= 1
            if indeg[m] == 0:
                work.append(m)
    return seen == len(nodes)


def group_calls(g: DependenceGraph, config: FusionConfig) -> list:
    """Greedy grouping of call vertices in program order.

    A later call joins the current group when it traverses the same child,
    the group stays within the cutoffs, and collapsing every group formed
    so far still leaves an acyclic graph (so all groups can be scheduled
    contiguously at once).
    """
    rep = {v.index: v.index for v in g.vertices}
    groups = []
    grouped = set()
    calls = [v for v in g.vertices if v.is_call]
    for c in calls:
        if c.index in grouped:
            continue
        group = [c.index]
        grouped.add(c.index)
        label = call_label(c.stmt)
        counts = Counter([c.stmt.name])
        for v in calls:
            if v.index <= c.index or v.index in grouped or call_label(v.stmt) != label:
                continue
            if len(group) >= config.max_seq_len or counts[v.stmt.name] >= config.max_repeat:
                continue
            trial = dict(rep)
            trial[v.index] = c.index
            if _quotient_acyclic(g, trial):
                rep = trial
                group.append(v.index)
                grouped.add(v.index)
                counts[v.stmt.name] += 1
        groups.append(group)
    return groups


def schedule(g: DependenceGraph, groups, rng=None) -> list:
    """Topological order of statements and groups, stable by original position.

    Items are ``("stmt", v)`` or ``("group", [v, ...])``.  With ``rng`` (a
    ``random.Random``) any legal order may come out instead; used to fuzz
    the dependence graph.
    """
    rep = {v.index: v.index for v in g.vertices}
    for grp in groups:
        for v in grp:
            rep[v] = min(grp)
    members = {v.index: [v.index] for v in g.vertices if rep[v.index] == v.index}
    for grp in groups:
        members[min(grp)] = sorted(grp)
    succ = {n: set() for n in members}
    indeg = {n: 0 for n in members}
    for u, v in g.edges:
        a, b = rep[u], rep[v]
        if a != b and b not in succ[a]:
            succ[a].add(b)
            indeg[b] += 1
    ready = [n for n in members if indeg[n] == 0]
    heapq.heapify(ready)
    order = []
    while ready:
        if rng is None:
            n = heapq.heappop(ready)
        else:
            ready.sort()
            n = ready.pop(rng.randrange(len(ready)))
        order.append(n)
        for m in succ[n]:
            indeg[m] -= 1
            if indeg[m] == 0:
                heapq.heappush(ready, m)
    if len(order) != len(members):
        raise CycleDetected("call groups cannot be scheduled contiguously")
    grouped_heads = {min(grp) for grp in groups}
    out = []
    for n in order:
        if n in grouped_heads:
            out.append(("group", members[n]))
        else:
            out.append(("stmt", n))
    return out


# -- units -------------------------------------------------------------------


@dataclass
class CallGroup:
    members: list  # merged-body vertex indices, program order
    label: str  # child symbol or SELF
    families: tuple
    base: str  # static receiver kind
    stub: Optional[str] = None


@dataclass
class StubInfo:
    name: str
    families: tuple
    base: str
    params: list  # A.Param per family member, in order
    overrides: dict = field(default_factory=dict)  # concrete kind -> [(key, member indices)]


@dataclass
class FusionUnit:
    key: tuple
    decls: list
    receiver_kind: str
    graph: DependenceGraph
    groups: list  # CallGroup, in schedule order
    order: list  # schedule items
    name: str = ""
    split_events: int = 0
    cutoff_splits: int = 0

    @property
    def constituents(self) -> list:
        return list(self.key)

    @property
    def grouped_calls(self) -> int:
        return sum(1 for grp in self.groups if len(grp.members) > 1)

    def flag_layout(self) -> dict:
        return {i: label for i, label in enumerate(self.key)}

    def param_layout(self) -> list:
        return [(i, p) for i, d in enumerate(self.decls) for p in d.params]

    def stats(self) -> dict:
        return {"key": self.name, "constituents": list(self.key), "groupedCalls": self.grouped_calls,
                "splitEvents": self.split_events}


@dataclass
class FusionStats:
    sequences_found: int = 0
    units_created: int = 0
    units_reused: int = 0
    cutoff_splits: int = 0

    def to_json(self, units) -> dict:
        return {
            "sequencesFound": self.sequences_found,
            "unitsCreated": self.units_created,
            "unitsReused": self.units_reused,
            "cutoffSplits": self.cutoff_splits,
            "perUnit": [u.stats() for u in units],
        }


@dataclass
class FusionResult:
    program: A.Program  # the resolved input
    config: FusionConfig
    units: dict  # key -> FusionUnit, creation order
    stubs: dict  # (families, base) -> StubInfo, creation order
    entry: list  # rewritten entry items
    seeds: list
    stats: FusionStats

    def unit_for(self, *labels) -> FusionUnit:
        return self.units[tuple(labels)]

    def stats_json(self) -> dict:
        return self.stats.to_json(self.units.values())


class FusionDriver:
    def __init__(self, prog: A.Program, config: FusionConfig, order_rng=None):
        self.prog = prog
        self.order_rng = order_rng
        self.h: Hierarchy = prog.model
        self.config = config
        self.analysis = AccessAnalysis(self.h)
        self.deps = DependenceBuilder(self.analysis)
        self.units: dict = {}
        self.stubs: dict = {}
        self.work: deque = deque()
        self.stats = FusionStats()

    # stubs and keys

    def stub_for(self, families: tuple, base: str, params: list) -> tuple:
        """Stub for a family sequence on ``base``; returns (stub, reused units, new units)."""
        k = (families, base)
        if k in self.stubs:
            st = self.stubs[k]
            keys = {key for targets in st.overrides.values() for key, _ in targets}
            return st, len(keys), 0
        st = StubInfo(f"__stub{len(self.stubs) + 1}", families, base, params)
        self.stubs[k] = st
        reused = created = 0
        seen = set()
        for kind in self.h.concrete_subtypes(base):
            full = tuple(self.h.traversal(kind, fam).label for fam in families)
            targets = []
            for idx in split_key(full, self.config):
                key = tuple(full[i] for i in idx)
                if key not in self.units:
                    self.create(key)
                    created += 1
                elif key not in seen:
                    reused += 1
                seen.add(key)
                targets.append((key, idx))
            st.overrides[kind] = targets
        return st, reused, created

    def cutoff_splits(self, st: StubInfo) -> int:
        return max((len(t) - 1 for t in st.overrides.values()), default=0)

    def create(self, key: tuple):
        decls = [self.h.decl_by_label(lab) for lab in key]
        unit = FusionUnit(key, decls, self.h.lub([d.owner for d in decls]), None, [], [], fused_name(key))
        self.units[key] = unit
        self.stats.units_created += 1
        self.work.append(unit)

    def build(self, unit: FusionUnit):
        g = self.deps.build(unit.decls)
        unit.graph = g
        groups = group_calls(g, self.config)
        unit.order = schedule(g, groups, self.order_rng)
        by_label: dict = {}
        for kind, item in unit.order:
            if kind != "group":
                continue
            vs = [g.vertices[i] for i in item]
            label = call_label(vs[0].stmt)
            base = self.h.lub([v.stmt.child_kind for v in vs])
            fams = tuple(v.stmt.name for v in vs)
            params = []
            for j, v in enumerate(vs):
                callee = self.h.traversal(v.stmt.child_kind, v.stmt.name)
                params += [A.Param(p.type, f"_a{j}_{p.name}") for p in callee.params]
            cg = CallGroup(item, label, fams, base)
            st, reused, _ = self.stub_for(fams, base, params)
            cg.stub = st.name
            self.stats.units_reused += reused
            cuts = self.cutoff_splits(st)
            unit.cutoff_splits += cuts
            unit.groups.append(cg)
            by_label.setdefault(label, []).append(cg)
        # calls on one child that ended up in more groups than any single
        # constituent has calls there were not fused with each other
        for label, cgs in by_label.items():
            need = max(Counter(g.vertices[i].origin for cg in cgs for i in cg.members).values())
            unit.split_events += max(0, len(cgs) - need)

    def run(self, seeds) -> list:
        entry = []
        by_pos = {s.position: s for s in seeds}
        skip = set()
        binds = {}
        for i, item in enumerate(self.prog.entry):
            if isinstance(item, A.Bind):
                binds[item.name] = item.kind
            if i in skip:
                continue
            if i not in by_pos:
                entry.append(item)
                continue
            seed = by_pos[i]
            base = binds[seed.receiver]
            params = []
            args = []
            for j, c in enumerate(seed.calls):
                d = self.h.traversal(base, c.name)
                params += [A.Param(p.type, f"_a{j}_{p.name}") for p in d.params]
                args += c.args
            st, reused, _ = self.stub_for(seed.families, base, params)
            self.stats.units_reused += reused
            self.stats.cutoff_splits += self.cutoff_splits(st)
            entry.append(A.EntryStubCall(seed.receiver, st.name, (1 << len(seed.calls)) - 1, args, item.loc))
            skip.update(range(i, i + len(seed.calls)))
            while self.work:
                self.build(self.work.popleft())
        while self.work:
            self.build(self.work.popleft())
        return entry


def fuse_program(prog: A.Program, config: Optional[FusionConfig] = None, order_rng=None) -> FusionResult:
    """Run the fusion driver on a resolved, unfused program.

    ``order_rng`` replaces the deterministic schedule of every unit with a
    random topological order of its dependence graph.
    """
    config = config or FusionConfig()
    if prog.is_fused:
        raise FusionRejected("program is already fused")
    report = validate_program(prog)
    if not report.ok:
        codes = ", ".join(sorted(set(report.codes())))
        raise FusionRejected(f"program violates fusion restrictions: {codes}")
    drv = FusionDriver(prog, config, order_rng)
    seeds = find_seed_sequences(prog)
    drv.stats.sequences_found = len(seeds)
    entry = drv.run(seeds)
    for u in drv.units.values():
        drv.stats.cutoff_splits += u.cutoff_splits
    return FusionResult(prog, config, drv.units, drv.stubs, entry, seeds, drv.stats)


def fuse_sequence(prog: A.Program, receiver_kind: str, families, config: Optional[FusionConfig] = None):
    """Fuse one family sequence invoked on a node of ``receiver_kind``.

    Returns the driver so callers can inspect every unit it created.
    """
    config = config or FusionConfig()
    drv = FusionDriver(prog, config)
    drv.stub_for(tuple(families), receiver_kind, [])
    while drv.work:
        drv.build(drv.work.popleft())
    return drv

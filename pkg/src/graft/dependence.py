"""Dependence graphs over the merged body of a traversal sequence."""

from __future__ import annotations

from dataclasses import dataclass, field

from . import ast as A
from .access import AccessAnalysis, conflicts


@dataclass(frozen=True)
class Vertex:
    index: int  # position in the merged body
    origin: int  # index of the constituent traversal it came from
    position: int  # position inside that traversal's body
    stmt: object = field(compare=False)

    @property
    def kind(self) -> str:
        return "call" if isinstance(self.stmt, A.Traverse) else "simple"

    @property
    def is_call(self) -> bool:
        return isinstance(self.stmt, A.Traverse)

    @property
    def label(self) -> str:
        if self.is_call:
            recv = "this" if self.stmt.child is None else self.stmt.child
            return f"f{self.origin}:{recv}->{self.stmt.name}()"
        return f"f{self.origin}:s{self.position}"


@dataclass
class DependenceGraph:
    vertices: list
    edges: dict  # (u, v) -> 'data' | 'control' | 'data+control'

    def succ(self, u: int) -> list:
        return [v for (a, v) in self.edges if a == u]

    def pred(self, v: int) -> list:
        return [u for (u, b) in self.edges if b == v]

    @property
    def edge_set(self) -> set:
        return set(self.edges)

    def is_topological(self, order) -> bool:
        pos = {v: i for i, v in enumerate(order)}
        return sorted(order) == list(range(len(self.vertices))) and all(
            pos[u] < pos[v] for u, v in self.edges)

    def to_dot(self, name: str = "depgraph") -> str:
        lines = [f"digraph {name} {{"]
        for v in self.vertices:
            shape = "box" if v.is_call else "ellipse"
            lines.append(f'  {v.index} [label="{v.label}", shape={shape}];')
        for (u, v), why in sorted(self.edges.items()):
            style = "dashed" if why == "control" else "solid"
            lines.append(f'  {u} -> {v} [label="{why}", style={style}];')
        lines.append("}")
        return "\n".join(lines) + "\n"


def merged_body(decls) -> list:
    """Inline the constituent bodies one after another (the outline/inline step)."""
    out = []
    for i, d in enumerate(decls):
        for j, s in enumerate(d.body):
            out.append(Vertex(len(out), i, j, s))
    return out


class DependenceBuilder:
    """Builds graphs, memoizing pairwise conflict tests across calls."""

    def __init__(self, analysis: AccessAnalysis):
        self.analysis = analysis
        self._memo: dict = {}
        self.tests = 0

    def conflict(self, a, da, b, db, same_origin: bool) -> bool:
        key = (id(a), id(b), same_origin)
        if key not in self._memo:
            self.tests += 1
            self._memo[key] = conflicts(self.analysis.summary(a, da), self.analysis.summary(b, db), same_origin)
        return self._memo[key]

    def build(self, decls) -> DependenceGraph:
        vs = merged_body(decls)
        edges: dict = {}
        rets = [A.may_return(v.stmt) for v in vs]
        for u in vs:
            for v in vs[u.index + 1:]:
                same = u.origin == v.origin
                reasons = []
                if self.conflict(u.stmt, decls[u.origin], v.stmt, decls[v.origin], same):
                    reasons.append("data")
                # a return truncates its own traversal, so nothing of that
                # traversal may cross it in either direction
                if same and (rets[u.index] or rets[v.index]):
                    reasons.append("control")
                if reasons:
                    edges[(u.index, v.index)] = "+".join(reasons)
        return DependenceGraph(vs, edges)


def build_dependence_graph(decls, analysis: AccessAnalysis) -> DependenceGraph:
    return DependenceBuilder(analysis).build(decls)

"""Static restrictions a traversal must satisfy before it may be fused."""

from __future__ import annotations

from dataclasses import dataclass, field

from . import ast as A
from .model import Hierarchy, call_targets


@dataclass(frozen=True)
class Violation:
    code: str
    where: str  # traversal label, or "main"
    message: str
    line: int = 0

    def to_json(self) -> dict:
        return {"code": self.code, "where": self.where, "message": self.message, "line": self.line}


@dataclass
class ValidationReport:
    violations: list = field(default_factory=list)

    @property
    def ok(self) -> bool:
        return not self.violations

    @property
    def unfusible(self) -> set:
        return {v.where for v in self.violations}

    def codes(self) -> list:
        return [v.code for v in self.violations]

    def to_json(self) -> dict:
        return {"ok": self.ok, "violations": [v.to_json() for v in self.violations]}


def _is_descendant_ref(e, aliases) -> bool:
    """``this``, an alias, or a chain of child steps / casts on one of those."""
    if isinstance(e, A.This):
        return True
    if isinstance(e, A.Name):
        return e.ident in aliases
    if isinstance(e, A.Cast):
        return _is_descendant_ref(e.operand, aliases)
    if isinstance(e, A.Member) and e.arrow:
        return _is_descendant_ref(e.base, aliases)
    return False


def _check_traversal(t: A.TraversalDecl, out: list):
    where = t.label

    def add(code, msg, node):
        out.append(Violation(code, where, msg, node.loc.line))

    aliases: set = set()
    locals_: set = {p.name for p in t.params}

    def body(stmts, top: bool):
        for s in stmts:
            if isinstance(s, A.Traverse) and not top:
                add("NestedTraverse", "traverse statements must be at the top level of a traversal", s)
            elif isinstance(s, A.If):
                body(s.then, False)
                body(s.orelse, False)
            elif isinstance(s, A.AliasDef):
                if s.name in aliases:
                    add("AliasReassigned", f"alias {s.name} is bound more than once", s)
                elif s.name in locals_:
                    add("DuplicateName", f"alias {s.name} clashes with a local", s)
                if not _is_descendant_ref(s.target, aliases):
                    add("AliasNotDescendant", f"alias {s.name} must reference the receiver or a descendant", s)
                aliases.add(s.name)
            elif isinstance(s, A.LocalDef):
                if s.name in locals_ or s.name in aliases:
                    add("DuplicateName", f"local {s.name} is declared more than once", s)
                locals_.add(s.name)
            elif isinstance(s, A.Assign):
                if isinstance(s.target, A.Name) and s.target.ident in aliases:
                    add("AliasReassigned", f"alias {s.target.ident} is assigned", s)
            elif isinstance(s, A.New):
                if s.args:
                    add("NontrivialCtor", f"new {s.kind} passes constructor arguments", s)
            elif isinstance(s, (A.Guard, A.ClearFlags, A.StubCall)):
                add("ExtendedStatement", "fused-only statement inside a traversal", s)

    body(t.body, True)


def _self_call_cycles(h: Hierarchy) -> list:
    """Traversals that can re-enter themselves on the same node without a child step."""
    edges: dict = {}
    for kind in h.kinds:
        for t in h.decls[kind].traversals:
            edges[t.label] = set()
            for s in t.body:
                if isinstance(s, A.Traverse) and s.child is None:
                    for d in call_targets(s, h):
                        edges[t.label].add(d.label)
    bad = []
    for start in edges:
        seen, stack = set(), list(edges[start])
        while stack:
            n = stack.pop()
            if n == start:
                bad.append(start)
                break
            if n not in seen:
                seen.add(n)
                stack.extend(edges.get(n, ()))
    return bad


def validate_program(prog: A.Program) -> ValidationReport:
    """Report every fusion restriction violated by a resolved program."""
    h: Hierarchy = prog.model
    out: list = []
    for n in prog.nodes:
        for t in n.traversals:
            _check_traversal(t, out)
    by_label = {t.label: t for n in prog.nodes for t in n.traversals}
    for label in _self_call_cycles(h):
        t = by_label[label]
        out.append(Violation("SelfCallCycle", label, "self calls may recurse on the same node forever",
                             t.loc.line))
    return ValidationReport(out)

"""Node-kind hierarchy, name resolution, dispatch and labeled call graphs."""

from __future__ import annotations

from collections import Counter
from dataclasses import dataclass, field
from typing import Optional

from . import ast as A
from .errors import CyclicHierarchy, NoCommonSupertype, NoConcreteTarget, ResolutionError

SELF = "SELF"

BUILTINS = {
    "min": 2, "max": 2, "abs": 1, "concat": 2, "length": 1,
}


@dataclass(frozen=True)
class FieldInfo:
    owner: str  # declaring node kind or struct
    name: str
    type: str
    is_child: bool
    sym: str


@dataclass(frozen=True)
class ConcreteFunction:
    kind: str  # concrete receiver kind
    decl: A.TraversalDecl = field(compare=False)
    label: str = ""  # label of the resolved declaration

    def __repr__(self) -> str:
        return f"{self.kind}::{self.label}"


class Hierarchy:
    """Subtype order over node kinds plus member lookup.

    Built once per program; never mutated afterwards.
    """

    def __init__(self, prog: A.Program):
        self.prog = prog
        self.decls: dict[str, A.NodeDecl] = {}
        for n in prog.nodes:
            if n.name in self.decls:
                raise ResolutionError(f"node kind {n.name} declared twice", "DuplicateKind", n.loc.line)
            self.decls[n.name] = n
        self.structs: dict[str, A.StructDecl] = {s.name: s for s in prog.structs}
        for n in prog.nodes:
            for s in n.supers:
                if s not in self.decls:
                    raise ResolutionError(f"unknown super kind {s} of {n.name}", "UnknownKind", n.loc.line)
        self.kinds = [n.name for n in prog.nodes]
        self._ancestors: dict[str, tuple] = {}
        for k in self.kinds:
            self._ancestors[k] = self._compute_ancestors(k, ())
        self.concrete_kinds = [n.name for n in prog.nodes if not n.abstract]
        self._symbols = self._assign_symbols()
        self._field_cache: dict = {}
        self._trav_cache: dict = {}
        self.shadowed: dict[str, list[str]] = {k: self._shadowed(k) for k in self.kinds}

    # -- order ---------------------------------------------------------------

    def _compute_ancestors(self, k: str, stack: tuple) -> tuple:
        if k in stack:
            raise CyclicHierarchy("cyclic inheritance: " + " -> ".join(stack + (k,)))
        if k in self._ancestors:
            return self._ancestors[k]
        out = [k]
        for s in self.decls[k].supers:
            for a in self._compute_ancestors(s, stack + (k,)):
                if a not in out:
                    out.append(a)
        return tuple(out)

    def ancestors(self, k: str) -> tuple:
        """Reflexive-transitive supertypes of ``k``, nearest first."""
        return self._ancestors[k]

    def is_kind(self, name: str) -> bool:
        return name in self.decls

    def subtype(self, a: str, b: str) -> bool:
        return b in self._ancestors[a]

    @property
    def subtype_relation(self) -> set:
        return {(a, b) for a in self.kinds for b in self._ancestors[a]}

    def concrete_subtypes(self, k: str) -> list[str]:
        return [c for c in self.concrete_kinds if self.subtype(c, k)]

    def lub(self, kinds) -> str:
        kinds = list(kinds)
        if not kinds:
            raise NoCommonSupertype("empty kind list")
        common = set(self._ancestors[kinds[0]])
        for k in kinds[1:]:
            common &= set(self._ancestors[k])
        minimal = [c for c in common if not any(d != c and self.subtype(d, c) for d in common)]
        if len(minimal) != 1:
            what = "no" if not minimal else "ambiguous (" + ", ".join(sorted(minimal)) + ")"
            raise NoCommonSupertype(f"{what} common supertype of {', '.join(kinds)}")
        return minimal[0]

    # -- members -------------------------------------------------------------

    def _assign_symbols(self) -> dict:
        counts = Counter()
        for n in self.prog.nodes:
            for f in n.fields:
                counts[f.name] += 1
        for s in self.prog.structs:
            for f in s.fields:
                counts[f.name] += 1
        counts["length"] += 1
        syms = {}
        for n in self.prog.nodes:
            for f in n.fields:
                syms[(n.name, f.name)] = f.name if counts[f.name] == 1 else f"{n.name}::{f.name}"
        for s in self.prog.structs:
            for f in s.fields:
                syms[(s.name, f.name)] = f.name if counts[f.name] == 1 else f"{s.name}::{f.name}"
        syms[("string", "length")] = "length" if counts["length"] == 1 else "string::length"
        return syms

    @property
    def alphabet(self) -> list[str]:
        """Every member symbol in the program (the field alphabet)."""
        return sorted(set(self._symbols.values()))

    def _lookup(self, k: str, name: str, what: str, getter):
        """C++-style lookup: own declaration hides inherited ones."""
        own = getter(self.decls[k], name)
        if own is not None:
            return own
        found = {}
        for s in self.decls[k].supers:
            r = self._lookup(s, name, what, getter)
            if r is not None:
                found[id(r)] = r
        if len(found) > 1:
            raise ResolutionError(f"{what} {name} is ambiguous in {k}", "Ambiguous")
        return next(iter(found.values()), None)

    def field(self, kind: str, name: str) -> Optional[FieldInfo]:
        key = (kind, name)
        if key not in self._field_cache:
            if kind in self.structs:
                info = None
                for f in self.structs[kind].fields:
                    if f.name == name:
                        info = FieldInfo(kind, name, f.type, False, self._symbols[(kind, name)])
            elif kind == "string":
                info = FieldInfo("string", "length", "int", False,
                                 self._symbols[("string", "length")]) if name == "length" else None
            else:
                def get(decl, nm):
                    for f in decl.fields:
                        if f.name == nm:
                            return FieldInfo(decl.name, nm, f.type, f.is_child, self._symbols[(decl.name, nm)])
                    return None
                info = self._lookup(kind, name, "field", get)
            self._field_cache[key] = info
        return self._field_cache[key]

    def all_fields(self, kind: str) -> list[FieldInfo]:
        """Every field stored in a node of ``kind`` (including hidden base fields)."""
        out = []
        for a in reversed(self.ancestors(kind)):
            for f in self.decls[a].fields:
                out.append(FieldInfo(a, f.name, f.type, f.is_child, self._symbols[(a, f.name)]))
        return out

    def field_decl(self, sym: str) -> A.FieldDecl:
        for (owner, name), s in self._symbols.items():
            if s == sym and owner in self.decls:
                for f in self.decls[owner].fields:
                    if f.name == name:
                        return f
        raise KeyError(sym)

    def _shadowed(self, k: str) -> list[str]:
        own = {f.name for f in self.decls[k].fields}
        hidden = []
        for a in self.ancestors(k)[1:]:
            for f in self.decls[a].fields:
                if f.name in own:
                    hidden.append(self._symbols[(a, f.name)])
        return hidden

    def traversal(self, kind: str, name: str) -> Optional[A.TraversalDecl]:
        key = (kind, name)
        if key not in self._trav_cache:
            def get(decl, nm):
                for t in decl.traversals:
                    if t.name == nm:
                        return t
                return None
            self._trav_cache[key] = self._lookup(kind, name, "traversal", get)
        return self._trav_cache[key]

    def families(self, kind: str) -> list[str]:
        names = []
        for a in self.ancestors(kind):
            for t in self.decls[a].traversals:
                if t.name not in names:
                    names.append(t.name)
        return names

    def decl_by_label(self, label: str) -> A.TraversalDecl:
        owner, name = label.split(".", 1)
        for t in self.decls[owner].traversals:
            if t.name == name:
                return t
        raise KeyError(label)


# ----------------------------------------------------------------------------
# dispatch and call graphs


def resolve_hierarchy(prog: A.Program) -> Hierarchy:
    return Hierarchy(prog)


def concrete_targets(call, h: Hierarchy, static_kind: Optional[str] = None) -> list[ConcreteFunction]:
    """Functions a traverse call may dispatch to, one per concrete receiver kind.

    ``call`` is a resolved :class:`~graft.ast.Traverse` (its receiver kind is
    taken from the resolution annotation) or a family name together with
    ``static_kind``.
    """
    if isinstance(call, A.Traverse):
        name, kind = call.name, call.child_kind
    else:
        name, kind = call, static_kind
    kinds = h.concrete_subtypes(kind)
    if not kinds:
        raise NoConcreteTarget(f"kind {kind} has no concrete subtype")
    out = []
    for k in kinds:
        d = h.traversal(k, name)
        out.append(ConcreteFunction(k, d, d.label))
    return out


@dataclass
class LabeledCallGraph:
    root: object
    nodes: list  # distinct TraversalDecl labels, discovery order
    edges: list  # (caller label or None for the root call site, field symbol or SELF, callee label)
    decls: dict

    def successors(self, label):
        return [(lab, dst) for src, lab, dst in self.edges if src == label]

    def to_dot(self) -> str:
        lines = ["digraph callgraph {", '  rankdir=LR;', '  root [shape=point];']
        for n in self.nodes:
            lines.append(f'  "{n}";')
        for src, lab, dst in self.edges:
            s = "root" if src is None else f'"{src}"'
            lines.append(f'  {s} -> "{dst}" [label="{lab}"];')
        lines.append("}")
        return "\n".join(lines) + "\n"


def call_targets(call: A.Traverse, h: Hierarchy) -> list[A.TraversalDecl]:
    """Distinct declarations reachable by dispatching ``call``."""
    seen = []
    for cf in concrete_targets(call, h):
        if all(cf.decl is not d for d in seen):
            seen.append(cf.decl)
    return seen


def build_labeled_call_graph(root: A.Traverse, h: Hierarchy) -> LabeledCallGraph:
    nodes, edges, decls = [], [], {}
    work = []

    def visit(src, call):
        label = call.child_sym if call.child is not None else SELF
        for d in call_targets(call, h):
            edge = (src, label, d.label)
            if edge not in edges:
                edges.append(edge)
            if d.label not in decls:
                decls[d.label] = d
                nodes.append(d.label)
                work.append(d)

    visit(None, root)
    while work:
        d = work.pop(0)
        for s in d.body:
            if isinstance(s, A.Traverse):
                visit(d.label, s)
    return LabeledCallGraph(root, nodes, edges, decls)


# ----------------------------------------------------------------------------
# name resolution


class Scope:
    def __init__(self, parent: Optional["Scope"] = None):
        self.parent = parent
        self.names: dict[str, tuple] = {}

    def lookup(self, name):
        s = self
        while s is not None:
            if name in s.names:
                return s.names[name]
            s = s.parent
        return None

    def bind(self, name, binding, ty):
        self.names[name] = (binding, ty)


ARITH = {"+", "-", "*", "/", "%"}
COMPARE = {"<", "<=", ">", ">=", "==", "!="}
LOGIC = {"&&", "||"}


class Resolver:
    """Annotates a parsed program in place and checks static well-formedness."""

    def __init__(self, prog: A.Program):
        self.prog = prog
        self.h = Hierarchy(prog)
        self.globals = {}
        for g in prog.globals:
            if g.name in self.globals:
                raise ResolutionError(f"global {g.name} declared twice", "Duplicate", g.loc.line)
            self.globals[g.name] = g
        self.pures = {p.name: p for p in prog.pures}
        self.stubs = {s.name: s for s in prog.stubs}
        self.fused = {f.name: f for f in prog.fused}
        self.kind = None  # receiver kind of the traversal being resolved
        self.fused_ctx = False

    def run(self) -> Hierarchy:
        h = self.h
        for p in self.prog.pures:
            if p.builtin not in BUILTINS:
                raise ResolutionError(f"pure function {p.name} bound to unknown builtin {p.builtin}",
                                      "UnknownBuiltin", p.loc.line)
            if len(p.params) != BUILTINS[p.builtin]:
                raise ResolutionError(f"builtin {p.builtin} takes {BUILTINS[p.builtin]} arguments",
                                      "Arity", p.loc.line)
            for prm in p.params:
                self.check_data_type(prm.type, p.loc)
        for s in self.prog.structs:
            for f in s.fields:
                if f.type not in A.PRIMITIVES:
                    raise ResolutionError(f"struct field {s.name}.{f.name} must be primitive",
                                          "BadFieldType", s.loc.line)
        for g in self.prog.globals:
            self.check_data_type(g.type, g.loc)
            if g.init is not None:
                self.expr(g.init, Scope())
        for n in self.prog.nodes:
            for f in n.fields:
                if f.is_child:
                    if not h.is_kind(f.type):
                        raise ResolutionError(f"child {n.name}.{f.name} has unknown kind {f.type}",
                                              "UnknownKind", f.loc.line)
                else:
                    self.check_data_type(f.type, f.loc)
                    if f.init is not None and not isinstance(f.init, A.Const):
                        raise ResolutionError(f"field initializer of {n.name}.{f.name} must be a constant",
                                              "BadInitializer", f.loc.line)
            names = [t.name for t in n.traversals]
            if len(set(names)) != len(names):
                raise ResolutionError(f"duplicate traversal in {n.name}", "Duplicate", n.loc.line)
            for t in n.traversals:
                t.owner = n.name
                self.check_override(n, t)
        for n in self.prog.nodes:
            for t in n.traversals:
                self.traversal(n.name, t)
        for f in self.prog.fused:
            self.fused_decl(f)
        for s in self.prog.stubs:
            self.stub_decl(s)
        self.entry()
        self.prog.model = h
        return h

    def check_data_type(self, ty, loc):
        if ty not in A.PRIMITIVES and ty not in self.h.structs:
            raise ResolutionError(f"unknown data type {ty}", "UnknownType", loc.line)

    def check_override(self, n: A.NodeDecl, t: A.TraversalDecl):
        inherited = []
        for s in n.supers:
            d = self.h.traversal(s, t.name)
            if d is not None:
                inherited.append(d)
        if inherited:
            if not t.override:
                raise ResolutionError(f"{n.name}.{t.name} redefines an inherited traversal without override",
                                      "MissingOverride", t.loc.line)
            for d in inherited:
                if not (d.virtual or d.override):
                    raise ResolutionError(f"{n.name}.{t.name} overrides non-virtual {d.label}",
                                          "NonVirtualOverride", t.loc.line)
                if [p.type for p in d.params] != [p.type for p in t.params]:
                    raise ResolutionError(f"{n.name}.{t.name} does not match the signature of {d.label}",
                                          "SignatureMismatch", t.loc.line)
        elif t.override:
            raise ResolutionError(f"{n.name}.{t.name} is marked override but overrides nothing",
                                  "NothingToOverride", t.loc.line)

    # -- traversals ----------------------------------------------------------

    def traversal(self, kind: str, t: A.TraversalDecl):
        self.kind = kind
        self.fused_ctx = False
        scope = Scope()
        for p in t.params:
            self.check_data_type(p.type, t.loc)
            scope.bind(p.name, "param", p.type)
        self.block(t.body, scope, f"{t.owner}.{t.name}", "")
        self.kind = None

    def fused_decl(self, f: A.FusedDecl):
        if not self.h.is_kind(f.recv_kind):
            raise ResolutionError(f"unknown receiver kind {f.recv_kind}", "UnknownKind", f.loc.line)
        for lab in f.constituents:
            try:
                self.h.decl_by_label(lab)
            except KeyError:
                raise ResolutionError(f"unknown traversal {lab}", "UnknownTraversal", f.loc.line) from None
        if len(f.constituents) > 32:
            raise ResolutionError("more than 32 constituents", "TooManyConstituents", f.loc.line)
        self.kind = None
        self.fused_ctx = True
        scope = Scope()
        scope.bind(f.recv_name, "receiver", f.recv_kind)
        scope.bind("active_flags", "local", "int")
        for p in f.params:
            self.check_data_type(p.type, f.loc)
            scope.bind(p.name, "param", p.type)
        self.block(f.body, scope, None, "")
        self.fused_ctx = False

    def stub_decl(self, s: A.StubDecl):
        h = self.h
        if not h.is_kind(s.base):
            raise ResolutionError(f"unknown stub base {s.base}", "UnknownKind", s.loc.line)
        for fam in s.families:
            if h.traversal(s.base, fam) is None:
                raise ResolutionError(f"{s.base} has no traversal {fam}", "UnknownTraversal", s.loc.line)
        for kind, targets in s.overrides.items():
            if not h.is_kind(kind) or not h.subtype(kind, s.base):
                raise ResolutionError(f"stub override for {kind} outside {s.base}", "UnknownKind", s.loc.line)
            for tg in targets:
                if tg.fused not in self.fused:
                    raise ResolutionError(f"unknown fused function {tg.fused}", "UnknownFused", s.loc.line)

    def entry(self):
        scope = Scope()
        for item in self.prog.entry:
            if isinstance(item, A.Bind):
                if not self.h.is_kind(item.kind):
                    raise ResolutionError(f"unknown kind {item.kind}", "UnknownKind", item.loc.line)
                if item.source is not None:
                    ty = self.expr(item.source, scope)
                    if not self.h.is_kind(ty) or not self.h.subtype(ty, item.kind):
                        raise ResolutionError(f"binding {item.name} is not a {item.kind}", "TypeError",
                                              item.loc.line)
                scope.bind(item.name, "tree", item.kind)
            else:
                b = scope.lookup(item.receiver)
                if b is None or b[0] != "tree":
                    raise ResolutionError(f"unknown tree binding {item.receiver}", "Unresolved", item.loc.line)
                for a in item.args:
                    self.expr(a, Scope())
                if isinstance(item, A.EntryCall):
                    d = self.h.traversal(b[1], item.name)
                    if d is None:
                        raise ResolutionError(f"{b[1]} has no traversal {item.name}", "UnknownTraversal",
                                              item.loc.line)
                    if len(d.params) != len(item.args):
                        raise ResolutionError(f"wrong number of arguments to {item.name}", "Arity",
                                              item.loc.line)
                elif item.stub not in self.stubs:
                    raise ResolutionError(f"unknown stub {item.stub}", "UnknownStub", item.loc.line)

    # -- statements ----------------------------------------------------------

    def block(self, stmts, scope: Scope, label, prefix: str):
        for i, s in enumerate(stmts):
            path = f"{prefix}{i}"
            if label is not None and s.origin is None:
                s.origin = f"{label}:{path}"
            self.stmt(s, scope, label, path)

    def stmt(self, s, scope: Scope, label, path):
        h = self.h
        line = s.loc.line
        if isinstance(s, A.Assign):
            if isinstance(s.target, A.Name):
                b = scope.lookup(s.target.ident)
                if b is not None and b[0] in ("alias", "receiver"):
                    # rebinding an alias; reported by validation
                    s.target.binding, s.target.ty = b
                    self.expr(s.value, scope)
                    return
            ty = self.expr(s.target, scope)
            if isinstance(s.target, A.Member) and s.target.arrow:
                raise ResolutionError("assignment to a child slot outside new/delete", "IllegalChildWrite", line)
            if not self.is_data_access(s.target):
                raise ResolutionError("assignment target must be a data access", "IllegalTarget", line)
            if isinstance(s.target, A.Name) and s.target.binding == "tree":
                raise ResolutionError("assignment to a tree binding", "IllegalTarget", line)
            vty = self.expr(s.value, scope)
            self.check_assignable(ty, vty, line)
        elif isinstance(s, A.If):
            self.expr(s.cond, scope)
            self.block(s.then, Scope(scope), label, f"{path}.t")
            self.block(s.orelse, Scope(scope), label, f"{path}.e")
        elif isinstance(s, A.LocalDef):
            self.check_data_type(s.type, s.loc)
            if s.init is not None:
                self.check_assignable(s.type, self.expr(s.init, scope), line)
            scope.bind(s.name, "local", s.type)
        elif isinstance(s, A.AliasDef):
            if not h.is_kind(s.kind):
                raise ResolutionError(f"unknown kind {s.kind}", "UnknownKind", line)
            ty = self.expr(s.target, scope)
            if not h.is_kind(ty):
                raise ResolutionError(f"alias {s.name} must reference a tree node", "IllegalAlias", line)
            if not (h.subtype(ty, s.kind) or h.subtype(s.kind, ty)):
                raise ResolutionError(f"alias {s.name}: {ty} is unrelated to {s.kind}", "TypeError", line)
            scope.bind(s.name, "alias", s.kind)
        elif isinstance(s, (A.New, A.Delete)):
            self.expr(s.target, scope)
            if not (isinstance(s.target, A.Member) and s.target.arrow):
                raise ResolutionError("new/delete target must be a child slot", "IllegalTarget", line)
            if isinstance(s, A.New):
                if not h.is_kind(s.kind):
                    raise ResolutionError(f"unknown kind {s.kind}", "UnknownKind", line)
                if h.decls[s.kind].abstract:
                    raise ResolutionError(f"cannot allocate abstract kind {s.kind}", "AbstractNew", line)
                if not h.subtype(s.kind, s.target.ty):
                    raise ResolutionError(f"{s.kind} does not fit a {s.target.ty} slot", "TypeError", line)
                for a in s.args:
                    self.expr(a, scope)
        elif isinstance(s, A.PureCallStmt):
            self.expr(s.call, scope)
        elif isinstance(s, A.Return):
            pass
        elif isinstance(s, A.Traverse):
            if self.kind is None:
                raise ResolutionError("plain traverse statements are not allowed in fused functions",
                                      "IllegalTraverse", line)
            if s.child is None:
                recv = self.kind
                s.child_sym = None
            else:
                fi = h.field(self.kind, s.child)
                if fi is None or not fi.is_child:
                    raise ResolutionError(f"{self.kind} has no child {s.child}", "UnknownField", line)
                recv = fi.type
                s.child_sym = fi.sym
            s.child_kind = recv
            d = h.traversal(recv, s.name)
            if d is None:
                raise ResolutionError(f"{recv} has no traversal {s.name}", "UnknownTraversal", line)
            if len(d.params) != len(s.args):
                raise ResolutionError(f"wrong number of arguments to {s.name}", "Arity", line)
            for p, a in zip(d.params, s.args):
                self.check_assignable(p.type, self.expr(a, scope), line)
        elif isinstance(s, A.Guard):
            # guards share the function scope: a constituent's locals stay
            # visible across the guarded blocks it is split into
            self.block(s.body, scope, label, f"{path}.g")
        elif isinstance(s, A.ClearFlags):
            pass
        elif isinstance(s, A.StubCall):
            ty = self.expr(s.receiver, scope)
            if not h.is_kind(ty):
                raise ResolutionError("stub receiver must be a tree node", "TypeError", line)
            s.recv_kind = ty
            if s.stub not in self.stubs:
                raise ResolutionError(f"unknown stub {s.stub}", "UnknownStub", line)
            for _, args in s.members:
                for a in args:
                    self.expr(a, scope)
        else:  # pragma: no cover - parser produces nothing else
            raise ResolutionError(f"unexpected statement {type(s).__name__}", "Internal", line)

    def is_data_access(self, e) -> bool:
        if isinstance(e, A.Name):
            return e.binding in ("local", "param", "global")
        if isinstance(e, A.Member):
            return not e.arrow
        return False

    def check_assignable(self, target_ty, value_ty, line):
        if target_ty == value_ty:
            return
        if target_ty == "float" and value_ty == "int":
            return
        raise ResolutionError(f"cannot assign {value_ty} to {target_ty}", "TypeError", line)

    # -- expressions ---------------------------------------------------------

    def expr(self, e, scope: Scope) -> str:
        ty = self._expr(e, scope)
        e.ty = ty
        return ty

    def _expr(self, e, scope: Scope) -> str:
        h = self.h
        line = e.loc.line
        if isinstance(e, A.Const):
            v = e.value
            if isinstance(v, bool):
                return "bool"
            if isinstance(v, int):
                return "int"
            if isinstance(v, float):
                return "float"
            return "string"
        if isinstance(e, A.This):
            if self.kind is None:
                raise ResolutionError("'this' is not available here", "IllegalThis", line)
            return self.kind
        if isinstance(e, A.Name):
            b = scope.lookup(e.ident)
            if b is None:
                g = self.globals.get(e.ident)
                if g is None:
                    raise ResolutionError(f"unknown name {e.ident}", "Unresolved", line)
                b = ("global", g.type)
            e.binding = b[0]
            return b[1]
        if isinstance(e, A.Member):
            bty = self.expr(e.base, scope)
            if e.arrow:
                if not h.is_kind(bty):
                    raise ResolutionError(f"'->{e.field}' applied to non-node {bty}", "TypeError", line)
                fi = h.field(bty, e.field)
                if fi is None or not fi.is_child:
                    raise ResolutionError(f"{bty} has no child {e.field}", "UnknownField", line)
            else:
                if bty in A.PRIMITIVES and bty != "string":
                    raise ResolutionError(f"'.{e.field}' applied to {bty}", "TypeError", line)
                fi = h.field(bty, e.field)
                if fi is None:
                    raise ResolutionError(f"{bty} has no field {e.field}", "UnknownField", line)
                if fi.is_child:
                    raise ResolutionError(f"child {e.field} must be accessed with '->'", "TypeError", line)
            e.sym = fi.sym
            return fi.type
        if isinstance(e, A.Cast):
            if not h.is_kind(e.kind):
                raise ResolutionError(f"unknown kind {e.kind}", "UnknownKind", line)
            oty = self.expr(e.operand, scope)
            if not h.is_kind(oty):
                raise ResolutionError("cast operand must be a tree node", "TypeError", line)
            return e.kind
        if isinstance(e, A.Binary):
            lt = self.expr(e.left, scope)
            rt = self.expr(e.right, scope)
            if e.op in ARITH:
                if lt in ("int", "float") and rt in ("int", "float"):
                    return "float" if "float" in (lt, rt) else "int"
                raise ResolutionError(f"operator {e.op} on {lt}, {rt}", "TypeError", line)
            if e.op in COMPARE:
                if e.op in ("==", "!=") and lt == rt and lt in A.PRIMITIVES:
                    return "bool"
                if lt in ("int", "float") and rt in ("int", "float"):
                    return "bool"
                raise ResolutionError(f"operator {e.op} on {lt}, {rt}", "TypeError", line)
            if e.op in LOGIC:
                if lt == rt == "bool":
                    return "bool"
                raise ResolutionError(f"operator {e.op} on {lt}, {rt}", "TypeError", line)
            if e.op == "&":
                if lt == rt == "int":
                    return "int"
                raise ResolutionError(f"operator & on {lt}, {rt}", "TypeError", line)
        if isinstance(e, A.Unary):
            t = self.expr(e.operand, scope)
            if e.op == "!" and t == "bool":
                return "bool"
            if e.op == "-" and t in ("int", "float"):
                return t
            raise ResolutionError(f"operator {e.op} on {t}", "TypeError", line)
        if isinstance(e, A.Call):
            p = self.pures.get(e.func)
            if p is None:
                raise ResolutionError(f"unknown pure function {e.func}", "Unresolved", line)
            if len(p.params) != len(e.args):
                raise ResolutionError(f"wrong number of arguments to {e.func}", "Arity", line)
            for prm, a in zip(p.params, e.args):
                self.check_assignable(prm.type, self.expr(a, scope), line)
            return p.ret
        raise ResolutionError(f"unexpected expression {type(e).__name__}", "Internal", line)


def resolve(prog: A.Program) -> Hierarchy:
    """Resolve names and types in ``prog`` (in place); return its hierarchy."""
    return Resolver(prog).run()

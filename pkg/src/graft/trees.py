"""Input trees: a text literal format, seeded generators and tree specs.

Literal format, one node per line, braces delimit children::

    Page PageWidth=600 {
        Content: TextBox Text="ab" Emphasis=true {
            Next: End
        }
        Next: PageEnd
    }

Values are JSON scalars.  Struct members are written ``Border.Size=2``; a
hidden base field is named by its symbol (``Owner::name``).  Child slots that
are not mentioned stay empty.
"""

from __future__ import annotations

import hashlib
import json
import random
import re
from dataclasses import dataclass, field
from typing import Optional

from . import ast as A
from .errors import GraftError, KindMismatch
from .interp import Heap, Node, attach
from .model import Hierarchy

STRING_POOL = ("a", "b", "c", "ab", "")


class TreeSyntaxError(GraftError):
    code = "TreeSyntaxError"


# -- building ------------------------------------------------------------------


class TreeBuilder:
    """Creates nodes with checked kinds and field values."""

    def __init__(self, h: Hierarchy, heap: Optional[Heap] = None):
        self.h = h
        self.heap = heap or Heap(h)

    def node(self, kind: str, **values) -> Node:
        h = self.h
        if not h.is_kind(kind):
            raise KindMismatch(f"unknown node kind {kind}")
        if h.decls[kind].abstract:
            raise KindMismatch(f"cannot instantiate abstract kind {kind}")
        n = self.heap.new(kind)
        for name, v in values.items():
            self.set(n, name, v)
        return n

    def _field(self, n: Node, name: str):
        fi = None
        if "::" in name:
            fi = next((f for f in self.h.all_fields(n.kind) if f.sym == name), None)
        else:
            fi = self.h.field(n.kind, name)
        if fi is None:
            raise KindMismatch(f"{n.kind} has no field {name}")
        return fi

    def set(self, n: Node, name: str, value):
        base, _, member = name.partition(".")
        fi = self._field(n, base)
        if fi.is_child:
            raise KindMismatch(f"{n.kind}.{base} is a child slot, not a data field")
        if member:
            mf = self.h.field(fi.type, member) if fi.type in self.h.structs else None
            if mf is None:
                raise KindMismatch(f"{fi.type} has no member {member}")
            n.fields[fi.sym][mf.sym] = self._coerce(mf.type, value, name)
        else:
            n.fields[fi.sym] = self._coerce(fi.type, value, name)

    def _coerce(self, ty: str, v, name: str):
        ok = {
            "int": type(v) is int,
            "float": type(v) in (int, float),
            "bool": type(v) is bool,
            "string": type(v) is str,
        }.get(ty, False)
        if not ok:
            raise KindMismatch(f"field {name} of type {ty} cannot hold {v!r}")
        return float(v) if ty == "float" else v

    def put(self, parent: Node, slot: str, child: Node):
        fi = self._field(parent, slot)
        if not fi.is_child:
            raise KindMismatch(f"{parent.kind}.{slot} is not a child slot")
        if not self.h.subtype(child.kind, fi.type):
            raise KindMismatch(f"{child.kind} does not fit slot {parent.kind}.{slot} of kind {fi.type}")
        attach(parent, fi.sym, child)
        return child


# -- literal format ------------------------------------------------------------

_HEAD = re.compile(r"^(?:(?P<slot>[A-Za-z_][\w:]*)\s*:\s+)?(?P<kind>[A-Za-z_]\w*)(?P<rest>.*)$")
_ATTR = re.compile(r'\s*(?P<name>[A-Za-z_][\w:]*(?:\.[A-Za-z_]\w*)?)=(?P<value>"(?:[^"\\]|\\.)*"|[^\s"{]+)')


def parse_tree(text: str, h: Hierarchy, heap: Optional[Heap] = None) -> Optional[Node]:
    """Parse a tree literal; an empty literal is the empty tree."""
    b = TreeBuilder(h, heap)
    root = None
    stack: list = []  # open nodes
    for lineno, raw in enumerate(text.splitlines(), 1):
        line = raw.strip()
        if not line or line.startswith("#"):
            continue
        if line == "}":
            if not stack:
                raise TreeSyntaxError(f"line {lineno}: unbalanced '}}'")
            stack.pop()
            continue
        m = _HEAD.match(line)
        if not m:
            raise TreeSyntaxError(f"line {lineno}: expected a node line, found {line!r}")
        rest = m.group("rest").rstrip()
        opens = rest.endswith("{")
        if opens:
            rest = rest[:-1]
        values = {}
        pos = 0
        while pos < len(rest):
            a = _ATTR.match(rest, pos)
            if not a:
                if rest[pos:].strip() == "":
                    break
                raise TreeSyntaxError(f"line {lineno}: bad field assignment near {rest[pos:].strip()!r}")
            try:
                values[a.group("name")] = json.loads(a.group("value"))
            except json.JSONDecodeError:
                raise TreeSyntaxError(f"line {lineno}: bad value {a.group('value')!r}") from None
            pos = a.end()
        node = b.node(m.group("kind"), **values)
        slot = m.group("slot")
        if stack:
            if slot is None:
                raise TreeSyntaxError(f"line {lineno}: child node needs a slot name")
            b.put(stack[-1], slot, node)
        else:
            if root is not None:
                raise TreeSyntaxError(f"line {lineno}: more than one root")
            if slot is not None:
                raise TreeSyntaxError(f"line {lineno}: the root has no slot")
            root = node
        if opens:
            stack.append(node)
    if stack:
        raise TreeSyntaxError("unclosed '{' at end of tree literal")
    return root


def _name_of(h: Hierarchy, kind: str, sym: str) -> str:
    """The shortest name that addresses field ``sym`` of ``kind``."""
    for f in h.all_fields(kind):
        if f.sym == sym:
            nearest = h.field(kind, f.name)
            return f.name if nearest is not None and nearest.sym == sym else sym
    return sym


def format_tree(node: Optional[Node], h: Hierarchy) -> str:
    if node is None:
        return ""
    heap = Heap(h)
    lines: list = []
    stack: list = [(node, None, 0)]  # (node, slot label, depth) or a closing brace
    while stack:
        item = stack.pop()
        if isinstance(item, str):
            lines.append(item)
            continue
        n, slot, depth = item
        pad = "    " * depth
        template = heap.template(n.kind)
        parts = [pad + (f"{slot}: " if slot else "") + n.kind]
        kids = []
        for f in h.all_fields(n.kind):
            v = n.fields.get(f.sym)
            name = _name_of(h, n.kind, f.sym)
            if f.is_child:
                if v is not None:
                    kids.append((v, name, depth + 1))
            elif isinstance(v, dict):
                for m in h.structs[f.type].fields:
                    ms = h.field(f.type, m.name).sym
                    if v.get(ms) != template[f.sym].get(ms):
                        parts.append(f"{name}.{m.name}={json.dumps(v.get(ms), ensure_ascii=False)}")
            elif v != template[f.sym] or type(v) is not type(template[f.sym]):
                parts.append(f"{name}={json.dumps(v, ensure_ascii=False)}")
        if kids:
            lines.append(" ".join(parts) + " {")
            stack.append(pad + "}")
            stack.extend(reversed(kids))
        else:
            lines.append(" ".join(parts))
    return "\n".join(lines) + "\n"


def tree_digest(node: Optional[Node], h: Hierarchy) -> str:
    return hashlib.sha256(format_tree(node, h).encode()).hexdigest()


def tree_size(node: Optional[Node]) -> int:
    return 0 if node is None else node.size()


# -- generic generator ---------------------------------------------------------


def used_slots(h: Hierarchy, kind: str) -> list:
    """Child slots of ``kind`` that its own traversals reach through ``this``.

    Slots no traversal of the kind touches are left empty by the generators,
    which keeps terminator kinds (list ends) leaves.
    """
    syms = set()
    for fam in h.families(kind):
        d = h.traversal(kind, fam)
        for s in A.walk_stmts(d.body):
            if isinstance(s, A.Traverse) and s.child_sym is not None:
                syms.add(s.child_sym)
            for e in A.stmt_exprs(s):
                for x in A.walk_expr(e):
                    if isinstance(x, A.Member) and x.arrow and isinstance(x.base, A.This):
                        syms.add(x.sym)
    return [f for f in h.all_fields(kind) if f.is_child and f.sym in syms]


class RandomTrees:
    """Random trees of (roughly) a target size for any program."""

    def __init__(self, h: Hierarchy):
        self.h = h
        self.slots = {k: used_slots(h, k) for k in h.concrete_kinds}
        inf = float("inf")
        self.min_size = {k: inf for k in h.concrete_kinds}
        changed = True
        while changed:
            changed = False
            for k in h.concrete_kinds:
                s = 1 + sum(self.min_for(f.type) for f in self.slots[k])
                if s < self.min_size[k]:
                    self.min_size[k] = s
                    changed = True

    def min_for(self, kind: str) -> float:
        return min((self.min_size[c] for c in self.h.concrete_subtypes(kind)), default=float("inf"))

    def value(self, ty: str, rng: random.Random):
        if ty == "int":
            return rng.randint(-3, 30)
        if ty == "float":
            return round(rng.uniform(-4, 40), 2)
        if ty == "bool":
            return rng.random() < 0.5
        if ty == "string":
            return rng.choice(STRING_POOL)
        return None

    def fill_data(self, b: TreeBuilder, n: Node, rng: random.Random):
        h = self.h
        for f in h.all_fields(n.kind):
            if f.is_child:
                continue
            if f.type in h.structs:
                for m in h.structs[f.type].fields:
                    mf = h.field(f.type, m.name)
                    if mf.type in A.PRIMITIVES:
                        n.fields[f.sym][mf.sym] = b._coerce(mf.type, self.value(mf.type, rng), m.name)
            elif rng.random() < 0.8:
                n.fields[f.sym] = b._coerce(f.type, self.value(f.type, rng), f.name)

    def generate(self, root: str, size: int, rng: random.Random, heap: Optional[Heap] = None) -> Node:
        h = self.h
        if not h.is_kind(root):
            raise KindMismatch(f"unknown node kind {root}")
        if self.min_for(root) == float("inf"):
            raise KindMismatch(f"no finite tree of kind {root} exists")
        b = TreeBuilder(h, heap)
        budget = max(size, 1) - self.min_for(root)

        def pick(slot_kind: str, open_slots: int) -> str:
            # stop growing with probability others/(others+budget), where
            # others counts the open slots besides this one: the last open
            # slot always grows, so the tree uses up its whole budget
            nonlocal budget
            floor = self.min_for(slot_kind)
            options = [c for c in h.concrete_subtypes(slot_kind) if self.min_size[c] - floor <= budget]
            growing = [c for c in options if self.min_size[c] > floor or self.slots[c]]
            small = [c for c in options if c not in growing]
            if growing and (not small or rng.random() >= (open_slots - 1) / (open_slots - 1 + budget)):
                k = rng.choice(growing)
            else:
                k = rng.choice(small)
            budget -= self.min_size[k] - floor
            return k

        top = b.node(pick(root, 1))
        self.fill_data(b, top, rng)
        stack = [top]
        pending = 0
        while stack:
            n = stack.pop()
            slots = self.slots[n.kind]
            pending += len(slots)
            for f in reversed(slots):
                c = b.node(pick(f.type, pending))
                pending -= 1
                self.fill_data(b, c, rng)
                attach(n, f.sym, c)
                stack.append(c)
        return top


# -- corpus generators ---------------------------------------------------------


class RenderTrees:
    """Documents: a page list whose pages hold (optionally nested) element lists."""

    KINDS = ("PageEnd", "Page", "End", "TextBox", "Image", "Spacer", "HBox", "VBox")
    WORDS = ("lorem", "ipsum", "dolor", "sit", "amet", "tree", "fusion", "page")

    def __init__(self, h: Hierarchy, rng: random.Random, heap: Optional[Heap] = None):
        for k in self.KINDS:
            if k not in h.concrete_kinds:
                raise KindMismatch(f"render trees need concrete kind {k}")
        self.b = TreeBuilder(h, heap)
        self.rng = rng
        self.left = 0

    def text(self) -> str:
        return " ".join(self.rng.choice(self.WORDS) for _ in range(self.rng.randint(1, 6)))

    def leaf(self) -> Node:
        r, b = self.rng, self.b
        x = r.random()
        rel = r.choice((0, 0, 0, 25, 50, 100))
        if x < 0.5:
            return b.node("TextBox", Text=self.text(), Emphasis=r.random() < 0.3, RelWidth=rel)
        if x < 0.75:
            return b.node("Image", ImgWidth=r.randint(0, 400), ImgHeight=r.randint(10, 300), RelWidth=rel)
        return b.node("Spacer", Gap=r.randint(0, 40), RelWidth=rel)

    def elements(self, depth: int, nested: bool) -> Node:
        """An element list ending in End; consumes ``self.left``."""
        r = self.rng
        head = None
        prev = None
        self.left -= 1  # the End
        for _ in range(r.randint(1, 6)):
            if self.left < 1:
                break
            if nested and depth < 3 and self.left >= 3 and r.random() < 0.3:
                n = self.b.node(r.choice(("HBox", "VBox")), Padding=r.randint(0, 6),
                                RelWidth=r.choice((0, 0, 50)))
                self.left -= 1
                self.b.put(n, "Content", self.elements(depth + 1, nested))
            else:
                n = self.leaf()
                self.left -= 1
            if prev is None:
                head = n
            else:
                self.b.put(prev, "Next", n)
            prev = n
        end = self.b.node("End")
        if prev is None:
            return end
        self.b.put(prev, "Next", end)
        return head

    def document(self, pages: Optional[int] = None, size: Optional[int] = None,
                 nested: bool = True) -> Node:
        """``pages`` pages, or as many as fit in ``size`` nodes."""
        if pages is None and size is None:
            pages = 1
        r = self.rng
        budget = None if size is None else size - 1  # the PageEnd
        built = []
        while (pages is None or len(built) < pages) and (budget is None or budget >= 2):
            page = self.b.node("Page", PageWidth=r.choice((400, 600, 800)))
            self.left = r.randint(8, 60) if budget is None else min(budget - 1, r.randint(8, 60))
            before = self.left
            self.b.put(page, "Content", self.elements(0, nested))
            if budget is not None:
                budget -= 1 + before - self.left
            built.append(page)
        out = self.b.node("PageEnd")
        for page in reversed(built):
            self.b.put(page, "Next", out)
            out = page
        return out


# A function body mixing every statement kind; replicated to scale inputs.
REPLICATED_BODY = (
    ("assign", "a", ("lit", 5)),
    ("assign", "b", ("add", ("var", "a"), ("lit", 3))),
    ("inc", "a"),
    ("assign", "c", ("mul", ("var", "b"), ("lit", 2))),
    ("if", ("less", ("var", "b"), ("lit", 10)),
     (("assign", "d", ("sub", ("var", "c"), ("lit", 1))), ("dec", "c")),
     (("assign", "d", ("lit", 0)),)),
    ("assign", "b", ("sub", ("var", "a"), ("var", "b"))),
    ("dec", "d"),
    ("if", ("less", ("lit", 0), ("lit", 1)),
     (("assign", "c", ("add", ("var", "d"), ("var", "a"))),),
     (("assign", "c", ("lit", 1)),)),
    ("return", ("add", ("var", "c"), ("var", "d"))),
)

BINOPS = {"add": "AddExpr", "sub": "SubExpr", "mul": "MulExpr", "less": "LessExpr"}
VARS = ("a", "b", "c", "d")


class AstTrees:
    """Programs: a function list whose bodies are statement lists."""

    KINDS = ("FunctionEnd", "Function", "StmtNil", "StmtCons", "AssignStmt", "IncStmt", "DecStmt",
             "IfStmt", "ReturnStmt", "IntLit", "VarRef", *BINOPS.values())

    def __init__(self, h: Hierarchy, rng: random.Random, heap: Optional[Heap] = None):
        for k in self.KINDS:
            if k not in h.concrete_kinds:
                raise KindMismatch(f"AST trees need concrete kind {k}")
        self.b = TreeBuilder(h, heap)
        self.rng = rng

    # nested-tuple syntax -> nodes
    def expr(self, e) -> Node:
        b = self.b
        if e[0] == "lit":
            return b.node("IntLit", Value=e[1])
        if e[0] == "var":
            return b.node("VarRef", Name=e[1])
        n = b.node(BINOPS[e[0]])
        b.put(n, "Left", self.expr(e[1]))
        b.put(n, "Right", self.expr(e[2]))
        return n

    def stmt(self, s) -> Node:
        b = self.b
        if s[0] == "assign":
            n = b.node("AssignStmt", Var=s[1])
            b.put(n, "Rhs", self.expr(s[2]))
        elif s[0] == "inc":
            n = b.node("IncStmt", Var=s[1])
        elif s[0] == "dec":
            n = b.node("DecStmt", Var=s[1])
        elif s[0] == "if":
            n = b.node("IfStmt")
            b.put(n, "Cond", self.expr(s[1]))
            b.put(n, "Then", self.stmts(s[2]))
            b.put(n, "Else", self.stmts(s[3]))
        elif s[0] == "return":
            n = b.node("ReturnStmt")
            b.put(n, "Value", self.expr(s[1]))
        else:
            raise ValueError(s[0])
        return n

    def stmts(self, ss) -> Node:
        out = self.b.node("StmtNil")
        for s in reversed(ss):
            cons = self.b.node("StmtCons")
            self.b.put(cons, "Head", self.stmt(s))
            self.b.put(cons, "Tail", out)
            out = cons
        return out

    # random programs in the same nested-tuple syntax
    def random_expr(self, depth: int):
        r = self.rng
        if depth <= 0 or r.random() < 0.4:
            return ("lit", r.randint(-2, 12)) if r.random() < 0.5 else ("var", r.choice(VARS))
        return (r.choice(tuple(BINOPS)), self.random_expr(depth - 1), self.random_expr(depth - 1))

    def random_stmts(self, budget: int, depth: int) -> tuple:
        r = self.rng
        out = []
        while budget > 0:
            x = r.random()
            if x < 0.4:
                e = self.random_expr(2)
                s, cost = ("assign", r.choice(VARS), e), 2 + _expr_size(e)
            elif x < 0.55:
                s, cost = ("inc", r.choice(VARS)), 2
            elif x < 0.7:
                s, cost = ("dec", r.choice(VARS)), 2
            elif x < 0.9 and depth < 2 and budget > 8:
                c = self.random_expr(1)
                inner = max(0, (budget - 6) // 3)
                t, f = self.random_stmts(inner, depth + 1), self.random_stmts(inner // 2, depth + 1)
                s = ("if", c, t, f)
                cost = 4 + _expr_size(c) + _stmts_size(t) + _stmts_size(f)
            else:
                e = self.random_expr(1)
                s, cost = ("return", e), 2 + _expr_size(e)
            out.append(s)
            budget -= cost
        return tuple(out)

    def program(self, functions: Optional[int] = None, size: Optional[int] = None,
                body: str = "replicated") -> Node:
        """``functions`` functions, or as many as fit in ``size`` nodes."""
        if body not in ("replicated", "random"):
            raise KindMismatch(f"unknown AST body style {body!r}")
        if functions is None and size is None:
            functions = 1
        left = None if size is None else size - 1  # the FunctionEnd
        fns = []
        while (functions is None or len(fns) < functions) and (left is None or left >= 2):
            if body == "replicated":
                stmts = REPLICATED_BODY
            else:
                cap = 40 if left is None else min(40, left - 2)
                stmts = self.random_stmts(self.rng.randint(0, cap), 0)
            cost = 1 + _stmts_size(stmts)
            if left is not None and cost > left:
                if body == "replicated":
                    break
                stmts, cost = (), 2
            if left is not None:
                left -= cost
            fns.append(stmts)
        out = self.b.node("FunctionEnd")
        for i in reversed(range(len(fns))):
            f = self.b.node("Function", Name=f"f{i}")
            self.b.put(f, "Body", self.stmts(fns[i]))
            self.b.put(f, "Next", out)
            out = f
        return out


def _expr_size(e) -> int:
    return 1 if e[0] in ("lit", "var") else 1 + _expr_size(e[1]) + _expr_size(e[2])


def _stmt_size(s) -> int:
    if s[0] == "assign":
        return 1 + _expr_size(s[2])
    if s[0] in ("inc", "dec"):
        return 1
    if s[0] == "if":
        return 1 + _expr_size(s[1]) + _stmts_size(s[2]) + _stmts_size(s[3])
    return 1 + _expr_size(s[1])


def _stmts_size(ss) -> int:
    return 1 + sum(1 + _stmt_size(s) for s in ss)


# -- specs ---------------------------------------------------------------------

GENERATORS = ("render", "ast", "random")


@dataclass
class TreeSpec:
    """Either a literal tree or a generator with its parameters and seed."""

    literal: Optional[str] = None
    generator: Optional[str] = None
    params: dict = field(default_factory=dict)
    seed: int = 0

    @staticmethod
    def from_json(obj: dict) -> "TreeSpec":
        if not isinstance(obj, dict):
            raise TreeSyntaxError("a tree spec must be a JSON object")
        if "literal" in obj:
            return TreeSpec(literal=obj["literal"])
        gen = obj.get("generator")
        if gen not in GENERATORS:
            raise TreeSyntaxError(f"unknown tree generator {gen!r}; expected one of {', '.join(GENERATORS)}")
        params = {k: v for k, v in obj.items() if k not in ("generator", "seed")}
        return TreeSpec(generator=gen, params=params, seed=int(obj.get("seed", 0)))

    def to_json(self) -> dict:
        if self.literal is not None:
            return {"literal": self.literal}
        return {"generator": self.generator, **self.params, "seed": self.seed}

    def with_seed(self, seed: Optional[int]) -> "TreeSpec":
        if seed is None or self.literal is not None:
            return self
        return TreeSpec(generator=self.generator, params=dict(self.params), seed=seed)


def materialize_tree(spec: TreeSpec, h: Hierarchy, heap: Optional[Heap] = None) -> Optional[Node]:
    """Build the tree a spec describes; a pure function of the spec."""
    if spec.literal is not None:
        return parse_tree(spec.literal, h, heap)
    rng = random.Random(spec.seed)
    p = dict(spec.params)
    known = {"render": ("pages", "size", "nested"), "ast": ("functions", "size", "body"),
             "random": ("root", "size")}.get(spec.generator)
    if known is None:
        raise TreeSyntaxError(f"unknown tree generator {spec.generator!r}")
    extra = sorted(set(p) - set(known))
    if extra:
        raise TreeSyntaxError(f"unknown {spec.generator} generator parameters: {', '.join(extra)}")
    if spec.generator == "render":
        return RenderTrees(h, rng, heap).document(p.get("pages"), p.get("size"), p.get("nested", True))
    if spec.generator == "ast":
        return AstTrees(h, rng, heap).program(p.get("functions"), p.get("size"), p.get("body", "replicated"))
    return RandomTrees(h).generate(p.get("root") or _entry_kind(h), p.get("size", 20), rng, heap)


def _entry_kind(h: Hierarchy) -> str:
    for item in h.prog.entry:
        if isinstance(item, A.Bind) and item.source is None:
            return item.kind
    raise KindMismatch("the program binds no input tree")


def default_spec(h: Hierarchy, size: Optional[int] = None, seed: int = 0) -> TreeSpec:
    """A generator spec matching the program's input kind."""
    kinds = set(h.concrete_kinds)
    if set(RenderTrees.KINDS) <= kinds:
        return TreeSpec(generator="render", params={"size": size or 60}, seed=seed)
    if set(AstTrees.KINDS) <= kinds:
        return TreeSpec(generator="ast", params={"size": size or 60, "body": "random"}, seed=seed)
    return TreeSpec(generator="random", params={"size": size or 30}, seed=seed)

"""Syntax tree for traversal programs.

Nodes are plain dataclasses.  Structural equality ignores source locations and
the annotations filled in by name resolution (``sym``, ``ty`` and friends), so
two parses of equivalent text compare equal.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Optional, Union

PRIMITIVES = ("int", "float", "bool", "string")


@dataclass(frozen=True)
class Loc:
    line: int = 0
    col: int = 0


NOLOC = Loc()


def _loc():
    return field(default=NOLOC, compare=False, repr=False)


def _ann(default=None):
    return field(default=default, compare=False, repr=False)


# ----------------------------------------------------------------------------
# expressions


@dataclass(eq=True)
class Const:
    value: Union[int, float, bool, str]
    loc: Loc = _loc()
    ty: Optional[str] = _ann()


@dataclass(eq=True)
class This:
    loc: Loc = _loc()
    ty: Optional[str] = _ann()


@dataclass(eq=True)
class Name:
    """A bare identifier: local, parameter, alias, receiver variable or global."""

    ident: str
    loc: Loc = _loc()
    ty: Optional[str] = _ann()
    binding: Optional[str] = _ann()  # 'local' | 'param' | 'alias' | 'receiver' | 'global' | 'tree'


@dataclass(eq=True)
class Member:
    """``base->field`` (child step, ``arrow``) or ``base.field`` (data step)."""

    base: "Expr"
    field: str
    arrow: bool
    loc: Loc = _loc()
    ty: Optional[str] = _ann()
    sym: Optional[str] = _ann()


@dataclass(eq=True)
class Cast:
    kind: str
    operand: "Expr"
    loc: Loc = _loc()
    ty: Optional[str] = _ann()


@dataclass(eq=True)
class Binary:
    op: str
    left: "Expr"
    right: "Expr"
    loc: Loc = _loc()
    ty: Optional[str] = _ann()


@dataclass(eq=True)
class Unary:
    op: str
    operand: "Expr"
    loc: Loc = _loc()
    ty: Optional[str] = _ann()


@dataclass(eq=True)
class Call:
    """Call of a declared pure function."""

    func: str
    args: list
    loc: Loc = _loc()
    ty: Optional[str] = _ann()


Expr = Union[Const, This, Name, Member, Cast, Binary, Unary, Call]


# ----------------------------------------------------------------------------
# statements


@dataclass(eq=True)
class Assign:
    target: Expr
    value: Expr
    loc: Loc = _loc()
    origin: Optional[str] = _ann()


@dataclass(eq=True)
class If:
    cond: Expr
    then: list
    orelse: list
    loc: Loc = _loc()
    origin: Optional[str] = _ann()


@dataclass(eq=True)
class LocalDef:
    type: str
    name: str
    init: Optional[Expr] = None
    loc: Loc = _loc()
    origin: Optional[str] = _ann()


@dataclass(eq=True)
class AliasDef:
    kind: str
    name: str
    target: Expr
    loc: Loc = _loc()
    origin: Optional[str] = _ann()


@dataclass(eq=True)
class New:
    target: Expr
    kind: str
    args: list = field(default_factory=list)
    loc: Loc = _loc()
    origin: Optional[str] = _ann()


@dataclass(eq=True)
class Delete:
    target: Expr
    loc: Loc = _loc()
    origin: Optional[str] = _ann()


@dataclass(eq=True)
class PureCallStmt:
    call: Call
    loc: Loc = _loc()
    origin: Optional[str] = _ann()


@dataclass(eq=True)
class Return:
    loc: Loc = _loc()
    origin: Optional[str] = _ann()


@dataclass(eq=True)
class Traverse:
    """``this->f(args)`` (``child is None``) or ``this->child->f(args)``."""

    child: Optional[str]
    name: str
    args: list
    loc: Loc = _loc()
    origin: Optional[str] = _ann()
    child_sym: Optional[str] = _ann()
    child_kind: Optional[str] = _ann()  # static kind of the receiver


# statements that only appear in fused (extended) programs


@dataclass(eq=True)
class Guard:
    """``if (active_flags & mask) { body }``."""

    mask: int
    body: list
    loc: Loc = _loc()
    origin: Optional[str] = _ann()


@dataclass(eq=True)
class ClearFlags:
    """``active_flags &= ~mask;`` -- a constituent's ``return``."""

    mask: int
    loc: Loc = _loc()
    origin: Optional[str] = _ann()


@dataclass(eq=True)
class StubCall:
    """Grouped call through a dispatch stub.

    ``members`` holds one ``(caller_bit, args)`` pair per callee constituent, in
    callee order.  Member ``j`` is active iff bit ``caller_bit`` of the caller's
    ``active_flags`` is set.
    """

    receiver: Expr
    stub: str
    members: list
    loc: Loc = _loc()
    origin: Optional[str] = _ann()
    recv_kind: Optional[str] = _ann()


Stmt = Union[Assign, If, LocalDef, AliasDef, New, Delete, PureCallStmt, Return, Traverse,
             Guard, ClearFlags, StubCall]

SIMPLE_STMTS = (Assign, If, LocalDef, AliasDef, New, Delete, PureCallStmt, Return)


# ----------------------------------------------------------------------------
# declarations


@dataclass(eq=True)
class Param:
    type: str
    name: str


@dataclass(eq=True)
class FieldDecl:
    type: str
    name: str
    is_child: bool = False
    init: Optional[Expr] = None
    loc: Loc = _loc()


@dataclass(eq=True)
class TraversalDecl:
    name: str
    params: list
    body: list
    virtual: bool = False
    override: bool = False
    loc: Loc = _loc()
    owner: Optional[str] = _ann()

    @property
    def label(self) -> str:
        return f"{self.owner}.{self.name}"


@dataclass(eq=True)
class NodeDecl:
    name: str
    supers: list
    fields: list
    traversals: list
    abstract: bool = False
    loc: Loc = _loc()

    @property
    def children(self):
        return [f for f in self.fields if f.is_child]

    @property
    def data_fields(self):
        return [f for f in self.fields if not f.is_child]


@dataclass(eq=True)
class StructDecl:
    name: str
    fields: list  # list[Param]
    loc: Loc = _loc()


@dataclass(eq=True)
class GlobalDecl:
    type: str
    name: str
    init: Optional[Expr] = None
    loc: Loc = _loc()


@dataclass(eq=True)
class PureDecl:
    name: str
    params: list
    ret: str
    builtin: str
    loc: Loc = _loc()


@dataclass(eq=True)
class FusedDecl:
    name: str
    recv_kind: str
    recv_name: str
    params: list
    constituents: list  # decl labels, bit i = constituents[i]
    body: list
    loc: Loc = _loc()


@dataclass(eq=True)
class StubTarget:
    fused: str
    members: list  # indices into the stub's families


@dataclass(eq=True)
class StubDecl:
    name: str
    params: list
    families: list
    base: str
    overrides: dict  # concrete kind -> list[StubTarget]
    loc: Loc = _loc()


# entry


@dataclass(eq=True)
class Bind:
    name: str
    kind: str
    source: Optional[Expr] = None  # None means the input tree
    loc: Loc = _loc()


@dataclass(eq=True)
class EntryCall:
    receiver: str
    name: str
    args: list
    loc: Loc = _loc()


@dataclass(eq=True)
class EntryStubCall:
    receiver: str
    stub: str
    mask: int
    args: list
    loc: Loc = _loc()


@dataclass(eq=True)
class Program:
    structs: list = field(default_factory=list)
    globals: list = field(default_factory=list)
    pures: list = field(default_factory=list)
    nodes: list = field(default_factory=list)
    fused: list = field(default_factory=list)
    stubs: list = field(default_factory=list)
    entry: list = field(default_factory=list)
    origin: str = field(default="<literal>", compare=False)
    model: object = field(default=None, compare=False, repr=False)

    def node(self, name: str) -> NodeDecl:
        for n in self.nodes:
            if n.name == name:
                return n
        raise KeyError(name)

    @property
    def is_fused(self) -> bool:
        return bool(self.fused or self.stubs)


def is_simple(stmt) -> bool:
    return isinstance(stmt, SIMPLE_STMTS)


def may_return(stmt) -> bool:
    """True if executing ``stmt`` may run a ``return``."""
    if isinstance(stmt, Return):
        return True
    if isinstance(stmt, If):
        return any(may_return(s) for s in stmt.then) or any(may_return(s) for s in stmt.orelse)
    return False


def walk_stmts(stmts):
    """Yield every statement, descending into branches and guards."""
    for s in stmts:
        yield s
        if isinstance(s, If):
            yield from walk_stmts(s.then)
            yield from walk_stmts(s.orelse)
        elif isinstance(s, Guard):
            yield from walk_stmts(s.body)


def walk_expr(e):
    yield e
    if isinstance(e, Member):
        yield from walk_expr(e.base)
    elif isinstance(e, Cast):
        yield from walk_expr(e.operand)
    elif isinstance(e, Binary):
        yield from walk_expr(e.left)
        yield from walk_expr(e.right)
    elif isinstance(e, Unary):
        yield from walk_expr(e.operand)
    elif isinstance(e, Call):
        for a in e.args:
            yield from walk_expr(a)


def stmt_exprs(s) -> list:
    """The expressions written directly in ``s`` (not in nested statements)."""
    if isinstance(s, Assign):
        return [s.target, s.value]
    if isinstance(s, If):
        return [s.cond]
    if isinstance(s, LocalDef):
        return [] if s.init is None else [s.init]
    if isinstance(s, AliasDef):
        return [s.target]
    if isinstance(s, New):
        return [s.target, *s.args]
    if isinstance(s, Delete):
        return [s.target]
    if isinstance(s, PureCallStmt):
        return [s.call]
    if isinstance(s, Traverse):
        return list(s.args)
    if isinstance(s, StubCall):
        return [s.receiver] + [a for _, args in s.members for a in args]
    return []

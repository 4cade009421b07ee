"""Turn fusion units into fused functions, dispatch stubs and a new entry block."""

from __future__ import annotations

from . import ast as A
from .fusion import FusionResult, FusionUnit, fused_name
from .model import resolve
from .parser import parse_program
from .printer import print_program

RECV = "_r"


def recv_alias(i: int) -> str:
    return f"_r_f{i}"


def local_name(i: int, name: str) -> str:
    return f"_f{i}_{name}"


class Renamer:
    """Rewrites a constituent's expressions into the fused function's frame."""

    def __init__(self, i: int):
        self.i = i

    def expr(self, e):
        if isinstance(e, A.Const):
            return A.Const(e.value, e.loc)
        if isinstance(e, A.This):
            return A.Name(recv_alias(self.i), e.loc)
        if isinstance(e, A.Name):
            if e.binding == "global":
                return A.Name(e.ident, e.loc)
            return A.Name(local_name(self.i, e.ident), e.loc)
        if isinstance(e, A.Member):
            return A.Member(self.expr(e.base), e.field, e.arrow, e.loc)
        if isinstance(e, A.Cast):
            return A.Cast(e.kind, self.expr(e.operand), e.loc)
        if isinstance(e, A.Binary):
            return A.Binary(e.op, self.expr(e.left), self.expr(e.right), e.loc)
        if isinstance(e, A.Unary):
            return A.Unary(e.op, self.expr(e.operand), e.loc)
        if isinstance(e, A.Call):
            return A.Call(e.func, [self.expr(a) for a in e.args], e.loc)
        raise TypeError(e)

    def stmt(self, s):
        """Lower one statement; ``return`` becomes clearing this constituent's bit."""
        bit = 1 << self.i
        if isinstance(s, A.Return):
            out = A.ClearFlags(bit, s.loc)
        elif isinstance(s, A.Assign):
            out = A.Assign(self.expr(s.target), self.expr(s.value), s.loc)
        elif isinstance(s, A.If):
            out = A.If(self.expr(s.cond), self.branch(s.then), self.branch(s.orelse), s.loc)
        elif isinstance(s, A.LocalDef):
            init = self.expr(s.init) if s.init is not None else None
            out = A.LocalDef(s.type, local_name(self.i, s.name), init, s.loc)
        elif isinstance(s, A.AliasDef):
            out = A.AliasDef(s.kind, local_name(self.i, s.name), self.expr(s.target), s.loc)
        elif isinstance(s, A.New):
            out = A.New(self.expr(s.target), s.kind, [self.expr(a) for a in s.args], s.loc)
        elif isinstance(s, A.Delete):
            out = A.Delete(self.expr(s.target), s.loc)
        elif isinstance(s, A.PureCallStmt):
            out = A.PureCallStmt(self.expr(s.call), s.loc)
        else:
            raise TypeError(f"cannot lower {type(s).__name__}")
        out.origin = s.origin
        return out

    def branch(self, stmts) -> list:
        out = []
        for k, s in enumerate(stmts):
            out.append(self.stmt(s))
            if isinstance(s, A.Return):
                break  # the rest of the branch is dead
            if A.may_return(s):
                rest = self.branch(stmts[k + 1:])
                if rest:
                    out.append(A.Guard(1 << self.i, rest))
                break
        return out


def emit_fused_function(u: FusionUnit, stubs: dict) -> A.FusedDecl:
    g = u.graph
    params = [A.Param(p.type, local_name(i, p.name)) for i, p in u.param_layout()]
    body: list = []
    for i, d in enumerate(u.decls):
        body.append(A.AliasDef(d.owner, recv_alias(i), A.Cast(d.owner, A.Name(RECV))))
    groups = {tuple(cg.members): cg for cg in u.groups}
    block = None  # (origin, Guard) currently being filled
    for kind, item in u.order:
        if kind == "group":
            block = None
            cg = groups[tuple(item)]
            vs = [g.vertices[i] for i in item]
            first = vs[0]
            if first.stmt.child is None:
                recv = A.Name(RECV)
            else:
                recv = A.Member(A.Name(recv_alias(first.origin)), first.stmt.child, True)
            members = [(v.origin, [Renamer(v.origin).expr(a) for a in v.stmt.args]) for v in vs]
            body.append(A.StubCall(recv, cg.stub, members))
            continue
        v = g.vertices[item]
        lowered = Renamer(v.origin).branch([v.stmt])
        if block is None or block[0] != v.origin:
            guard = A.Guard(1 << v.origin, [])
            body.append(guard)
            block = (v.origin, guard)
        block[1].body.extend(lowered)
        if A.may_return(v.stmt):
            block = None
    return A.FusedDecl(u.name, u.receiver_kind, RECV, params, list(u.key), body)


def emit_stubs(result: FusionResult) -> list:
    out = []
    for st in result.stubs.values():
        overrides = {}
        for kind, targets in st.overrides.items():
            overrides[kind] = [A.StubTarget(fused_name(key), list(idx)) for key, idx in targets]
        out.append(A.StubDecl(st.name, list(st.params), list(st.families), st.base, overrides))
    return out


def emit_program(result: FusionResult) -> A.Program:
    """The fused program as an (unresolved) syntax tree."""
    src = result.program
    stubs = {st.name: st for st in result.stubs.values()}
    fused = [emit_fused_function(u, stubs) for u in result.units.values()]
    return A.Program(src.structs, src.globals, src.pures, src.nodes, fused, emit_stubs(result),
                     result.entry, src.origin)


def pretty_print_program(result: FusionResult) -> str:
    return print_program(emit_program(result))


def fused_program(result: FusionResult) -> A.Program:
    """The fused program re-parsed from its printed form and resolved."""
    prog = parse_program(pretty_print_program(result), result.program.origin + " (fused)")
    resolve(prog)
    return prog

"""Deterministic pretty-printer for plain and fused programs.

Output re-parses to a structurally identical program, and printing the
re-parsed program again yields the same bytes.
"""

from __future__ import annotations

from decimal import Decimal

from . import ast as A

INDENT = "    "

BINARY_PREC = {
    "||": 1, "&&": 2, "&": 3, "==": 4, "!=": 4,
    "<": 5, "<=": 5, ">": 5, ">=": 5, "+": 6, "-": 6, "*": 7, "/": 7, "%": 7,
}
UNARY_PREC = 8


def _float(v: float) -> str:
    text = format(Decimal(v), "f")
    return text if "." in text else text + ".0"


def _string(v: str) -> str:
    body = v.replace("\\", "\\\\").replace('"', '\\"').replace("\n", "\\n").replace("\t", "\\t")
    return f'"{body}"'


def bits(mask: int) -> str:
    return bin(mask)


def expr(e, prec: int = 0) -> str:
    if isinstance(e, A.Const):
        v = e.value
        if isinstance(v, bool):
            return "true" if v else "false"
        if isinstance(v, int):
            return str(v)
        if isinstance(v, float):
            return _float(v)
        return _string(v)
    if isinstance(e, A.This):
        return "this"
    if isinstance(e, A.Name):
        return e.ident
    if isinstance(e, A.Member):
        return expr(e.base, UNARY_PREC + 1) + ("->" if e.arrow else ".") + e.field
    if isinstance(e, A.Cast):
        return f"cast<{e.kind}>({expr(e.operand)})"
    if isinstance(e, A.Call):
        return f"{e.func}({', '.join(expr(a) for a in e.args)})"
    if isinstance(e, A.Unary):
        text = e.op + expr(e.operand, UNARY_PREC)
        return f"({text})" if prec > UNARY_PREC else text
    if isinstance(e, A.Binary):
        p = BINARY_PREC[e.op]
        text = f"{expr(e.left, p)} {e.op} {expr(e.right, p + 1)}"
        return f"({text})" if prec > p else text
    raise TypeError(f"not an expression: {e!r}")


def _args(args) -> str:
    return "(" + ", ".join(expr(a) for a in args) + ")"


class Printer:
    def __init__(self, origins: bool = False):
        self.origins = origins
        self.lines: list = []
        self.depth = 0

    def emit(self, text: str):
        self.lines.append(INDENT * self.depth + text)

    def block(self, stmts):
        self.depth += 1
        for s in stmts:
            self.stmt(s)
        self.depth -= 1

    def stmt(self, s):
        tag = f"@{_string(s.origin)} " if self.origins and s.origin else ""
        if isinstance(s, A.Assign):
            self.emit(f"{tag}{expr(s.target)} = {expr(s.value)};")
        elif isinstance(s, A.If):
            self.emit(f"{tag}if ({expr(s.cond)}) {{")
            self.block(s.then)
            if s.orelse:
                self.emit("} else {")
                self.block(s.orelse)
            self.emit("}")
        elif isinstance(s, A.LocalDef):
            init = f" = {expr(s.init)}" if s.init is not None else ""
            self.emit(f"{tag}{s.type} {s.name}{init};")
        elif isinstance(s, A.AliasDef):
            self.emit(f"{tag}alias {s.kind} {s.name} = {expr(s.target)};")
        elif isinstance(s, A.New):
            self.emit(f"{tag}{expr(s.target)} = new {s.kind}{_args(s.args)};")
        elif isinstance(s, A.Delete):
            self.emit(f"{tag}delete {expr(s.target)};")
        elif isinstance(s, A.PureCallStmt):
            self.emit(f"{tag}{expr(s.call)};")
        elif isinstance(s, A.Return):
            self.emit(f"{tag}return;")
        elif isinstance(s, A.Traverse):
            recv = "this" if s.child is None else f"this->{s.child}"
            self.emit(f"{tag}{recv}->{s.name}{_args(s.args)};")
        elif isinstance(s, A.Guard):
            self.emit(f"{tag}if (active_flags & {bits(s.mask)}) {{")
            self.block(s.body)
            self.emit("}")
        elif isinstance(s, A.ClearFlags):
            self.emit(f"{tag}active_flags &= ~{bits(s.mask)};")
        elif isinstance(s, A.StubCall):
            members = " ".join(f"[{bit}]{_args(args)}" for bit, args in s.members)
            self.emit(f"{tag}stubcall {expr(s.receiver, UNARY_PREC + 1)}->{s.stub} {members};")
        else:
            raise TypeError(f"not a statement: {s!r}")

    def program(self, p: A.Program) -> str:
        for s in p.structs:
            self.emit(f"struct {s.name} {{")
            self.depth += 1
            for f in s.fields:
                self.emit(f"{f.type} {f.name};")
            self.depth -= 1
            self.emit("}")
            self.emit("")
        for g in p.globals:
            init = f" = {expr(g.init)}" if g.init is not None else ""
            self.emit(f"global {g.type} {g.name}{init};")
        for f in p.pures:
            self.emit(f"pure {f.ret} {f.name}({_params(f.params)}) = {f.builtin};")
        if p.globals or p.pures:
            self.emit("")
        for n in p.nodes:
            self.node(n)
            self.emit("")
        saved = self.origins
        self.origins = True
        for f in p.fused:
            self.fused(f)
            self.emit("")
        self.origins = saved
        for s in p.stubs:
            self.stub(s)
            self.emit("")
        if p.entry:
            self.emit("main {")
            self.depth += 1
            for item in p.entry:
                self.entry(item)
            self.depth -= 1
            self.emit("}")
        while self.lines and self.lines[-1] == "":
            self.lines.pop()
        return "\n".join(self.lines) + "\n"

    def node(self, n: A.NodeDecl):
        head = ("abstract " if n.abstract else "") + f"node {n.name}"
        if n.supers:
            head += " : " + ", ".join(n.supers)
        self.emit(head + " {")
        self.depth += 1
        for f in n.fields:
            if f.is_child:
                self.emit(f"child {f.type} {f.name};")
            else:
                init = f" = {expr(f.init)}" if f.init is not None else ""
                self.emit(f"{f.type} {f.name}{init};")
        for t in n.traversals:
            mod = "virtual " if t.virtual else ""
            mod += "override " if t.override else ""
            self.emit(f"{mod}traversal {t.name}({_params(t.params)}) {{")
            self.block(t.body)
            self.emit("}")
        self.depth -= 1
        self.emit("}")

    def fused(self, f: A.FusedDecl):
        params = "".join(f", {p.type} {p.name}" for p in f.params)
        self.emit(f"// {' + '.join(f.constituents)}")
        self.emit(f"fused {f.name}({f.recv_kind} {f.recv_name}{params}) [{', '.join(f.constituents)}] {{")
        self.block(f.body)
        self.emit("}")

    def stub(self, s: A.StubDecl):
        self.emit(f"stub {s.name}({_params(s.params)}) for [{', '.join(s.families)}] on {s.base} {{")
        self.depth += 1
        full = list(range(len(s.families)))
        for kind, targets in s.overrides.items():
            parts = []
            for t in targets:
                idx = "" if t.members == full else "[" + ", ".join(map(str, t.members)) + "]"
                parts.append(t.fused + idx)
            self.emit(f"{kind} => {', '.join(parts)};")
        self.depth -= 1
        self.emit("}")

    def entry(self, item):
        if isinstance(item, A.Bind):
            src = "input" if item.source is None else expr(item.source)
            self.emit(f"let {item.kind} {item.name} = {src};")
        elif isinstance(item, A.EntryCall):
            self.emit(f"{item.receiver}->{item.name}{_args(item.args)};")
        else:
            self.emit(f"{item.receiver}->{item.stub}<{bits(item.mask)}>{_args(item.args)};")


def _params(params) -> str:
    return ", ".join(f"{p.type} {p.name}" for p in params)


def print_program(p: A.Program, origins: bool = False) -> str:
    """Render ``p`` as ``.tg`` source."""
    return Printer(origins).program(p)


def print_stmts(stmts, origins: bool = False) -> str:
    pr = Printer(origins)
    for s in stmts:
        pr.stmt(s)
    return "\n".join(pr.lines) + "\n"

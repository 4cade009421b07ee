"""Recursive-descent parser for ``.tg`` traversal programs.

The same parser accepts the extended dialect produced by fusion (``fused``
and ``stub`` declarations, activity guards, ``stubcall`` statements and
``@"origin"`` tags), so fused output can be fed straight back into ``run``.
"""

from __future__ import annotations

import re
from dataclasses import dataclass
from pathlib import Path

from . import ast as A
from .errors import GraftSyntaxError

KEYWORDS = {
    "node", "abstract", "child", "virtual", "override", "traversal", "struct",
    "global", "pure", "main", "let", "input", "if", "else", "return", "delete",
    "new", "alias", "this", "cast", "true", "false", "fused", "stub", "for",
    "on", "stubcall",
}

TOKEN_RE = re.compile(r"""
    (?P<ws>[ \t\r\n]+)
  | (?P<comment>//[^\n]*)
  | (?P<float>\d+\.\d+)
  | (?P<bin>0b[01]+)
  | (?P<hex>0x[0-9a-fA-F]+)
  | (?P<int>\d+)
  | (?P<string>"(?:[^"\\\n]|\\.)*")
  | (?P<ident>[A-Za-z_][A-Za-z0-9_]*)
  | (?P<op>->|=>|==|!=|<=|>=|&&|\|\||&=|[-+*/%<>=!&~;,.(){}\[\]:@])
""", re.VERBOSE)


ESCAPES = {"n": "\n", "t": "\t", '"': '"', "\\": "\\"}


def _unescape(body: str) -> str:
    return re.sub(r"\\(.)", lambda m: ESCAPES.get(m.group(1), m.group(1)), body)


@dataclass
class Token:
    kind: str  # 'int' 'float' 'string' 'ident' 'kw' 'op' 'eof'
    text: str
    value: object
    line: int
    col: int


def tokenize(text: str) -> list[Token]:
    tokens = []
    pos = 0
    line, line_start = 1, 0
    while pos < len(text):
        m = TOKEN_RE.match(text, pos)
        if not m:
            raise GraftSyntaxError(f"unexpected character {text[pos]!r}", line, pos - line_start + 1)
        kind = m.lastgroup
        tok = m.group()
        col = pos - line_start + 1
        if kind in ("ws", "comment"):
            pass
        elif kind == "float":
            tokens.append(Token("float", tok, float(tok), line, col))
        elif kind in ("int", "bin", "hex"):
            tokens.append(Token("int", tok, int(tok, 0), line, col))
        elif kind == "string":
            value = _unescape(tok[1:-1])
            tokens.append(Token("string", tok, value, line, col))
        elif kind == "ident":
            tokens.append(Token("kw" if tok in KEYWORDS else "ident", tok, tok, line, col))
        else:
            tokens.append(Token("op", tok, tok, line, col))
        nl = tok.count("\n")
        if nl:
            line += nl
            line_start = pos + tok.rfind("\n") + 1
        pos = m.end()
    tokens.append(Token("eof", "", None, line, pos - line_start + 1))
    return tokens


# binary operator precedence, loosest first
PRECEDENCE = [
    ("||",),
    ("&&",),
    ("&",),
    ("==", "!="),
    ("<", "<=", ">", ">="),
    ("+", "-"),
    ("*", "/", "%"),
]


class Parser:
    def __init__(self, text: str):
        self.toks = tokenize(text)
        self.i = 0
        self.in_fused = False

    # -- token helpers -------------------------------------------------------

    @property
    def tok(self) -> Token:
        return self.toks[self.i]

    def peek(self, k: int = 1) -> Token:
        return self.toks[min(self.i + k, len(self.toks) - 1)]

    def at(self, text: str) -> bool:
        t = self.tok
        return t.kind in ("op", "kw") and t.text == text

    def accept(self, text: str) -> bool:
        if self.at(text):
            self.i += 1
            return True
        return False

    def error(self, expected: str):
        t = self.tok
        found = "end of input" if t.kind == "eof" else repr(t.text)
        raise GraftSyntaxError(f"expected {expected}, found {found}", t.line, t.col, expected)

    def expect(self, text: str) -> Token:
        if not self.at(text):
            self.error(repr(text))
        t = self.tok
        self.i += 1
        return t

    def ident(self) -> str:
        t = self.tok
        if t.kind != "ident":
            self.error("identifier")
        self.i += 1
        return t.text

    def loc(self) -> A.Loc:
        return A.Loc(self.tok.line, self.tok.col)

    def int_lit(self) -> int:
        t = self.tok
        if t.kind != "int":
            self.error("integer")
        self.i += 1
        return t.value

    def type_name(self) -> str:
        t = self.tok
        if t.kind == "ident":
            self.i += 1
            return t.text
        self.error("type name")

    # -- program -------------------------------------------------------------

    def program(self) -> A.Program:
        prog = A.Program()
        if self.tok.kind == "eof":
            self.error("declaration")
        while self.tok.kind != "eof":
            if self.at("struct"):
                prog.structs.append(self.struct_decl())
            elif self.at("global"):
                prog.globals.append(self.global_decl())
            elif self.at("pure"):
                prog.pures.append(self.pure_decl())
            elif self.at("node") or self.at("abstract"):
                prog.nodes.append(self.node_decl())
            elif self.at("fused"):
                prog.fused.append(self.fused_decl())
            elif self.at("stub"):
                prog.stubs.append(self.stub_decl())
            elif self.at("main"):
                if prog.entry:
                    self.error("a single main block")
                prog.entry = self.main_block()
            else:
                self.error("declaration")
        return prog

    def struct_decl(self) -> A.StructDecl:
        loc = self.loc()
        self.expect("struct")
        name = self.ident()
        self.expect("{")
        fields = []
        while not self.accept("}"):
            ty = self.type_name()
            fields.append(A.Param(ty, self.ident()))
            self.expect(";")
        return A.StructDecl(name, fields, loc)

    def global_decl(self) -> A.GlobalDecl:
        loc = self.loc()
        self.expect("global")
        ty = self.type_name()
        name = self.ident()
        init = self.expr() if self.accept("=") else None
        self.expect(";")
        return A.GlobalDecl(ty, name, init, loc)

    def pure_decl(self) -> A.PureDecl:
        loc = self.loc()
        self.expect("pure")
        ret = self.type_name()
        name = self.ident()
        params = self.params()
        self.expect("=")
        builtin = self.ident()
        self.expect(";")
        return A.PureDecl(name, params, ret, builtin, loc)

    def params(self) -> list:
        self.expect("(")
        out = []
        if not self.accept(")"):
            while True:
                ty = self.type_name()
                out.append(A.Param(ty, self.ident()))
                if self.accept(")"):
                    break
                self.expect(",")
        return out

    def node_decl(self) -> A.NodeDecl:
        loc = self.loc()
        abstract = self.accept("abstract")
        self.expect("node")
        name = self.ident()
        supers = []
        if self.accept(":"):
            supers.append(self.ident())
            while self.accept(","):
                supers.append(self.ident())
        self.expect("{")
        fields, travs = [], []
        while not self.accept("}"):
            mloc = self.loc()
            if self.accept("child"):
                kind = self.ident()
                fields.append(A.FieldDecl(kind, self.ident(), True, None, mloc))
                self.expect(";")
            elif self.at("virtual") or self.at("override") or self.at("traversal"):
                virtual = self.accept("virtual")
                override = self.accept("override")
                self.expect("traversal")
                tname = self.ident()
                params = self.params()
                body = self.block()
                travs.append(A.TraversalDecl(tname, params, body, virtual, override, mloc))
            else:
                ty = self.type_name()
                fname = self.ident()
                init = self.expr() if self.accept("=") else None
                self.expect(";")
                fields.append(A.FieldDecl(ty, fname, False, init, mloc))
        return A.NodeDecl(name, supers, fields, travs, abstract, loc)

    def fused_decl(self) -> A.FusedDecl:
        loc = self.loc()
        self.expect("fused")
        name = self.ident()
        self.expect("(")
        recv_kind = self.ident()
        recv_name = self.ident()
        params = []
        while self.accept(","):
            ty = self.type_name()
            params.append(A.Param(ty, self.ident()))
        self.expect(")")
        self.expect("[")
        labels = [self.label()]
        while self.accept(","):
            labels.append(self.label())
        self.expect("]")
        self.in_fused = True
        try:
            body = self.block()
        finally:
            self.in_fused = False
        return A.FusedDecl(name, recv_kind, recv_name, params, labels, body, loc)

    def label(self) -> str:
        owner = self.ident()
        self.expect(".")
        return f"{owner}.{self.ident()}"

    def stub_decl(self) -> A.StubDecl:
        loc = self.loc()
        self.expect("stub")
        name = self.ident()
        params = self.params()
        self.expect("for")
        self.expect("[")
        families = [self.ident()]
        while self.accept(","):
            families.append(self.ident())
        self.expect("]")
        self.expect("on")
        base = self.ident()
        self.expect("{")
        overrides = {}
        while not self.accept("}"):
            kind = self.ident()
            self.expect("=>")
            targets = [self.stub_target(len(families))]
            while self.accept(","):
                targets.append(self.stub_target(len(families)))
            self.expect(";")
            overrides[kind] = targets
        return A.StubDecl(name, params, families, base, overrides, loc)

    def stub_target(self, n: int) -> A.StubTarget:
        fused = self.ident()
        if self.accept("["):
            members = [self.int_lit()]
            while self.accept(","):
                members.append(self.int_lit())
            self.expect("]")
        else:
            members = list(range(n))
        return A.StubTarget(fused, members)

    def main_block(self) -> list:
        self.expect("main")
        self.expect("{")
        out = []
        while not self.accept("}"):
            loc = self.loc()
            if self.accept("let"):
                kind = self.ident()
                name = self.ident()
                self.expect("=")
                if self.accept("input"):
                    source = None
                else:
                    source = self.postfix()
                self.expect(";")
                out.append(A.Bind(name, kind, source, loc))
                continue
            recv = self.ident()
            self.expect("->")
            fname = self.ident()
            if self.accept("<"):
                mask = self.int_lit()
                self.expect(">")
                args = self.args()
                self.expect(";")
                out.append(A.EntryStubCall(recv, fname, mask, args, loc))
            else:
                args = self.args()
                self.expect(";")
                out.append(A.EntryCall(recv, fname, args, loc))
        return out

    # -- statements ----------------------------------------------------------

    def block(self) -> list:
        self.expect("{")
        out = []
        while not self.accept("}"):
            out.append(self.stmt())
        return out

    def stmt(self):
        origin = None
        if self.accept("@"):
            t = self.tok
            if t.kind != "string":
                self.error("origin string")
            self.i += 1
            origin = t.value
        s = self.bare_stmt()
        s.origin = origin
        return s

    def bare_stmt(self):
        loc = self.loc()
        if self.accept("if"):
            self.expect("(")
            cond = self.expr()
            self.expect(")")
            then = self.block()
            orelse = self.block() if self.accept("else") else []
            if (self.in_fused and not orelse and isinstance(cond, A.Binary) and cond.op == "&"
                    and isinstance(cond.left, A.Name) and cond.left.ident == "active_flags"
                    and isinstance(cond.right, A.Const) and type(cond.right.value) is int):
                return A.Guard(cond.right.value, then, loc)
            return A.If(cond, then, orelse, loc)
        if self.accept("return"):
            self.expect(";")
            return A.Return(loc)
        if self.accept("delete"):
            target = self.postfix()
            self.expect(";")
            return A.Delete(target, loc)
        if self.accept("alias"):
            kind = self.ident()
            name = self.ident()
            self.expect("=")
            target = self.postfix()
            self.expect(";")
            return A.AliasDef(kind, name, target, loc)
        if self.accept("stubcall"):
            recv = self.postfix()
            if not isinstance(recv, A.Member) or not recv.arrow:
                self.error("stub receiver of the form x->__stubN")
            members = []
            while self.accept("["):
                bit = self.int_lit()
                self.expect("]")
                members.append((bit, self.args()))
            if not members:
                self.error("'['")
            self.expect(";")
            return A.StubCall(recv.base, recv.field, members, loc)
        if self.tok.kind == "ident" and self.tok.text == "active_flags" and self.peek().text == "&=":
            self.i += 2
            self.expect("~")
            mask = self.int_lit()
            self.expect(";")
            return A.ClearFlags(mask, loc)
        # local definition: ``Type name [= expr];``
        if self.tok.kind == "ident" and self.peek().kind == "ident":
            ty = self.type_name()
            name = self.ident()
            init = self.expr() if self.accept("=") else None
            self.expect(";")
            return A.LocalDef(ty, name, init, loc)
        lhs = self.postfix(allow_traverse=True)
        if isinstance(lhs, A.Traverse):
            self.expect(";")
            lhs.loc = loc
            return lhs
        if self.accept("="):
            if self.accept("new"):
                kind = self.ident()
                args = self.args()
                self.expect(";")
                return A.New(lhs, kind, args, loc)
            value = self.expr()
            self.expect(";")
            return A.Assign(lhs, value, loc)
        if isinstance(lhs, A.Call):
            self.expect(";")
            return A.PureCallStmt(lhs, loc)
        self.error("'=' or ';'")

    # -- expressions ---------------------------------------------------------

    def args(self) -> list:
        self.expect("(")
        out = []
        if not self.accept(")"):
            while True:
                out.append(self.expr())
                if self.accept(")"):
                    break
                self.expect(",")
        return out

    def expr(self, level: int = 0):
        if level == len(PRECEDENCE):
            return self.unary()
        left = self.expr(level + 1)
        while self.tok.kind == "op" and self.tok.text in PRECEDENCE[level]:
            loc = self.loc()
            op = self.tok.text
            self.i += 1
            right = self.expr(level + 1)
            left = A.Binary(op, left, right, loc)
        return left

    def unary(self):
        loc = self.loc()
        if self.at("-") or self.at("!"):
            op = self.tok.text
            self.i += 1
            operand = self.unary()
            if op == "-" and isinstance(operand, A.Const) and type(operand.value) in (int, float):
                return A.Const(-operand.value, loc)
            return A.Unary(op, operand, loc)
        return self.postfix()

    def primary(self):
        t = self.tok
        loc = self.loc()
        if t.kind in ("int", "float", "string"):
            self.i += 1
            return A.Const(t.value, loc)
        if self.accept("true"):
            return A.Const(True, loc)
        if self.accept("false"):
            return A.Const(False, loc)
        if self.accept("this"):
            return A.This(loc)
        if self.accept("cast"):
            self.expect("<")
            kind = self.ident()
            self.expect(">")
            self.expect("(")
            operand = self.expr()
            self.expect(")")
            return A.Cast(kind, operand, loc)
        if self.accept("("):
            e = self.expr()
            self.expect(")")
            return e
        if t.kind == "ident":
            self.i += 1
            if self.at("("):
                return A.Call(t.text, self.args(), loc)
            return A.Name(t.text, loc)
        self.error("expression")

    def postfix(self, allow_traverse: bool = False):
        e = self.primary()
        while True:
            loc = self.loc()
            if self.accept("->"):
                name = self.ident()
                if self.at("("):
                    if not allow_traverse:
                        self.error("data or child access (traversal calls are statements)")
                    args = self.args()
                    return self._traverse(e, name, args, loc)
                e = A.Member(e, name, True, loc)
            elif self.accept("."):
                e = A.Member(e, self.ident(), False, loc)
            else:
                return e

    def _traverse(self, recv, name, args, loc):
        if isinstance(recv, A.This):
            return A.Traverse(None, name, args, loc)
        if isinstance(recv, A.Member) and recv.arrow and isinstance(recv.base, A.This):
            return A.Traverse(recv.field, name, args, loc)
        raise GraftSyntaxError("traversal calls must be invoked on this or a child of this",
                               loc.line, loc.col, "this->f() or this->child->f()")


def parse_program(text: str, origin: str = "<literal>") -> A.Program:
    """Parse ``text`` into an unresolved :class:`Program`."""
    if not text or not text.strip():
        raise GraftSyntaxError("empty program", 1, 1, "declaration")
    prog = Parser(text).program()
    prog.origin = origin
    return prog


def parse_file(path) -> A.Program:
    path = Path(path)
    return parse_program(path.read_text(encoding="utf-8"), str(path))

"""Closure-compiling interpreter for plain and fused traversal programs.

Each statement and expression is compiled once into a Python closure; the
closures close over the machine so counters and the heap are shared.
"""

from __future__ import annotations

import sys
import threading
from collections import Counter
from dataclasses import dataclass, field
from typing import Callable, Optional

from . import ast as A
from .errors import GraftRuntimeError
from .model import Hierarchy

MASK64 = (1 << 64) - 1


def wrap(v: int) -> int:
    v &= MASK64
    return v - (1 << 64) if v >> 63 else v


def int_div(a: int, b: int) -> int:
    if b == 0:
        raise GraftRuntimeError("division by zero")
    q = abs(a) // abs(b)
    return wrap(q if (a >= 0) == (b >= 0) else -q)


def int_mod(a: int, b: int) -> int:
    if b == 0:
        raise GraftRuntimeError("division by zero")
    return wrap(a - int_div(a, b) * b)


def _fdiv(a, b):
    if b == 0:
        raise GraftRuntimeError("division by zero")
    return a / b


BUILTIN_IMPLS = {
    "min": min,
    "max": max,
    "abs": abs,
    "concat": lambda a, b: a + b,
    "length": len,
}


# -- runtime values ------------------------------------------------------------


class Node:
    """A tree node; child slots and data fields share ``fields`` (keyed by symbol)."""

    __slots__ = ("uid", "kind", "fields", "parent", "slot", "alive")

    def __init__(self, uid: int, kind: str, fields: dict):
        self.uid = uid
        self.kind = kind
        self.fields = fields
        self.parent: Optional[Node] = None
        self.slot: Optional[str] = None
        self.alive = True

    def __repr__(self) -> str:
        return f"<{self.kind}#{self.uid}>"

    def path(self) -> str:
        parts = []
        n = self
        while n.parent is not None:
            parts.append(n.slot)
            n = n.parent
        return "/" + "/".join(reversed(parts))

    def children(self):
        for v in self.fields.values():
            if isinstance(v, Node):
                yield v

    def walk(self):
        stack = [self]
        while stack:
            n = stack.pop()
            yield n
            stack.extend(reversed(list(n.children())))

    def size(self) -> int:
        return sum(1 for _ in self.walk())


def default_value(ty: str, h: Hierarchy):
    if ty == "int":
        return 0
    if ty == "float":
        return 0.0
    if ty == "bool":
        return False
    if ty == "string":
        return ""
    if ty in h.structs:
        return {h.field(ty, f.name).sym: default_value(f.type, h) for f in h.structs[ty].fields}
    return None  # child slot


def copy_value(v):
    return dict(v) if isinstance(v, dict) else v


class Heap:
    def __init__(self, h: Hierarchy):
        self.h = h
        self.next_uid = 0
        self._templates: dict = {}

    def template(self, kind: str) -> dict:
        if kind not in self._templates:
            out = {}
            for f in self.h.all_fields(kind):
                if f.is_child:
                    out[f.sym] = None
                else:
                    decl = self.h.field_decl(f.sym) if f.owner in self.h.decls else None
                    init = decl.init if decl is not None else None
                    if init is not None:
                        v = init.value
                        if f.type == "float":
                            v = float(v)
                        out[f.sym] = v
                    else:
                        out[f.sym] = default_value(f.type, self.h)
            self._templates[kind] = out
        return self._templates[kind]

    def new(self, kind: str) -> Node:
        t = self.template(kind)
        uid = self.next_uid
        self.next_uid += 1
        return Node(uid, kind, {k: copy_value(v) for k, v in t.items()})


def attach(parent: Node, sym: str, child: Optional[Node]):
    parent.fields[sym] = child
    if child is not None:
        child.parent = parent
        child.slot = sym


def release(node: Node):
    for n in node.walk():
        n.alive = False
    node.parent = None


# -- metrics and state -------------------------------------------------------


@dataclass
class ExecMetrics:
    node_visits: int = 0
    simple_statements: int = 0
    guard_checks: int = 0
    statements: Counter = field(default_factory=Counter)  # origin -> executions

    def to_json(self) -> dict:
        return {"nodeVisits": self.node_visits, "simpleStatements": self.simple_statements,
                "guardChecks": self.guard_checks}


@dataclass
class State:
    root: Optional[Node]
    globals: dict


def snapshot(state: State) -> tuple:
    """Structural value of a final state (node identities erased)."""
    nodes = []
    if state.root is not None:
        stack = [("", state.root)]
        while stack:
            path, n = stack.pop()
            data = []
            for k, v in sorted(n.fields.items()):
                if isinstance(v, Node):
                    stack.append((f"{path}/{k}", v))
                elif v is not None:
                    data.append((k, _freeze(v)))
            nodes.append((path, n.kind, tuple(data)))
    return tuple(sorted(nodes)), tuple(sorted((k, _freeze(v)) for k, v in state.globals.items()))


def _freeze(v):
    if isinstance(v, dict):
        return tuple(sorted(v.items()))
    return v


def diff_states(a, b) -> list:
    """Human-readable differences between two states (or two trees)."""
    out: list = []
    if isinstance(a, State) and isinstance(b, State):
        for k in sorted(set(a.globals) | set(b.globals)):
            if a.globals.get(k) != b.globals.get(k):
                out.append(f"global {k}: {a.globals.get(k)!r} != {b.globals.get(k)!r}")
        a, b = a.root, b.root
    stack = [("", a, b)]
    while stack:
        path, x, y = stack.pop()
        where = path or "/"
        if x is None or y is None:
            if (x is None) != (y is None):
                out.append(f"{where}: {'empty' if x is None else x.kind} != {'empty' if y is None else y.kind}")
            continue
        if x.kind != y.kind:
            out.append(f"{where}: kind {x.kind} != {y.kind}")
            continue
        for k in sorted(set(x.fields) | set(y.fields)):
            u, v = x.fields.get(k), y.fields.get(k)
            if isinstance(u, Node) or isinstance(v, Node) or (u is None and v is None):
                stack.append((f"{path}/{k}", u, v))
            elif u != v:
                out.append(f"{where}.{k}: {u!r} != {v!r}")
    return out


# -- access logging ------------------------------------------------------------


@dataclass
class AccessRecord:
    stmt: object
    decl_label: str
    node: Node
    paths: set  # (mode, category, symbols)
    escaped: bool = False  # an access outside the receiver's subtree


class AccessLog:
    def __init__(self):
        self.active: list = []
        self.records: list = []

    def touch(self, mode: str, node: Node, *tail: str):
        for rec in self.active:
            syms = list(reversed(tail))
            n = node
            while n is not rec.node:
                if n is None or n.parent is None:
                    rec.escaped = True
                    break
                syms.append(n.slot)
                n = n.parent
            else:
                rec.paths.add((mode, "tree", tuple(reversed(syms))))

    def touch_global(self, mode: str, name: str):
        for rec in self.active:
            rec.paths.add((mode, "global", (name,)))


# -- compilation ---------------------------------------------------------------


class Returned(Exception):
    pass


class Machine:
    """Executes one program; create a fresh machine (or call ``reset``) per run."""

    def __init__(self, prog: A.Program, log_accesses: bool = False):
        if prog.model is None:
            raise ValueError("program must be resolved before execution")
        self.prog = prog
        self.h: Hierarchy = prog.model
        self.log = AccessLog() if log_accesses else None
        self.metrics = ExecMetrics()
        self.heap = Heap(self.h)
        self.globals: dict = {}
        self._trav_code: dict = {}
        self._dispatch: dict = {}
        self.fused = {f.name: f for f in prog.fused}
        self._fused_code: dict = {}
        self.stubs = {s.name: s for s in prog.stubs}
        self._stub_arity: dict = {}
        self.where = ""

    # runtime helpers

    def err(self, msg: str, node: Optional[Node] = None):
        raise GraftRuntimeError(msg, node.path() if node is not None else "", self.where)

    def deref(self, v, what: str = "node") -> Node:
        if v is None:
            self.err(f"empty child slot used as {what}")
        if not v.alive:
            self.err("access to a deleted node", v)
        return v

    # expressions

    def cexpr(self, e, as_value: bool = True) -> Callable:
        h = self.h
        if isinstance(e, A.Const):
            v = e.value
            return lambda env: v
        if isinstance(e, A.This):
            return lambda env: env["this"]
        if isinstance(e, A.Name):
            name = e.ident
            if e.binding == "global":
                G = self.globals
                log = self.log
                if log is not None:
                    def get_global(env):
                        log.touch_global("r", name)
                        return G[name]
                    return get_global
                if as_value and e.ty in h.structs:
                    return lambda env: dict(G[name])
                return lambda env: G[name]
            if as_value and e.ty in h.structs:
                return lambda env: dict(env[name])
            return lambda env: env[name]
        if isinstance(e, A.Member):
            base = self.cexpr(e.base, as_value=False)
            sym = e.sym
            bty = e.base.ty
            if bty == "string":
                return lambda env: len(base(env))
            if bty in h.structs:
                return lambda env: base(env)[sym]
            deref, log = self.deref, self.log
            copy = as_value and e.ty in h.structs
            if log is not None:
                def get_logged(env):
                    n = deref(base(env))
                    log.touch("r", n, sym)
                    v = n.fields[sym]
                    return dict(v) if copy else v
                return get_logged
            if copy:
                return lambda env: dict(deref(base(env)).fields[sym])

            def get(env):
                n = base(env)
                if n is None or not n.alive:
                    deref(n)
                return n.fields[sym]
            return get
        if isinstance(e, A.Cast):
            operand = self.cexpr(e.operand)
            kind = e.kind
            anc = self.h.ancestors

            def cast(env):
                n = self.deref(operand(env), "cast operand")
                if kind not in anc(n.kind):
                    self.err(f"cast of {n.kind} to {kind} failed", n)
                return n
            return cast
        if isinstance(e, A.Unary):
            x = self.cexpr(e.operand)
            if e.op == "!":
                return lambda env: not x(env)
            if e.ty == "int":
                return lambda env: wrap(-x(env))
            return lambda env: -x(env)
        if isinstance(e, A.Binary):
            return self.cbinary(e)
        if isinstance(e, A.Call):
            pure = next(p for p in self.prog.pures if p.name == e.func)
            fn = BUILTIN_IMPLS[pure.builtin]
            args = [self.cexpr(a) for a in e.args]
            if len(args) == 1:
                a0 = args[0]
                return lambda env: fn(a0(env))
            a0, a1 = args
            return lambda env: fn(a0(env), a1(env))
        raise TypeError(e)

    def cbinary(self, e: A.Binary) -> Callable:
        l, r = self.cexpr(e.left), self.cexpr(e.right)
        op = e.op
        is_int = e.ty == "int"
        if op == "&&":
            return lambda env: l(env) and r(env)
        if op == "||":
            return lambda env: l(env) or r(env)
        if op == "+":
            return (lambda env: wrap(l(env) + r(env))) if is_int else (lambda env: l(env) + r(env))
        if op == "-":
            return (lambda env: wrap(l(env) - r(env))) if is_int else (lambda env: l(env) - r(env))
        if op == "*":
            return (lambda env: wrap(l(env) * r(env))) if is_int else (lambda env: l(env) * r(env))
        if op == "/":
            return (lambda env: int_div(l(env), r(env))) if is_int else (lambda env: _fdiv(l(env), r(env)))
        if op == "%":
            if is_int:
                return lambda env: int_mod(l(env), r(env))
            import math
            return lambda env: math.fmod(l(env), r(env)) if r(env) != 0 else _fdiv(1, 0)
        if op == "&":
            return lambda env: l(env) & r(env)
        if op == "==":
            return lambda env: l(env) == r(env)
        if op == "!=":
            return lambda env: l(env) != r(env)
        if op == "<":
            return lambda env: l(env) < r(env)
        if op == "<=":
            return lambda env: l(env) <= r(env)
        if op == ">":
            return lambda env: l(env) > r(env)
        if op == ">=":
            return lambda env: l(env) >= r(env)
        raise TypeError(op)

    # statements

    def cblock(self, stmts, top_label: Optional[str] = None) -> Callable:
        fns = [self.cstmt(s) for s in stmts]
        if self.log is not None and top_label is not None:
            fns = [self._logged(s, f, top_label) for s, f in zip(stmts, fns)]
        if not fns:
            return lambda env: None
        if len(fns) == 1:
            return fns[0]
        fns = tuple(fns)

        def run(env):
            for f in fns:
                f(env)
        return run

    def _logged(self, stmt, fn, label):
        log = self.log

        def run(env):
            rec = AccessRecord(stmt, label, env["this"], set())
            log.active.append(rec)
            try:
                fn(env)
            finally:
                log.active.pop()
                log.records.append(rec)
        return run

    def counted(self, s, fn) -> Callable:
        origin = s.origin
        if origin is None:
            return fn
        m = self.metrics
        counts = m.statements

        def run(env):
            m.simple_statements += 1
            counts[origin] += 1
            fn(env)
        return run

    def cstmt(self, s) -> Callable:
        h = self.h
        if isinstance(s, A.Assign):
            value = self.cexpr(s.value)
            store = self.cstore(s.target)
            if s.target.ty == "float" and s.value.ty == "int":
                v0 = value
                value = lambda env: float(v0(env))
            return self.counted(s, lambda env: store(env, value(env)))
        if isinstance(s, A.If):
            cond = self.cexpr(s.cond)
            then = self.cblock(s.then)
            orelse = self.cblock(s.orelse)

            def run_if(env):
                if cond(env):
                    then(env)
                else:
                    orelse(env)
            return self.counted(s, run_if)
        if isinstance(s, A.LocalDef):
            name = s.name
            if s.init is not None:
                init = self.cexpr(s.init)
                if s.type == "float" and s.init.ty == "int":
                    i0 = init
                    init = lambda env: float(i0(env))
            else:
                dv = default_value(s.type, h)
                init = lambda env: copy_value(dv)

            def run_local(env):
                env[name] = init(env)
            return self.counted(s, run_local)
        if isinstance(s, A.AliasDef):
            name = s.name
            target = self.cexpr(s.target)
            deref = self.deref

            def run_alias(env):
                env[name] = deref(target(env), "alias target")
            return self.counted(s, run_alias)
        if isinstance(s, (A.New, A.Delete)):
            parent = self.cexpr(s.target.base, as_value=False)
            sym = s.target.sym
            heap, log, deref = self.heap, self.log, self.deref
            kind = s.kind if isinstance(s, A.New) else None

            def run_alloc(env):
                p = deref(parent(env))
                if log is not None:
                    log.touch("w", p, sym)
                old = p.fields[sym]
                if old is not None:
                    release(old)
                attach(p, sym, heap.new(kind) if kind is not None else None)
            return self.counted(s, run_alloc)
        if isinstance(s, A.PureCallStmt):
            call = self.cexpr(s.call)
            return self.counted(s, lambda env: call(env))
        if isinstance(s, A.Return):
            def run_return(env):
                raise Returned()
            return self.counted(s, run_return)
        if isinstance(s, A.Traverse):
            return self.ctraverse(s)
        if isinstance(s, A.Guard):
            body = self.cblock(s.body)
            mask = s.mask
            m = self.metrics

            def run_guard(env):
                m.guard_checks += 1
                if env["active_flags"] & mask:
                    body(env)
            return run_guard
        if isinstance(s, A.ClearFlags):
            keep = ~s.mask

            def run_clear(env):
                env["active_flags"] &= keep
            return self.counted(s, run_clear)
        if isinstance(s, A.StubCall):
            return self.cstubcall(s)
        raise TypeError(s)

    def cstore(self, target) -> Callable:
        if isinstance(target, A.Name):
            name = target.ident
            if target.binding == "global":
                G, log = self.globals, self.log

                def store_global(env, v):
                    if log is not None:
                        log.touch_global("w", name)
                    G[name] = copy_value(v)
                return store_global

            def store_local(env, v):
                env[name] = copy_value(v)
            return store_local
        base = self.cexpr(target.base, as_value=False)
        sym = target.sym
        if target.base.ty in self.h.structs:
            outer = target.base
            log = self.log
            if log is not None and isinstance(outer, A.Member) and outer.base.ty in self.h.decls:
                # writing a member of a struct stored in a node
                node_of = self.cexpr(outer.base, as_value=False)
                osym = outer.sym

                def store_struct_logged(env, v):
                    log.touch("w", self.deref(node_of(env)), osym, sym)
                    base(env)[sym] = v
                return store_struct_logged

            def store_struct(env, v):
                base(env)[sym] = v
            return store_struct
        deref, log = self.deref, self.log

        def store_field(env, v):
            n = deref(base(env))
            if log is not None:
                log.touch("w", n, sym)
            n.fields[sym] = copy_value(v)
        return store_field

    # calls

    def ctraverse(self, s: A.Traverse) -> Callable:
        args = [self.cexpr(a) for a in s.args]
        name = s.name
        sym = s.child_sym
        deref = self.deref
        call = self.call_traversal
        log = self.log
        if sym is None:
            def run_self(env):
                call(env["this"], name, [a(env) for a in args])
            return run_self

        def run_child(env):
            this = env["this"]
            if log is not None:
                log.touch("r", this, sym)
            call(deref(this.fields[sym], f"receiver of {name}"), name, [a(env) for a in args])
        return run_child

    def traversal_code(self, decl: A.TraversalDecl):
        code = self._trav_code.get(id(decl))
        if code is None:
            code = ([p.name for p in decl.params], self.cblock(decl.body, top_label=decl.label))
            self._trav_code[id(decl)] = code
        return code

    def call_traversal(self, node: Node, name: str, args: list):
        if not node.alive:
            self.err("traversal of a deleted node", node)
        key = (node.kind, name)
        decl = self._dispatch.get(key)
        if decl is None:
            decl = self.h.traversal(node.kind, name)
            if decl is None:
                self.err(f"{node.kind} has no traversal {name}", node)
            self._dispatch[key] = decl
        names, body = self.traversal_code(decl)
        self.metrics.node_visits += 1
        env = dict(zip(names, args))
        env["this"] = node
        try:
            body(env)
        except Returned:
            pass

    def fused_code(self, name: str):
        code = self._fused_code.get(name)
        if code is None:
            f = self.fused[name]
            code = ([p.name for p in f.params], f.recv_name, self.cblock(f.body))
            self._fused_code[name] = code
        return code

    def call_fused(self, name: str, node: Node, args: list, flags: int):
        names, recv, body = self.fused_code(name)
        self.metrics.node_visits += 1
        env = dict(zip(names, args))
        env[recv] = node
        env["active_flags"] = flags
        body(env)

    def stub_arity(self, stub: A.StubDecl) -> list:
        """Number of parameters of each family member of ``stub``."""
        if stub.name not in self._stub_arity:
            counts = [0] * len(stub.families)
            for p in stub.params:
                j = int(p.name.split("_")[1][1:])
                counts[j] += 1
            self._stub_arity[stub.name] = counts
        return self._stub_arity[stub.name]

    def call_stub(self, stub_name: str, node: Node, member_args: list, flags: int):
        """Dispatch a stub on the runtime kind of ``node``."""
        stub = self.stubs[stub_name]
        if not node.alive:
            self.err("traversal of a deleted node", node)
        targets = stub.overrides.get(node.kind)
        if targets is None:
            self.err(f"stub {stub_name} has no override for {node.kind}", node)
        if len(targets) == 1:
            t = targets[0]
            args = [a for j in t.members for a in member_args[j]]
            tflags = 0
            for pos, j in enumerate(t.members):
                tflags |= ((flags >> j) & 1) << pos
            self.call_fused(t.fused, node, args, tflags)
            return
        for t in targets:
            self.metrics.guard_checks += 1
            tflags = 0
            for pos, j in enumerate(t.members):
                tflags |= ((flags >> j) & 1) << pos
            if tflags:
                args = [a for j in t.members for a in member_args[j]]
                self.call_fused(t.fused, node, args, tflags)

    def cstubcall(self, s: A.StubCall) -> Callable:
        recv = self.cexpr(s.receiver, as_value=False)
        stub = self.stubs[s.stub]
        members = []
        for j, (bit, args) in enumerate(s.members):
            params = [p for p in stub.params if p.name.startswith(f"_a{j}_")]
            defaults = [default_value(p.type, self.h) for p in params]
            members.append((bit, [self.cexpr(a) for a in args], defaults))
        name = s.stub
        m = self.metrics
        call = self.call_stub
        deref = self.deref
        log = self.log
        child_sym = s.receiver.sym if isinstance(s.receiver, A.Member) else None
        node_of = self.cexpr(s.receiver.base, as_value=False) if child_sym else None

        def run(env):
            m.guard_checks += 1
            af = env["active_flags"]
            flags = 0
            for j, (bit, _, _) in enumerate(members):
                flags |= ((af >> bit) & 1) << j
            if not flags:
                return
            if log is not None and child_sym:
                log.touch("r", deref(node_of(env)), child_sym)
            node = deref(recv(env), f"receiver of {name}")
            margs = []
            for j, (_, argf, defaults) in enumerate(members):
                if (flags >> j) & 1:
                    margs.append([a(env) for a in argf])
                else:
                    margs.append([copy_value(d) for d in defaults])
            call(name, node, margs, flags)
        return run

    # entry

    def init_globals(self):
        self.globals.clear()
        env: dict = {}
        for g in self.prog.globals:
            if g.init is not None:
                v = self.cexpr(g.init)(env)
                if g.type == "float":
                    v = float(v)
            else:
                v = default_value(g.type, self.h)
            self.globals[g.name] = v

    def run_entry(self, root: Optional[Node]) -> State:
        self.init_globals()
        binds: dict = {}
        for item in self.prog.entry:
            self.where = "main"
            if isinstance(item, A.Bind):
                if item.source is None:
                    if root is None:
                        self.err("no input tree")
                    if item.kind not in self.h.ancestors(root.kind):
                        self.err(f"input tree is a {root.kind}, not a {item.kind}", root)
                    binds[item.name] = root
                else:
                    binds[item.name] = self.deref(self.cexpr(item.source)(binds))
                continue
            node = self.deref(binds[item.receiver], "entry receiver")
            args = [self.cexpr(a)(binds) for a in item.args]
            if isinstance(item, A.EntryCall):
                self.call_traversal(node, item.name, args)
            else:
                stub = self.stubs[item.stub]
                arity = self.stub_arity(stub)
                margs, pos = [], 0
                for j, n in enumerate(arity):
                    margs.append(args[pos:pos + n])
                    pos += n
                self.call_stub(item.stub, node, margs, item.mask)
        return State(root, dict(self.globals))


def run_deep(fn, *args):
    """Run ``fn`` on a thread with a large stack so deep trees do not overflow."""
    result: dict = {}

    def target():
        old = sys.getrecursionlimit()
        sys.setrecursionlimit(max(old, 200000))
        try:
            result["value"] = fn(*args)
        except BaseException as exc:  # re-raised in the caller
            result["error"] = exc
        finally:
            sys.setrecursionlimit(old)

    prev = threading.stack_size()
    threading.stack_size(512 * 1024 * 1024)
    try:
        t = threading.Thread(target=target)
        t.start()
        t.join()
    finally:
        threading.stack_size(prev)
    if "error" in result:
        raise result["error"]
    return result["value"]


def execute(prog: A.Program, tree: Optional[Node], log_accesses: bool = False, deep: bool = True):
    """Run the entry block on ``tree`` (mutated in place).

    Returns ``(final_state, metrics)``; with ``log_accesses`` the machine's
    access log is returned as a third element.
    """
    m = Machine(prog, log_accesses)
    state = run_deep(m.run_entry, tree) if deep else m.run_entry(tree)
    if log_accesses:
        return state, m.metrics, m.log
    return state, m.metrics

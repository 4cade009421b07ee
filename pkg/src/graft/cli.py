"""Command line: ``graft fuse | run | diff | stats``.

Every subcommand accepts ``--json`` for machine-readable output.  Errors are
reported as a JSON object on stderr with a nonzero exit status.
"""

from __future__ import annotations

import argparse
import json
import sys
from pathlib import Path
from typing import Optional

from . import ast as A
from . import automata as fa
from .access import CATEGORIES, AccessAnalysis
from .codegen import fused_program, pretty_print_program
from .dependence import DependenceBuilder
from .errors import GraftError
from .fusion import FusionConfig, find_seed_sequences, fuse_program, split_key, unit_bound
from .interp import diff_states, execute
from .model import build_labeled_call_graph, resolve
from .parser import parse_file
from .trees import TreeSpec, TreeSyntaxError, default_spec, materialize_tree
from .validate import validate_program

EXIT_DIFF = 1
EXIT_ERROR = 2


class CliError(GraftError):
    code = "UsageError"


def _load(path: str) -> A.Program:
    prog = parse_file(path)
    resolve(prog)
    return prog


def _config(args) -> FusionConfig:
    try:
        return FusionConfig(max_seq_len=args.max_seq, max_repeat=args.max_repeat)
    except ValueError as e:
        raise CliError(str(e)) from None


def _write(path: Optional[str], text: str):
    if path is None or path == "-":
        sys.stdout.write(text)
    else:
        Path(path).write_text(text, encoding="utf-8")


def _dump_json(obj) -> str:
    return json.dumps(obj, indent=2, sort_keys=False) + "\n"


# -- tree specs ----------------------------------------------------------------


def _tree_spec(args, h) -> TreeSpec:
    """The tree spec named on the command line, with the seed applied."""
    if args.tree:
        text = Path(args.tree).read_text(encoding="utf-8")
        try:
            obj = json.loads(text)
        except json.JSONDecodeError:
            return TreeSpec(literal=text)  # not JSON: a tree literal
        return TreeSpec.from_json(obj).with_seed(args.seed)
    spec = default_spec(h, args.size, args.seed or 0)
    if args.pages is not None:
        if spec.generator != "render":
            raise CliError("--pages needs a program over the render hierarchy")
        spec.params = {"pages": args.pages}
    if args.functions is not None:
        if spec.generator != "ast":
            raise CliError("--functions needs a program over the AST hierarchy")
        spec.params = {"functions": args.functions, "body": "replicated"}
    return spec


def _add_tree_args(p):
    p.add_argument("--tree", help="tree spec (JSON) or tree literal file")
    p.add_argument("--seed", type=int, default=None, help="generator seed")
    p.add_argument("--size", type=int, default=None, help="approximate tree size for the default generator")
    p.add_argument("--pages", type=int, default=None, help="render documents: number of pages")
    p.add_argument("--functions", type=int, default=None, help="AST programs: number of replicated functions")


def _add_fusion_args(p):
    p.add_argument("--max-seq", type=int, default=FusionConfig.max_seq_len, help="maxSeqLen cutoff")
    p.add_argument("--max-repeat", type=int, default=FusionConfig.max_repeat, help="maxRepeat cutoff")


# -- fuse ----------------------------------------------------------------------


def cmd_fuse(args) -> int:
    prog = _load(args.program)
    result = fuse_program(prog, _config(args))
    text = pretty_print_program(result)
    stats = result.stats_json()
    if args.stats:
        Path(args.stats).write_text(_dump_json(stats), encoding="utf-8")
    if args.output:
        _write(args.output, text)
    emit = "json" if args.json else args.emit
    if emit == "json":
        sys.stdout.write(_dump_json({**stats, "output": args.output}))
    elif emit == "dot":
        for u in result.units.values():
            sys.stdout.write(u.graph.to_dot(u.name))
    elif not args.output:
        sys.stdout.write(text)
    return 0


# -- run -----------------------------------------------------------------------


def cmd_run(args) -> int:
    prog = _load(args.program)
    spec = _tree_spec(args, prog.model)
    tree = materialize_tree(spec, prog.model)
    _, metrics = execute(prog, tree)
    out = metrics.to_json()
    if args.metrics:
        Path(args.metrics).write_text(_dump_json(out), encoding="utf-8")
    if args.json:
        sys.stdout.write(_dump_json({"tree": spec.to_json(), "metrics": out}))
    else:
        for k, v in out.items():
            print(f"{k}: {v}")
    return 0


# -- diff ----------------------------------------------------------------------


def _ratio(a: int, b: int) -> Optional[float]:
    return round(b / a, 6) if a else None


def cmd_diff(args) -> int:
    left = _load(args.program)
    if args.other:
        right = _load(args.other)
    else:
        right = fused_program(fuse_program(left, _config(args)))
    spec = _tree_spec(args, left.model)
    s1, m1 = execute(left, materialize_tree(spec, left.model))
    s2, m2 = execute(right, materialize_tree(spec, right.model))
    diffs = diff_states(s1, s2)
    report = {
        "tree": spec.to_json(),
        "equal": not diffs,
        "differences": diffs,
        "left": m1.to_json(),
        "right": m2.to_json(),
        "statementsEqual": m1.statements == m2.statements,
        "ratios": {
            "nodeVisits": _ratio(m1.node_visits, m2.node_visits),
            "simpleStatements": _ratio(m1.simple_statements, m2.simple_statements),
        },
    }
    if args.json:
        sys.stdout.write(_dump_json(report))
    else:
        if diffs:
            print(f"state diff: {len(diffs)} difference(s)")
            for d in diffs[:50]:
                print(f"  {d}")
        else:
            print("state diff: empty")
        print(f"nodeVisits: {m1.node_visits} -> {m2.node_visits} (ratio {report['ratios']['nodeVisits']})")
        print(f"simpleStatements: {m1.simple_statements} -> {m2.simple_statements}"
              f" ({'conserved' if report['statementsEqual'] else 'NOT conserved'})")
        print(f"guardChecks: {m1.guard_checks} -> {m2.guard_checks}")
    return 0 if not diffs else EXIT_DIFF


# -- stats ---------------------------------------------------------------------


def _call_graphs(prog) -> list:
    binds = {}
    out = []
    for item in prog.entry:
        if isinstance(item, A.Bind):
            binds[item.name] = item.kind
        elif isinstance(item, A.EntryCall):
            root = A.Traverse(None, item.name, item.args, item.loc)
            root.child_kind = binds[item.receiver]
            out.append((f"{item.receiver}->{item.name}", build_labeled_call_graph(root, prog.model)))
    return out


def _sequence_keys(prog, which: str, config: FusionConfig) -> list:
    """Resolve ``main:i`` (the i-th entry call sequence) or a comma list of labels to keys."""
    h = prog.model
    if which.startswith("main:"):
        seeds = find_seed_sequences(prog)
        try:
            seed = seeds[int(which[5:])]
        except (ValueError, IndexError):
            raise CliError(f"no entry sequence {which}; the program has {len(seeds)}") from None
        base = next(i.kind for i in prog.entry if isinstance(i, A.Bind) and i.name == seed.receiver)
        keys = []
        for kind in h.concrete_subtypes(base):
            full = tuple(h.traversal(kind, f).label for f in seed.families)
            for idx in split_key(full, config):
                key = tuple(full[i] for i in idx)
                if key not in keys:
                    keys.append(key)
        return keys
    key = tuple(x.strip() for x in which.split(",") if x.strip())
    for lab in key:
        try:
            h.decl_by_label(lab)
        except (KeyError, GraftError):
            raise CliError(f"unknown traversal {lab}") from None
    return [key]


def _find_stmt(prog, sid: str):
    for n in prog.nodes:
        for t in n.traversals:
            for s in A.walk_stmts(t.body):
                if getattr(s, "origin", None) == sid:
                    return s, t
    raise CliError(f"no statement {sid}; ids look like Kind.traversal:index")


def cmd_stats(args) -> int:
    prog = _load(args.program)
    h = prog.model
    if args.call_graph:
        graphs = _call_graphs(prog)
        if args.json:
            sys.stdout.write(_dump_json([{"call": c, "nodes": g.nodes,
                                          "edges": [[s, lab, d] for s, lab, d in g.edges]} for c, g in graphs]))
        else:
            for _, g in graphs:
                sys.stdout.write(g.to_dot())
        return 0
    if args.depgraph:
        deps = DependenceBuilder(AccessAnalysis(h))
        out = []
        for key in _sequence_keys(prog, args.depgraph, _config(args)):
            g = deps.build([h.decl_by_label(lab) for lab in key])
            out.append((key, g))
        if args.json:
            sys.stdout.write(_dump_json([{"key": list(k), "vertices": [v.label for v in g.vertices],
                                          "edges": [[u, v, why] for (u, v), why in sorted(g.edges.items())]}
                                         for k, g in out]))
        else:
            for i, (_, g) in enumerate(out):
                sys.stdout.write(g.to_dot(f"depgraph{i}"))
        return 0
    if args.automata:
        stmt, decl = _find_stmt(prog, args.automata)
        summary = AccessAnalysis(h).summary(stmt, decl)
        dumps = []
        for mode in ("read", "write"):
            for cat in CATEGORIES:
                d = fa.minimize(summary.automaton(cat, mode))
                dumps.append((f"{mode}_{cat}", d))
        if args.json:
            sys.stdout.write(_dump_json({name: d.canonical() for name, d in dumps}))
        else:
            for name, d in dumps:
                sys.stdout.write(d.to_dot(name))
        return 0
    report = validate_program(prog)
    out = {"validation": report.to_json()}
    if report.ok:
        config = _config(args)
        result = fuse_program(prog, config)
        n_decls = sum(len(n.traversals) for n in prog.nodes)
        out["fusion"] = result.stats_json()
        out["unitBound"] = unit_bound(n_decls, config)
    if args.json:
        sys.stdout.write(_dump_json(out))
    else:
        print(f"validation: {'ok' if report.ok else 'failed'}")
        for v in report.violations:
            print(f"  {v.code} in {v.where}: {v.message}")
        if "fusion" in out:
            f = out["fusion"]
            for k in ("sequencesFound", "unitsCreated", "unitsReused", "cutoffSplits"):
                print(f"{k}: {f[k]}")
            print(f"unitBound: {out['unitBound']}")
            for u in f["perUnit"]:
                print(f"  {u['key']} {'+'.join(u['constituents'])} "
                      f"grouped={u['groupedCalls']} splits={u['splitEvents']}")
    return 0


# -- entry point ---------------------------------------------------------------


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="graft", description="Fuse tree traversals and check the result.")
    sub = ap.add_subparsers(dest="command", required=True)

    p = sub.add_parser("fuse", help="fuse a program and print the extended program")
    p.add_argument("program")
    p.add_argument("-o", "--output", help="write the fused program here")
    p.add_argument("--stats", help="write fusion statistics (JSON) here")
    p.add_argument("--emit", choices=("text", "json", "dot"), default="text",
                   help="stdout dump: fused program text, statistics, or unit dependence graphs")
    _add_fusion_args(p)
    p.set_defaults(func=cmd_fuse)

    p = sub.add_parser("run", help="execute a program on a tree")
    p.add_argument("program")
    p.add_argument("--metrics", help="write execution metrics (JSON) here")
    _add_tree_args(p)
    p.set_defaults(func=cmd_run)

    p = sub.add_parser("diff", help="run two programs (default: a program and its fusion) on one tree")
    p.add_argument("program")
    p.add_argument("other", nargs="?", help="second program; omitted means fuse the first")
    _add_tree_args(p)
    _add_fusion_args(p)
    p.set_defaults(func=cmd_diff)

    p = sub.add_parser("stats", help="validation, fusion statistics and analysis dumps")
    p.add_argument("program")
    g = p.add_mutually_exclusive_group()
    g.add_argument("--call-graph", action="store_true", help="labeled call graphs of the entry calls (DOT)")
    g.add_argument("--depgraph", metavar="SEQ", help="dependence graphs for main:I or Kind.f,Kind.g (DOT)")
    g.add_argument("--automata", metavar="STMT", help="minimized access automata of Kind.f:I (DOT)")
    _add_fusion_args(p)
    p.set_defaults(func=cmd_stats)

    for sp in sub.choices.values():
        sp.add_argument("--json", action="store_true", help="machine-readable output")
    return ap


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except GraftError as e:
        err = e.to_json()
    except OSError as e:
        err = {"error": "IOError", "message": str(e)}
    except json.JSONDecodeError as e:
        err = {"error": "JSONError", "message": str(e)}
    sys.stderr.write(json.dumps(err) + "\n")
    return EXIT_ERROR


if __name__ == "__main__":
    sys.exit(main())

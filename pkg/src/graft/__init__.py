"""Fusion of tree traversals written in a small traversal language.

Typical use::

    prog = graft.load_program(graft.corpus_path("fig2"))
    result = graft.fuse_program(prog)
    fused = graft.fused_program(result)
    state, metrics = graft.execute(fused, tree)
"""

from __future__ import annotations

from pathlib import Path

from .codegen import fused_program, pretty_print_program
from .corpora import ENTRIES as CORPUS_ENTRIES, CorpusEntry
from .errors import GraftError, GraftRuntimeError, GraftSyntaxError, FusionRejected, KindMismatch
from .fusion import FusionConfig, FusionResult, fuse_program, unit_bound
from .interp import ExecMetrics, State, diff_states, execute
from .model import Hierarchy, resolve
from .parser import parse_file, parse_program
from .printer import print_program
from .trees import TreeSpec, format_tree, materialize_tree, parse_tree

__version__ = "0.1.0"

CORPUS = tuple(CORPUS_ENTRIES)


def load_program(source) -> "A.Program":  # noqa: F821
    """Parse and resolve a program given as a path or as source text."""
    if isinstance(source, Path) or (isinstance(source, str) and "\n" not in source and source.endswith(".tg")):
        prog = parse_file(source)
    else:
        prog = parse_program(source)
    resolve(prog)
    return prog


def corpus_path(name: str) -> Path:
    """Path of a bundled corpus program (``fig2``, ``render``, ``ast``, ``partial``)."""
    if name not in CORPUS_ENTRIES:
        raise KeyError(f"no corpus program {name!r}")
    return CORPUS_ENTRIES[name].program_file


__all__ = [
    "CORPUS", "CORPUS_ENTRIES", "CorpusEntry", "ExecMetrics", "FusionConfig", "FusionRejected",
    "FusionResult", "GraftError", "GraftRuntimeError", "GraftSyntaxError", "Hierarchy", "KindMismatch", "State", "TreeSpec",
    "corpus_path", "diff_states", "execute", "format_tree", "fuse_program", "fused_program",
    "load_program", "materialize_tree", "parse_file", "parse_program", "parse_tree",
    "pretty_print_program", "print_program", "resolve", "unit_bound",
]

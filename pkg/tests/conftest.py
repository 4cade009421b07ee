import functools
import sys
from pathlib import Path

import pytest

import graft
from graft.corpora import entry
from graft.interp import diff_states, execute

sys.path.insert(0, str(Path(__file__).parent))


@functools.lru_cache(maxsize=None)
def corpus(name: str):
    return graft.load_program(graft.corpus_path(name))


@functools.lru_cache(maxsize=None)
def fused_corpus(name: str):
    return graft.fused_program(graft.fuse_program(corpus(name)))


def run_pair(prog, fused, spec):
    """Execute both programs on the tree ``spec`` describes; returns (diff, m1, m2)."""
    s1, m1 = execute(prog, graft.materialize_tree(spec, prog.model))
    s2, m2 = execute(fused, graft.materialize_tree(spec, fused.model))
    return diff_states(s1, s2), m1, m2


def equivalent(prog, fused, spec) -> bool:
    d, m1, m2 = run_pair(prog, fused, spec)
    return not d and m1.statements == m2.statements


def corpus_spec(name: str, seed: int, **params):
    return entry(name).spec(seed, **params)


@pytest.fixture
def fig2():
    return corpus("fig2")


@pytest.fixture
def fig2_fused():
    return fused_corpus("fig2")


def chain(prog, texts, end="End"):
    """A TextBox list over ``texts`` terminated by ``end``, as a tree literal."""
    lines, depth = [], 0
    for i, t in enumerate(texts):
        slot = "Next: " if i else ""
        lines.append("    " * depth + f'{slot}TextBox Text="{t}" {{')
        depth += 1
    lines.append("    " * depth + ("Next: " if texts else "") + end)
    for d in range(depth - 1, -1, -1):
        lines.append("    " * d + "}")
    return graft.parse_tree("\n".join(lines), prog.model)


def pytest_terminal_summary(terminalreporter):
    acc = sys.modules.get("test_acceptance")
    if acc is None or not acc.RESULTS:
        return
    terminalreporter.write_sep("=", "acceptance criteria")
    for n in sorted(acc.RESULTS):
        terminalreporter.write_line(acc.RESULTS[n])

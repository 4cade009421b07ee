"""The ``graft`` command line."""

import json
import shutil
import subprocess
import sys

import pytest

import graft
from graft.cli import EXIT_DIFF, EXIT_ERROR, main

RENDER = str(graft.corpus_path("render"))
FIG2 = str(graft.corpus_path("fig2"))


def run(capsys, *argv):
    code = main([str(a) for a in argv])
    out, err = capsys.readouterr()
    return code, out, err


def test_diff_render_pages(capsys):
    code, out, _ = run(capsys, "diff", RENDER, "--pages", 10, "--seed", 1, "--json")
    report = json.loads(out)
    assert code == 0 and report["equal"] and report["differences"] == []
    assert report["statementsEqual"]
    assert 0 < report["ratios"]["nodeVisits"] < 1
    assert report["tree"] == {"generator": "render", "pages": 10, "seed": 1}


def test_identity_fusion_round_trip(capsys, tmp_path):
    out_path = tmp_path / "fig2_fused.tg"
    stats_path = tmp_path / "stats.json"
    code, _, _ = run(capsys, "fuse", FIG2, "--max-seq", 1, "-o", out_path, "--stats", stats_path)
    assert code == 0
    stats = json.loads(stats_path.read_text())
    assert set(stats) >= {"sequencesFound", "unitsCreated", "unitsReused", "perUnit"}
    assert all(len(u["constituents"]) == 1 for u in stats["perUnit"])
    code, out, _ = run(capsys, "diff", FIG2, out_path, "--seed", 4)
    assert code == 0 and "state diff: empty" in out


def test_depgraph_dump(capsys):
    code, out, _ = run(capsys, "stats", FIG2, "--depgraph", "main:0")
    assert code == 0
    assert out.count("digraph") == 3 and "->" in out
    code, out, _ = run(capsys, "stats", FIG2, "--depgraph", "TextBox.computeWidth,TextBox.computeHeight", "--json")
    (g,) = json.loads(out)
    assert g["key"] == ["TextBox.computeWidth", "TextBox.computeHeight"]


def test_call_graph_and_automata_dumps(capsys):
    code, out, _ = run(capsys, "stats", FIG2, "--call-graph")
    assert code == 0 and out.startswith("digraph")
    code, out, _ = run(capsys, "stats", FIG2, "--automata", "Group.computeWidth:2", "--json")
    dumps = json.loads(out)
    assert code == 0 and "write_tree" in dumps and "read_tree" in dumps


def test_default_stats(capsys):
    code, out, _ = run(capsys, "stats", FIG2, "--json")
    report = json.loads(out)
    assert code == 0 and report["validation"]["ok"]
    assert report["fusion"]["unitsCreated"] <= report["unitBound"]


def test_run_writes_metrics(capsys, tmp_path):
    spec = tmp_path / "tree.json"
    spec.write_text(json.dumps({"generator": "random", "size": 30}))
    metrics = tmp_path / "m.json"
    code, out, _ = run(capsys, "run", FIG2, "--tree", spec, "--seed", 2, "--metrics", metrics)
    assert code == 0 and "nodeVisits" in out
    m = json.loads(metrics.read_text())
    assert m["nodeVisits"] == 60  # two passes over 30 nodes


def test_run_tree_literal(capsys, tmp_path):
    lit = tmp_path / "tree.txt"
    lit.write_text('TextBox Text="ab" {\n  Next: End\n}\n')
    code, out, _ = run(capsys, "run", FIG2, "--tree", lit, "--json")
    assert code == 0 and json.loads(out)["metrics"]["nodeVisits"] == 4


def test_diff_reports_differences(capsys, tmp_path):
    other = tmp_path / "other.tg"
    other.write_text(graft.corpus_path("fig2").read_text().replace("this.Border.Size * 2", "this.Border.Size * 3"))
    code, out, _ = run(capsys, "diff", FIG2, other, "--json")
    assert code == EXIT_DIFF and not json.loads(out)["equal"]


@pytest.mark.parametrize("argv, error", [
    (["run", "missing.tg"], "IOError"),
    (["fuse", FIG2, "--max-seq", "0"], "UsageError"),
    (["stats", FIG2, "--depgraph", "main:7"], "UsageError"),
    (["stats", FIG2, "--automata", "Nope.f:0"], "UsageError"),
    (["run", FIG2, "--pages", "3"], "UsageError"),
])
def test_errors_are_json_on_stderr(capsys, argv, error):
    code, out, err = run(capsys, *argv)
    assert code == EXIT_ERROR and out == ""
    assert json.loads(err)["error"] == error


def test_syntax_error_reports_position(capsys, tmp_path):
    bad = tmp_path / "bad.tg"
    bad.write_text("node A {\n  int x\n}\nmain { }\n")
    code, _, err = run(capsys, "stats", bad)
    e = json.loads(err)
    assert code == EXIT_ERROR and e["error"] == "SyntaxError" and e["line"] == 3


def test_installed_script():
    exe = shutil.which("graft")
    cmd = [exe] if exe else [sys.executable, "-m", "graft.cli"]
    p = subprocess.run(cmd + ["stats", FIG2, "--json"], capture_output=True, text=True, check=False)
    assert p.returncode == 0 and json.loads(p.stdout)["fusion"]["unitsCreated"] == 3

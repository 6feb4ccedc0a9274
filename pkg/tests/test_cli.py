import csv
import io
import json
import os
import subprocess
import sys

import pytest

from actdiag.cli import CORPUS_COLUMNS, RunConfig, main, run_corpus, write_atomic
from actdiag.reporting import check_dot, parse_report
from conftest import activity, corpus_path

MINIMAL = str(corpus_path("minimal"))
C3 = str(corpus_path("c3_motivating"))
C1 = str(corpus_path("c1_cloud_network"))

LOOP = activity(
    "loop",
    [("init", "Initial"), ("m", "Merge"), ("a", "BasicAction"), ("d", "Decision"), ("fin", "ActivityFinal")],
    [("init", "m"), ("m", "a"), ("a", "d"), ("d", "m"), ("d", "fin")],
)
FORK = activity(
    "fk",
    [("init", "Initial"), ("f", "Fork"), ("a", "BasicAction"), ("b", "BasicAction"), ("fin", "ActivityFinal")],
    [("init", "f"), ("f", "a"), ("f", "b"), ("a", "fin"), ("b", "fin")],
)


def write_diagram(tmp_path, act, name=None):
    path = tmp_path / f"{name or act['id']}.json"
    path.write_text(json.dumps({"topLevel": act["id"], "activities": [act]}))
    return str(path)


# ------------------------------------------------------------- exit codes


def test_passing_check_exits_zero(capsys):
    assert main(["check-all", MINIMAL]) == 0
    out = capsys.readouterr().out
    assert "deadlock: pass" in out and "determinism: pass" in out


def test_failing_check_exits_one(capsys):
    assert main(["check-deadlock", C3]) == 1
    out = capsys.readouterr().out
    assert "trace:" in out and "waiting on: ce_ad.7, ce_ad.10" in out


@pytest.mark.parametrize(
    "argv",
    [
        [],
        ["frobnicate", MINIMAL],
        ["check-all"],
        ["check-all", "/no/such/file.json"],
        ["check-all", MINIMAL, "--max-tokens", "0"],
        ["check-all", MINIMAL, "--hide", "nonsense"],
        ["check-all", MINIMAL, "--max-tokens", "many"],
    ],
)
def test_usage_and_input_errors_exit_two(argv, capsys):
    assert main(argv) == 2


def test_malformed_diagram_exits_two(tmp_path, capsys):
    bad = tmp_path / "bad.json"
    bad.write_text("{ not json")
    assert main(["check-all", str(bad)]) == 2
    assert "bad.json" in capsys.readouterr().err


def test_state_limit_exits_three(tmp_path, capsys):
    report = tmp_path / "r.json"
    assert main(["check-all", C1, "--state-limit", "5", "--report", str(report)]) == 3
    (dl, det) = parse_report(report.read_text())
    assert dl.result == det.result == "resource-limit"
    assert json.loads(report.read_text())["checks"][0]["statistics"]["statesExplored"] == 5


def test_token_overflow_exits_three(tmp_path, capsys):
    path = write_diagram(tmp_path, FORK)
    assert main(["check-deadlock", path, "--max-tokens", "1", "--strict-tokens"]) == 3
    assert "token-overflow" in capsys.readouterr().out
    # without strict mode the count is clamped and the check goes through
    assert main(["check-deadlock", path, "--max-tokens", "1"]) == 0


def test_divergence_exits_four(tmp_path, capsys):
    path = write_diagram(tmp_path, LOOP)
    # visible, the unguarded decision is merely nondeterministic
    assert main(["check-determinism", path]) == 1
    assert main(["check-determinism", path, "--hide", "ce,behavior"]) == 4
    assert main(["check-all", path, "--hide", "ce", "--hide", "behavior"]) == 4


def test_validate(tmp_path, capsys):
    assert main(["validate", MINIMAL]) == 0
    broken = activity("x", [("init", "Initial"), ("ff", "FlowFinal"), ("a", "BasicAction")], [("init", "ff"), ("ff", "a")])
    assert main(["validate", write_diagram(tmp_path, broken)]) == 1
    assert "final-no-outgoing" in capsys.readouterr().out


def test_version(capsys):
    assert main(["--version"]) == 0


# -------------------------------------------------------------- artifacts


def test_check_writes_all_artifacts(tmp_path, capsys):
    r, d, c = tmp_path / "out" / "r.json", tmp_path / "out" / "g.dot", tmp_path / "out" / "m.csp"
    assert main(["check-all", C3, "--report", str(r), "--dot", str(d), "--cspm", str(c)]) == 1
    reports = parse_report(r.read_text())
    assert [x.property for x in reports] == ["deadlock", "determinism"]
    check_dot(d.read_text())
    assert "MAIN =" in c.read_text()
    assert sorted(os.listdir(tmp_path / "out")) == ["g.dot", "m.csp", "r.json"]


def test_outputs_must_be_distinct_and_spare_the_input(tmp_path, capsys):
    same = str(tmp_path / "x")
    assert main(["check-all", MINIMAL, "--report", same, "--dot", same]) == 2
    assert main(["check-all", MINIMAL, "--report", MINIMAL]) == 2
    assert not os.path.exists(same)


def test_debug_trace_shows_hidden_events(tmp_path, capsys):
    r = tmp_path / "r.json"
    assert main(["check-deadlock", C3, "--debug-trace", "--report", str(r)]) == 1
    (rep,) = parse_report(r.read_text())
    assert any(e.startswith("update_ad") for e in rep.full_trace)
    assert [e for e in rep.full_trace if not e.startswith(("update", "clear", "tau"))] == list(rep.trace)


def test_translate_to_stdout_and_file(tmp_path, capsys):
    assert main(["translate", MINIMAL]) == 0
    text = capsys.readouterr().out
    assert text.startswith("-- activity diagram ad")
    out = tmp_path / "m.csp"
    assert main(["translate", MINIMAL, "--cspm", str(out)]) == 0
    assert out.read_text() == text


def test_config_file_is_read_and_flags_win(tmp_path, capsys):
    path = write_diagram(tmp_path, FORK)
    cfg = tmp_path / "cfg.json"
    cfg.write_text(json.dumps({"max-tokens": 1, "strict-tokens": True}))
    assert main(["check-deadlock", path, "--config", str(cfg)]) == 3
    assert main(["check-deadlock", path, "--config", str(cfg), "--max-tokens", "5"]) == 0
    cfg.write_text("[1, 2]")
    assert main(["check-deadlock", path, "--config", str(cfg)]) == 2
    assert main(["check-deadlock", path, "--config", str(tmp_path / "missing.json")]) == 2


def test_atomic_write_leaves_no_temporaries(tmp_path):
    target = tmp_path / "a" / "b.txt"
    write_atomic(str(target), "one")
    write_atomic(str(target), "two")
    assert target.read_text() == "two"
    assert os.listdir(target.parent) == ["b.txt"]


def test_failed_atomic_write_keeps_the_old_file(tmp_path):
    target = tmp_path / "b.txt"
    write_atomic(str(target), "old")

    class Boom:
        def __str__(self):
            raise RuntimeError

    with pytest.raises(TypeError):
        write_atomic(str(target), Boom())
    assert target.read_text() == "old"
    assert os.listdir(tmp_path) == ["b.txt"]


# ------------------------------------------------------------------ corpus


def test_corpus_summary(tmp_path, capsys):
    for name in ("minimal", "c3_motivating"):
        (tmp_path / f"{name}.json").write_text(corpus_path(name).read_text())
    (tmp_path / "broken.json").write_text("{")
    out_csv = tmp_path / "sum.csv"
    arts = tmp_path / "arts"
    assert main(["corpus", str(tmp_path), "--csv", str(out_csv), "--artifacts", str(arts)]) == 0
    captured = capsys.readouterr()
    assert "broken" in captured.err
    rows = list(csv.DictReader(io.StringIO(out_csv.read_text())))
    assert [r["model"] for r in rows] == ["broken", "c3_motivating", "minimal"]
    assert tuple(rows[0]) == CORPUS_COLUMNS
    assert rows[0]["error"] and not rows[1]["error"]
    assert (rows[1]["deadlock"], rows[2]["deadlock"]) == ("fail", "pass")
    assert sorted(os.listdir(arts)) == sorted(
        f"{m}.{ext}" for m in ("c3_motivating", "minimal") for ext in ("report.json", "dot", "csp")
    )


def test_corpus_in_parallel_matches_serial(tmp_path):
    for name in ("minimal", "c3_motivating", "det_overlap"):
        (tmp_path / f"{name}.json").write_text(corpus_path(name).read_text())
    strip = lambda rows: [{k: v for k, v in r.items() if not k.endswith("_ms")} for r in rows]
    serial = run_corpus(str(tmp_path))
    parallel = run_corpus(str(tmp_path), RunConfig("corpus", str(tmp_path), jobs=2))
    assert strip(serial) == strip(parallel)


def test_corpus_edge_cases(tmp_path, capsys):
    assert main(["corpus", str(tmp_path)]) == 0  # empty directory
    assert capsys.readouterr().out.startswith("model")
    assert main(["corpus", str(tmp_path / "nope")]) == 2


def test_console_entry_point():
    out = subprocess.run(
        [sys.executable, "-m", "actdiag.cli", "check-deadlock", MINIMAL], capture_output=True, text=True
    )
    assert out.returncode == 0 and "deadlock: pass" in out.stdout

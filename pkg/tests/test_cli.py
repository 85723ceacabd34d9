import json
import subprocess
import sys

from pddl_rag.cli import main

from samples import BARMAN_SNIPPET, DATASET, FIXTURES, PICKUP_BUG, fenced

BW01 = DATASET / "bw-01"
GOLD_DF, GOLD_PF = str(BW01 / "gold_domain.pddl"), str(BW01 / "gold_problem.pddl")


def run(capsys, *argv):
    code = main([str(a) for a in argv])
    out, err = capsys.readouterr()
    return code, out, err


def test_check_clean_file(capsys):
    assert run(capsys, "check", GOLD_DF, GOLD_PF) == (0, "ok\n", "")


def test_check_reports_solver_style_line(capsys):
    code, out, _ = run(capsys, "check", FIXTURES / "pickup_preconditions_bug.pddl")
    assert code == 1
    assert "domain: syntax error in line" in out and "':PRECONDITIONS': domain definition expected" in out


def test_check_json_records(capsys):
    code, out, _ = run(capsys, "check", FIXTURES / "barman_multitype_bug.pddl", "--json")
    records = [json.loads(line) for line in out.splitlines()]
    assert code == 1 and records
    assert {"file", "line", "token", "category", "message"} <= set(records[0])
    assert any(r["category"] == "typing" for r in records)


def test_check_effects_warning_and_strict(capsys, tmp_path):
    df = tmp_path / "d.pddl"
    df.write_text((FIXTURES / "pickup_preconditions_fixed.pddl").read_text())
    code, out, _ = run(capsys, "check", df)
    assert code == 0 and ":EFFECTS" in out.upper()
    assert run(capsys, "check", df, "--strict")[0] == 1


def test_validate_and_solve(capsys, tmp_path):
    code, out, _ = run(capsys, "solve", GOLD_DF, GOLD_PF)
    assert code == 0 and out.strip()
    plan = tmp_path / "plan.txt"
    plan.write_text(out)
    assert run(capsys, "validate", GOLD_DF, GOLD_PF, plan)[:2] == (0, "valid\n")
    plan.write_text("(stack b1 b2)\n")
    code, out, _ = run(capsys, "validate", GOLD_DF, GOLD_PF, plan)
    assert code == 1 and "precondition_failure" in out


def test_validate_rejects_unknown_action(capsys, tmp_path):
    plan = tmp_path / "plan.txt"
    plan.write_text("(fly b1)\n")
    code, out, _ = run(capsys, "validate", GOLD_DF, GOLD_PF, plan)
    assert code == 1 and out.startswith("invalid plan")


def test_validate_with_broken_domain(capsys, tmp_path):
    plan = tmp_path / "plan.txt"
    plan.write_text("")
    code, out, _ = run(capsys, "validate", FIXTURES / "pickup_preconditions_bug.pddl", GOLD_PF, plan)
    assert code == 1 and ":PRECONDITIONS" in out


def test_solve_json_feedback(capsys, tmp_path):
    df = tmp_path / "d.pddl"
    df.write_text(PICKUP_BUG)
    code, out, _ = run(capsys, "solve", df, GOLD_PF, "--json")
    fb = json.loads(out)
    assert code == 1 and fb["status"] == "syntax_error" and fb["file"] == "DF"


def test_solve_bad_planner_command(capsys):
    assert run(capsys, "solve", GOLD_DF, GOLD_PF, "--planner-cmd", "plan {df}")[0] == 2


def test_retrieve_predicates(capsys, tmp_path):
    q = tmp_path / "q.txt"
    q.write_text(BARMAN_SNIPPET + " (")
    code, out, _ = run(capsys, "retrieve", "bundled", "--query-file", q, "--top-k", 2)
    lines = out.splitlines()
    assert code == 0 and len(lines) == 2 and lines[0].startswith("1. Predicates ")


def test_retrieve_no_hits_and_bad_params(capsys):
    assert run(capsys, "retrieve", "-", "--query", "zzzz")[0] == 1
    assert run(capsys, "retrieve", "-", "--query", "goal", "--top-k", 0)[0] == 2
    assert run(capsys, "retrieve", "-")[0] == 2


def test_ingest_docs_round_trip(capsys, tmp_path):
    src = tmp_path / "docs"
    src.mkdir()
    (src / "goal.md").write_text("type_name: Goal\ndocumentation: What must hold at the end.\n")
    out_file = tmp_path / "corpus.json"
    code, out, _ = run(capsys, "ingest-docs", src, out_file)
    assert code == 0 and out.startswith("1 sections")
    code, out, _ = run(capsys, "retrieve", out_file, "--query", "goal end")
    assert code == 0 and "Goal" in out
    assert run(capsys, "ingest-docs", tmp_path / "empty-none", out_file)[0] == 1


def test_missing_input_is_usage_error(capsys, tmp_path):
    code, _, err = run(capsys, "check", tmp_path / "nope.pddl")
    assert code == 2 and "cannot read" in err


def test_usage_errors(capsys):
    assert run(capsys)[0] == 2
    assert run(capsys, "frobnicate")[0] == 2
    assert run(capsys, "--version")[0] == 0


def test_run_and_report(capsys, tmp_path):
    scripts = tmp_path / "scripts"
    scripts.mkdir()
    for task in ("bw-01", "bw-02"):
        d = DATASET / task
        (scripts / f"{task}.json").write_text(json.dumps(
            {"base": fenced((d / "gold_domain.pddl").read_text(), (d / "gold_problem.pddl").read_text())}))
    data = tmp_path / "data"
    for task in ("bw-01", "bw-02"):
        (data / task).mkdir(parents=True)
        for f in (DATASET / task).iterdir():
            (data / task / f.name).write_text(f.read_text())
    cfg = tmp_path / "run.json"
    cfg.write_text(json.dumps({"variant": {"generation": "base"}, "provider": {"kind": "replay", "script": "scripts"},
                               "dataset": "data", "output_dir": "first"}))
    code, out, _ = run(capsys, "run", cfg, "--out", tmp_path / "out", "--max-concurrency", 2)
    assert code == 0 and "100 / 100" in out
    records = tmp_path / "out" / "records.jsonl"
    assert len(records.read_text().splitlines()) == 2
    code, out, _ = run(capsys, "report", records, "--out", tmp_path / "again")
    assert code == 0 and (tmp_path / "again" / "curve.csv").read_text() == "round,accuracy\n0,100.0\n"


def test_run_bad_config(capsys, tmp_path):
    cfg = tmp_path / "run.json"
    cfg.write_text("{not json")
    assert run(capsys, "run", cfg)[0] == 2
    cfg.write_text(json.dumps({"dataset": str(tmp_path / "missing")}))
    assert run(capsys, "run", cfg)[0] == 2


def test_report_bad_records(capsys, tmp_path):
    bad = tmp_path / "records.jsonl"
    bad.write_text("garbage\n")
    assert run(capsys, "report", bad)[0] == 2
    bad.write_text("")
    assert run(capsys, "report", bad)[0] == 1


def test_module_entry_point():
    proc = subprocess.run([sys.executable, "-m", "pddl_rag", "check", GOLD_DF], capture_output=True, text=True)
    assert proc.returncode == 0 and proc.stdout == "ok\n"

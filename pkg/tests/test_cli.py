import json
import subprocess
import sys

import pytest

from stvmargin.cli import EXIT_BUDGET, EXIT_OK, EXIT_PARSE, EXIT_REJECTED, main
from stvmargin.election import serialize_blt

from conftest import TABLE1A


def run(capsys, *argv):
    code = main([str(a) for a in argv])
    out = capsys.readouterr()
    return code, out.out, out.err


def test_tabulate(capsys):
    code, out, _ = run(capsys, "tabulate", TABLE1A)
    doc = json.loads(out)
    assert code == EXIT_OK
    assert doc["quota"] == 308
    assert json.dumps(doc).count("round") >= 4


def test_tabulate_to_file(capsys, tmp_path):
    out = tmp_path / "count.json"
    assert run(capsys, "tabulate", TABLE1A, "--decimals", 3, "--json", out)[0] == EXIT_OK
    assert json.loads(out.read_text())["quota"] == 308


def test_quota(capsys):
    assert run(capsys, "quota", 1230, 3)[1].strip() == "308"
    assert run(capsys, "quota", TABLE1A)[1].strip() == "308"
    assert run(capsys, "quota", 10, 0)[0] == EXIT_PARSE
    assert run(capsys, "quota", 1, 2, 3)[0] == EXIT_PARSE


def test_parse_error_exit_code(capsys, tmp_path):
    bad = tmp_path / "bad.blt"
    bad.write_text("3 1\n1 9 0\n0\n")
    code, _, err = run(capsys, "tabulate", bad)
    assert code == EXIT_PARSE and "line 2" in err
    assert run(capsys, "tabulate", tmp_path / "nope.blt")[0] == EXIT_PARSE


def test_bounds(capsys):
    code, out, _ = run(capsys, "bounds", TABLE1A)
    assert code == EXIT_OK
    assert json.loads(out)["best"] == 65


def test_bounds_with_prefix_and_dump(capsys):
    prefix = json.dumps([{"candidate": 2, "action": "seat"}, {"candidate": 3, "action": "seat"}])
    code, out, _ = run(capsys, "bounds", TABLE1A, "--prefix", prefix, "--dump-bounds")
    doc = json.loads(out)
    assert doc["heuristic"]["value"] == 106
    assert len(doc["bounds"]["rounds"]) == 3
    assert len(doc["legacy_bounds"]) == 3
    shortcut = json.loads(run(capsys, "bounds", TABLE1A, "--prefix", prefix, "--pile-shortcut")[1])
    assert shortcut["heuristic"]["value"] == 150


def test_bounds_prefix_from_file(capsys, tmp_path):
    f = tmp_path / "p.json"
    f.write_text("[[2, 1], [4, 1]]")
    doc = json.loads(run(capsys, "bounds", TABLE1A, "--prefix", f"@{f}")[1])
    assert doc["prefix"] == [[2, 1], [4, 1]]
    assert run(capsys, "bounds", TABLE1A, "--prefix", "[[2,")[0] == EXIT_PARSE


def _write_modified(tmp_path, election, source, target, n):
    path = tmp_path / "mod.blt"
    path.write_text(serialize_blt(election.with_profile(election.profile.moved(source, target, n))))
    return path


def test_bounds_rejects_bad_external_manipulation(capsys, tmp_path, table1a):
    same = _write_modified(tmp_path, table1a, (0,), (0, 1), 3)
    code, out, _ = run(capsys, "bounds", TABLE1A, "--external-manipulation", same)
    assert code == EXIT_REJECTED and json.loads(out)["rejected"]


def test_verify(capsys, tmp_path, table1a):
    good = _write_modified(tmp_path, table1a, (0,), (1,), 65)
    code, out, _ = run(capsys, "verify", TABLE1A, good)
    doc = json.loads(out)
    assert code == EXIT_OK and doc["distance"] == 65 and doc["accepted"]
    same = _write_modified(tmp_path, table1a, (0,), (0, 1), 3)
    assert run(capsys, "verify", TABLE1A, same)[0] == EXIT_REJECTED


def test_verify_total_mismatch(capsys, tmp_path):
    other = tmp_path / "small.blt"
    other.write_text("5 3\n1 1 0\n0\n")
    code, out, _ = run(capsys, "verify", TABLE1A, other)
    assert code == EXIT_REJECTED and json.loads(out)["accepted"] is False


def test_margin_lb(capsys, tmp_path):
    code, out, _ = run(capsys, "margin-lb", TABLE1A, "--trace")
    doc = json.loads(out)
    assert code == EXIT_OK
    assert (doc["lower_bound"], doc["exact"]) == (65, True)
    assert doc["trace"]["rul"][0] == 65
    target = tmp_path / "m.json"
    code, out, _ = run(capsys, "margin-lb", TABLE1A, "--variant", "New+DLB", "--json", target)
    assert "lower bound 65" in out
    assert json.loads(target.read_text())["lower_bound"] == 65


def test_margin_lb_budget_exit(capsys):
    code, out, _ = run(capsys, "margin-lb", TABLE1A, "--no-dlb", "--timeout", 0)
    assert code == EXIT_BUDGET
    assert json.loads(out)["timed_out"] is True


def test_margin_lb_bad_options(capsys):
    assert run(capsys, "margin-lb", TABLE1A, "--variant", "Turbo")[0] == EXIT_PARSE
    assert run(capsys, "margin-lb", TABLE1A, "--oracle", "magic")[0] == EXIT_PARSE


def test_export_minlp(capsys, tmp_path):
    out = tmp_path / "model.json"
    code, _, _ = run(capsys, "export-minlp", TABLE1A, "--prefix", "[[2, 1]]", "--out", out)
    assert code == EXIT_OK
    doc = json.loads(out.read_text())
    assert doc["meta"]["quota"] == 308 and doc["objective"]["terms"]
    code, text, _ = run(capsys, "export-minlp", TABLE1A, "--prefix", '[{"candidates": [0, 1], "action": "elim"}]')
    assert json.loads(text)["meta"]["rounds"] == 1


def test_bench(capsys, tmp_path):
    csv_path = tmp_path / "runs.csv"
    code, _, _ = run(capsys, "bench", TABLE1A, "--variants", "New+DLB", "--repetitions", 1, "--csv", csv_path)
    assert code == EXIT_OK
    assert "65" in csv_path.read_text()
    code, out, _ = run(capsys, "bench", TABLE1A, "--variants", "New+Both", "--repetitions", 1)
    assert json.loads(out)[0]["lower_bound"] == 65
    assert run(capsys, "bench", TABLE1A, "--variants", "Nope")[0] == EXIT_PARSE


def test_module_entry_point():
    proc = subprocess.run([sys.executable, "-m", "stvmargin", "quota", "100", "4"], capture_output=True, text=True)
    assert proc.returncode == 0 and proc.stdout.strip() == "21"


def test_missing_subcommand():
    with pytest.raises(SystemExit):
        main([])

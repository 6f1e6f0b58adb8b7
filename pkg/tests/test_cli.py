import json
import subprocess
import sys

import pytest

from ssmlab import cli, schemas
from ssmlab.closedform import ssm_relative_revenue


def run(argv):
    return json.loads(cli.run(argv))


def test_solve_round_trips():
    doc = run(["solve", "--alpha", "0.33,0.48"])
    schemas.validate(doc, "solve")
    assert len(doc["shares"]) == 3
    assert sum(doc["shares"]) == pytest.approx(1.0)
    assert doc["residual"] <= 1e-12
    assert doc["variant"] in ("appendix", "printed")


def test_solve_gamma_matches_closed_form():
    doc = run(["solve", "--alpha", "0.3", "--prop", "gamma=0.5"])
    assert doc["shares"][0] == pytest.approx(ssm_relative_revenue(0.3, 0.5), abs=1e-10)
    assert doc["prop"] == "gamma=0.5"


def test_domain_error_exit_code(capsys):
    assert cli.main(["solve", "--alpha", "0.6,0.1"]) == 2
    assert "out of (0,0.5]" in capsys.readouterr().err
    assert cli.main(["solve", "--alpha", "a,b"]) == 2


def test_io_error_exit_code(tmp_path):
    assert cli.main(["solve", "--alpha", "0.2", "--prop", f"table={tmp_path / 'missing.json'}"]) == 4


def test_table_file_errors(tmp_path, capsys):
    f = tmp_path / "t.json"
    f.write_text('{\n  "1,H": {"H": [0.9, 0.3]}\n}\n')
    assert cli.main(["solve", "--alpha", "0.2", "--prop", f"table={f}"]) == 2
    assert "line 2" in capsys.readouterr().err


def test_table_file_accepted(tmp_path):
    f = tmp_path / "t.json"
    f.write_text('{"1,H": {"H": [0.25, 0.75]}}')
    doc = run(["solve", "--alpha", "0.3", "--prop", f"table={f}"])
    assert doc["shares"][0] == pytest.approx(ssm_relative_revenue(0.3, 0.25), abs=1e-10)


def test_variant_flag_and_env(monkeypatch):
    assert run(["solve", "--alpha", "0.2,0.3", "--variant", "printed"])["variant"] == "printed"
    monkeypatch.setenv("SSMLAB_VARIANT", "printed")
    assert run(["solve", "--alpha", "0.2,0.3"])["variant"] == "printed"


def test_game_commands():
    doc = run(["game", "table", "--alpha", "0.2,0.225"])
    schemas.validate(doc, "table")
    assert set(doc["utilities"]) == {"HH", "HS", "SH", "SS"}
    assert doc["utilities"]["HS"][0] == pytest.approx(0.20352746, abs=1e-8)
    doc = run(["game", "pne", "--alpha", "0.24,0.24"])
    schemas.validate(doc, "pne")
    assert set(doc["pne"]) == {"HH", "SS"}
    doc = run(["game", "coalitions", "--alpha", "0.33,0.48", "--victim", "2"])
    schemas.validate(doc, "coalitions")
    assert doc["coalitions"] == []
    doc = run(["game", "type", "--alpha", "0.24,0.24", "--grid-step", "0.01"])
    schemas.validate(doc, "type")
    assert doc["commitment_type"] == 1
    doc = run(["game", "sse", "--alpha", "0.05,0.05", "--grid-step", "0.01"])
    schemas.validate(doc, "sse")
    assert doc["best"]["s1"] == 0.0


def test_game_table_csv():
    out = cli.run(["game", "table", "--alpha", "0.235,0.345", "--format", "csv"])
    lines = out.strip().split("\n")
    assert lines[0] == "profile,U1,U2"
    assert lines[1] == "HH,0.235000000,0.345000000"


def test_threshold_command():
    doc = run(["threshold", "--miners", "1"])
    schemas.validate(doc, "threshold")
    assert doc["eta"] == pytest.approx(0.268, abs=1e-3)
    assert doc["pareto"] is True


def test_simulate_is_byte_identical():
    argv = ["simulate", "--alpha", "0.3", "--strategies", "ssm", "--blocks", "10000", "--seed", "5", "--replicas", "2"]
    a, b = cli.run(argv), cli.run(argv)
    assert a == b
    doc = json.loads(a)
    schemas.validate(doc, "simulate")
    assert len(doc["runs"]) == 2 and len(doc["ci95"]) == 2


def test_simulate_rejects_short_runs():
    assert cli.main(["simulate", "--alpha", "0.3", "--strategies", "ssm", "--blocks", "10"]) == 2


def test_sweep_bytes_identical_across_jobs(tmp_path):
    base = ["sweep", "--free", "1:0.2:0.23", "--free", "2:0.2:0.22", "--step", "0.01", "--quantity", "pne-class"]
    f1, f2 = tmp_path / "a.csv", tmp_path / "b.csv"
    assert cli.main(base + ["--out", str(f1)]) == 0
    assert cli.main(base + ["--out", str(f2), "--jobs", "3"]) == 0
    assert f1.read_bytes() == f2.read_bytes()
    lines = f1.read_text().splitlines()
    assert lines[0].startswith("# ") and lines[1] == "alpha1,alpha2,pne,n_pne,error"
    assert len(lines) == 2 + 4 * 3
    assert lines[2].startswith("0.200000000,0.200000000,")


def test_sweep_records_row_errors():
    out = cli.run(["sweep", "--free", "1:0.1:0.12", "--fixed", "2=0.9", "--step", "0.01"])
    rows = out.strip().split("\n")[2:]
    assert len(rows) == 3
    assert all("out of (0,0.5]" in r for r in rows)


def test_sweep_three_miners_quantities():
    for q in ("shares", "coalition-penalty", "commitment-type", "sse-surplus"):
        out = cli.run(["sweep", "--free", "1:0.2:0.2", "--fixed", "2=0.2", "--fixed", "3=0.36", "--quantity", q])
        row = out.strip().split("\n")[2].split(",")
        assert row[-1] == "", (q, row)


def test_sweep_bad_step():
    assert cli.main(["sweep", "--free", "1:0.1:0.2", "--step", "0.5"]) == 2


def test_console_entry_point():
    p = subprocess.run([sys.executable, "-m", "ssmlab", "solve", "--alpha", "0.6"], capture_output=True, text=True)
    assert p.returncode == 2

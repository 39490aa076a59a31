import csv
import io
import json
import math
from pathlib import Path

import pytest

from clockbound import cli
from clockbound.relations import AuditReport, RelationId

SCENARIOS = Path(__file__).resolve().parent.parent / "scenarios"


def run(capsys, *argv):
    code = cli.main(list(argv))
    out = capsys.readouterr()
    return code, out.out, out.err


def rows_of(text):
    lines = text.splitlines()
    assert lines[0] == "# schema=clockbound-v1"
    return list(csv.DictReader(io.StringIO("\n".join(lines[1:]))))


def test_fmt():
    assert cli.fmt(-0.0) == "0"
    assert cli.fmt(-1e-300 * 1e-300) == "0"
    assert cli.fmt(math.inf) == "inf"
    assert cli.fmt(1 / 3) == "0.333333333333"
    assert cli.fmt(True) == "true"


def test_eigenstate_scenario(tmp_path, capsys):
    p = tmp_path / "eig.yaml"
    p.write_text("hamiltonian: {preset: pauli-z}\nstate: {ket: [1, 0]}\ntime: {grid: [0, 1]}\n")
    code, out, _ = run(capsys, "audit", str(p))
    assert code == 0
    rows = rows_of(out)
    assert rows and all(abs(float(r["slack"])) < 1e-6 for r in rows)


def test_bad_state_exits_one_and_names_key(tmp_path, capsys):
    p = tmp_path / "bad.yaml"
    p.write_text("hamiltonian: {preset: pauli-z}\nstate: {density: [[1.5, 0], [0, -0.5]]}\n"
                 "time: {grid: [0, 1]}\n")
    code, out, err = run(capsys, "audit", str(p))
    assert code == 1 and out == ""
    assert "state.density" in err


def test_input_errors(capsys, monkeypatch):
    assert run(capsys, "audit")[0] == 1
    assert run(capsys, "audit", "--random", "2", "--alpha", "0.5,oops")[0] == 1
    assert run(capsys, "figure2", "--thetas", "1")[0] == 1
    assert run(capsys, "nonsense")[0] == 1
    monkeypatch.setenv("CLOCKBOUND_THREADS", "zero")
    assert run(capsys, "audit", "--random", "1")[0] == 1


def test_violation_exits_two(capsys, monkeypatch):
    def fake(*args, **kwargs):
        return AuditReport(RelationId.MAIN, "2", {"time": 0.1, "energy": 0.1}, 1.0, -0.8)

    monkeypatch.setattr(cli, "audit_main", fake)
    code, out, err = run(capsys, "audit", str(SCENARIOS / "plus_state.yaml"))
    assert code == 2
    assert "violation" in {r["status"] for r in rows_of(out)}
    assert "slack" in err


def test_unasserted_orders(capsys):
    code, out, _ = run(capsys, "audit", str(SCENARIOS / "plus_state.yaml"), "--alpha", "0.3")
    assert code == 0
    status = {(r["relation"], r["status"]) for r in rows_of(out)}
    assert ("main", "unasserted") in status and ("asymmetry", "ok") in status


def test_random_campaign_rows_and_threads(capsys, monkeypatch):
    code, serial, _ = run(capsys, "audit", "--random", "3", "--seed", "7", "--alpha", "0.5,2,inf")
    assert code == 0 and len(rows_of(serial)) == 9
    monkeypatch.setenv("CLOCKBOUND_THREADS", "2")
    code, parallel, _ = run(capsys, "audit", "--random", "3", "--seed", "7", "--alpha", "0.5,2,inf")
    assert code == 0 and parallel == serial


def test_json_output(tmp_path, capsys):
    out = tmp_path / "f2.json"
    assert run(capsys, "figure2", "--thetas", "5", "--out", str(out))[0] == 0
    doc = json.loads(out.read_text())
    assert doc["schema"] == "clockbound-v1" and len(doc["rows"]) == 5
    assert doc["rows"][0]["energy_uncertainty"] == 0


def test_game_and_truncation_and_scan(capsys):
    code, out, _ = run(capsys, "game", str(SCENARIOS / "binary_game.yaml"), "--trials", "2000")
    assert code == 0
    row = rows_of(out)[0]
    assert row["strategy"] == "helstrom"
    assert math.isclose(float(row["predicted_time"]), float(row["optimal_time"]), abs_tol=1e-6)
    code, out, _ = run(capsys, "truncation", "--state", "coherent", "--cutoffs", "1,5,9")
    assert code == 0 and len(rows_of(out)) == 3
    code, out, _ = run(capsys, "scan", "--over", "theta", "--values", "0,0.5,1")
    assert code == 0 and [r["parameter"] for r in rows_of(out)] == ["theta"] * 3
    assert run(capsys, "scan", "--over", "tfinal", "--values", "-1")[0] == 1
    assert run(capsys, "truncation", "--cutoffs", "-3")[0] == 1


def test_game_needs_discrete_time(capsys):
    assert run(capsys, "game", str(SCENARIOS / "continuous.yaml"))[0] == 1


@pytest.mark.parametrize("argv", [
    ["figure2", "--thetas", "7"],
    ["game", str(SCENARIOS / "binary_game.yaml"), "--trials", "3000", "--seed", "42"],
    ["truncation"],
    ["audit", str(SCENARIOS / "qutrit_memory.yaml")],
])
def test_byte_identical_reruns(argv, capsys):
    first = run(capsys, *argv)
    second = run(capsys, *argv)
    assert first == second

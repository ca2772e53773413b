import csv
import io
import json
import subprocess
import sys

import numpy as np
import pytest

from concmeasure.cli import main
from concmeasure.reports import CheckReport, dumps_json, format_float
from concmeasure.scenarios import (SCENARIOS, ScenarioError, emit_report, load_report,
                                   run_scenario, sweep_masks)


def run_cli(args, capsys):
    code = main(args)
    out = capsys.readouterr()
    return code, out.out, out.err


def write(tmp_path, name, doc):
    p = tmp_path / name
    p.write_text(json.dumps(doc))
    return str(p)


def test_float_format():
    assert format_float(0.1) == "0.10000000000000001"
    assert format_float(2.0) == "2.0"
    assert format_float(float("nan")) == "NaN"
    assert format_float(-float("inf")) == "-Infinity"
    doc = {"a": [1.5, 2], "b": {"c": None, "d": True}}
    assert json.loads(dumps_json(doc)) == doc


def test_report_json_roundtrip(tmp_path):
    rep = run_scenario("exp-tail", {"R": 2.0}, seed=0)
    text = emit_report(rep, "json", tmp_path / "r.json", stable=True)
    doc = load_report(tmp_path / "r.json")
    assert doc == load_report(text)
    assert doc["runtime_ms"] == 0.0
    assert [c["name"] for c in doc["checks"]] == [c.name for c in rep.checks]
    for c, src in zip(doc["checks"], rep.checks):
        assert c["lhs"] == src.lhs and c["rhs"] == src.rhs


def test_report_csv_rows():
    rep = run_scenario("hypercube-chain", {"n": 5})
    rows = list(csv.reader(io.StringIO(emit_report(rep, "csv"))))
    assert rows[0] == ["name", "lhs", "rhs", "constant", "tolerance", "passed"]
    assert len(rows) == 1 + len(rep.checks)
    assert all(len(r) == 6 for r in rows)


def test_exit_codes():
    rep = run_scenario("exp-tail", {"R": 1.0})
    assert rep.exit_code() == 0
    rep.checks.append(CheckReport.skipped("x", "hypothesis-unmet", 1.0))
    assert rep.exit_code() == 2
    rep.checks.append(CheckReport.compare("y", 2.0, 1.0, 1.0))
    assert rep.exit_code() == 1


def test_unknown_scenario_and_range():
    with pytest.raises(ScenarioError):
        run_scenario("nope")
    with pytest.raises(ScenarioError):
        run_scenario("hypercube-chain", {"n": 17})


def test_sweep_masks_are_prefix_stable():
    a = sweep_masks(4, 5, seed=3)
    b = sweep_masks(4, 9, seed=3)
    for x, y in zip(a, b):
        np.testing.assert_array_equal(x, y)
    assert all(m.any() for m in b)


def test_sweep_jobs_match_serial():
    a = run_scenario("thm11-sweep", {"samples": 6, "restarts": 2}, seed=1)
    b = run_scenario("thm11-sweep", {"samples": 6, "restarts": 2, "jobs": 2}, seed=1)
    assert [c.lhs for c in a.checks] == [c.lhs for c in b.checks]
    assert a.passed


def test_cheap_scenarios_pass():
    for name, params in [("hypercube-chain", {}), ("gaussian-shell", {}), ("exp-tail", {}),
                         ("monotone-metric", {}), ("thm13-exp", {}),
                         ("talagrand-tails", {"samples": 2000})]:
        assert run_scenario(name, params).passed, name
    assert set(SCENARIOS) >= {"marton", "nonlip-deviation", "product-sigma"}


def test_scenario_reports_are_seed_reproducible():
    a = emit_report(run_scenario("talagrand-tails", {"samples": 3000}, seed=5), stable=True)
    b = emit_report(run_scenario("talagrand-tails", {"samples": 3000}, seed=5), stable=True)
    c = emit_report(run_scenario("talagrand-tails", {"samples": 3000}, seed=6), stable=True)
    assert a == b and a != c


# --- CLI ----------------------------------------------------------------------

def test_cli_space_build_and_restrict(tmp_path, capsys):
    code, out, _ = run_cli(["space", "build", "hypercube", "--n", "2"], capsys)
    assert code == 0
    doc = json.loads(out)
    assert doc["weights"] == [0.25] * 4 and doc["distance"][0][3] == 2.0
    code, out, _ = run_cli(["space", "build", "chain", "--n", "3"], capsys)
    assert json.loads(out) == {"members": [0, 4, 6, 7]}
    mask = write(tmp_path, "m.json", {"members": [0, 4, 6, 7]})
    code, out, _ = run_cli(["space", "restrict", "--hypercube", "3", "--mask", mask], capsys)
    doc = json.loads(out)
    assert code == 0 and doc["mass"] == 0.5 and len(doc["labels"]) == 4


def test_cli_product(tmp_path, capsys):
    base = write(tmp_path, "b.json", {"labels": [0, 1], "distance": [[0, 1], [1, 0]],
                                      "weights": [0.5, 0.5]})
    code, out, _ = run_cli(["space", "build", "product", "--n", "2", "--base", base], capsys)
    assert code == 0 and json.loads(out)["distance"][0][3] == 2.0


def test_cli_norms_and_constants(tmp_path, capsys):
    sp = write(tmp_path, "s.json", {"labels": ["a", "b"], "distance": [[0, 1], [1, 0]],
                                    "weights": [0.5, 0.5]})
    field = write(tmp_path, "f.json", {"values": [1, 1]})
    code, out, _ = run_cli(["norm", "psi", "--space", sp, "--field", field], capsys)
    assert code == 0 and json.loads(out)["value"] == pytest.approx(1.2011224087864498)
    code, out, _ = run_cli(["norm", "lp", "--space", sp, "--field", field, "--p", "3"], capsys)
    assert json.loads(out)["value"] == pytest.approx(1.0)
    code, out, _ = run_cli(["const", "lambda1", "--space", sp], capsys)
    assert json.loads(out)["lambda1"] == pytest.approx(4.0)
    code, out, _ = run_cli(["const", "spread", "--hypercube", "2", "--restarts", "4"], capsys)
    assert json.loads(out)["lower"] == pytest.approx(0.5)
    code, out, _ = run_cli(["const", "sigma", "--space", sp, "--restarts", "4"], capsys)
    assert json.loads(out)["lower"] == pytest.approx(0.25)


def test_cli_transport(tmp_path, capsys):
    sp = write(tmp_path, "s.json", {"labels": [0, 1, 2], "distance": [[0, 1, 2], [1, 0, 1], [2, 1, 0]],
                                    "weights": [0.2, 0.3, 0.5]})
    n1 = write(tmp_path, "n1.json", {"values": [1, 0, 0]})
    n2 = write(tmp_path, "n2.json", {"values": [0, 0, 1]})
    plan = tmp_path / "plan.csv"
    code, out, _ = run_cli(["transport", "w1", "--space", sp, "--nu1", n1, "--nu2", n2,
                            "--plan-csv", str(plan)], capsys)
    assert code == 0 and json.loads(out)["value"] == pytest.approx(2.0)
    assert plan.read_text().splitlines() == ["i,j,mass", "0,2,1"]
    code, out, _ = run_cli(["transport", "sigma", "--space", sp, "--restarts", "2"], capsys)
    assert code == 0 and json.loads(out)["lower"] > 0


def test_cli_continuum(capsys):
    code, out, _ = run_cli(["continuum", "quad", "--family", "gaussian-1d", "--R", "0"], capsys)
    assert code == 0 and json.loads(out)["mass"] == pytest.approx(1.0, abs=1e-10)


def test_cli_input_errors(tmp_path, capsys):
    bad = write(tmp_path, "bad.json", {"labels": [0, 1], "distance": [[0, 1], [2, 0]],
                                       "weights": [0.5, 0.5]})
    field = write(tmp_path, "f.json", {"values": [1, 1]})
    code, _, err = run_cli(["norm", "psi", "--space", bad, "--field", field], capsys)
    assert code == 3 and "symmetric" in err
    code, _, _ = run_cli(["norm", "psi", "--space", str(tmp_path / "missing.json"),
                          "--field", field], capsys)
    assert code == 3
    with pytest.raises(SystemExit) as info:
        main(["transport", "w1", "--hypercube", "1"])
    assert info.value.code == 2


def test_cli_verify_formats_and_seed_env(tmp_path, capsys, monkeypatch):
    code, out, err = run_cli(["verify", "exp-tail", "--R", "2", "--stable"], capsys)
    assert code == 0 and "exit 0" in err
    assert json.loads(out)["params"] == {"R": 2.0}
    out_path = tmp_path / "r.csv"
    code, _, _ = run_cli(["verify", "hypercube-chain", "--n", "3", "--format", "csv",
                          "--out", str(out_path)], capsys)
    assert out_path.read_text().startswith("name,lhs,rhs,constant,tolerance,passed\n")
    _, by_flag, _ = run_cli(["verify", "talagrand-tails", "--samples", "500", "--seed", "7",
                             "--stable"], capsys)
    monkeypatch.setenv("CONC_SEED", "7")
    _, by_env, _ = run_cli(["verify", "talagrand-tails", "--samples", "500", "--stable"], capsys)
    assert by_flag == by_env


def test_cli_verify_failing_constant(capsys):
    code, _, _ = run_cli(["verify", "exp-tail", "--R", "5", "--constant", "1e-6"], capsys)
    assert code == 1


def test_console_script_runs():
    proc = subprocess.run([sys.executable, "-m", "concmeasure.cli", "verify", "exp-tail",
                           "--stable"], capture_output=True, text=True)
    assert proc.returncode == 0 and json.loads(proc.stdout)["scenario"] == "exp-tail"

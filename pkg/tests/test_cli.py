import csv
import json

import numpy as np
import pytest

from bulkvac import solve
from bulkvac.cli import main, run_sweep
from bulkvac.config import example_path, load_config
from bulkvac.serialize import solution_from_json, solution_to_json

TOY = str(example_path("toy.json"))


def read_csv(path):
    with open(path) as fh:
        return list(csv.reader(fh))


def write_doc(tmp_path, doc, name="cfg.json"):
    path = tmp_path / name
    path.write_text(json.dumps(doc))
    return str(path)


def test_analyze_writes_tables(tmp_path):
    assert main(["analyze", "--config", TOY, "--out", str(tmp_path)]) == 0
    dep = read_csv(tmp_path / "departure.csv")
    arb = read_csv(tmp_path / "arbitrary.csv")
    meas = dict(read_csv(tmp_path / "measures.csv")[1:])
    assert dep[0][:3] == ["n", "alpha_plus_2", "alpha_plus_3"]
    assert arb[0][-2:] == ["psi_queue", "psi_sys"]
    assert all(len(cell.split(".")[1]) == 6 for cell in dep[1][1:])
    assert float(meas["Wq"]) == pytest.approx(float(meas["Lq"]) / 0.56, abs=2e-6)


def test_json_round_trip_is_bit_exact(tmp_path):
    assert main(["analyze", "--config", TOY, "--out", str(tmp_path), "--format", "json"]) == 0
    dep, arb, rep = solution_from_json((tmp_path / "solution.json").read_text())
    sol = solve(load_config(TOY).spec)
    np.testing.assert_array_equal(dep.alpha_plus, sol.departure.alpha_plus)
    np.testing.assert_array_equal(arb.gamma, sol.arbitrary.gamma)
    np.testing.assert_array_equal(rep.psi_sys, sol.report.psi_sys)
    assert rep.scalars() == sol.report.scalars()
    assert solution_to_json(dep, arb, rep) == (tmp_path / "solution.json").read_text()


def test_truncated_engine_matches_analytic(tmp_path):
    out_a, out_t = tmp_path / "a", tmp_path / "t"
    assert main(["analyze", "--config", TOY, "--out", str(out_a), "--format", "json"]) == 0
    assert main(["analyze", "--config", TOY, "--out", str(out_t), "--format", "json", "--engine", "truncated"]) == 0
    da, aa, _ = solution_from_json((out_a / "solution.json").read_text())
    dt, at, _ = solution_from_json((out_t / "solution.json").read_text())
    n = min(da.N, dt.N) + 1
    np.testing.assert_allclose(da.alpha_plus[:n], dt.alpha_plus[:n], atol=1e-8)
    np.testing.assert_allclose(aa.gamma[:n], at.gamma[:n], atol=1e-8)


def test_unstable_config_exits_3(tmp_path, capsys):
    doc = json.loads(example_path("toy.json").read_text())
    doc["model"]["lambda"] = 0.95
    assert main(["analyze", "--config", write_doc(tmp_path, doc)]) == 3
    assert "rho = 1.27" in capsys.readouterr().err


def test_bad_config_exits_2(tmp_path, capsys):
    assert main(["analyze", "--config", write_doc(tmp_path, {"version": 1, "model": {"a": 1}})]) == 2
    assert "/model" in capsys.readouterr().err
    assert main(["analyze", "--config", str(tmp_path / "missing.json")]) == 2


def test_sweep_flags_unstable_points(capsys):
    assert main(["sweep", "--config", TOY, "--param", "/model/lambda", "--values", "0.9,0.1,0.4"]) == 0
    rows = list(csv.reader(capsys.readouterr().out.splitlines()))
    assert rows[0] == ["param", "value", "measure", "result", "status"]
    values = [float(r[1]) for r in rows[1:]]
    assert values == sorted(values)
    assert {r[4] for r in rows[1:] if float(r[1]) == 0.9} == {"UNSTABLE"}
    assert {r[4] for r in rows[1:] if float(r[1]) < 0.5} == {"OK"}


def test_single_point_sweep_equals_analyze():
    doc = json.loads(example_path("toy.json").read_text())
    rows = run_sweep(doc, "/model/lambda", [0.4])
    sweep = {r[2]: r[3] for r in rows}
    sol = solve(load_config(TOY).spec)
    for k, v in sol.report.scalars().items():
        assert sweep[k] == v


def test_parallel_sweep_matches_serial():
    doc = json.loads(example_path("toy.json").read_text())
    values = [0.3, 0.1, 0.2]
    assert run_sweep(doc, "/model/lambda", values, jobs=2) == run_sweep(doc, "/model/lambda", values, jobs=1)


def test_sweep_bad_path_exits_2():
    assert main(["sweep", "--config", TOY, "--param", "/model/nope", "--values", "1"]) == 2


def test_simulate_writes_same_layout(tmp_path):
    assert main(["simulate", "--config", TOY, "--out", str(tmp_path), "--slots", "100000", "--warmup", "1000"]) == 0
    header = read_csv(tmp_path / "arbitrary.csv")[0]
    assert header[:2] == ["n", "theta"] and header[-1] == "psi_sys"


def test_compare_reports_verdicts(tmp_path, capsys):
    doc = json.loads(example_path("toy.json").read_text())
    doc["model"]["p"] = 0.0
    path = write_doc(tmp_path, doc)
    assert main(["compare", "--config", path, "--slots", "300000", "--warmup", "1000"]) == 0
    rows = {r[0]: r for r in csv.reader(capsys.readouterr().out.splitlines()[1:])}
    assert rows["tv_psi_queue"][5] in ("PASS", "FAIL")
    sol = solve(load_config(path).spec)
    assert np.all(sol.arbitrary.beta == 0)


def test_examples_command(capsys):
    assert main(["examples"]) == 0
    assert "example_single.json" in capsys.readouterr().out

import json
import math
import subprocess
import sys

import jsonschema
import numpy as np
import pytest

from gateconv import cli
from gateconv.gates import gate_to_json, haar_random_gate
from golden.regenerate import REGISTRY, golden_path


def run(capsys, *argv):
    code = cli.main(list(argv))
    out = capsys.readouterr()
    return code, out.out, out.err


def run_json(capsys, *argv):
    code, out, err = run(capsys, *argv)
    return code, json.loads(out), err


@pytest.mark.parametrize("name", REGISTRY)
def test_analyze_golden(capsys, name):
    code, out, _ = run(capsys, "analyze", f"name={name}")
    assert code == 0
    assert out == golden_path(name).read_text()


@pytest.mark.parametrize("name", REGISTRY)
def test_golden_content_is_consistent(name):
    rep = json.loads(golden_path(name).read_text())
    jsonschema.validate(rep, cli.load_schema("analyze"))
    spec = np.array(rep["choi_spectrum"])
    assert np.allclose(sorted(np.hypot(*np.array(rep["interaction_coefficients"]).T), reverse=True), spec, atol=1e-10)
    n = int(np.sum(spec > 1e-7 * spec[0]))
    assert rep["schmidt_number"] == n
    assert rep["class"] == {1: "LOCAL", 2: "CNOT_CLASS", 4: "SWAP_CLASS"}[n]


def test_analyze_cnot_example(capsys):
    code, rep, err = run_json(capsys, "analyze", "name=cnot")
    assert code == 0
    assert rep["mu"] == [0.7853981633974483, 0, 0]
    assert rep["schmidt_number"] == 2
    assert rep["class"] == "CNOT_CLASS"
    assert rep["quote_cnot"] == 1.0
    assert rep["quote_swap"] == {"feasible": False}
    assert "CNOT_CLASS" in err


def test_analyze_identity_and_canonical(capsys):
    _, rep, _ = run_json(capsys, "analyze", "name=identity")
    assert rep["class"] == "LOCAL"
    assert rep["quote_cnot"] == {"feasible": False} and rep["quote_swap"] == {"feasible": False}
    _, rep, _ = run_json(capsys, "analyze", "mu=[pi/8, 0, 0]")
    assert rep["quote_cnot"] == pytest.approx(0.2928932188134524, abs=1e-15)
    _, rep2, _ = run_json(capsys, "analyze", f"mu={math.pi / 8},0,0")
    assert rep2 == rep


def test_analyze_round_trip_mu(capsys):
    g = haar_random_gate(21)
    _, rep, _ = run_json(capsys, "analyze", "json=" + json.dumps(gate_to_json(g)))
    mu = rep["mu"]
    _, again, _ = run_json(capsys, "analyze", "mu=" + ",".join(repr(x) for x in mu))
    assert np.allclose(again["mu"], mu, atol=1e-9)


def test_analyze_file_source_and_qutrit(capsys, tmp_path):
    path = tmp_path / "g.json"
    path.write_text(json.dumps(gate_to_json(haar_random_gate(2, d=3))))
    code, rep, _ = run_json(capsys, "analyze", f"file={path}")
    assert code == 0
    assert rep["class"] == "GENERAL" and rep["mu"] is None
    jsonschema.validate(rep, cli.load_schema("analyze"))


def test_rank_tol_flag_and_env(capsys, monkeypatch):
    _, rep, _ = run_json(capsys, "analyze", "mu=1e-5,0,0")
    assert rep["class"] == "CNOT_CLASS"
    monkeypatch.setenv(cli.RANK_TOL_ENV, "1e-3")
    _, rep, _ = run_json(capsys, "analyze", "mu=1e-5,0,0")
    assert rep["class"] == "LOCAL"
    _, rep, _ = run_json(capsys, "--rank-tol", "1e-7", "analyze", "mu=1e-5,0,0")
    assert rep["class"] == "CNOT_CLASS"
    monkeypatch.setenv(cli.RANK_TOL_ENV, "banana")
    assert run(capsys, "analyze", "name=cnot")[0] == cli.EXIT_MALFORMED


@pytest.mark.parametrize(
    "source",
    ["name=nope", "mu=1,2", "mu=a,b,c", "json={bad", "file=/does/not/exist", "cnot", 'json={"d": 2, "matrix": [[1]]}'],
)
def test_exit_malformed(capsys, source):
    code, rep, _ = run_json(capsys, "analyze", source)
    assert code == cli.EXIT_MALFORMED
    jsonschema.validate(rep, cli.load_schema("error"))


def test_exit_bad_arguments(capsys):
    assert cli.main(["frobnicate"]) == cli.EXIT_MALFORMED
    assert cli.main(["convert", "name=swap", "--target", "toffoli"]) == cli.EXIT_MALFORMED
    capsys.readouterr()


def matrix_source(m):
    return "json=" + json.dumps({"d": 2, "matrix": [[[z.real, z.imag] for z in row] for row in m]})


def test_exit_non_unitary(capsys):
    m = np.eye(4, dtype=complex)
    m[3, 3] = 1.001
    code, rep, err = run_json(capsys, "analyze", matrix_source(m))
    assert code == cli.EXIT_NON_UNITARY
    assert rep["residual"] == pytest.approx(0.002001, rel=1e-3)
    assert "residual" in err
    # within the CLI's 1e-8 tolerance the gate is accepted
    m[3, 3] = 1 + 1e-10
    code, rep, _ = run_json(capsys, "analyze", matrix_source(m))
    assert code == 0
    assert rep["class"] == "LOCAL"


def test_exit_infeasible(capsys):
    code, rep, err = run_json(capsys, "convert", "name=cnot", "--target", "swap")
    assert code == cli.EXIT_INFEASIBLE
    assert (rep["source_schmidt_number"], rep["target_schmidt_number"]) == (2, 4)
    assert "Schmidt number 2" in err


def test_convert_exact(capsys):
    code, rep, _ = run_json(capsys, "convert", "mu=pi/6,0,0", "--target", "cnot", "--mode", "exact")
    assert code == 0
    jsonschema.validate(rep, cli.load_schema("convert"))
    assert rep["success_probability"] == pytest.approx(0.5, abs=1e-12)
    assert rep["verified"] is True
    assert rep["test_inputs"] == 20
    assert sum(b["probability"] for b in rep["branches"]) == pytest.approx(1, abs=1e-10)


def test_convert_sample_deterministic(capsys):
    args = ("convert", "name=swap", "--target", "cnot", "--mode", "sample", "--samples", "100000", "--seed", "7")
    code, out1, _ = run(capsys, *args)
    _, out2, _ = run(capsys, *args)
    assert code == 0 and out1 == out2
    rep = json.loads(out1)
    jsonschema.validate(rep, cli.load_schema("convert"))
    assert rep["sample"]["success_frequency"] == 1.0


def test_convert_swap_target(capsys):
    code, rep, _ = run_json(capsys, "convert", "mu=pi/4,pi/4,pi/8", "--target", "swap")
    assert code == 0
    assert rep["success_probability"] == pytest.approx(rep["quote"]["probability"], abs=1e-9)
    assert rep["classical_bits_sent"] >= 4


def test_classify_batch(capsys, tmp_path):
    path = tmp_path / "gates.jsonl"
    lines = [json.dumps({"name": n}) for n in ("identity", "cnot", "swap")]
    path.write_text("\n".join(lines) + "\n")
    code, out, _ = run(capsys, "classify-batch", str(path))
    recs = [json.loads(x) for x in out.splitlines()]
    assert code == 0
    assert [r["class"] for r in recs] == ["LOCAL", "CNOT_CLASS", "SWAP_CLASS"]
    for r in recs:
        jsonschema.validate(r, cli.load_schema("classify_record"))


def test_classify_batch_errors_continue(capsys, tmp_path):
    path = tmp_path / "gates.jsonl"
    qutrit = json.dumps(gate_to_json(haar_random_gate(5, d=3)))
    path.write_text("\n".join([json.dumps({"name": "cnot"}), "{oops", qutrit, json.dumps({"name": "bogus"})]))
    code, out, _ = run(capsys, "classify-batch", str(path))
    recs = [json.loads(x) for x in out.splitlines()]
    assert code == cli.EXIT_MALFORMED
    assert len(recs) == 4
    assert recs[0]["class"] == "CNOT_CLASS"
    assert recs[1]["line"] == 2 and "error" in recs[1]
    assert recs[2]["class"] == "GENERAL" and 1 <= recs[2]["schmidt_number"] <= 9
    assert "error" in recs[3]


def test_classify_batch_empty_and_missing(capsys, tmp_path):
    path = tmp_path / "empty.jsonl"
    path.write_text("")
    code, out, _ = run(capsys, "classify-batch", str(path))
    assert code == 0 and out == ""
    code, _, _ = run(capsys, "classify-batch", str(tmp_path / "missing.jsonl"))
    assert code == cli.EXIT_MALFORMED


def test_console_entry_point():
    proc = subprocess.run(
        [sys.executable, "-m", "gateconv.cli", "analyze", "name=cnot"], capture_output=True, text=True, check=False
    )
    assert proc.returncode == 0
    assert proc.stdout == golden_path("cnot").read_text()

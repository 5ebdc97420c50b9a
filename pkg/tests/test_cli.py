import json

import numpy as np
import pytest

from drift_spectra.cli import main

UNIT_ARGS = ["--domain", "0", "1"]


def _cfg(tmp_path, name, text):
    path = tmp_path / name
    path.write_text(text)
    return str(path)


def test_prop2_job_exit_zero_and_json(tmp_path):
    out = tmp_path / "p2.json"
    code = main(["run", _cfg(tmp_path, "p2.cfg", f"""
[problem]
kind = "prop2"
domain = 0, 1
n = 1200
num_eigs = 2

[output]
json = "{out}"
""")])
    assert code == 0
    doc = json.loads(out.read_text())
    assert doc["lambda_gap"] == pytest.approx(3 * np.pi ** 2, rel=1e-4)
    assert doc["drift_mu"] == pytest.approx(3 * np.pi ** 2, rel=1e-4)
    assert doc["kind"] == "prop2"
    assert doc["config"]["seed"] == 42


def test_converge_underresolved_reference_exit_two(tmp_path, capsys):
    code = main(["run", _cfg(tmp_path, "cv.cfg", """
[problem]
kind = "converge"
domain = 0, 1
phi = "x"
epsilon = 0.2, 0.1, 0.05, 0.025
nx = 200
nt = 4
num_eigs = 1
n = 40
""")])
    assert code == 2
    assert "reference not converged" in capsys.readouterr().err


def test_gapcheck_flat_weight_exit_three(tmp_path, capsys):
    code = main(["gapcheck", *UNIT_ARGS, "--f", "1", "--n", "300",
                 "--n-pairs", "12"])
    assert code == 3
    assert "condition not satisfied" in capsys.readouterr().err


def test_config_error_exit_one(tmp_path, capsys):
    code = main(["run", _cfg(tmp_path, "bad.cfg", """
[problem]
kind = "drift"
domain = 0, 1
phi = "x"
f = "1"
""")])
    assert code == 1
    assert "config error" in capsys.readouterr().err


def test_bad_expression_exit_one(capsys):
    code = main(["drift", *UNIT_ARGS, "--phi", "2*", "--n", "100", "--k", "2"])
    assert code == 1
    assert "offset" in capsys.readouterr().err


def test_usage_error_exit_one(capsys):
    assert main(["drift", *UNIT_ARGS, "--solver", "bogus"]) == 1


def test_converge_csv_cardinality(tmp_path):
    out = tmp_path / "cv.csv"
    code = main(["run", _cfg(tmp_path, "cv.cfg", f"""
[problem]
kind = "converge"
domain = 0, 1
phi = "x"
epsilon = 0.2, 0.1, 0.05, 0.025
nx = 150
nt = 4
num_eigs = 2
n = 1000

[output]
csv = "{out}"
""")])
    assert code == 0
    lines = out.read_text().splitlines()
    assert lines[0] == "epsilon,k,mu_eps,mu_ref,abs_err"
    assert len(lines) == 1 + 12  # header + 4 epsilon x k=0..2


def test_json_roundtrip_bitexact_and_17_digits(tmp_path):
    csv_out = tmp_path / "s.csv"
    json_out = tmp_path / "s.json"
    code = main(["thin", *UNIT_ARGS, "--f", "1", "--eps", "0.05",
                 "--nx", "60", "--nt", "3", "--k", "3",
                 "--csv", str(csv_out), "--json", str(json_out)])
    assert code == 0
    doc = json.loads(json_out.read_text())
    # eps = 0.05 echoes with 17 significant digits
    assert "0.050000000000000003" in json_out.read_text()
    # eigenvalues round-trip bit-exactly between JSON and CSV
    csv_rows = [line.split(",") for line in csv_out.read_text().splitlines()[1:]]
    for row, json_row in zip(csv_rows, doc["rows"]):
        assert float(row[1]) == json_row[1]
        assert float(row[2]) == json_row[2]


def test_byte_identical_rerun(tmp_path):
    out = tmp_path / "a.json"
    args = ["drift", *UNIT_ARGS, "--phi", "x", "--n", "700",
            "--k", "3", "--seed", "9", "--json", str(out)]
    assert main(args) == 0
    first = out.read_bytes()
    assert main(args) == 0
    assert out.read_bytes() == first


def test_empty_eigenvalue_request_header_only(tmp_path):
    out = tmp_path / "empty.csv"
    code = main(["drift", *UNIT_ARGS, "--phi", "x", "--n", "100",
                 "--k", "0", "--csv", str(out)])
    assert code == 0
    assert out.read_text() == "k,eigenvalue,residual\n"


def test_dirichlet_indexing_from_one(tmp_path):
    out = tmp_path / "d.csv"
    code = main(["dirichlet", *UNIT_ARGS, "--phi", "0", "--n", "200",
                 "--k", "2", "--csv", str(out)])
    assert code == 0
    rows = out.read_text().splitlines()[1:]
    assert rows[0].startswith("1,")
    assert float(rows[0].split(",")[1]) == pytest.approx(np.pi ** 2, rel=1e-3)


def test_residual_job_exit_zero(tmp_path):
    out = tmp_path / "r.csv"
    code = main(["residual", *UNIT_ARGS, "--phi", "x",
                 "--eps", "0.1", "0.05", "0.025", "--nx", "150", "--nt", "4",
                 "--k", "1", "--csv", str(out)])
    assert code == 0
    lines = out.read_text().splitlines()
    assert lines[0] == "epsilon,k,sup_residual,l2_model_distance"
    assert len(lines) == 4


def test_corollary_job(tmp_path):
    out = tmp_path / "c.csv"
    code = main(["corollary1", *UNIT_ARGS, "--eps", "0.1", "--n", "400",
                 "--nx", "100", "--nt", "4", "--k", "1", "--csv", str(out)])
    assert code == 0
    lines = out.read_text().splitlines()
    assert lines[0] == "epsilon,k,mu_eps,mu_ref,abs_err"
    row = lines[1].split(",")
    assert float(row[3]) == pytest.approx(3 * np.pi ** 2, rel=1e-3)


def test_prop4_job(tmp_path):
    out = tmp_path / "p4.json"
    code = main(["prop4", *UNIT_ARGS, "--phi", "x", "--n", "150", "--k", "3",
                 "--trials", "25", "--json", str(out)])
    assert code == 0
    doc = json.loads(out.read_text())
    assert doc["all_hold"] is True and doc["equality_ok"] is True


def test_gapcheck_pairs_csv_schema(tmp_path):
    out = tmp_path / "g.csv"
    code = main(["gapcheck", *UNIT_ARGS, "--f", "sin(pi*x)", "--n", "400",
                 "--n-pairs", "9", "--csv", str(out)])
    assert code == 0
    lines = out.read_text().splitlines()
    assert lines[0] == "x,y,lhs,rhs,margin"
    assert len(lines) == 1 + 9 * 8  # all ordered pairs, x != y

import csv
import io
import json
import math
from pathlib import Path

import pytest

from app.main import main

FIXTURES = Path(__file__).resolve().parent.parent / "docs" / "fixtures"


def run_cli(capsys, *argv):
    status = main([str(a) for a in argv])
    out, err = capsys.readouterr()
    return status, out, err


def error_detail(err):
    return json.loads(err.strip().splitlines()[-1])


def test_sense_disc_orders(capsys):
    status, out, _ = run_cli(capsys, "sense-disc", "--b", "0.5,0")
    assert status == 0
    data = json.loads(out)
    assert data["kind"] == "identity"
    assert data["order"] == 14
    assert data["provenance"] == "taylor"
    assert data["weights"][1] == [0.5, 0.0]
    assert data["config"]["command"] == "sense-disc"

    status, out, _ = run_cli(capsys, "sense-disc", "--b", "0.5", "--mode", "sup", "--radius", "1.2")
    assert status == 0
    assert json.loads(out)["order"] == 26


def test_sense_disc_off_center(capsys):
    status, out, _ = run_cli(capsys, "sense-disc", "--a=-0.3,0.1", "--b", "0.4,0", "--order", "12")
    assert status == 0
    data = json.loads(out)
    assert data["provenance"] == "transported"
    assert data["domain"] == "disc"
    assert data["a"] == [-0.3, 0.1]

    status, out, _ = run_cli(capsys, "sense-disc", "--a", "0.2,0", "--b", "0.5,0", "--method", "gram", "--order", "8")
    assert status == 0
    data = json.loads(out)
    assert data["provenance"] == "gram-optimal"
    assert data["order"] == 8


def test_parameter_errors_exit_2(capsys):
    status, _, err = run_cli(capsys, "sense-disc", "--b", "1.2,0")
    assert status == 2
    assert error_detail(err)["code"] == "out_of_disc"

    status, _, err = run_cli(capsys, "sense-disc", "--a", "0.5,0", "--b", "0.5,0")
    assert status == 2
    assert error_detail(err)["code"] == "invalid_config"

    status, _, err = run_cli(capsys, "verify", FIXTURES / "missing.json")
    assert status == 2
    assert error_detail(err)["code"] == "io"

    with pytest.raises(SystemExit):
        main(["sense-disc", "--b", "half"])


def test_malformed_input_exits_2(capsys, tmp_path):
    bad = tmp_path / "bad.json"
    bad.write_text("{not json", encoding="utf-8")
    for argv in (("verify", bad), ("table", bad), ("run", bad)):
        status, _, err = run_cli(capsys, *argv)
        assert status == 2
        assert error_detail(err)["code"] == "invalid_config"


def test_table_from_probe_geometry(capsys):
    status, out, _ = run_cli(capsys, "table", FIXTURES / "identity.json", "--probe", FIXTURES / "probe.json")
    assert status == 0
    data = json.loads(out)
    fixture = json.loads((FIXTURES / "table.json").read_text(encoding="utf-8"))
    assert data["entries"] == fixture["entries"]
    expected = 0.01 * math.sqrt(1.4) * (1 + 4 * 1.6 / (math.pi * 0.4))
    assert data["certificate"]["bound_per_M"] == pytest.approx(expected)

    status, _, err = run_cli(capsys, "table", FIXTURES / "identity.json", "--probe", FIXTURES / "table.json")
    assert status == 2
    assert error_detail(err)["code"] == "domain_mismatch"


def test_verify_exit_codes(capsys, tmp_path):
    status, out, _ = run_cli(capsys, "verify", FIXTURES / "table.json", "--family", "harmonic", "--samples", "20")
    assert status == 1
    assert json.loads(out)["violations"] > 0

    status, _, err = run_cli(capsys, "verify", FIXTURES / "approximant.json")
    assert status == 2
    assert error_detail(err)["code"] == "domain_mismatch"

    identity = tmp_path / "identity.json"
    assert run_cli(capsys, "sense-disc", "--b", "0.3,0.4", "-o", identity)[0] == 0
    status, out, _ = run_cli(capsys, "verify", identity, "--samples", "50")
    assert status == 0
    report = json.loads(out)
    assert report["target"] == "identity"
    assert report["family"] == "polynomial"
    assert report["violations"] == 0


def test_sweep_csv(capsys, tmp_path):
    status, out, _ = run_cli(capsys, "sweep", "--b", "0.5", "--n-max", "8", "--samples", "20", "--degree", "20")
    assert status == 0
    assert "\r\n" in out
    rows = list(csv.reader(io.StringIO(out, newline="")))
    assert rows[0] == ["N", "l2_bound", "max_residual"]
    body = [(int(n), float(bound), float(res)) for n, bound, res in rows[1:]]
    assert [n for n, _, _ in body] == list(range(9))
    bounds = [bound for _, bound, _ in body]
    assert all(x >= y for x, y in zip(bounds, bounds[1:]))
    assert all(res <= bound * (1 + 1e-8) + 1e-12 for _, bound, res in body)

    target = tmp_path / "sweep.csv"
    assert run_cli(capsys, "sweep", "--b", "0.5", "--n-max", "2", "--samples", "5", "-o", target)[0] == 0
    assert target.read_bytes().startswith(b"N,l2_bound,max_residual\r\n")


def test_run_job_file(capsys, tmp_path):
    output = tmp_path / "job-identity.json"
    job = tmp_path / "job.json"
    job.write_text(
        json.dumps({"command": "sense-disc", "b": [0.3, 0.0], "order": 5, "output": str(output)}),
        encoding="utf-8",
    )
    assert run_cli(capsys, "run", job)[0] == 0
    data = json.loads(output.read_text(encoding="utf-8"))
    assert data["order"] == 5
    assert data["config"]["output"] == str(output)

    job.write_text(json.dumps({"command": "sense-disc", "b": [0.3, 0.0], "colour": "red"}), encoding="utf-8")
    status, _, err = run_cli(capsys, "run", job)
    assert status == 2
    assert error_detail(err)["code"] == "invalid_config"


def test_runge_and_compare(capsys, tmp_path):
    pushed = tmp_path / "runge"
    status, _, _ = run_cli(
        capsys, "runge", "--vertices", "0.4,0;-0.4,0", "--delta", "0.25", "--eps", "1e-3", "--check", "-o", pushed
    )
    assert status == 0
    approximant = json.loads((pushed / "approximant.json").read_text(encoding="utf-8"))
    assert approximant["eps"] <= 1e-3
    assert approximant["exterior_check"]["max_error"] <= approximant["eps"]
    identity = json.loads((pushed / "identity.json").read_text(encoding="utf-8"))
    assert identity["provenance"] == "runge"
    assert identity["l2_bound"] is None
    assert identity["sup_certificate"]["boundary_length"] == pytest.approx(2 * math.pi)

    bergman = tmp_path / "bergman.json"
    assert run_cli(capsys, "sense-disc", "--a=-0.4,0", "--b", "0.4,0", "--order", "30", "-o", bergman)[0] == 0
    status, out, _ = run_cli(capsys, "compare", pushed / "identity.json", bergman, "--samples", "40")
    assert status == 0
    report = json.loads(out)
    assert len(report["rows"]) == 40
    assert report["runge_violations"] == 0
    assert report["bergman_violations"] == 0


def test_runge_identity_to_harmonic_table(capsys, tmp_path):
    pushed = tmp_path / "runge"
    args = ("runge", "--vertices", "0.4,0;-0.4,0", "--delta", "0.25", "--eps", "1e-3", "-o", pushed)
    assert run_cli(capsys, *args)[0] == 0
    table = tmp_path / "table.json"
    identity = pushed / "identity.json"
    status, _, err = run_cli(capsys, "table", identity)
    assert status == 2
    assert error_detail(err)["code"] == "parameter"
    assert run_cli(capsys, "table", identity, "--container", "disc:0,0,1.5", "-o", table)[0] == 0
    data = json.loads(table.read_text(encoding="utf-8"))
    certificate = data["certificate"]
    assert certificate["form"] == "sup"
    assert certificate["l2_lambda"] is None
    # L = 0.4 + 1，d1 = 0.5
    assert certificate["conj_const"] == pytest.approx(4 * 1.4 / (math.pi * 0.5))
    status, out, _ = run_cli(capsys, "verify", table, "--container", "disc:0,0,1.5", "--samples", "50")
    assert status == 0
    assert json.loads(out)["violations"] == 0


def test_runge_degree_budget(capsys, tmp_path):
    status, _, err = run_cli(
        capsys, "runge", "--vertices", "0.4,0;-0.4,0", "--delta", "0.1", "--max-degree", "200", "-o", tmp_path
    )
    assert status == 2
    assert error_detail(err)["code"] == "budget_exceeded"

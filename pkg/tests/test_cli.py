import json
from pathlib import Path

import pytest

from src.main import build_parser, main

MODELS = Path(__file__).resolve().parents[1] / "models"


def model(name):
    return str(MODELS / name)


def test_verify_bfv_on_so3(tmp_path, capsys):
    status = main(["verify", "bfv", "--model", model("so3.model"), "--out", str(tmp_path), "--json"])
    assert status == 0
    summary = json.loads(capsys.readouterr().out)
    assert summary["model"] == "so3"
    assert summary["summary"]["failed"] == 0
    assert summary["summary"]["total"] == 6
    assert summary["conventions"]
    assert (tmp_path / "transcript.txt").exists()


def test_default_toy_model_reproduces_the_witness(tmp_path):
    status = main(["verify", "toy", "--check", "alt2-witness", "--out", str(tmp_path)])
    assert status == 0
    data = json.loads((tmp_path / "summary.json").read_text())
    (check,) = data["checks"]
    assert check["check_id"] == "alt2-witness"
    assert check["max_residual"] == "p1"
    assert "a = p1" in check["notes"][0]


def test_formal_check_writes_a_trace(tmp_path):
    status = main(["verify", "formal", "--check", "ideal-preservation", "--out", str(tmp_path)])
    assert status == 0
    trace = json.loads((tmp_path / "ideal-preservation.trace.json").read_text())
    assert trace and {"rule", "before", "after"} == set(trace[0])


def test_failing_check_exits_one_and_lists_failures_first(tmp_path):
    status = main(["report", "--model", model("non-first-class.model"), "--out", str(tmp_path)])
    assert status == 1
    data = json.loads((tmp_path / "summary.json").read_text())
    assert [c["status"] for c in data["checks"]] == ["fail", "fail"]
    assert data["summary"] == {"failed": 2, "passed": 0, "total": 2}


def test_mixed_report_orders_failures_first(tmp_path):
    path = tmp_path / "mixed.model"
    path.write_text('[meta]\nchecks = ["bfv-jacobi", "bfv-first-class"]\n'
                    '[constraints]\nn = 1\nH = ["x1", "p1"]\n')
    status = main(["report", "--model", str(path), "--out", str(tmp_path / "out")])
    assert status == 1
    data = json.loads((tmp_path / "out" / "summary.json").read_text())
    assert [c["check_id"] for c in data["checks"]] == ["bfv-first-class", "bfv-jacobi"]


@pytest.mark.parametrize("name, total", [("so3.model", 16), ("nonconstant-f.model", 13)])
def test_report_derives_checks_from_sections(name, total, tmp_path):
    assert main(["report", "--model", model(name), "--out", str(tmp_path)]) == 0
    data = json.loads((tmp_path / "summary.json").read_text())
    assert data["summary"] == {"failed": 0, "passed": total, "total": total}
    assert {c["check_id"] for c in data["checks"]} >= {"bfv-master-equation", "alt2-witness"}


def test_empty_report(tmp_path):
    path = tmp_path / "empty.model"
    path.write_text('[meta]\nname = "empty"\n')
    assert main(["report", "--model", str(path), "--out", str(tmp_path / "out")]) == 0
    data = json.loads((tmp_path / "out" / "summary.json").read_text())
    assert data["checks"] == [] and data["summary"]["total"] == 0


@pytest.mark.parametrize("argv", [
    ["verify", "bfv", "--model", "does-not-exist.model"],
    ["verify", "bfv", "--check", "curvature"],
    ["lattice", "curvature", "--n", "8,16"],
    ["lattice", "--n", "8,x,32"],
    ["lattice", "q0defect", "--k", "1"],
    ["report"],
])
def test_unusable_input_exits_two(argv, tmp_path, capsys):
    assert main([*argv, "--out", str(tmp_path)]) == 2
    err = capsys.readouterr().err
    assert "error:" in err and "hint:" in err


def test_schema_error_names_the_key(tmp_path, capsys):
    path = tmp_path / "typo.model"
    path.write_text('[constraints]\nn = 1\nH = ["p1"]\nstructure = {}\n')
    assert main(["verify", "bfv", "--model", str(path), "--out", str(tmp_path)]) == 2
    assert "structure" in capsys.readouterr().err


def test_rerun_is_byte_identical(tmp_path):
    for out in ("a", "b"):
        assert main(["verify", "algebra", "--seed", "11", "--out", str(tmp_path / out)]) == 0
    assert (tmp_path / "a" / "summary.json").read_bytes() == (tmp_path / "b" / "summary.json").read_bytes()


def test_lattice_positional_check_and_flags():
    args = build_parser().parse_args(["lattice", "brackets", "--n", "8,16,32", "--fd-step", "1e-4", "--k", "3"])
    assert args.check_id == "brackets"
    assert args.sizes == "8,16,32" and args.fd_step == 1e-4 and args.k == 3


@pytest.mark.slow
def test_lattice_curvature_end_to_end(tmp_path):
    assert main(["lattice", "curvature", "--n", "8,16,32", "--out", str(tmp_path)]) == 0
    lines = (tmp_path / "curvature.csv").read_text().splitlines()
    assert lines[0] == "check,N,defect_norm,est_order"
    assert len(lines) == 1 + 3 * 3

import json
import shutil
import subprocess

import numpy as np
import pytest

from geoduel.cli import main, tensor_dump
from geoduel.scenario import load_scenario


def _run(capsys, *argv):
    code = main(list(argv))
    out = capsys.readouterr()
    return code, out.out, out.err


def _values(lines, name):
    out = {}
    for line in lines:
        if line.startswith(name + "["):
            key, val = line.split(" = ")
            out[tuple(int(i) for i in key[len(name) + 1:-1].split(","))] = float(val)
    return out


def test_tensors_polar(capsys):
    code, out, _ = _run(capsys, "tensors", "polar", "--point", "0")
    assert code == 0
    lines = out.splitlines()
    r = load_scenario("polar").points[0][0]
    gamma = _values(lines, "Gamma")
    assert gamma[(0, 1, 1)] == pytest.approx(-r, abs=1e-15)
    assert gamma[(1, 0, 1)] == pytest.approx(1 / r, rel=1e-15)
    assert len(gamma) == 8
    assert all(v == 0.0 for v in _values(lines, "R").values())
    assert any(line.startswith("Ric = ") for line in lines)


def test_tensor_dump_sphere_ricci():
    sc = load_scenario("sphere")
    lines = tensor_dump(sc, 0, "levi_civita")
    ric = [float(l.split(" = ")[1]) for l in lines if l.startswith("Ric = ")][0]
    assert ric == pytest.approx(2.0, abs=1e-12)


def test_tensors_errors(capsys):
    code, _, err = _run(capsys, "tensors", "polar", "--point", "99")
    assert code == 2 and "out of range" in err
    code, _, err = _run(capsys, "tensors", "mutual", "--point", "0", "--connection", "nope")
    assert code == 2 and "flat0" in err and "levi_civita" in err
    code, _, err = _run(capsys, "check", "no_such_scenario")
    assert code == 2 and "euclidean.json" in err


def test_check_exit_codes(capsys, tmp_path):
    code, out, _ = _run(capsys, "check", "euclidean")
    assert code == 0 and "suites passed" in out
    bad = json.loads(json.dumps(load_scenario("mutual").raw))
    bad["suites"] = [{"suite": "curvature_dual", "connections": ["flat0", "flat1"], "expect": "dual"}]
    path = tmp_path / "bad.json"
    path.write_text(json.dumps(bad))
    code, out, _ = _run(capsys, "check", str(path))
    assert code == 1 and out.startswith("FAIL") and "worst point" in out


def test_schema_error_exit_code(capsys, tmp_path):
    path = tmp_path / "s.json"
    path.write_text(json.dumps({"schema": 1, "dimension": 9}))
    code, _, err = _run(capsys, "check", str(path))
    assert code == 2 and "dimension" in err


@pytest.mark.parametrize("name", ["torsion_dual_3form", "gaussian", "statistical", "mutual"])
def test_reports_byte_identical(capsys, tmp_path, name):
    outs = []
    for k, threads in enumerate(["1", "4", "4"]):
        path = tmp_path / f"r{k}.json"
        assert _run(capsys, "check", name, "--out", str(path), "--threads", threads)[0] == 0
        outs.append(path.read_bytes())
    assert outs[0] == outs[1] == outs[2]
    json.loads(outs[0])


def test_json_flag(capsys):
    code, out, _ = _run(capsys, "check", "sphere", "--json")
    report = json.loads(out)
    assert code == 0 and report["summary"]["all_pass"] and report["scenario"] == "sphere"


def test_fisher_command(capsys):
    code, out, _ = _run(capsys, "fisher", "gaussian", "--mu", "0.5", "--sigma", "2")
    data = json.loads(out)
    assert code == 0
    np.testing.assert_allclose(data["g"], [[0.25, 0], [0, 0.5]], atol=1e-12)
    assert data["max_gap_C"] < 1e-12 and "2/sigma^2" in data["note"]
    code, _, err = _run(capsys, "fisher", "gaussian", "--sigma", "0")
    assert code == 2 and "sigma" in err


def test_transport_command(capsys):
    code, out, _ = _run(capsys, "transport", "mutual")
    rows = {r["label"]: r for r in json.loads(out)["transport"]}
    assert code == 0
    assert rows["torsion_dual_pair"]["V"] == [0.0, 0.0]
    assert max(abs(v) for v in rows["distinct_torsion_free"]["V"]) > 1e-3


def test_list_command(capsys):
    code, out, _ = _run(capsys, "list")
    assert code == 0 and "gaussian.json" in out.split()


@pytest.mark.skipif(shutil.which("geoduel") is None, reason="console script not installed")
def test_console_script():
    proc = subprocess.run(["geoduel", "check", "euclidean"], capture_output=True, text=True)
    assert proc.returncode == 0 and "2/2 suites passed" in proc.stdout

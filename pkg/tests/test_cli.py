import csv
import io
import json
import subprocess
import sys

import pytest

from qamlab.cli import COLUMNS, main
from qamlab.qobj import identity_circuit, serialize_circuit


def run(argv, capsys):
    code = main(argv)
    out = capsys.readouterr().out
    return code, out


def rows_of(text):
    return list(csv.DictReader(io.StringIO(text)))


@pytest.mark.parametrize("cmd", sorted(COLUMNS))
def test_zero_trials_header(cmd, capsys):
    code, out = run([cmd, "--trials", "0", "--seed", "3"], capsys)
    assert code == 0
    assert out.splitlines()[0] == ",".join(COLUMNS[cmd])


def test_citm_rows(capsys):
    code, out = run(["citm", "--trials", "0"], capsys)
    rows = {r["circuit"]: r for r in rows_of(out)}
    assert code == 0
    assert abs(float(rows["identity"]["value"]) - 1) < 1e-6
    assert abs(float(rows["constant_zero"]["value"]) - 0.5) < 1e-6
    assert abs(float(rows["constant_zero"]["d_min"]) - 0.5) < 1e-6


def test_citm_circuit_file(tmp_path, capsys):
    path = tmp_path / "id.json"
    path.write_text(serialize_circuit(identity_circuit(1)))
    code, out = run(["citm", str(path)], capsys)
    (row,) = rows_of(out)
    assert code == 0 and abs(float(row["value"]) - 1) < 1e-6


def test_collapse_instantiation_rows(capsys):
    code, out = run(["collapse", "--trials", "0"], capsys)
    rows = [r for r in rows_of(out) if r["name"].startswith("fold_inst")]
    assert code == 0 and len(rows) == 8 and all(r["pass"] == "true" for r in rows)


def test_fatthin_rows(capsys):
    code, out = run(["fatthin", "--trials", "200", "--seed", "1"], capsys)
    rows = rows_of(out)
    assert code == 0
    assert all(float(r["estimate"]) == 1.0 for r in rows if r["name"] == "fat_nonempty")


def test_teleport_rows(capsys):
    code, out = run(["teleport", "--trials", "2"], capsys)
    worst = [r for r in rows_of(out) if r["name"] == "max_delta"][0]
    assert code == 0 and float(worst["estimate"]) <= 1e-9


def test_config_file_and_flags(tmp_path, capsys):
    cfg = tmp_path / "c.json"
    cfg.write_text(json.dumps({"seed": 5, "trials": 1, "dims": {"n": 1}}))
    out_path = tmp_path / "t.csv"
    code, out = run(["metrics", "--config", str(cfg), "--trials", "2", "--out", str(out_path)], capsys)
    assert code == 0 and out == ""
    rows = rows_of(out_path.read_text())
    assert {r["trial"] for r in rows} == {"0", "1"} and {r["n"] for r in rows} == {"1"}


@pytest.mark.parametrize("doc", ["{not json", "[1]", '{"seed": "x"}', '{"colour": 1}', '{"opt": {"nope": 1}}',
                                 '{"dims": {"n": 99}}'])
def test_bad_config_exit_2(tmp_path, capsys, doc):
    cfg = tmp_path / "c.json"
    cfg.write_text(doc)
    assert main(["metrics", "--config", str(cfg)]) == 2
    assert "qamlab" in capsys.readouterr().err


def test_usage_errors_exit_2(tmp_path, capsys):
    assert main(["nosuch"]) == 2
    assert main(["metrics", "--trials", "-1"]) == 2
    assert main(["metrics", "--config", str(tmp_path / "missing.json")]) == 2
    assert main(["citm", str(tmp_path / "missing.json")]) == 2
    bad = tmp_path / "bad.json"
    bad.write_text('{"q_all": 1, "gates": [{"name": "H", "targets": [3]}]}')
    assert main(["maxent", str(bad)]) == 2


def test_derive_restricted(tmp_path, capsys):
    cfg = tmp_path / "c.json"
    cfg.write_text(json.dumps({"ids": ["xor_l3_size5_k2"]}))
    code, out = run(["derive", "--config", str(cfg)], capsys)
    (row,) = json.loads(out)
    assert code == 0 and row["id"] == "xor_l3_size5_k2" and row["value"] == 1.0


def test_module_entry_point():
    res = subprocess.run([sys.executable, "-m", "qamlab", "maxent", "--trials", "0"], capture_output=True, text=True)
    assert res.returncode == 0 and res.stdout.startswith("experiment,name,q_out")

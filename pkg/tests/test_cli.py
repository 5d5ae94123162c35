import csv
import io
import json
import math
import subprocess
import sys

import pytest

from cfas.cli import main, parse_grid, UsageError
from cfas.specfun import marcum_q1


def run(args, capsys):
    code = main(args)
    out, err = capsys.readouterr()
    return code, out, err


def rows(text):
    return list(csv.DictReader(io.StringIO(text)))


def test_point_hsp(capsys):
    code, out, _ = run(["hsp", "--dim", "0", "--kappa", "2", "--x", "4"], capsys)
    assert code == 0
    (row,) = rows(out)
    assert out.splitlines()[0] == "x,u,hsp,asymptotic"
    assert float(row["hsp"]) == marcum_q1(2.0, 2.0)


def test_cube_curve(capsys):
    code, out, _ = run(["hsp", "--dim", "3", "--sides", "0.25,0.25,0.25", "--kappa", "0.2", "--x-grid", "2:30:8"], capsys)
    assert code == 0
    data = rows(out)
    assert len(data) == 8
    hsps = [float(r["hsp"]) for r in data]
    assert hsps == sorted(hsps, reverse=True)


def test_threshold_forms_agree(capsys):
    base = ["hsp", "--dim", "1", "--sides", "0.5", "--kappa", "1"]
    _, a, _ = run(base + ["--x", "8"], capsys)
    _, b, _ = run(base + ["--u", "2"], capsys)
    _, c, _ = run(base + ["--u-db", str(10 * math.log10(2))], capsys)
    ha, hb, hc = (float(rows(t)[0]["hsp"]) for t in (a, b, c))
    assert ha == hb
    assert hc == pytest.approx(ha, rel=1e-12)


def test_degrees_flag(capsys):
    base = ["lcr", "--kappa", "2", "--x", "6", "--t1", "0.5"]
    _, a, _ = run(base + ["--phi", "45", "--degrees"], capsys)
    _, b, _ = run(base + ["--phi", repr(math.pi / 4)], capsys)
    assert rows(a)[0]["lcr"] == rows(b)[0]["lcr"]


@pytest.mark.parametrize(
    "args",
    [
        ["hsp", "--dim", "2", "--kappa", "1", "--x", "3"],
        ["hsp", "--dim", "1", "--sides", "0.5", "--kappa", "-1", "--x", "3"],
        ["hsp", "--dim", "1", "--sides", "0.5", "--kappa", "nan", "--x", "3"],
        ["hsp", "--dim", "1", "--sides", "0.5", "--kappa", "abc", "--x", "3"],
        ["hsp", "--dim", "1", "--sides", "0.5", "--kappa", "1", "--x", "3", "--u", "1"],
        ["hsp", "--dim", "1", "--sides", "0.5,1", "--kappa", "1", "--x", "3"],
        ["hsp", "--dim", "1", "--sides", "0.5", "--kappa", "1", "--x-grid", "1:2"],
        ["hsp", "--dim", "1", "--sides", "0.5", "--kappa", "1", "--x", "-2"],
        ["simulate", "--dim", "1", "--kappa", "1", "--x", "3", "--replicates", "10"],
        ["equiv", "--t-ray", "0", "--kappa", "1"],
        ["lcr-map", "--kappa-grid", "0,1", "--phi-grid", "0", "--t1", "0.5", "--target", "0.9"],
        ["nonsense"],
    ],
)
def test_invalid_input_exits_2(args, capsys):
    code, _, err = run(args, capsys)
    assert code == 2
    assert err.startswith("error:")


def test_missing_sides_names_parameter(capsys):
    _, _, err = run(["hsp", "--dim", "2", "--kappa", "1", "--x", "3"], capsys)
    assert "--sides" in err


def test_cap_exit_3(capsys):
    code, _, err = run(["simulate", "--dim", "3", "--spacing", "0.001", "--kappa", "1", "--x", "5"], capsys)
    assert code == 3 and "cap" in err


def test_simulate_output_and_manifest(tmp_path, capsys):
    out = tmp_path / "sim.csv"
    args = [
        "simulate", "--dim", "1", "--sides", "0.25", "--kappa", "0.2", "--phi", "0.7853981634",
        "--replicates", "4000", "--seed", "7", "--u-grid", "3,4", "--output", str(out),
    ]
    assert main(args) == 0
    first = out.read_bytes()
    data = rows(first.decode())
    assert list(data[0]) == ["x", "u", "p_hat", "stderr", "analytic"]
    manifest = json.loads((tmp_path / "sim.csv.manifest.json").read_text())
    assert {"parameters", "seed", "jitter", "wall_time_ms", "version"} <= set(manifest)
    assert manifest["seed"] == 7
    assert main(args + ["--workers", "3"]) == 0
    assert out.read_bytes() == first


def test_env_output_dir(tmp_path, monkeypatch, capsys):
    monkeypatch.setenv("CFAS_OUTPUT_DIR", str(tmp_path))
    assert main(["equiv", "--t-ray", "0.5", "--kappa", "0", "--target", "0.01", "--format", "json"]) == 0
    (row,) = json.loads((tmp_path / "equiv.json").read_text())
    assert row["area_ratio"] == 1.0


def test_config_file_and_override(tmp_path, capsys):
    cfg = tmp_path / "c.json"
    cfg.write_text(json.dumps({"dim": 1, "sides": "0.5", "kappa": 1.0, "x-grid": "4,8"}))
    code, out, _ = run(["hsp", "--config", str(cfg)], capsys)
    assert code == 0 and len(rows(out)) == 2
    code, out2, _ = run(["hsp", "--config", str(cfg), "--kappa", "3"], capsys)
    assert code == 0 and rows(out2)[0]["u"] != rows(out)[0]["u"]
    cfg.write_text(json.dumps({"bogus": 1}))
    assert run(["hsp", "--config", str(cfg)], capsys)[0] == 2


def test_lcr_map_surface(capsys):
    code, out, _ = run(
        ["lcr-map", "--kappa-grid", "0:14:15", "--phi-grid", "0:1.5708:16", "--t1", "0.5", "--target", "0.01"], capsys
    )
    assert code == 0
    data = rows(out)
    assert len(data) == 240
    for r in data:
        if float(r["phi"]) == 0.0 or float(r["kappa"]) == 0.0:
            assert abs(float(r["difference"])) < 1e-9


def test_lcr_map_solver_failure_exit_4(capsys):
    code, out, err = run(["lcr-map", "--kappa-grid", "1", "--phi-grid", "0.3", "--t1", "1e60"], capsys)
    assert code == 4
    assert "kappa=1.0" in err and "failed" in rows(out)[0]["status"]


def test_table3_reports_mapping(tmp_path, capsys):
    out = tmp_path / "t3.csv"
    assert main(["table3", "--output", str(out)]) == 0
    assert len(rows(out.read_text())) == 12
    manifest = json.loads((tmp_path / "t3.csv.manifest.json").read_text())
    assert "threshold_mapping" in manifest and "max_relative_deviation" in manifest


def test_json_format(capsys):
    _, out, _ = run(["lcr", "--kappa", "0", "--x", "2", "--format", "json"], capsys)
    (row,) = json.loads(out)
    assert row["lcr"] == pytest.approx(math.sqrt(2 * math.pi) * math.exp(-1), rel=1e-12)


def test_parse_grid():
    assert parse_grid("1,2,3", "g") == [1.0, 2.0, 3.0]
    assert parse_grid("0:1:3", "g") == [0.0, 0.5, 1.0]
    with pytest.raises(UsageError):
        parse_grid("0:1:0", "g")
    with pytest.raises(UsageError):
        parse_grid("", "g")


def test_console_entry_point():
    proc = subprocess.run([sys.executable, "-m", "cfas.cli", "hsp", "--dim", "0", "--kappa", "0", "--x", "2"], capture_output=True, text=True)
    assert proc.returncode == 0
    assert float(rows(proc.stdout)[0]["hsp"]) == pytest.approx(math.exp(-1), rel=1e-15)

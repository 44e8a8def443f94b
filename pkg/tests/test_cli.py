import json
import subprocess
import sys

import pytest

from hodgeflow import cli, io, reports
from hodgeflow.errors import ConfigParseError
from hodgeflow.heat import HeatSchedule


def run(argv, capsys):
    code = cli.main([str(a) for a in argv])
    out = capsys.readouterr()
    doc = json.loads(out.out) if out.out.strip() else None
    return code, doc, out.err


def test_parsers():
    assert cli.parse_number("2^-3") == 0.125
    assert cli.parse_number("1/4") == 0.25
    assert cli.parse_schedule("1,2^-0.5,2^-4") == HeatSchedule(1.0, 2**-0.5, 2**-4)
    assert cli.parse_schedule({"s_max": 0.5, "ratio": 0.5, "s_min": "2^-6"}).s_min == 2**-6
    assert cli.parse_vector("3,-1") == (3, -1)
    with pytest.raises(ValueError):
        cli.parse_schedule("1,0.5")


def test_gen_and_smooth(tmp_path, capsys):
    f = tmp_path / "u.ohfl"
    code, doc, _ = run(["gen", "--kind", "lacunary", "--N", 64, "--J", 3, "--out", f], capsys)
    assert code == 0 and doc["pass"]
    assert doc["schema"] == "hodgeflow-report" and doc["kind"] == "gen"
    assert io.read_field(f).grid.N == 64
    out = tmp_path / "U.ohfl"
    code, doc, _ = run(["smooth", "--field", f, "--s", "2^-4", "--out", out], capsys)
    assert code == 0
    assert doc["results"]["contraction"] < 1
    assert doc["config"]["s"] == 0.0625


def test_besov_cN_flag(capsys):
    code, doc, _ = run(["besov", "--kind", "single_mode", "--N", 32, "--k", "2,1", "--spec", "0.5,3,cN"], capsys)
    assert code == 0
    assert doc["results"]["flags"]["vanishing"] is True


def test_commutator_exit_codes(capsys):
    base = ["commutator", "--kind", "single_mode", "--N", 32, "--k", "1,2", "--quad-nodes", 16]
    code, doc, _ = run(base, capsys)
    assert code == 0
    code, doc, _ = run(base + ["--kind", "lacunary", "--J", 3, "--tolerance", 1e-20], capsys)
    assert code == 1 and doc["pass"] is False


def test_flux_decay_csv(tmp_path, capsys):
    cfg = tmp_path / "c.json"
    cfg.write_text(json.dumps({"N": 64, "J": 3, "alpha": "1/2", "schedule": "2^-3,2^-0.5,2^-9", "out": str(tmp_path / "f.csv")}))
    code, doc, _ = run(["flux-decay", "--config", cfg], capsys)
    assert code in (0, 1)
    kind, rows = reports.read_csv(tmp_path / "f.csv")
    assert kind == "flux-decay"
    assert list(rows[0]) == list(reports.FLUX_COLUMNS)
    assert len(rows) == len(HeatSchedule(2**-3, 2**-0.5, 2**-9))


def test_flags_override_config(tmp_path, capsys):
    cfg = tmp_path / "c.json"
    cfg.write_text(json.dumps({"kind": "single_mode", "N": 32, "k": [1, 1], "s": 0.5}))
    code, doc, _ = run(["smooth", "--config", cfg, "--s", "0.25"], capsys)
    assert code == 0
    assert doc["config"]["s"] == 0.25 and doc["config"]["N"] == 32


def test_invalid_json_reports_line(tmp_path, capsys):
    cfg = tmp_path / "bad.json"
    cfg.write_text('{\n  "N": 32,\n  "s": oops\n}\n')
    with pytest.raises(ConfigParseError) as err:
        cli.load_config(cfg, "smooth")
    assert err.value.line == 3
    code, _, msg = run(["smooth", "--config", cfg], capsys)
    assert code == 2 and "line 3" in msg


def test_unknown_key_reports_field(tmp_path, capsys):
    cfg = tmp_path / "bad.json"
    cfg.write_text('{\n  "N": 32,\n  "bogus": 1\n}\n')
    with pytest.raises(ConfigParseError) as err:
        cli.load_config(cfg, "smooth")
    assert err.value.field == "bogus" and err.value.line == 3
    cfg.write_text('{"N": "many"}')
    with pytest.raises(ConfigParseError) as err:
        cli.load_config(cfg, "smooth")
    assert err.value.field == "N"


def test_usage_errors(capsys):
    assert cli.main(["nope"]) == 2
    assert cli.main(["verify", "--criteria", "42"]) == 2
    assert cli.main(["smooth", "--N", "7"]) == 2
    assert cli.main(["euler-verify"]) == 2
    capsys.readouterr()


def test_euler_roundtrip(tmp_path, capsys):
    traj = tmp_path / "t.ohflt"
    code, doc, _ = run(["euler-run", "--n", 32, "--T", 0.5, "--dt", "2e-3", "--stride", 5, "--out", traj], capsys)
    assert code == 0
    assert doc["results"]["snapshots"] == 51
    code, doc, _ = run(["euler-verify", traj, "--s-schedule", "0.5,0.5,2^-6", "--weak-tolerance", "1e-4"], capsys)
    assert code == 0
    assert doc["results"]["weak_form_residual"] < 1e-4


def test_euler_cfl_partial(tmp_path, capsys):
    traj = tmp_path / "t.ohflt"
    code, doc, _ = run(["euler-run", "--n", 64, "--T", 1.0, "--dt", 0.1, "--stride", 1, "--out", traj], capsys)
    assert code == 1
    assert doc["results"]["valid"] is False
    back = io.read_trajectory(traj)
    assert not back.valid and len(back) >= 1
    code, _, msg = run(["euler-verify", traj], capsys)
    assert code == 2 and "CFL" in msg


def test_verify_threshold_override(tmp_path, capsys):
    code, doc, err = run(["verify", "--criteria", "1"], capsys)
    assert code == 0 and doc["results"]["all_pass"]
    assert "[PASS] criterion 1" in err
    code, doc, err = run(["verify", "--criteria", "1", "--threshold", "divergence_invariance_torus=0"], capsys)
    assert code == 1
    assert "[FAIL] criterion 1" in err


def test_verify_reports_are_reproducible(tmp_path, capsys):
    a, b = tmp_path / "a.json", tmp_path / "b.json"
    assert cli.main(["verify", "--criteria", "1,2", "--report", str(a)]) == 0
    assert cli.main(["verify", "--criteria", "1,2", "--report", str(b)]) == 0
    capsys.readouterr()
    assert a.read_bytes() == b.read_bytes()


def test_module_entry_point():
    out = subprocess.run([sys.executable, "-m", "hodgeflow.cli", "--help"], capture_output=True, text=True)
    assert out.returncode == 0
    assert "euler-verify" in out.stdout

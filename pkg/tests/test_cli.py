import json
from pathlib import Path

import pytest

from phflow import cli

ROOT = Path(__file__).resolve().parents[1]
CONFIGS = ROOT / "configs"


def test_shipped_configs_parse():
    names = sorted(p.name for p in CONFIGS.glob("*.cfg"))
    assert names == ["nil_identity.cfg", "nil_perturbed_flow.cfg", "sphere_extrinsic_flow.cfg", "verify_all.cfg"]
    for p in CONFIGS.glob("*.cfg"):
        cli.parse_config(p)


def test_missing_config_exit_2(tmp_path, capsys):
    missing = tmp_path / "missing.cfg"
    assert cli.main(["flow", "--config", str(missing)]) == 2
    assert str(missing) in capsys.readouterr().err


@pytest.mark.parametrize("text,line,needle", [
    ("[flow]\nsteps = 3\nbogus = 1\n", 3, "bogus"),
    ("[flow]\n\n# note\nsteps = many\n", 4, "steps"),
    ("steps = 3\n", 1, "steps"),
    ("[nope]\n", 1, "nope"),
    ("[flow]\nsteps = 1\nsteps = 2\n", 3, "steps"),
])
def test_config_errors_cite_line_and_key(tmp_path, capsys, text, line, needle):
    p = tmp_path / "bad.cfg"
    p.write_text(text)
    assert cli.main(["flow", "--config", str(p)]) == 2
    err = capsys.readouterr().err
    assert f"bad.cfg:{line}:" in err and needle in err


def test_usage_error():
    assert cli.main(["frobnicate"]) == 2
    assert cli.main([]) == 2


def test_verify_single_check(tmp_path, capsys):
    out = tmp_path / "r.json"
    assert cli.main(["verify", "--check", "eq6.11.delta-omega-xi", "--out", str(out)]) == 0
    rows = json.loads(out.read_text())
    assert [r["id"] for r in rows] == ["eq6.11.delta-omega-xi"]
    assert rows[0]["passed"] is True
    assert cli.main(["verify", "--check", "nope", "--out", str(out)]) == 2


def test_verify_list(capsys):
    assert cli.main(["verify", "--list"]) == 0
    assert "lemma7.2.energy-identity" in capsys.readouterr().out


def test_flow_identity_config(tmp_path):
    assert cli.main(["flow", "--config", str(CONFIGS / "nil_identity.cfg"), "--out-dir", str(tmp_path), "--quiet"]) == 0
    lines = (tmp_path / "trace.csv").read_text().splitlines()
    assert lines[0] == ("step,time,E_HH,E_LH,E_HL,E_LL,K,tau_HH_sup,tau_HL_sup,"
                        "energy_identity_residual,rho_sq,foliated_defect")
    assert len(lines) == 2
    summary = json.loads((tmp_path / "summary.json").read_text())
    assert summary["classification"] == "special-harmonic" and summary["converged"]


def test_flow_csv_byte_identical(tmp_path, monkeypatch):
    cfg = tmp_path / "short.cfg"
    cfg.write_text("[run]\nseed = 5\nthreads = 1\n\n[flow]\nresolution = 8\nsteps = 20\ntau_threshold = 0\n")
    outs = []
    for name in ("a", "b"):
        monkeypatch.setenv("PHFLOW_OUT", str(tmp_path / name))
        assert cli.main(["flow", "--config", str(cfg), "--quiet"]) == 0
        outs.append((tmp_path / name / "trace.csv").read_bytes())
    assert outs[0] == outs[1]
    assert len(outs[0].splitlines()) == 22


def test_flow_report_figures(tmp_path):
    pytest.importorskip("matplotlib")
    cfg = tmp_path / "s.cfg"
    cfg.write_text("[flow]\nresolution = 8\nsteps = 5\ntau_threshold = 0\nreport = true\n")
    assert cli.main(["flow", "--config", str(cfg), "--out-dir", str(tmp_path), "--quiet"]) == 0
    assert (tmp_path / "energies.png").stat().st_size > 0
    assert (tmp_path / "tension.png").exists()


def test_flow_invalid_settings_exit_2(tmp_path):
    cfg = tmp_path / "x.cfg"
    cfg.write_text("[flow]\nbackend = extrinsic\n")
    assert cli.main(["flow", "--config", str(cfg), "--out-dir", str(tmp_path)]) == 2


def test_curvature_and_energy(tmp_path):
    assert cli.main(["curvature", "--model", "sphere", "--points", "3", "--out-dir", str(tmp_path)]) == 0
    rep = json.loads((tmp_path / "curvature.json").read_text())
    assert {s["class"] for s in rep["samples"]} == {"indefinite"}
    assert cli.main(["energy", "--map", "identity", "--resolution", "8", "--out-dir", str(tmp_path)]) == 0
    rep = json.loads((tmp_path / "energy_identity.json").read_text())
    assert rep["energies_exact_jets"]["E_HH"] == pytest.approx(1.0, abs=1e-12)
    assert cli.main(["energy", "--map", "nope", "--out-dir", str(tmp_path)]) == 2


def test_no_stray_temp_files(tmp_path):
    cli.atomic_write(tmp_path / "x.txt", "hello")
    assert [p.name for p in tmp_path.iterdir()] == ["x.txt"]

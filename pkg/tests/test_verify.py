import json
from pathlib import Path

import pytest

from phflow import verify as vf

ROOT = Path(__file__).resolve().parents[1]
FAST = ["eq6.11.delta-omega-xi", "eq2.17.mixed", "eq6.3.energy-split", "def1.5.negativity-class"]


def test_registry_matches_manifest():
    manifest = [ln.strip() for ln in (ROOT / "docs" / "check_manifest.txt").read_text().splitlines() if ln.strip()]
    assert manifest == vf.check_ids()
    assert len(set(manifest)) == len(manifest)


def test_every_check_names_its_operation():
    hosts = ("geometry.", "fields.", "maps.", "flow.")
    for cid, (scenario, _) in vf.REGISTRY.items():
        assert scenario.startswith(hosts), cid


def test_unknown_id():
    with pytest.raises(vf.VerifyError, match="nope"):
        vf.run_suite(["eq6.11.delta-omega-xi", "nope"])


def test_empty_selection():
    assert vf.run_suite([]) == []


def test_single_selection():
    (r,) = vf.run_suite(["eq6.11.delta-omega-xi"])
    assert r.check_id == "eq6.11.delta-omega-xi"
    assert r.passed and r.residual <= 5e-3
    assert 0.995 <= r.detail["value"] <= 1.005


def test_results_deterministic_and_ordered():
    a = vf.run_suite(FAST, vf.VerifyConfig(seed=3, points=10))
    b = vf.run_suite(FAST, vf.VerifyConfig(seed=3, points=10))
    assert [r.check_id for r in a] == FAST
    assert vf.report_json(a) == vf.report_json(b)
    rows = json.loads(vf.report_json(a, timings=True))
    assert set(rows[0]) == {"id", "scenario", "residual", "tolerance", "passed", "detail", "runtime"}
    assert "runtime" not in json.loads(vf.report_json(a))[0]


def test_table_lists_every_check():
    res = vf.run_suite(FAST[:2])
    text = vf.report_table(res)
    assert all(cid in text for cid in FAST[:2])
    assert text.rstrip().endswith("2/2 checks passed")

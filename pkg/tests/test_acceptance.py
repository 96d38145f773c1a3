"""Acceptance criteria, one test per criterion.

The identity suite runs once per session (in-process, with runtimes) and each
criterion reads the checks it covers.  Runtime budgets are measured on those
checks.  A summary with one PASS/FAIL line per criterion is printed at the end
of the pytest run.
"""

import subprocess
import sys

import pytest

from phflow import verify as vf


@pytest.fixture(scope="session")
def suite():
    return {r.check_id: r for r in vf.run_suite("all", vf.VerifyConfig(seed=0))}


def _passed(suite, ids):
    failed = {i: (suite[i].residual, suite[i].tolerance) for i in ids if not suite[i].passed}
    assert not failed, failed


def _runtime(suite, ids):
    return sum(suite[i].runtime for i in ids)


def test_criterion_01_connection_axioms(suite):
    """Tanaka-Webster axioms on all models at 100 points, residual <= 1e-5, halving ratio in [3, 5.5], <= 10 s."""
    ids = ["prop1.1.metric", "prop1.1.complex-structure", "prop1.1.torsion-purity", "prop1.1.reeb-parallel",
           "prop1.1.halving-order"]
    _passed(suite, ids)
    for cid in ids[:4]:
        assert suite[cid].residual <= 1e-5
    ratios = suite["prop1.1.halving-order"].detail["ratios"]
    assert {"M(-1)", "M(0)", "M(1)", "S3"} <= set(ratios) | set(suite["prop1.1.halving-order"].detail["exact_models"])
    assert all(3.0 <= r <= 5.5 for r in ratios.values())
    assert _runtime(suite, ids) <= 10.0


def test_criterion_02_space_form_curvature(suite):
    """K_hol = lambda within 1e-6 for lambda in {-1, 0, 1}; nilmanifold curvature 0 within 1e-9; <= 5 s."""
    ids = ["eq1.24.hol-sectional", "eq1.24.nil-flat"]
    _passed(suite, ids)
    assert suite["eq1.24.hol-sectional"].residual <= 1e-6
    assert suite["eq1.24.nil-flat"].residual <= 1e-9
    assert _runtime(suite, ids) <= 5.0


def test_criterion_03_negativity_classifier(suite):
    """M(-1) strongly negative, nilmanifold strongly seminegative, sphere indefinite, order-2 sampling clean; <= 30 s."""
    ids = ["def1.5.negativity-class", "def1.5.order2-sample"]
    _passed(suite, ids)
    cls = suite["def1.5.negativity-class"].detail["classes"]
    assert cls == {"M(-1)": ["strongly-negative"], "nil": ["strongly-seminegative"], "S3": ["indefinite"]}
    assert suite["def1.5.order2-sample"].detail["result"] == "no-counterexample"
    assert _runtime(suite, ids) <= 30.0


def test_criterion_04_delta_omega_xi(suite):
    """delta omega(xi) in [0.995, 1.005] at 32^3 and [0.99875, 1.00125] at 64^3; <= 20 s."""
    ids = ["eq6.11.delta-omega-xi", "eq6.11.delta-omega-xi-fine"]
    _passed(suite, ids)
    assert 0.995 <= suite[ids[0]].detail["value"] <= 1.005
    assert 0.99875 <= suite[ids[1]].detail["value"] <= 1.00125
    assert _runtime(suite, ids) <= 20.0


def test_criterion_05_scalar_commutation(suite):
    """Scalar commutation residual converges at second order between 32^3 and 64^3; <= 20 s."""
    r = suite["ex5.2.scalar-commutation-order"]
    assert r.passed
    assert 3.0 <= r.detail["ratio"] <= 5.5
    assert r.runtime <= 20.0


def test_criterion_06_map_commutation(suite):
    """Commutation relations on analytic jets of the corpus (>= 6 maps) within 1e-9; <= 5 s."""
    ids = ["eq2.14.reeb", "eq2.14.reeb-bar", "eq2.14.mixed", "eq2.17.mixed", "eq2.17.reeb", "eq2.17.reeb-bar",
           "eq4.18"]
    _passed(suite, ids)
    for cid in ids:
        per = suite[cid].detail["per_map"]
        assert len(per) >= 6 and max(per.values()) <= 1e-9
    assert _runtime(suite, ids) <= 5.0


def test_criterion_07_energy_algebra(suite):
    """Energy splits to 1e-12, identity E_HH = 1 within 1e-10, pairing residual of the identity <= 1e-10; <= 5 s."""
    ids = ["eq6.3.energy-split", "eq6.5.k-determinant", "eq3.2.identity-energy", "lemma6.2.pairing-identity"]
    _passed(suite, ids)
    assert suite["eq6.3.energy-split"].residual <= 1e-12
    assert suite["eq6.5.k-determinant"].residual <= 1e-12
    assert abs(suite["eq3.2.identity-energy"].detail["E_HH"] - 1.0) <= 1e-10
    assert suite["lemma6.2.pairing-identity"].residual <= 1e-10
    assert _runtime(suite, ids) <= 5.0


def test_criterion_08_bochner(suite):
    """Bochner residual <= 1e-7 at 20 points for 3 maps including a non-foliated one; <= 5 s."""
    r = suite["thm4.1.bochner"]
    assert r.passed and r.residual <= 1e-7
    assert len(r.detail["per_map"]) == 3 and "reeb-tilt" in r.detail["per_map"]
    assert r.runtime <= 5.0


def test_criterion_09_flow_monotonicity(suite):
    """Nilmanifold flow at 24^3, dt = h^2/8: energies monotone, identity residual <= 1e-2, tau drops 10x, foliated, K fixed; <= 5 min."""
    ids = ["lemma7.2.energy-monotone", "lemma7.6.elh-monotone", "lemma7.10.ell-monotone", "lemma7.2.energy-identity",
           "eq7.5.tau-reduction", "thm7.14.foliated-limit", "thm6.6.flow-k-drift"]
    _passed(suite, ids)
    assert suite["eq7.5.tau-reduction"].residual <= 0.1
    assert suite["lemma7.2.energy-identity"].residual <= 1e-2
    assert suite["thm7.14.foliated-limit"].residual <= 1e-3
    assert suite["thm6.6.flow-k-drift"].residual <= 1e-3
    assert _runtime(suite, ids) <= 300.0


def test_criterion_10_extrinsic_backend(suite):
    """Sphere flow, 500 steps: int |rho|^2 nonincreasing within 1e-9 per step; identity tension <= h^2; <= 2 min."""
    ids = ["lemmaB3.rho-monotone", "eqB13.identity-fixed-point"]
    _passed(suite, ids)
    assert suite["lemmaB3.rho-monotone"].residual <= 1e-9
    assert _runtime(suite, ids) <= 120.0


def test_criterion_11_minimality(suite):
    """E(identity) <= E(each of 20 seeded foliated perturbations) + 1e-9; <= 30 s."""
    r = suite["thm6.7.minimality"]
    assert r.passed and r.residual <= 1e-9
    assert r.runtime <= 30.0


def test_criterion_12_determinism(tmp_path):
    """verify --all twice with the same seed and thread count gives byte-identical JSON reports."""
    outs = []
    for name in ("first.json", "second.json"):
        path = tmp_path / name
        cmd = [sys.executable, "-m", "phflow.cli", "verify", "--all", "--seed", "0", "--threads", "2",
               "--out", str(path)]
        proc = subprocess.run(cmd, capture_output=True, text=True)
        assert proc.returncode == 0, proc.stdout + proc.stderr
        outs.append(path.read_bytes())
    assert outs[0] == outs[1]

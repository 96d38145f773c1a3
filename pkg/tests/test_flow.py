import warnings

import numpy as np
import pytest

from phflow import fields as fl
from phflow import flow as fw
from phflow import geometry as geo
from phflow import maps as mp


@pytest.fixture(scope="module")
def nil():
    return geo.build_model("heisenberg-nilmanifold")


@pytest.fixture(scope="module")
def sphere_grid():
    return fl.Grid(geo.build_model("round-sphere-3", {"scale": 1.0}), (16, 16, 16))


def test_config_validation():
    bad = [
        dict(backend="spectral"),
        dict(backend="intrinsic", target="round-sphere-3"),
        dict(backend="extrinsic"),
        dict(dt=-1.0),
        dict(steps=-1),
        dict(every=0),
        dict(resolution=(8, 8)),
    ]
    for kw in bad:
        with pytest.raises(fw.FlowError):
            fw.FlowConfig(**kw).validate()
    fw.FlowConfig().validate()


def test_identity_fixed_point(nil):
    g = fl.Grid(nil, (16, 16, 16))
    f = mp.analytic_map_field(g, "identity")
    f2 = fw.step_intrinsic(f, fw.default_dt(g))
    assert np.max(np.abs(f2.values - f.values)) <= 1e-14


def test_identity_run_converges_immediately():
    res = fw.run_flow(fw.FlowConfig(initial="identity", resolution=(8, 8, 8), steps=50))
    assert len(res.trace.rows) == 1
    assert res.classification == "special-harmonic" and res.converged
    assert fw.energy_identity_residual(res.trace) == 0.0


def test_one_step_decreases_energy(nil):
    g = fl.Grid(nil, (16, 16, 16))
    f = fw.foliated_perturbation(g, 0.05, seed=1)
    E0 = mp.energies(f).E_HH
    E1 = mp.energies(fw.step_intrinsic(f, fw.default_dt(g))).E_HH
    assert E1 < E0


def test_cfl_enforced_and_overridable(nil):
    g = fl.Grid(nil, (8, 8, 8))
    cfl = g.cfl_bound()
    assert cfl == pytest.approx(g.h ** 2 / 4)
    with pytest.raises(fw.FlowError, match="stability bound"):
        fw.run_flow(fw.FlowConfig(resolution=(8, 8, 8), dt=2 * cfl))
    # well above the bound the explicit scheme diverges and the run aborts cleanly
    with warnings.catch_warnings():
        warnings.simplefilter("ignore", RuntimeWarning)
        with pytest.raises(fw.FlowError, match="blew up at step"):
            fw.run_flow(fw.FlowConfig(resolution=(8, 8, 8), dt=8 * cfl, allow_unstable=True,
                                      steps=100, tau_threshold=0.0))


def test_short_flow_monotone_and_deterministic():
    conf = fw.FlowConfig(resolution=(8, 8, 8), steps=60, seed=4, tau_threshold=0.0)
    a = fw.run_flow(conf)
    b = fw.run_flow(conf)
    assert a.trace.to_csv() == b.trace.to_csv()
    mono = fw.monotonicity_report(a.trace)
    for name in ("E_HH", "E_LH", "E_LL"):
        assert mono[name] <= mono["slack"]
    assert a.classification == "not-converged" and not a.converged
    assert a.trace.to_csv().splitlines()[0] == ",".join(fw.TRACE_COLUMNS)
    assert np.isnan(a.trace.column("rho_sq")).all()


def test_energy_identity_residual_errors():
    with pytest.raises(fw.FlowError):
        fw.energy_identity_residual(fw.FlowTrace())


def test_summary_schema():
    res = fw.run_flow(fw.FlowConfig(resolution=(8, 8, 8), steps=3, tau_threshold=0.0))
    s = res.summary()
    assert set(s) == {"converged", "steps", "final", "classification"}
    assert set(s["final"]) >= {"E_HH", "E_LH", "E_HL", "E_LL", "K"}
    assert s["steps"] == 3


def test_extrinsic_target_invariants(sphere_grid):
    tgt = fw.ExtrinsicTarget(2.0)
    y = tgt.embed(sphere_grid.points)
    assert np.allclose(tgt.project(y), y, atol=1e-13)
    assert np.max(np.abs(tgt.rho(y))) < 1e-13
    # second derivative of Pi against a finite difference
    rng = np.random.default_rng(0)
    p, v = 2.3 * rng.normal(size=(5, 4)), rng.normal(size=(5, 4))
    h = 1e-4
    fd = (tgt.project(p + h * v) - 2 * tgt.project(p) + tgt.project(p - h * v)) / h ** 2
    assert np.allclose(tgt.second(p, v), fd, atol=1e-5)
    # the Reeb field is tangent and has unit contact value
    assert np.allclose(tgt.theta(y, tgt.reeb(y)), 1.0)
    assert np.max(np.abs(np.sum(y * tgt.reeb(y), axis=1))) < 1e-13


def test_extrinsic_fixed_points(sphere_grid):
    tgt = fw.ExtrinsicTarget(2.0)
    u = fw.embedded_identity(sphere_grid, tgt.R)
    assert np.max(np.abs(fw.extrinsic_rhs(u, sphere_grid, tgt))) <= sphere_grid.h ** 2
    c = np.tile(np.array([0.0, 2.0, 0.0, 0.0]), (sphere_grid.size, 1))
    assert np.array_equal(fw.step_extrinsic(c, sphere_grid, tgt, 1e-3), c)


def test_extrinsic_tube_escape(sphere_grid):
    tgt = fw.ExtrinsicTarget(2.0)
    u = fw.embedded_identity(sphere_grid, tgt.R)
    u[7] *= 1.9
    with pytest.raises(fw.FlowError, match="node 7"):
        fw.step_extrinsic(u, sphere_grid, tgt, 1e-3, step_index=0)


def test_extrinsic_short_run_rho_monotone():
    conf = fw.FlowConfig(source="round-sphere-3", target="round-sphere-3", backend="extrinsic",
                         resolution=(8, 8, 8), steps=40, tau_threshold=0.0, seed=2)
    res = fw.run_flow(conf)
    rho = res.trace.column("rho_sq")
    assert rho[0] > 0
    assert np.max(np.diff(rho)) <= 1e-9

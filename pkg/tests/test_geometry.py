import math

import numpy as np
import pytest

from phflow import geometry as geo


@pytest.fixture(scope="module")
def models():
    return {
        "nil": geo.build_model("heisenberg-nilmanifold"),
        "neg": geo.build_model("space-form-chart", {"lambda": -1.0}),
        "flat": geo.build_model("space-form-chart", {"lambda": 0.0}),
        "pos": geo.build_model("space-form-chart", {"lambda": 1.0}),
        "sphere": geo.build_model("round-sphere-3", {"scale": 1.0}),
    }


def test_unknown_kind_and_params_rejected():
    with pytest.raises(geo.GeometryError):
        geo.build_model("torus")
    with pytest.raises(geo.GeometryError):
        geo.build_model("round-sphere-3", {"lambda": 1.0})
    with pytest.raises(geo.GeometryError):
        geo.build_model("round-sphere-3", {"scale": -2.0})
    with pytest.raises(geo.GeometryError):
        geo.build_model("space-form-chart", {"lambda": float("nan")})


def test_heisenberg_group_law():
    rng = np.random.default_rng(3)
    a, b, c = rng.normal(size=(3, 3))
    lhs = geo.heis_mul(geo.heis_mul(a, b), c)
    rhs = geo.heis_mul(a, geo.heis_mul(b, c))
    assert np.allclose(lhs, rhs, atol=1e-14)
    assert np.allclose(geo.heis_mul(a, geo.heis_inv(a)), 0.0, atol=1e-14)


def test_lattice_reduce_lands_in_fundamental_domain():
    rng = np.random.default_rng(4)
    for p in rng.uniform(-5, 5, size=(50, 3)):
        q, gam = geo.lattice_reduce(p)
        assert np.all((q >= 0) & (q < 1))
        assert np.allclose(geo.heis_mul(q, gam), p, atol=1e-12)
        # reducing a reduced point changes nothing
        assert np.allclose(geo.lattice_reduce(q)[0], q, atol=1e-12)


@pytest.mark.parametrize("name", ["nil", "neg", "flat", "pos", "sphere"])
def test_tanaka_webster_axioms(models, name):
    rep = geo.check_tanaka_webster(models[name], 20, 1e-3, seed=1)
    assert rep["max_residual"] <= 1e-5
    assert set(rep["residuals"]) == {"metric", "complex-structure", "torsion-purity", "reeb-parallel"}


@pytest.mark.parametrize("name", ["neg", "pos", "sphere"])
def test_tanaka_webster_second_order(models, name):
    a = geo.check_tanaka_webster(models[name], 20, 1e-3, seed=2)["max_residual"]
    b = geo.check_tanaka_webster(models[name], 20, 5e-4, seed=2)["max_residual"]
    assert 3.0 <= a / b <= 5.5


@pytest.mark.parametrize("lam,key", [(-1.0, "neg"), (0.0, "flat"), (1.0, "pos")])
def test_space_form_holomorphic_sectional(models, lam, key):
    m = models[key]
    for p in m.random_points(10, seed=5):
        for X in (np.array([0.0, 1.0, 0.0]), np.array([0.0, 0.6, -0.8])):
            assert geo.hol_sectional(m, p, X) == pytest.approx(lam, abs=1e-6)


def test_sphere_holomorphic_sectional_positive(models):
    # unit-scale Hopf sphere: K_hol is the constant 4 / R^2 - 3 in our normalization, positive either way
    m = models["sphere"]
    vals = [geo.hol_sectional(m, p, np.array([0.0, 1.0, 0.0])) for p in m.random_points(5, seed=0)]
    assert min(vals) > 0
    assert max(vals) - min(vals) < 1e-8


def test_nil_flat(models):
    m = models["nil"]
    for p in m.random_points(10, seed=6):
        assert np.max(np.abs(geo.curvature_at(m, p).R)) <= 1e-9


@pytest.mark.parametrize("key,want", [("neg", "strongly-negative"), ("nil", "strongly-seminegative"),
                                      ("flat", "strongly-seminegative"), ("pos", "indefinite"),
                                      ("sphere", "indefinite")])
def test_negativity_class(models, key, want):
    m = models[key]
    assert {geo.negativity_class(m, p) for p in m.random_points(4, seed=7)} == {want}


def test_order_k_sampling(models):
    m = models["neg"]
    p = m.random_points(1, seed=0)[0]
    rep2 = geo.order_k_negativity_sample(m, p, 2, 500, seed=0)
    assert rep2["result"] == "no-counterexample" and rep2["vacuous"]
    assert rep2["eligible_trials"] == 0
    # with k = 1 the antisymmetrized 2-vector is identically zero, so any A, B refutes
    rep1 = geo.order_k_negativity_sample(m, p, 1, 50, seed=0)
    assert rep1["result"] == "counterexample" and not rep1["vacuous"]
    with pytest.raises(geo.GeometryError):
        geo.order_k_negativity_sample(m, p, 0, 10)


def test_connection_offset_matches_sasakian_form(models):
    S = geo.sasakian_offset_tensor()
    for m in models.values():
        for p in m.random_points(3, seed=8):
            assert np.max(np.abs(geo.connection_offset(m, p).S - S)) <= 1e-9


def test_out_of_domain_point_rejected(models):
    with pytest.raises(geo.GeometryError):
        geo.curvature_at(models["neg"], np.array([5.0, 0.0, 0.0]))
    with pytest.raises(geo.GeometryError):
        geo.curvature_at(models["nil"], np.array([math.nan, 0.0, 0.0]))

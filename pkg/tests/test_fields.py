import math

import numpy as np
import pytest

from phflow import fields as fl
from phflow import geometry as geo


@pytest.fixture(scope="module")
def nil():
    return geo.build_model("heisenberg-nilmanifold")


@pytest.fixture(scope="module")
def sphere():
    return geo.build_model("round-sphere-3", {"scale": 1.0})


@pytest.fixture(scope="module")
def g16(nil):
    return fl.Grid(nil, (16, 16, 16))


def test_grid_validation(nil, sphere):
    with pytest.raises(fl.FieldError):
        fl.Grid(nil, (3, 8, 8))
    with pytest.raises(fl.FieldError):
        fl.Grid(nil, (8, 8, 12))           # twist is not a whole number of cells
    with pytest.raises(fl.FieldError):
        fl.Grid(sphere, (10, 8, 8))
    with pytest.raises(fl.FieldError):
        fl.Grid(geo.build_model("space-form-chart", {"lambda": 1.0}), (8, 8, 8))


def test_non_invariant_function_rejected(g16):
    with pytest.raises(fl.FieldError):
        fl.scalar_from_function(g16, lambda x, y, t: np.sin(2 * np.pi * t))
    # t + x y / 2 shifts by integers under the lattice, so its sine times a theta factor descends
    fl.scalar_from_function(g16, fl.nil_theta(1, 0.4))


def test_volumes(g16, sphere):
    assert fl.integrate(fl.constant(g16, 1.0)) == pytest.approx(1.0, abs=1e-12)
    errs = []
    for n in (16, 32):
        g = fl.Grid(sphere, (n, n, n))
        errs.append(abs(g.integrate_values(np.ones(g.size)) - 16 * math.pi ** 2))
    # |sin 2 eta| has kinks, so the quadrature is second order
    assert errs[1] < errs[0] / 3.0


@pytest.mark.parametrize("kx,ky", [(1, 0), (0, 1), (1, 2)])
def test_sub_laplacian_eigenfunctions(nil, kx, ky):
    lam = (2 * math.pi) ** 2 * (kx * kx + ky * ky)
    errs = []
    for n in (16, 32):
        g = fl.Grid(nil, (n, n, n))
        u = fl.scalar_from_function(g, fl.nil_trig(kx, ky, 0.3))
        errs.append(np.max(np.abs(fl.sub_laplacian(u).values + lam * u.values)))
    assert errs[1] < 0.05 * lam
    assert 3.0 <= errs[0] / errs[1] <= 5.5


def test_trig_commutation_exact(g16):
    u = fl.scalar_from_function(g16, fl.nil_trig(1, 1, 0.2))
    assert fl.scalar_commutation_residual(u).max_abs() < 1e-10


def test_theta_commutation_second_order(nil):
    r = [fl.scalar_commutation_residual(fl.scalar_from_function(fl.Grid(nil, (n, n, n)), fl.nil_theta(1, 0.3))).max_abs()
         for n in (16, 32)]
    assert 3.0 <= r[0] / r[1] <= 5.5


def test_divergence_integrates_to_zero(g16):
    comps = [fl.random_smooth(g16, seed=i).values for i in range(3)]
    V = fl.VectorField(g16, np.stack(comps, axis=1))
    assert abs(fl.integrate(fl.divergence(V))) < 1e-10


def test_green_identity(g16):
    u = fl.random_smooth(g16, seed=11)
    v = fl.random_smooth(g16, seed=12)
    lhs = fl.integrate(u * fl.sub_laplacian(v))
    gu, gv = fl.horizontal_gradient(u).values, fl.horizontal_gradient(v).values
    rhs = -g16.integrate_values(np.sum(gu * gv, axis=1))
    assert lhs == pytest.approx(rhs, rel=1e-10, abs=1e-10)


def test_delta_omega_xi(nil):
    val, per_node = fl.delta_omega_xi(fl.Grid(nil, (32, 32, 32)))
    assert 0.995 <= val <= 1.005
    assert np.max(np.abs(per_node[:, 1:])) < 1e-10


def test_map_field_seam_check(g16, nil):
    fl.map_from_function(g16, nil, lambda p: p.copy(), np.eye(3))
    with pytest.raises(fl.FieldError):
        # lift compatible with the identity but declared with a different action
        fl.map_from_function(g16, nil, lambda p: p.copy(), np.diag([2.0, 1.0, 2.0]))


def test_binary_roundtrip(tmp_path, g16):
    u = fl.random_smooth(g16, seed=3)
    fl.save_binary(tmp_path / "u.bin", u)
    head, vals = fl.load_binary(tmp_path / "u.bin")
    assert head["dims"] == [16, 16, 16]
    assert np.array_equal(vals, u.values)
    (tmp_path / "bad.bin").write_bytes(b"nonsense")
    with pytest.raises(fl.FieldError):
        fl.load_binary(tmp_path / "bad.bin")


def test_csv_export(nil):
    g = fl.Grid(nil, (4, 4, 4))
    text = fl.to_csv(fl.constant(g, 2.0))
    lines = text.splitlines()
    assert lines[0] == "i,j,k,x,y,t,v0"
    assert len(lines) == 65
    assert lines[1].endswith(",2.0")

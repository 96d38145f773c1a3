"""Structured grids on the compact models and the discrete horizontal calculus.

Nilmanifold grid
    Nodes sit on the polarized coordinates (x, y, s) with s = t + x*y/2, all in
    [0, 1).  In these coordinates theta = ds - y dx, e1 = d_x + y d_s,
    e2 = d_y, xi = d_s.  The x and s faces glue plainly; the y face glues
    (x, y + 1, s) ~ (x, y, s - x), which is an integer shift of s-cells when
    n_s is a multiple of n_x.
Sphere grid
    Hopf angles (eta, phi1, phi2) on the periodic torus [0, 2pi)^3, a 4-fold
    branched cover of S^3.  eta nodes are staggered by half a cell so that no
    node lands on a coordinate pole.

On the nilmanifold, frame derivatives are centered differences; e1
differences run along its integral curves, with spectral interpolation in s,
so the truncation error is itself lattice invariant.  On the sphere the
Hopf-angle derivatives are spectral: pulled-back functions are smooth and
periodic on the torus cover, while centered differences lose an order next
to the coordinate poles where the frame has cot(eta) coefficients.  Second
derivatives compose first derivatives (wide stencil).
"""

from __future__ import annotations

import math
import struct
from dataclasses import dataclass

import numpy as np

from . import geometry as geo


class FieldError(ValueError):
    pass


class Grid:
    def __init__(self, model, shape):
        shape = tuple(int(n) for n in shape)
        if len(shape) != 3 or min(shape) < 4:
            raise FieldError(f"grid needs three resolutions of at least 4, got {shape}")
        if not model.compact:
            raise FieldError(f"{model.kind} is a local chart; grids need a compact model")
        self.model = model
        self.shape = shape
        self.size = shape[0] * shape[1] * shape[2]
        n0, n1, n2 = shape
        if model.kind == "heisenberg-nilmanifold":
            if n2 % n0:
                raise FieldError(f"n_t={n2} must be a multiple of n_x={n0} so the y-face twist is a whole number of cells")
            self.spacing = (1.0 / n0, 1.0 / n1, 1.0 / n2)
            self.offset = (0.0, 0.0, 0.0)
            self.period = (1.0, 1.0, 1.0)
        else:
            if n0 % 4:
                raise FieldError(f"sphere grids need n_eta divisible by 4, got {n0}")
            self.spacing = tuple(2 * math.pi / n for n in shape)
            self.offset = (0.5 * self.spacing[0], 0.0, 0.0)
            self.period = (2 * math.pi,) * 3
        axes = [self.offset[a] + self.spacing[a] * np.arange(shape[a]) for a in range(3)]
        self.axes = axes
        G = np.meshgrid(*axes, indexing="ij")
        self.gcoords = np.stack([g.ravel() for g in G], axis=1)     # grid coordinates
        self.points = self._to_chart(self.gcoords)                  # chart coordinates
        self._build_neighbors()
        self._build_frame()

    # coordinates ------------------------------------------------------
    @property
    def is_nil(self):
        return self.model.kind == "heisenberg-nilmanifold"

    def _to_chart(self, g):
        g = np.asarray(g, dtype=float)
        if not self.is_nil:
            return g.copy()
        out = g.copy()
        out[..., 2] = g[..., 2] - 0.5 * g[..., 0] * g[..., 1]
        return out

    @property
    def h(self):
        return min(self.spacing)

    @property
    def cell_volume(self):
        return self.spacing[0] * self.spacing[1] * self.spacing[2]

    def index(self, i, j, k):
        n0, n1, n2 = self.shape
        return (i * n1 + j) * n2 + k

    # identifications ----------------------------------------------------
    def _wrap(self, i, j, k):
        """Map unwrapped node indices to the base node inside the box."""
        n0, n1, n2 = self.shape
        if self.is_nil:
            m = n2 // n0
            qy, j = np.divmod(j, n1)
            i = np.mod(i, n0)
            # (x, y + 1, s) ~ (x, y, s - x)
            k = k - qy * i * m
            k = np.mod(k, n2)
            return i, j, k
        return np.mod(i, n0), np.mod(j, n1), np.mod(k, n2)

    def _build_neighbors(self):
        n0, n1, n2 = self.shape
        I, J, K = np.meshgrid(np.arange(n0), np.arange(n1), np.arange(n2), indexing="ij")
        I, J, K = I.ravel(), J.ravel(), K.ravel()
        self.nbr = {}
        self.deck = {}
        for a in range(3):
            for sgn in (1, -1):
                d = [0, 0, 0]
                d[a] = sgn
                i2, j2, k2 = self._wrap(I + d[0], J + d[1], K + d[2])
                idx = self.index(i2, j2, k2)
                self.nbr[(a, sgn)] = idx
                if self.is_nil:
                    virt = self.gcoords + np.array(d) * np.array(self.spacing)
                    q = self._to_chart(virt)
                    base = self.points[idx]
                    gam = geo.heis_mul(geo.heis_inv(base), q)
                    gam[:, 0] = np.round(gam[:, 0])
                    gam[:, 1] = np.round(gam[:, 1])
                    half = 0.5 * gam[:, 0] * gam[:, 1]
                    gam[:, 2] = np.round(gam[:, 2] - half) + half
                    self.deck[(a, sgn)] = gam
                else:
                    self.deck[(a, sgn)] = np.zeros((self.size, 3))
        self.seam = {key: np.flatnonzero(np.any(g != 0, axis=1)) for key, g in self.deck.items()}

    def _build_frame(self):
        model = self.model
        if self.is_nil:
            C = np.zeros((self.size, 3, 3))          # C[node, A, axis]
            C[:, 0, 2] = 1.0
            C[:, 1, 0] = 1.0
            C[:, 1, 2] = self.gcoords[:, 1]
            C[:, 2, 1] = 1.0
            self.frame_coef = C
            self.gamma = np.zeros((self.size, 3, 3, 3))
            self.structure = model.structure_many(self.points)
            self.density = np.ones(self.size)
        else:
            E = model.frame_many(self.points)         # columns xi, e1, e2
            self.frame_coef = np.transpose(E, (0, 2, 1)).copy()
            self.gamma = model.gamma_many(self.points)
            self.structure = model.structure_many(self.points)
            W = model.coframe_many(self.points)
            # 4-fold cover of S^3
            self.density = np.abs(np.linalg.det(W)) / 4.0
        self.weights = self.density * self.cell_volume
        # sum_A nabla_{e_A} e_A over the horizontal frame, frame components
        self.hdiv = self.gamma[:, :, 1, 1] + self.gamma[:, :, 2, 2]

    def cfl_bound(self):
        """Largest default forward-Euler step for the horizontal heat equation."""
        if self.is_nil:
            return self.h ** 2 / 4.0
        # spectral derivatives reach wavenumber pi/h
        coef = np.pi * np.abs(self.frame_coef[:, 1:, :]) / np.array(self.spacing)
        lam = np.max(np.sum(np.sum(coef, axis=2) ** 2, axis=1))
        return 1.0 / lam

    # stencils -----------------------------------------------------------
    def shifted(self, values, axis, sgn, lift=None):
        """Values at the neighbor node, with the deck action applied to lifts."""
        out = values[self.nbr[(axis, sgn)]]
        if lift is not None:
            seam = self.seam[(axis, sgn)]
            if seam.size:
                out = out.copy()
                out[seam] = lift(out[seam], self.deck[(axis, sgn)][seam])
        return out

    def axis_diff(self, values, axis, lift=None):
        if not self.is_nil:
            return self._spectral_diff(values, axis)
        plus = self.shifted(values, axis, 1, lift)
        minus = self.shifted(values, axis, -1, lift)
        return (plus - minus) / (2.0 * self.spacing[axis])

    def _spectral_diff(self, values, axis):
        """Fourier derivative along a periodic torus axis (Nyquist mode dropped)."""
        v = np.asarray(values, dtype=float)
        tail = v.shape[1:]
        arr = v.reshape(self.shape + tail)
        n = self.shape[axis]
        k = 2j * np.pi * np.fft.rfftfreq(n, d=self.spacing[axis])
        if n % 2 == 0:
            k[-1] = 0.0
        shape = [1] * arr.ndim
        shape[axis] = k.size
        spec = np.fft.rfft(arr, axis=axis) * k.reshape(shape)
        return np.fft.irfft(spec, n=n, axis=axis).reshape(v.shape)

    def _s_shift(self, values, delta, lift=None):
        """Values at (x, y, s + delta) by spectral interpolation along the fiber."""
        n0, n1, n2 = self.shape
        v = np.asarray(values, dtype=float)
        tail = v.shape[1:]
        inc = np.zeros(tail)
        if lift is not None:
            inc = lift(np.zeros((1,) + tail), np.array([[0.0, 0.0, 1.0]]))[0]
        s = self.gcoords[:, 2].reshape((-1,) + (1,) * len(tail))
        per = (v - s * inc).reshape((n0, n1, n2) + tail)
        spec = np.fft.rfft(per, axis=2)
        freq = np.fft.rfftfreq(n2, d=self.spacing[2])
        dd = np.asarray(delta).reshape(n0, n1, n2)[:, :, :1]
        phase = np.exp(2j * np.pi * freq[None, None, :] * dd)
        spec = spec * phase.reshape(phase.shape + (1,) * len(tail))
        per = np.fft.irfft(spec, n=n2, axis=2).reshape(v.shape)
        dshape = np.asarray(delta).reshape((-1,) + (1,) * len(tail))
        return per + (s + dshape) * inc

    def _e1_diff(self, values, lift=None):
        # central difference along the integral curves of e1 = d_x + y d_s, so
        # the truncation error is itself lattice invariant
        hx = self.spacing[0]
        y = self.gcoords[:, 1]
        plus = self._s_shift(self.shifted(values, 0, 1, lift), y * hx, lift)
        minus = self._s_shift(self.shifted(values, 0, -1, lift), -y * hx, lift)
        return (plus - minus) / (2.0 * hx)

    def frame_diff(self, values, lift=None, which=(0, 1, 2)):
        """Frame derivatives e_A(values) for A in `which`; returns list of arrays."""
        if self.is_nil:
            out = []
            for A in which:
                if A == 0:
                    out.append(self.axis_diff(values, 2, lift))
                elif A == 1:
                    out.append(self._e1_diff(values, lift))
                else:
                    out.append(self.axis_diff(values, 1, lift))
            return out
        axd = [self.axis_diff(values, a, lift) for a in range(3)]
        out = []
        for A in which:
            acc = 0.0
            for a in range(3):
                c = self.frame_coef[:, A, a]
                if not np.any(c):
                    continue
                cc = c.reshape((-1,) + (1,) * (values.ndim - 1))
                acc = acc + cc * axd[a]
            if np.isscalar(acc):
                acc = np.zeros_like(values, dtype=float)
            out.append(acc)
        return out

    def integrate_values(self, values):
        values = np.asarray(values)
        return float(np.dot(self.weights, values))

    def describe(self):
        return {"model": self.model.kind, "shape": list(self.shape), "spacing": list(self.spacing)}


# --------------------------------------------------------------- fields


@dataclass(frozen=True)
class ScalarField:
    grid: Grid
    values: np.ndarray

    def __post_init__(self):
        v = np.asarray(self.values, dtype=float).reshape(-1)
        if v.size != self.grid.size:
            raise FieldError(f"expected {self.grid.size} node values, got {v.size}")
        object.__setattr__(self, "values", v)

    def __add__(self, other):
        return ScalarField(self.grid, self.values + _vals(other))

    def __sub__(self, other):
        return ScalarField(self.grid, self.values - _vals(other))

    def __mul__(self, other):
        return ScalarField(self.grid, self.values * _vals(other))

    __rmul__ = __mul__

    def max_abs(self):
        return float(np.max(np.abs(self.values)))

    def as_array(self):
        return self.values.reshape(self.grid.shape)


def _vals(x):
    return x.values if isinstance(x, (ScalarField,)) else x


@dataclass(frozen=True)
class VectorField:
    """Frame components (xi, e1, e2) per node."""
    grid: Grid
    values: np.ndarray

    def __post_init__(self):
        v = np.asarray(self.values, dtype=float).reshape(-1, 3)
        if v.shape[0] != self.grid.size:
            raise FieldError("vector field size does not match the grid")
        object.__setattr__(self, "values", v)

    def component(self, A):
        return ScalarField(self.grid, self.values[:, A])


def scalar_from_function(grid, fn, tol=1e-9):
    """Sample fn(x, y, t) on the nodes (chart coordinates) and check it descends.

    On the nilmanifold the function must be invariant under the lattice; this
    is checked at every seam crossing.
    """
    pts = grid.points
    vals = np.asarray(fn(pts[:, 0], pts[:, 1], pts[:, 2]), dtype=float) * np.ones(grid.size)
    if grid.is_nil:
        for (a, sgn), seam in grid.seam.items():
            if not seam.size:
                continue
            d = np.zeros(3)
            d[a] = sgn * grid.spacing[a]
            q = grid._to_chart(grid.gcoords[seam] + d)
            fq = np.asarray(fn(q[:, 0], q[:, 1], q[:, 2]), dtype=float) * np.ones(seam.size)
            fb = vals[grid.nbr[(a, sgn)][seam]]
            err = float(np.max(np.abs(fq - fb)))
            if err > tol * max(1.0, float(np.max(np.abs(vals)))):
                raise FieldError(f"function is not invariant under the lattice (seam mismatch {err:.3e} on axis {a})")
    return ScalarField(grid, vals)


def constant(grid, c=0.0):
    return ScalarField(grid, np.full(grid.size, float(c)))


# ------------------------------------------------- basic functions (nil)


def nil_trig(kx, ky, phase=0.0):
    """cos(2 pi (kx x + ky y) + phase): a basic function (constant on Reeb fibres)."""
    def fn(x, y, t):
        return np.cos(2 * np.pi * (kx * x + ky * y) + phase)
    return fn


def nil_theta(k, phase=0.0, width=1.0, terms=6):
    """Theta-type function with genuine Reeb dependence, invariant under the lattice.

    sum_n exp(-pi*width*(y+n)^2) cos(2 pi k (s + n x) + phase), s = t + x y / 2.
    """
    if int(k) != k or k == 0:
        raise FieldError("theta functions need a nonzero integer Reeb frequency")

    def fn(x, y, t):
        s = t + 0.5 * x * y
        out = 0.0
        for n in range(-terms, terms + 1):
            out = out + np.exp(-np.pi * width * (y + n) ** 2) * np.cos(2 * np.pi * k * (s + n * x) + phase)
        return out
    return fn


def random_smooth(grid, seed=0, modes=4, reeb=True):
    """Seeded random combination of low basic modes plus theta modes."""
    rng = np.random.default_rng(seed)
    if not grid.is_nil:
        def fn(eta, p1, p2):
            z1 = np.cos(eta) * np.exp(1j * p1)
            z2 = np.sin(eta) * np.exp(1j * p2)
            c = rng_coef
            val = (c[0] * z1 + c[1] * z2 + c[2] * z1 * np.conj(z2) + c[3] * z1 * z1).real
            return val + c[4].real * np.abs(z1) ** 2
        rng_coef = rng.normal(size=5) + 1j * rng.normal(size=5)
        return scalar_from_function(grid, fn)
    parts = []
    for _ in range(modes):
        kx, ky = rng.integers(-2, 3, size=2)
        parts.append((rng.normal(), nil_trig(int(kx), int(ky), rng.uniform(0, 2 * np.pi))))
    if reeb:
        parts.append((rng.normal(), nil_theta(1, rng.uniform(0, 2 * np.pi))))

    def fn(x, y, t):
        return sum(a * f(x, y, t) for a, f in parts)
    return scalar_from_function(grid, fn)


# ------------------------------------------------------------ operators


def horizontal_gradient(u):
    g = u.grid
    d1, d2 = g.frame_diff(u.values, which=(1, 2))
    return VectorField(g, np.stack([np.zeros(g.size), d1, d2], axis=1))


def full_gradient(u):
    g = u.grid
    return VectorField(g, np.stack(g.frame_diff(u.values), axis=1))


def sub_laplacian(u):
    """Sum over e1, e2 of e_A(e_A u) - (nabla_{e_A} e_A) u."""
    g = u.grid
    d = g.frame_diff(u.values)
    out = np.zeros(g.size)
    for A in (1, 2):
        out += g.frame_diff(d[A], which=(A,))[0]
    if np.any(g.hdiv):
        out -= sum(g.hdiv[:, C] * d[C] for C in range(3))
    return ScalarField(g, out)


def divergence(V):
    """div V = sum_A g(nabla_{e_A} V, e_A) over the full frame."""
    g = V.grid
    v = V.values
    out = np.zeros(g.size)
    for A in range(3):
        out += g.frame_diff(v[:, A], which=(A,))[0]
        out += np.einsum("nb,nb->n", g.gamma[:, A, A, :], v)
    return ScalarField(g, out)


def codifferential(rho):
    """delta rho = -sum_A (nabla_{e_A} rho)(e_A) for a 1-form with frame components."""
    return ScalarField(rho.grid, -divergence(rho).values)


def two_form_codifferential(omega, grid):
    """(delta omega)(e_B) = -sum_A (nabla^theta_{e_A} omega)(e_A, e_B).

    omega has frame components, shape (N, 3, 3) and antisymmetric.  The
    Levi-Civita coefficients come from the model's structure constants.
    """
    om = np.asarray(omega, dtype=float).reshape(grid.size, 3, 3)
    c = grid.structure
    lc = 0.5 * (c - np.transpose(c, (0, 3, 1, 2)) + np.transpose(c, (0, 2, 3, 1)))
    # lc[n, C, A, B] = g(nabla^theta_{e_A} e_B, e_C)
    out = np.zeros((grid.size, 3))
    for B in range(3):
        acc = np.zeros(grid.size)
        for A in range(3):
            acc += grid.frame_diff(om[:, A, B], which=(A,))[0]
            acc -= np.einsum("nc,nc->n", lc[:, :, A, A], om[:, :, B])
            acc -= np.einsum("nc,nc->n", lc[:, :, A, B], om[:, A, :])
        out[:, B] = -acc
    return out


def d_theta_components(grid):
    """Frame components of d(theta) from the discrete exterior derivative of theta."""
    th = np.zeros((grid.size, 3))
    th[:, 0] = 1.0
    dth = np.zeros((grid.size, 3, 3))
    d = [grid.frame_diff(th[:, B]) for B in range(3)]
    for A in range(3):
        for B in range(3):
            # d theta(e_A, e_B) = e_A theta(e_B) - e_B theta(e_A) - theta([e_A, e_B])
            dth[:, A, B] = d[B][A] - d[A][B] - grid.structure[:, 0, A, B]
    return dth


def delta_omega_xi(grid):
    """(delta d theta)(xi) averaged over the manifold; equals m in the continuum."""
    out = two_form_codifferential(d_theta_components(grid), grid)
    vol = grid.integrate_values(np.ones(grid.size))
    return grid.integrate_values(out[:, 0]) / vol, out


def integrate(u):
    return u.grid.integrate_values(u.values)


def scalar_commutation_residual(u):
    """|u_{1 1bar} - u_{1bar 1} - i xi(u)| per node."""
    g = u.grid
    if g.model.m != 1:
        raise FieldError("the scalar commutation check is written for CR dimension 1")
    d = g.frame_diff(u.values)
    s2 = math.sqrt(2.0)
    u1 = (d[1] - 1j * d[2]) / s2
    u1b = (d[1] + 1j * d[2]) / s2

    def cdiff(vals):
        re = g.frame_diff(vals.real, which=(1, 2))
        im = g.frame_diff(vals.imag, which=(1, 2))
        return re[0] + 1j * im[0], re[1] + 1j * im[1]

    a1, a2 = cdiff(u1)
    b1, b2 = cdiff(u1b)
    u11b = (a1 + 1j * a2) / s2       # conj(eta) applied to u_1
    u1b1 = (b1 - 1j * b2) / s2       # eta applied to u_1bar
    eta = np.array([0.0, 1.0, -1j]) / s2
    etab = np.conj(eta)
    G = g.gamma
    # (nabla_{etabar} eta) u and (nabla_eta etabar) u
    nab1 = np.einsum("a,b,ncab->nc", etab, eta, G)
    nab2 = np.einsum("a,b,ncab->nc", eta, etab, G)
    du = np.stack(d, axis=1)
    u11b = u11b - np.einsum("nc,nc->n", nab1, du)
    u1b1 = u1b1 - np.einsum("nc,nc->n", nab2, du)
    res = u11b - u1b1 - 1j * d[0]
    return ScalarField(g, np.abs(res))


# ------------------------------------------------------------ map fields


def nil_lift_action(hom=None):
    """Return lift(values, deck) acting by f * phi(gamma) on nilmanifold lifts."""
    M = np.eye(3) if hom is None else np.asarray(hom, dtype=float)

    def lift(vals, deck):
        return geo.heis_mul(vals, deck @ M.T)
    return lift


@dataclass(frozen=True)
class MapField:
    """Per-node lifted target coordinates.

    For a nilmanifold target the lift satisfies f(p * gamma) = f(p) * phi(gamma)
    with phi the linear map `hom` on lattice coordinates (a, b, c).  Sphere
    targets are stored in their ambient embedding R^4 and need no lift.
    """
    grid: Grid
    target: object
    values: np.ndarray
    hom: np.ndarray | None = None

    def __post_init__(self):
        v = np.asarray(self.values, dtype=float)
        if v.ndim != 2 or v.shape[0] != self.grid.size:
            raise FieldError("map field values must have one row per node")
        object.__setattr__(self, "values", v)
        if self.hom is not None:
            object.__setattr__(self, "hom", np.asarray(self.hom, dtype=float))

    @property
    def ambient(self):
        return getattr(self.target, "kind", None) != "heisenberg-nilmanifold"

    def lift(self):
        if self.ambient or not self.grid.is_nil:
            return None
        return nil_lift_action(self.hom)

    def frame_diff(self, which=(0, 1, 2)):
        return self.grid.frame_diff(self.values, self.lift(), which)

    def replace(self, values):
        return MapField(self.grid, self.target, values, self.hom)

    def seam_error(self, fn):
        """Largest mismatch between fn at a virtual neighbor and the glued lift."""
        g = self.grid
        lift = self.lift()
        worst = 0.0
        for (a, sgn), seam in g.seam.items():
            if not seam.size:
                continue
            d = np.zeros(3)
            d[a] = sgn * g.spacing[a]
            q = g._to_chart(g.gcoords[seam] + d)
            direct = fn(q)
            glued = self.values[g.nbr[(a, sgn)][seam]]
            if lift is not None:
                glued = lift(glued, g.deck[(a, sgn)][seam])
            worst = max(worst, float(np.max(np.abs(direct - glued))))
        return worst


def map_from_function(grid, target, fn, hom=None, tol=1e-9):
    """fn maps chart points (N, 3) to target lifts (N, 3) or ambient points (N, 4)."""
    vals = np.asarray(fn(grid.points), dtype=float)
    f = MapField(grid, target, vals, hom)
    if grid.is_nil and not f.ambient:
        err = f.seam_error(fn)
        if err > tol:
            raise FieldError(f"map lift is not seam-consistent (mismatch {err:.3e})")
    return f


# ----------------------------------------------------------- serialization

_MAGIC = b"PHFIELD1"


def save_binary(path, field):
    """Flat layout: magic, header length, JSON header, then row-major float64 values."""
    import json
    g = field.grid
    vals = np.ascontiguousarray(field.values, dtype="<f8")
    head = {
        "dims": list(g.shape),
        "spacing": list(g.spacing),
        "model": g.model.kind,
        "params": dict(g.model.params),
        "components": 1 if vals.ndim == 1 else int(vals.shape[1]),
        "type": type(field).__name__,
    }
    hb = json.dumps(head, sort_keys=True).encode()
    with open(path, "wb") as fh:
        fh.write(_MAGIC)
        fh.write(struct.pack("<I", len(hb)))
        fh.write(hb)
        fh.write(vals.tobytes())


def load_binary(path):
    import json
    with open(path, "rb") as fh:
        if fh.read(8) != _MAGIC:
            raise FieldError(f"{path} is not a field snapshot")
        (n,) = struct.unpack("<I", fh.read(4))
        head = json.loads(fh.read(n))
        vals = np.frombuffer(fh.read(), dtype="<f8")
    comps = head["components"]
    if comps > 1:
        vals = vals.reshape(-1, comps)
    return head, vals


def to_csv(field, max_nodes=100000):
    g = field.grid
    if g.size > max_nodes:
        raise FieldError(f"CSV export is meant for small grids (<= {max_nodes} nodes)")
    vals = field.values.reshape(g.size, -1)
    lines = ["i,j,k,x,y,t," + ",".join(f"v{c}" for c in range(vals.shape[1]))]
    n0, n1, n2 = g.shape
    for idx in range(g.size):
        i, r = divmod(idx, n1 * n2)
        j, k = divmod(r, n2)
        p = g.points[idx]
        lines.append(f"{i},{j},{k},{p[0]!r},{p[1]!r},{p[2]!r}," + ",".join(repr(float(v)) for v in vals[idx]))
    return "\n".join(lines) + "\n"

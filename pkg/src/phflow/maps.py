"""Frame calculus for maps between the shipped models.

A jet stores the differential in real frame components, d1[A~, B] with A~
indexing the target frame (xi~, e1~, e2~) and B the source frame, and the
covariant second derivative d2[A~, B, C] = (nabla_{e_C} df)(e_B) in the same
components.  The complex coefficients used throughout (f^alpha_j, f^alpha_jbar,
f^0_j, ...) are the unitary repackaging with eta = (e1 - i e2)/sqrt(2).

Two sources of jets exist: closed-form maps from the corpus below, whose
jets are computed symbolically (to second order, or third on request), and grid maps, whose jets come
from the discrete frame derivatives of fields.Grid.
"""

from __future__ import annotations

import functools
import math
from dataclasses import dataclass, field

import numpy as np
import sympy as sp

from . import fields as fl
from . import geometry as geo


class MapError(ValueError):
    pass


_S2 = math.sqrt(2.0)
# complex source directions (xi, eta, etabar) and target coefficient rows (0, alpha, alphabar)
SRC = np.array([[1, 0, 0], [0, 1, -1j], [0, 1, 1j]], dtype=complex)
SRC[1:] /= _S2
TGT = np.array([[1, 0, 0], [0, 1, 1j], [0, 1, -1j]], dtype=complex)
TGT[1:] /= _S2
_TGT_INV = np.linalg.inv(TGT)
_SRC_INV = np.linalg.inv(SRC)


@dataclass(frozen=True)
class MapJet:
    point: np.ndarray
    f: np.ndarray
    d1: np.ndarray
    d2: np.ndarray
    d3: np.ndarray | None = None
    source: str = ""
    target: str = ""

    def complex(self):
        return to_complex(self)


@dataclass(frozen=True)
class ComplexJet:
    """c1[t, s], c2[t, s, u], c3[t, s, u, v] with t in (0, alpha, alphabar) and
    s, u, v in (0, j, jbar)."""
    c1: np.ndarray
    c2: np.ndarray
    c3: np.ndarray | None


def to_complex(jet):
    c1 = np.einsum("ta,sb,...ab->...ts", TGT, SRC, jet.d1)
    c2 = np.einsum("ta,sb,uc,...abc->...tsu", TGT, SRC, SRC, jet.d2)
    c3 = None
    if jet.d3 is not None:
        c3 = np.einsum("ta,sb,uc,vd,...abcd->...tsuv", TGT, SRC, SRC, SRC, jet.d3)
    return ComplexJet(c1, c2, c3)


def from_complex(c1):
    """Inverse repackaging of the first-order coefficients."""
    out = np.einsum("at,bs,...ts->...ab", _TGT_INV, _SRC_INV, c1)
    return out.real


# ------------------------------------------------------------ analytic corpus


@dataclass(frozen=True)
class MapSpec:
    name: str
    source: str
    target: str
    build: object = field(repr=False)        # build(q) -> list of 3 sympy expressions
    hom: tuple | None = None                 # action on lattice coordinates (nil -> nil)
    foliated: bool = True
    note: str = ""

    def source_model(self):
        return _model(self.source)

    def target_model(self):
        return _model(self.target)


_MODEL_PARAMS = {
    "heisenberg-nilmanifold": {},
    "round-sphere-3": {"scale": 1.0},
}


def _model(kind):
    return geo.build_model(kind, _MODEL_PARAMS[kind])


def _left_mult(h, q):
    """h * p in the Heisenberg group law."""
    a, b, c = h
    x, y, t = q
    return [a + x, b + y, c + t + sp.Rational(1, 2) * (a * y - b * x)]


def _foliated_perturbation(eps):
    def build(q):
        x, y, t = q
        tp = 2 * sp.pi
        h = (eps * sp.sin(tp * x) * sp.cos(tp * y),
             eps * sp.cos(tp * x + 1) / 2,
             eps * sp.sin(tp * (x + y)) / 3)
        return _left_mult(h, q)
    return build


def _reeb_tilt(eps):
    # h depends on s = t + xy/2, so df(xi) has a horizontal part.  h is not
    # lattice invariant: this map is a local test map for pointwise identities.
    def build(q):
        x, y, t = q
        s = t + x * y / 2
        tp = 2 * sp.pi
        h = (eps * sp.cos(tp * s) * (1 + sp.sin(tp * y) / 2), eps * sp.sin(tp * (s + x)) / 2, 0)
        return _left_mult(h, q)
    return build


NIL = "heisenberg-nilmanifold"
SPHERE = "round-sphere-3"

CORPUS = {
    "identity": MapSpec("identity", NIL, NIL, lambda q: list(q), (1, 0, 0, 0, 1, 0, 0, 0, 1)),
    "fiber-rotation": MapSpec(
        "fiber-rotation", NIL, NIL, lambda q: [q[0], q[1], q[2] + sp.Rational(37, 100)],
        (1, 0, 0, 0, 1, 0, 0, 0, 1), note="f(x,y,t) = (x, y, t + 0.37)"),
    "affine-diag21": MapSpec(
        "affine-diag21", NIL, NIL, lambda q: [2 * q[0], q[1], 2 * q[2]],
        (2, 0, 0, 0, 1, 0, 0, 0, 2), note="lift of A = diag(2, 1)"),
    "affine-shear": MapSpec(
        "affine-shear", NIL, NIL, lambda q: [q[0] + 2 * q[1], q[1], q[2]],
        (1, 2, 0, 0, 1, 0, 0, 0, 1), note="lift of A = [[1, 2], [0, 1]]"),
    "conjugation": MapSpec(
        "conjugation", NIL, NIL, lambda q: [q[0], -q[1], -q[2]],
        (1, 0, 0, 0, -1, 0, 0, 0, -1), note="(x, y, t) -> (x, -y, -t), anti-CR"),
    "vertical-shift": MapSpec(
        "vertical-shift", NIL, NIL,
        lambda q: [q[0], q[1], q[2] + sp.Rational(3, 10) * sp.sin(2 * sp.pi * q[0])],
        (1, 0, 0, 0, 1, 0, 0, 0, 1), note="t + 0.3 sin(2 pi x)"),
    "trig-perturbation": MapSpec(
        "trig-perturbation", NIL, NIL, _foliated_perturbation(sp.Rational(1, 20)),
        (1, 0, 0, 0, 1, 0, 0, 0, 1), note="h(x, y) * p with h periodic on the base torus"),
    "reeb-tilt": MapSpec(
        "reeb-tilt", NIL, NIL, _reeb_tilt(sp.Rational(1, 20)), None, foliated=False,
        note="h(p) * p with h depending on the fiber coordinate; local chart map"),
    "constant": MapSpec(
        "constant", NIL, NIL,
        lambda q: [sp.Rational(3, 10), sp.Rational(1, 5), sp.Rational(1, 10)],
        (0, 0, 0, 0, 0, 0, 0, 0, 0), note="constant map"),
    "sphere-identity": MapSpec("sphere-identity", SPHERE, SPHERE, lambda q: list(q)),
    "sphere-hopf-rotation": MapSpec(
        "sphere-hopf-rotation", SPHERE, SPHERE,
        lambda q: [q[0], q[1] + sp.Rational(1, 3), q[2] + sp.Rational(1, 3)],
        note="z -> exp(i/3) z"),
}


def corpus_names(source=None):
    return [n for n, s in CORPUS.items() if source is None or s.source == source]


def get_spec(spec):
    if isinstance(spec, MapSpec):
        return spec
    try:
        return CORPUS[spec]
    except KeyError:
        raise MapError(f"unknown analytic map {spec!r}; known: {', '.join(CORPUS)}") from None


@functools.lru_cache(maxsize=None)
def _jet_functions(name, order=2):
    """Lambdified exact jets up to `order` (2 or 3) and the lift of the map."""
    spec = CORPUS[name]
    qs, frame_s, _, gam_s = spec.source_model().symbolic()
    qt, _, coframe_t, gam_t = spec.target_model().symbolic()
    F = [sp.sympify(e) for e in spec.build(list(qs))]
    sub = dict(zip(qt, F))
    # source and target charts can share symbols, so substitute simultaneously
    cof = coframe_t.subs(sub, simultaneous=True)
    Gt = [[[sp.sympify(gam_t[a][e][d]).subs(sub, simultaneous=True) for d in range(3)] for e in range(3)] for a in range(3)]
    Gs = [[[sp.sympify(gam_s[a][e][d]) for d in range(3)] for e in range(3)] for a in range(3)]

    def along(B, expr):
        return sum(frame_s[i, B] * sp.diff(expr, qs[i]) for i in range(3))

    R3 = range(3)
    d1 = [[sum(cof[A, i] * along(B, F[i]) for i in R3) for B in R3] for A in R3]
    d2 = [[[along(C, d1[A][B])
            + sum(Gt[A][E][D] * d1[E][C] * d1[D][B] for E in R3 for D in R3)
            - sum(Gs[D][C][B] * d1[A][D] for D in R3)
            for C in R3] for B in R3] for A in R3]
    if order < 3:
        fn = sp.lambdify(qs, [F, d1, d2], modules="numpy", cse=True)
        return fn, sp.lambdify(qs, F, modules="numpy")
    d3 = [[[[along(D, d2[A][B][C])
             + sum(Gt[A][E][P] * d1[E][D] * d2[P][B][C] for E in R3 for P in R3)
             - sum(Gs[E][D][B] * d2[A][E][C] for E in R3)
             - sum(Gs[E][D][C] * d2[A][B][E] for E in R3)
             for D in R3] for C in R3] for B in R3] for A in R3]
    exprs = [F, d1, d2, d3]
    fn = sp.lambdify(qs, exprs, modules="numpy", cse=True)
    lift = sp.lambdify(qs, F, modules="numpy")
    return fn, lift


@functools.lru_cache(maxsize=None)
def _lift_function(name):
    spec = CORPUS[name]
    qs = spec.source_model().symbolic()[0]
    return sp.lambdify(qs, [sp.sympify(e) for e in spec.build(list(qs))], modules="numpy")


def analytic_jet(spec, point, order=3):
    """Exact jet of a corpus map at a chart point of its source.

    order=2 skips the third derivatives, which are much more expensive to
    compile; the jet then has d3=None.
    """
    spec = get_spec(spec)
    src = spec.source_model()
    p = np.asarray(point, dtype=float)
    src.check_point(p)
    if order not in (2, 3):
        raise MapError(f"jet order must be 2 or 3, got {order}")
    fn, _ = _jet_functions(spec.name, order)
    out = fn(*p)
    d3 = np.asarray(out[3], float) if order == 3 else None
    return MapJet(np.asarray(p, float), np.asarray(out[0], float), np.asarray(out[1], float),
                  np.asarray(out[2], float), d3, spec.source, spec.target)


def analytic_map_field(grid, spec):
    """Sample a corpus map (nilmanifold to nilmanifold) on a grid as a lifted MapField."""
    spec = get_spec(spec)
    if spec.source != NIL or spec.target != NIL or not grid.is_nil:
        raise MapError("grid sampling of corpus maps is available for nilmanifold maps")
    if spec.hom is None:
        raise MapError(f"{spec.name} does not descend to the nilmanifold")
    lift = _lift_function(spec.name)

    def fn(pts):
        out = lift(pts[:, 0], pts[:, 1], pts[:, 2])
        return np.stack([np.broadcast_to(np.asarray(v, float), pts.shape[:1]) for v in out], axis=1)

    hom = np.array(spec.hom, dtype=float).reshape(3, 3)
    return fl.map_from_function(grid, spec.target_model(), fn, hom)


# --------------------------------------------------------------- grid jets


def _sphere_radius(model):
    return 2.0 * model.scale


def _ambient_frames(y, R):
    """Target coframe rows at the projection of ambient points y (N, 4).

    Row 0 is theta = Im(conj(z) dz)/2, rows 1, 2 are the Euclidean duals of
    e1~ = (-conj z2, conj z1)/R and e2~ = i e1~ at the projected point.
    """
    z = (y[:, 0] + 1j * y[:, 1], y[:, 2] + 1j * y[:, 3])
    r = np.sqrt(np.abs(z[0]) ** 2 + np.abs(z[1]) ** 2)
    w1, w2 = R * z[0] / r, R * z[1] / r
    N = y.shape[0]
    rows = np.zeros((N, 3, 4))
    # theta(v) = Im(conj(w) . v) / 2
    rows[:, 0] = 0.5 * np.stack([-w1.imag, w1.real, -w2.imag, w2.real], axis=1)
    e1 = (-np.conj(w2) / R, np.conj(w1) / R)
    e2 = (1j * e1[0], 1j * e1[1])
    rows[:, 1] = np.stack([e1[0].real, e1[0].imag, e1[1].real, e1[1].imag], axis=1)
    rows[:, 2] = np.stack([e2[0].real, e2[0].imag, e2[1].real, e2[1].imag], axis=1)
    return rows, np.stack([w1.real, w1.imag, w2.real, w2.imag], axis=1), r


def projection_differential(y, R, v):
    """d Pi_y (v) for Pi(y) = R y / |y|; v has shape (N, 4) or (N, 4, k)."""
    r = np.linalg.norm(y, axis=1)
    yh = y / r[:, None]
    if v.ndim == 2:
        return (R / r)[:, None] * (v - yh * np.einsum("ni,ni->n", yh, v)[:, None])
    dots = np.einsum("ni,nik->nk", yh, v)
    return (R / r)[:, None, None] * (v - yh[:, :, None] * dots[:, None, :])


@dataclass(frozen=True)
class GridJets:
    grid: fl.Grid
    d1: np.ndarray          # (N, 3, 3)
    d2: np.ndarray | None   # (N, 3, 3, 3)
    values: np.ndarray

    def jet(self, node):
        return MapJet(self.grid.points[node], self.values[node], self.d1[node],
                      None if self.d2 is None else self.d2[node], None,
                      self.grid.model.kind, "")


def _target_gamma(f, pts):
    tgt = f.target
    if tgt.kind == NIL:
        return None
    if f.ambient:
        # left-invariant frame on the sphere: constant coefficients
        return np.broadcast_to(tgt.gamma(tgt.random_points(1, seed=0)[0]), (pts.shape[0], 3, 3, 3))
    return tgt.gamma_many(pts)


def grid_jets(f, second=True):
    """First (and optionally second) covariant derivatives of a grid map at every node."""
    g = f.grid
    raw = np.stack(f.frame_diff(), axis=2)            # (N, dim, 3): e_B of coordinates
    if f.ambient:
        R = _sphere_radius(f.target)
        rows, _, _ = _ambient_frames(f.values, R)
        raw = projection_differential(f.values, R, raw)
        d1 = np.einsum("nai,nib->nab", rows, raw)
    else:
        W = f.target.coframe_many(f.values)
        d1 = np.einsum("nai,nib->nab", W, raw)
    d2 = None
    if second:
        flat = d1.reshape(g.size, 9)
        der = np.stack(g.frame_diff(flat), axis=2).reshape(g.size, 3, 3, 3)   # [n, A, B, C] = e_C d1[A, B]
        d2 = der - np.einsum("ndcb,nad->nabc", g.gamma, d1)
        Gt = _target_gamma(f, f.values)
        if Gt is not None:
            d2 = d2 + np.einsum("naed,nec,ndb->nabc", Gt, d1, d1)
    return GridJets(g, d1, d2, f.values)


def jet_at(f, node):
    g = f.grid
    if not 0 <= int(node) < g.size:
        raise MapError(f"node {node} is outside the grid of {g.size} nodes")
    if not f.ambient and not np.all(np.isfinite(f.values[node])):
        raise MapError(f"node {node}: target point is not finite")
    return grid_jets(f).jet(int(node))


# ---------------------------------------------------------------- energies


@dataclass(frozen=True)
class EnergyBreakdown:
    e_HH: object
    e_LH: object
    e_HL: object
    e_LL: object
    d_bar_sq: object
    d_sq: object
    k: object

    def to_dict(self):
        return {k: float(v) for k, v in self.__dict__.items()}


def energy_density(d1):
    """Pointwise densities from real first-order coefficients, shape (..., 3, 3)."""
    d1 = np.asarray(d1.d1 if isinstance(d1, MapJet) else d1, dtype=float)
    c1 = np.einsum("ta,sb,...ab->...ts", TGT, SRC, d1)
    e_HH = 0.5 * np.sum(d1[..., 1:, 1:] ** 2, axis=(-2, -1))
    e_LH = 0.5 * np.sum(d1[..., 1:, 0] ** 2, axis=-1)
    e_HL = 0.5 * np.sum(d1[..., 0, 1:] ** 2, axis=-1)
    e_LL = 0.5 * d1[..., 0, 0] ** 2
    d_sq = np.abs(c1[..., 1, 1]) ** 2
    d_bar_sq = np.abs(c1[..., 1, 2]) ** 2
    return EnergyBreakdown(e_HH, e_LH, e_HL, e_LL, d_bar_sq, d_sq, d_sq - d_bar_sq)


@dataclass(frozen=True)
class Energies:
    E_HH: float
    E_LH: float
    E_HL: float
    E_LL: float
    E_prime: float
    E_dprime: float
    K: float

    def to_dict(self):
        return {k: float(v) for k, v in self.__dict__.items()}


def integrate_density(grid, dens):
    I = grid.integrate_values
    ep, edp = I(dens.d_sq), I(dens.d_bar_sq)
    return Energies(I(dens.e_HH), I(dens.e_LH), I(dens.e_HL), I(dens.e_LL), ep, edp, ep - edp)


def energies(f, jets=None):
    jets = jets or grid_jets(f, second=False)
    return integrate_density(f.grid, energy_density(jets.d1))


def analytic_energies(spec, grid):
    """Energies of a corpus map integrated with exact jets at the grid nodes."""
    spec = get_spec(spec)
    fn, _ = _jet_functions(spec.name)
    pts = grid.points
    d1 = np.empty((grid.size, 3, 3))
    for n in range(grid.size):
        d1[n] = fn(*pts[n])[1]
    return integrate_density(grid, energy_density(d1))


def pullback_form_pairing(d1):
    """<omega^M, f* omega^N> from the horizontal block (omega = d theta, m = 1)."""
    return d1[..., 1, 1] * d1[..., 2, 2] - d1[..., 2, 1] * d1[..., 1, 2]


def pairing_residual(f, jets=None):
    """max |k - <omega^M, f* omega^N>| with the pairing computed from d(f* theta~).

    f* theta~ has frame components d1[0, B]; its exterior derivative on (e1, e2)
    is e1(d1[0, 2]) - e2(d1[0, 1]) - sum_C c^C_12 d1[0, C].
    """
    g = f.grid
    jets = jets or grid_jets(f, second=False)
    d1 = jets.d1
    k = energy_density(d1).k
    t1, t2 = g.frame_diff(d1[:, 0, 2], which=(1,))[0], g.frame_diff(d1[:, 0, 1], which=(2,))[0]
    pair = t1 - t2 - np.einsum("nc,nc->n", g.structure[:, :, 1, 2], d1[:, 0, :])
    return float(np.max(np.abs(k - pair)))


# ----------------------------------------------------------------- tension


@dataclass(frozen=True)
class TensionVector:
    tau_HH: np.ndarray      # horizontal target components (e1~, e2~)
    tau_HL: object          # vertical component
    tau_H: np.ndarray       # (xi~, e1~, e2~)
    torsion_term: np.ndarray
    full_trace: np.ndarray

    def to_dict(self):
        return {k: np.asarray(v, float).tolist() for k, v in self.__dict__.items()}


def tension_from_d2(d2):
    d2 = np.asarray(d2, dtype=float)
    tr = d2[..., :, 1, 1] + d2[..., :, 2, 2]
    tau_H = tr.copy()
    full = tr + d2[..., :, 0, 0]
    return TensionVector(tr[..., 1:], tr[..., 0], tau_H, np.zeros_like(tau_H), full)


def tension(f, node=None, jets=None):
    """Tension at one node, or at every node when node is None.

    Works on MapJet objects too (uses their d2)."""
    if isinstance(f, MapJet):
        return tension_from_d2(f.d2)
    jets = jets or grid_jets(f)
    tv = tension_from_d2(jets.d2)
    if node is None:
        return tv
    return TensionVector(*(np.asarray(v)[node] for v in tv.__dict__.values()))


# ----------------------------------------------------------------- defects


def defects_from(d1, d2=None):
    c1 = np.einsum("ta,sb,...ab->...ts", TGT, SRC, np.asarray(d1, float))
    out = {
        "holo": float(np.max(np.abs(c1[..., 1, 2]))),
        "antiholo": float(np.max(np.abs(c1[..., 1, 1]))),
        "foliated": float(np.max(np.abs(c1[..., 1, 0]))),
        "horizontally_constant": float(np.max(np.sqrt(np.sum(np.asarray(d1)[..., 1:, 1:] ** 2, axis=(-2, -1))))),
    }
    if d2 is not None:
        c2 = np.einsum("ta,sb,uc,...abc->...tsu", TGT, SRC, SRC, np.asarray(d2, float))
        out["pluriharmonic"] = float(max(np.max(np.abs(c2[..., 1, 1, 2])), np.max(np.abs(c2[..., 1, 2, 1]))))
    else:
        out["pluriharmonic"] = float("nan")
    return out


def defects(f):
    if isinstance(f, MapJet):
        return defects_from(f.d1, f.d2)
    jets = grid_jets(f)
    return defects_from(jets.d1, jets.d2)


def analytic_defects(spec, points):
    jets = [analytic_jet(spec, p, order=2) for p in points]
    return defects_from(np.stack([j.d1 for j in jets]), np.stack([j.d2 for j in jets]))


# ------------------------------------------------------------- commutation


def commutation_terms(d1, d2):
    """Residuals of the Sasakian commutation relations (m = 1) from real jets.

    Index 0 is the Reeb direction, 1 = j (eta), 2 = jbar; target 1 = alpha,
    2 = alphabar.  Returns a dict of arrays.
    """
    c1 = np.einsum("ta,sb,...ab->...ts", TGT, SRC, np.asarray(d1, float))
    c2 = np.einsum("ta,sb,uc,...abc->...tsu", TGT, SRC, SRC, np.asarray(d2, float))
    a, ab, j, jb = 1, 2, 1, 2
    f0 = lambda s: c1[..., 0, s]           # noqa: E731
    fa = lambda s: c1[..., a, s]           # noqa: E731
    fab = lambda s: c1[..., ab, s]         # noqa: E731
    res = {}
    # f^alpha_{jbar l} - f^alpha_{l jbar} + i f^alpha_0 = 0
    res["eq2.17.mixed"] = np.abs(c2[..., a, jb, j] - c2[..., a, j, jb] + 1j * fa(0))
    # f^alpha_{0 j} = f^alpha_{j 0}
    res["eq2.17.reeb"] = np.abs(c2[..., a, 0, j] - c2[..., a, j, 0])
    res["eq2.17.reeb-bar"] = np.abs(c2[..., a, 0, jb] - c2[..., a, jb, 0])
    # f^0_{j0} - f^0_{0j} = i (f_0^alpha f_j^alphabar - f_0^alphabar f_j^alpha)
    res["eq2.14.reeb"] = np.abs(c2[..., 0, j, 0] - c2[..., 0, 0, j]
                                - 1j * (fa(0) * fab(j) - fab(0) * fa(j)))
    res["eq2.14.reeb-bar"] = np.abs(c2[..., 0, jb, 0] - c2[..., 0, 0, jb]
                                    - 1j * (fa(0) * fab(jb) - fab(0) * fa(jb)))
    # f^0_{j lbar} - f^0_{lbar j} - i f^0_0 = i (f_j^alphabar f_lbar^alpha - f_j^alpha f_lbar^alphabar)
    res["eq2.14.mixed"] = np.abs(c2[..., 0, j, jb] - c2[..., 0, jb, j] - 1j * f0(0)
                                 - 1j * (fab(j) * fa(jb) - fa(j) * fab(jb)))
    # f^alpha_{k kbar} - f^alpha_{kbar k} = m i f^alpha_0
    res["eq4.18"] = np.abs(c2[..., a, j, jb] - c2[..., a, jb, j] - 1j * fa(0))
    return res


def commutation_residuals(f, points=None):
    """Max of each commutation residual over a MapSpec at points, a MapJet, or a grid map."""
    if isinstance(f, MapJet):
        terms = commutation_terms(f.d1, f.d2)
    elif isinstance(f, (MapSpec, str)):
        spec = get_spec(f)
        if points is None:
            points = spec.source_model().random_points(20, seed=0)
        jets = [analytic_jet(spec, p, order=2) for p in points]
        terms = commutation_terms(np.stack([j.d1 for j in jets]), np.stack([j.d2 for j in jets]))
    else:
        jets = grid_jets(f)
        terms = commutation_terms(jets.d1, jets.d2)
    return {k: float(np.max(v)) for k, v in terms.items()}


# ------------------------------------------------------- Paneitz / Bochner


def paneitz(jet):
    """P_j^alpha = f^alpha_{kbar k j} (the torsion term vanishes on Sasakian models)."""
    if jet.d3 is None:
        raise MapError("the Paneitz operator needs exact third derivatives (analytic jets only)")
    c3 = to_complex(jet).c3
    return {"P_alpha": complex(c3[1, 2, 1, 1]), "P_alphabar": complex(c3[2, 2, 1, 1])}


def bochner_terms(jet):
    """Both sides of the CR Bochner identity for e_HH on the flat nilmanifold.

    lhs = Delta_b e_HH computed directly from third derivatives (d3[a, A, C, C]).
    rhs = |beta_HH|^2 + <df, d(Delta_b f)> + mixed term written with the complex
    Reeb derivatives f_{1 0}, f_{1bar 0}.
    """
    if jet.d3 is None:
        raise MapError("the Bochner residual needs exact third derivatives (analytic jets only)")
    if jet.source != NIL or jet.target != NIL:
        raise MapError("the Bochner check is written for the flat nilmanifold")
    d1, d2, d3 = jet.d1, jet.d2, jet.d3
    H = (1, 2)
    beta = sum(d2[a, A, C] ** 2 for a in H for A in H for C in H)
    lhs = beta + sum(d1[a, A] * d3[a, A, C, C] for a in H for A in H for C in H)
    grad_lap = sum(d1[a, A] * d3[a, C, C, A] for a in H for A in H for C in H)
    c = to_complex(jet)
    mixed = 0.0
    for t in (1, 2):
        mixed += 4 * np.imag(np.conj(c.c1[t, 2]) * c.c2[t, 2, 0]) - 4 * np.imag(np.conj(c.c1[t, 1]) * c.c2[t, 1, 0])
    # the sum over alpha and alphabar counts each real coordinate twice
    rhs = beta + grad_lap + 0.5 * mixed
    return lhs, rhs


def bochner_residual(spec, point):
    lhs, rhs = bochner_terms(analytic_jet(spec, point))
    return float(abs(lhs - rhs))


# -------------------------------------------------------- homotopy invariance


def homotopy_invariance_check(family, foliated=True, tol=None):
    if not family:
        raise MapError("homotopy check needs a non-empty family")
    rows = []
    for idx, f in enumerate(family):
        jets = grid_jets(f, second=False)
        if foliated:
            fd = defects_from(jets.d1)["foliated"]
            lim = tol if tol is not None else 10 * f.grid.h ** 2
            if fd > lim:
                raise MapError(f"family member {idx} is not foliated (defect {fd:.3e} > {lim:.3e})")
        rows.append(energies(f, jets))
    K0, P0, D0 = rows[0].K, rows[0].E_prime, rows[0].E_dprime
    return {
        "K": [r.K for r in rows],
        "max_K_drift": max(abs(r.K - K0) for r in rows),
        "max_E_prime_drift": max(abs(r.E_prime - P0) for r in rows),
        "max_E_dprime_drift": max(abs(r.E_dprime - D0) for r in rows),
    }

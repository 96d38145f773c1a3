"""Closed-form pseudo-Hermitian structures on the shipped Sasakian 3-manifolds.

Every model is described by a chart, a contact form theta, the Reeb field xi
and a unitary horizontal frame {e1, e2 = J e1}.  The frame is indexed
0 -> xi, 1 -> e1, 2 -> e2 throughout the package.  Connection and curvature
data are derived symbolically once per model (sympy) and then evaluated with
numpy, so nothing on this path uses finite differences.

Index conventions
-----------------
``gamma[C, A, B]``  coefficient of e_C in nabla_{e_A} e_B (Tanaka-Webster).
``curv[D, C, A, B]`` coefficient of e_D in R(e_A, e_B) e_C.
``R4[X, Y, Z, W]``   R(X, Y, Z, W) = <R(Z, W) Y, X>.
"""

from __future__ import annotations

import functools
import math
from dataclasses import dataclass, field

import numpy as np
import sympy as sp

KINDS = ("heisenberg-nilmanifold", "round-sphere-3", "space-form-chart")

# J on the frame {xi, e1, e2}: J e1 = e2, J e2 = -e1, J xi = 0.
J_FRAME = np.array([[0.0, 0.0, 0.0], [0.0, 0.0, -1.0], [0.0, 1.0, 0.0]])


class GeometryError(ValueError):
    pass


# ---------------------------------------------------------------- symbolic


def _heisenberg_symbols():
    x, y, t = sp.symbols("x y t", real=True)
    half = sp.Rational(1, 2)
    frame = sp.Matrix([[0, 1, 0], [0, 0, 1], [1, y * half, -x * half]])
    coframe = sp.Matrix([[-y * half, x * half, 1], [1, 0, 0], [0, 1, 0]])
    return (x, y, t), frame, coframe


def _space_form_symbols(lam):
    x, y, t = sp.symbols("x y t", real=True)
    lam = sp.nsimplify(lam)
    rho = 1 / (1 + lam * (x**2 + y**2) / 4)
    phi = rho / 2
    frame = sp.Matrix(
        [[0, 1 / rho, 0], [0, 0, 1 / rho], [1, y * phi / rho, -x * phi / rho]]
    )
    coframe = sp.Matrix([[-y * phi, x * phi, 1], [rho, 0, 0], [0, rho, 0]])
    return (x, y, t), frame, coframe


def _sphere_symbols(scale):
    # Hopf coordinates: z1 = R cos(eta) e^{i p1}, z2 = R sin(eta) e^{i p2}, R = 2*scale,
    # theta = (1/2) Im(conj(z) dz).  With this constant e1 = (-conj z2, conj z1)/R is
    # unit for the Levi form and dtheta(e1, e2) = 1.
    eta, p1, p2 = sp.symbols("eta p1 p2", real=True)
    R = 2 * sp.nsimplify(scale)
    psi = p1 + p2
    c, s = sp.cos(eta), sp.sin(eta)
    frame = sp.Matrix(
        [
            [0, sp.cos(psi) / R, sp.sin(psi) / R],
            [2 / R**2, sp.sin(psi) * s / (c * R), -sp.cos(psi) * s / (c * R)],
            [2 / R**2, -sp.sin(psi) * c / (s * R), sp.cos(psi) * c / (s * R)],
        ]
    )
    coframe = sp.Matrix(
        [
            [0, R**2 * c**2 / 2, R**2 * s**2 / 2],
            [R * sp.cos(psi), R * s * c * sp.sin(psi), -R * s * c * sp.sin(psi)],
            [R * sp.sin(psi), -R * s * c * sp.cos(psi), R * s * c * sp.cos(psi)],
        ]
    )
    return (eta, p1, p2), frame, coframe


def _simplify(expr, trig):
    if not trig:
        return sp.cancel(expr)
    if not expr.has(sp.Symbol):
        return sp.nsimplify(expr)
    out = sp.fu(expr)
    return out if out.is_number else sp.simplify(out)


def _derive(q, frame, coframe, trig):
    """Structure constants, Levi-Civita and Tanaka-Webster coefficients, curvature."""
    jac = [frame[:, a].jacobian(q) for a in range(3)]
    vecs = [frame[:, a] for a in range(3)]

    def bracket(a, b):
        return jac[b] * vecs[a] - jac[a] * vecs[b]

    c = [[[sp.Integer(0)] * 3 for _ in range(3)] for _ in range(3)]
    for a in range(3):
        for b in range(a + 1, 3):
            comp = coframe * bracket(a, b)
            for C in range(3):
                c[C][a][b] = _simplify(comp[C], trig)
                c[C][b][a] = -c[C][a][b]

    # g(nabla^theta_{e_A} e_B, e_C) for the orthonormal Webster frame (Koszul)
    half = sp.Rational(1, 2)
    lc = [[[half * (c[C][A][B] - c[A][B][C] + c[B][C][A]) for B in range(3)]
           for A in range(3)] for C in range(3)]
    Jm = sp.Matrix(J_FRAME.astype(int))
    gam = [[[None] * 3 for _ in range(3)] for _ in range(3)]
    for C in range(3):
        for A in range(3):
            for B in range(3):
                dth = -c[0][A][B]
                val = lc[C][A][B] + (half * dth if C == 0 else 0)
                val -= half * ((1 if A == 0 else 0) * Jm[C, B] + (1 if B == 0 else 0) * Jm[C, A])
                gam[C][A][B] = _simplify(val, trig)

    def along(a, expr):
        return sum(vecs[a][i] * sp.diff(expr, q[i]) for i in range(3))

    curv = [[[[None] * 3 for _ in range(3)] for _ in range(3)] for _ in range(3)]
    for D in range(3):
        for C in range(3):
            for A in range(3):
                for B in range(3):
                    val = along(A, gam[D][B][C]) - along(B, gam[D][A][C])
                    for E in range(3):
                        val += gam[E][B][C] * gam[D][A][E] - gam[E][A][C] * gam[D][B][E]
                        val -= c[E][A][B] * gam[D][E][C]
                    curv[D][C][A][B] = _simplify(val, trig)

    # pseudo-Hermitian torsion tau(X) = T(xi, X) restricted to H
    tors = [[None] * 3 for _ in range(3)]
    for X in range(3):
        for C in range(3):
            tors[C][X] = _simplify(gam[C][0][X] - gam[C][X][0] - c[C][0][X], trig)
    return c, gam, curv, tors


def _lam(q, exprs):
    flat = sp.Array(exprs)
    f = sp.lambdify(q, flat, modules="numpy", cse=True)
    shape = flat.shape

    def call(pt):
        pt = np.asarray(pt, dtype=float)
        out = f(*pt)
        return np.asarray(out, dtype=float).reshape(shape)

    call.raw = sp.lambdify(q, list(flat.reshape(len(flat)) if len(shape) > 1 else flat), modules="numpy", cse=True)
    return call


def _eval_many(raw, pts, shape):
    pts = np.asarray(pts, dtype=float)
    n = pts.shape[0]
    vals = raw(*pts.T)
    out = np.empty((len(vals), n))
    for i, v in enumerate(vals):
        out[i] = np.broadcast_to(np.asarray(v, dtype=float), (n,))
    return np.moveaxis(out.reshape(shape + (n,)), -1, 0)


# ------------------------------------------------------------------ models


@dataclass(frozen=True)
class ModelManifold:
    kind: str
    params: tuple
    chart_domain: tuple
    identifications: str | None
    m: int = 1
    _fn: dict = field(default=None, repr=False, compare=False, hash=False)

    @property
    def param_dict(self):
        return dict(self.params)

    @property
    def compact(self):
        return self.identifications is not None

    @property
    def scale(self):
        return self.param_dict.get("scale", 1.0)

    @property
    def lam(self):
        return self.param_dict.get("lambda", 0.0)

    def in_domain(self, p):
        p = np.asarray(p, dtype=float)
        if not np.all(np.isfinite(p)):
            return False
        if self.kind == "heisenberg-nilmanifold":
            return True
        if self.kind == "round-sphere-3":
            return abs(math.sin(2.0 * p[0])) > 1e-8
        lo = np.array([d[0] for d in self.chart_domain])
        hi = np.array([d[1] for d in self.chart_domain])
        if np.any(p < lo - 1e-12) or np.any(p > hi + 1e-12):
            return False
        return 1.0 + self.lam * (p[0] ** 2 + p[1] ** 2) / 4.0 > 0.0

    def check_point(self, p):
        if not self.in_domain(p):
            raise GeometryError(f"point {list(np.asarray(p, dtype=float))} outside the {self.kind} chart domain")

    def random_points(self, count, seed=0):
        rng = np.random.default_rng(seed)
        if self.kind == "round-sphere-3":
            # central band of the Hopf chart, away from the coordinate poles
            eta = rng.uniform(math.pi / 8, 3 * math.pi / 8, count)
            ph = rng.uniform(0.0, 2 * math.pi, (count, 2))
            return np.column_stack([eta, ph])
        lo = np.array([d[0] for d in self.chart_domain])
        hi = np.array([d[1] for d in self.chart_domain])
        if self.kind == "space-form-chart":
            lo, hi = 0.9 * lo, 0.9 * hi
        return lo + (hi - lo) * rng.random((count, 3))

    # closed-form component functions (numpy)
    def frame_matrix(self, p):
        """Columns are xi, e1, e2 in chart coordinates."""
        return self._fn["frame"](p)

    def coframe_matrix(self, p):
        """Rows are theta, theta^1, theta^2 in chart coordinates."""
        return self._fn["coframe"](p)

    def gamma(self, p):
        return self._fn["gamma"](p)

    def curvature_tensor(self, p):
        return self._fn["curv"](p)

    def structure(self, p):
        """c[C, A, B] with [e_A, e_B] = c^C_AB e_C."""
        return self._fn["c"](p)

    def torsion(self, p):
        return self._fn["tors"](p)

    def coord_gamma(self, p):
        """Chart Christoffel symbols of the Tanaka-Webster connection."""
        return self._fn["coord_gamma"](p)

    def frame_many(self, pts):
        """Frame matrices at many points, shape (N, 3, 3)."""
        return _eval_many(self._fn["frame_raw"], pts, (3, 3))

    def coframe_many(self, pts):
        return _eval_many(self._fn["coframe_raw"], pts, (3, 3))

    def gamma_many(self, pts):
        return _eval_many(self._fn["gamma_raw"], pts, (3, 3, 3))

    def structure_many(self, pts):
        return _eval_many(self._fn["c_raw"], pts, (3, 3, 3))

    def coord_gamma_many(self, pts):
        return _eval_many(self._fn["coord_gamma_raw"], pts, (3, 3, 3))

    def symbolic(self):
        """Chart symbols, frame (columns xi, e1, e2), coframe rows and TW coefficients."""
        return self._fn["symbols"]

    def metric(self, p):
        W = self.coframe_matrix(p)
        return W.T @ W

    def j_coords(self, p):
        E = self.frame_matrix(p)
        return E @ J_FRAME @ np.linalg.inv(E)


@functools.lru_cache(maxsize=None)
def _compiled(kind, params):
    pd = dict(params)
    if kind == "heisenberg-nilmanifold":
        q, frame, coframe = _heisenberg_symbols()
        trig = False
    elif kind == "space-form-chart":
        q, frame, coframe = _space_form_symbols(pd["lambda"])
        trig = False
    else:
        q, frame, coframe = _sphere_symbols(pd["scale"])
        trig = True
    c, gam, curv, tors = _derive(q, frame, coframe, trig)
    # chart Christoffel symbols: nabla_{d_j} d_k = cg[i, j, k] d_i
    G = sp.Array(gam)
    cg = [[[0] * 3 for _ in range(3)] for _ in range(3)]
    for j in range(3):
        for k in range(3):
            vec = sp.zeros(3, 1)
            for B in range(3):
                vec += sp.diff(coframe[B, k], q[j]) * frame[:, B]
                for A in range(3):
                    for C in range(3):
                        if G[C, A, B] != 0:
                            vec += coframe[B, k] * coframe[A, j] * G[C, A, B] * frame[:, C]
            for i in range(3):
                cg[i][j][k] = _simplify(vec[i], trig)
    fns = {
        "coord_gamma": _lam(q, cg),
        "frame": _lam(q, frame.tolist()),
        "coframe": _lam(q, coframe.tolist()),
        "c": _lam(q, c),
        "gamma": _lam(q, gam),
        "curv": _lam(q, curv),
        "tors": _lam(q, tors),
    }
    for key in ("frame", "coframe", "gamma", "coord_gamma", "c"):
        fns[key + "_raw"] = fns[key].raw
    fns["symbols"] = (q, frame, coframe, gam)
    return fns


def build_model(kind, params=None):
    params = dict(params or {})
    if kind not in KINDS:
        raise GeometryError(f"unknown model kind {kind!r}; expected one of {', '.join(KINDS)}")
    if kind == "heisenberg-nilmanifold":
        unknown = set(params)
        key = ()
        domain = ((0.0, 1.0), (0.0, 1.0), (0.0, 1.0))
        ident = "heisenberg-lattice"
    elif kind == "space-form-chart":
        unknown = set(params) - {"lambda"}
        lam = float(params.get("lambda", 0.0))
        if not math.isfinite(lam):
            raise GeometryError("lambda must be a finite real number")
        key = (("lambda", lam),)
        domain = ((-1.0, 1.0), (-1.0, 1.0), (-1.0, 1.0))
        ident = None
    else:
        unknown = set(params) - {"scale"}
        scale = float(params.get("scale", 1.0))
        if not (math.isfinite(scale) and scale > 0):
            raise GeometryError(f"sphere scale must be positive, got {scale}")
        key = (("scale", scale),)
        domain = ((0.0, 2 * math.pi), (0.0, 2 * math.pi), (0.0, 2 * math.pi))
        ident = "torus-cover"
    if unknown:
        raise GeometryError(f"unexpected parameters for {kind}: {sorted(unknown)}")
    return ModelManifold(kind, key, domain, ident, 1, _compiled(kind, key))


# ---------------------------------------------------------------- lattice


def heis_mul(p, g):
    """Right action p * g of the Heisenberg group in the (x, y, t) chart.

    This is the action that preserves theta and the frame, so the lattice acts
    on the right.
    """
    p = np.asarray(p, dtype=float)
    g = np.asarray(g, dtype=float)
    out = p + g
    out[..., 2] = p[..., 2] + g[..., 2] + 0.5 * (p[..., 0] * g[..., 1] - p[..., 1] * g[..., 0])
    return out


def heis_inv(g):
    g = np.asarray(g, dtype=float)
    return -g


def lattice_reduce(p):
    """Return (p0, gamma) with p0 in [0,1)^3 and p = p0 * gamma."""
    p = np.asarray(p, dtype=float)
    a, b = math.floor(p[0]), math.floor(p[1])
    q = heis_mul(p, (-a, -b, 0.0))
    c = math.floor(q[2])
    q[2] -= c
    # p = q * (a, b, c')  where c' follows from the group law
    gam = heis_mul(heis_inv(q), p)
    return q, gam


# ------------------------------------------------------------- frame data


@dataclass(frozen=True)
class FrameData:
    point: np.ndarray
    e: np.ndarray
    xi: np.ndarray
    theta: np.ndarray
    J: np.ndarray
    gamma: np.ndarray
    A: np.ndarray
    volume_density: float

    def to_dict(self):
        return {k: (v.tolist() if isinstance(v, np.ndarray) else v) for k, v in self.__dict__.items()}


def frame_at(model, point):
    p = np.asarray(point, dtype=float)
    model.check_point(p)
    E = model.frame_matrix(p)
    W = model.coframe_matrix(p)
    tors = model.torsion(p)
    return FrameData(
        point=p,
        e=E[:, 1:].T.copy(),
        xi=E[:, 0].copy(),
        theta=W[0].copy(),
        J=J_FRAME[1:, 1:].copy(),
        gamma=model.gamma(p),
        A=tors[1:, 1:].copy(),
        volume_density=float(abs(np.linalg.det(W))),
    )


# -------------------------------------------------------- axiom checking


def _fd(fn, p, v, h):
    return (fn(p + h * v) - fn(p - h * v)) / (2.0 * h)


def tanaka_webster_residuals(model, p, h):
    """Max residuals of the four connection axioms at one point.

    Residual tensors are reported in orthonormal frame components so that the
    numbers do not depend on how singular the chart coordinates are.
    """
    E = model.frame_matrix(p)
    W = model.coframe_matrix(p)
    G = model.gamma(p)
    g = model.metric(p)
    Jc = model.j_coords(p)
    theta = W[0]
    res = {"metric": 0.0, "complex-structure": 0.0, "torsion-purity": 0.0, "reeb-parallel": 0.0}
    frame_fn = model.frame_matrix
    cof_fn = model.coframe_matrix
    for A in range(3):
        X = E[:, A]
        dW = _fd(cof_fn, p, X, h)          # X(W[B, i])
        # nabla_X d_i in frame components: column i
        nab = dW + G[:, A, :] @ W
        nab_c = E @ nab                     # coordinate components
        dg = _fd(model.metric, p, X, h)
        r = E.T @ (dg - nab_c.T @ g - g @ nab_c) @ E
        res["metric"] = max(res["metric"], float(np.max(np.abs(r))))
        dJ = _fd(model.j_coords, p, X, h)
        # nabla_X (J d_i) - J nabla_X d_i
        r = W @ (dJ + nab_c @ Jc - Jc @ nab_c) @ E
        res["complex-structure"] = max(res["complex-structure"], float(np.max(np.abs(r))))
        dth = _fd(lambda q: cof_fn(q)[0], p, X, h)
        r = (dth - theta @ nab_c) @ E
        res["reeb-parallel"] = max(res["reeb-parallel"], float(np.max(np.abs(r))))
    # d theta from coordinate derivatives of the theta components
    dtheta = np.zeros((3, 3))
    for i in range(3):
        ei = np.zeros(3)
        ei[i] = 1.0
        dtheta[i] = _fd(lambda q: cof_fn(q)[0], p, ei, h)
    dth2 = dtheta - dtheta.T   # dth2[i, j] = d_i theta_j - d_j theta_i
    for A in range(3):
        for B in range(3):
            XA, XB = E[:, A], E[:, B]
            br = _fd(lambda q: frame_fn(q)[:, B], p, XA, h) - _fd(lambda q: frame_fn(q)[:, A], p, XB, h)
            T = E @ (G[:, A, B] - G[:, B, A]) - br
            expected = (XA @ dth2 @ XB) * E[:, 0]
            r = W @ (T - expected)
            res["torsion-purity"] = max(res["torsion-purity"], float(np.max(np.abs(r))))
    return res


def check_tanaka_webster(model, sample_count=50, h=1e-3, seed=0):
    pts = model.random_points(sample_count, seed)
    worst = {"metric": 0.0, "complex-structure": 0.0, "torsion-purity": 0.0, "reeb-parallel": 0.0}
    scale = 0.0
    for p in pts:
        r = tanaka_webster_residuals(model, p, h)
        for k, v in r.items():
            worst[k] = max(worst[k], v)
        scale = max(scale, float(np.max(np.abs(model.frame_matrix(p)))), float(np.max(np.abs(model.metric(p)))))
    rounding = np.finfo(float).eps * max(scale, 1.0) ** 2 / h
    return {
        "model": model.kind,
        "points": int(sample_count),
        "h": float(h),
        "residuals": worst,
        "max_residual": max(worst.values()),
        "rounding_floor": float(rounding),
        "cancellation_warning": bool(rounding > 1e-8),
    }


# --------------------------------------------------------------- curvature


@dataclass(frozen=True)
class CurvatureOperator:
    point: np.ndarray
    R: np.ndarray          # R4[X, Y, Z, W] on the full frame {xi, e1, e2}
    Q: np.ndarray          # operator on Lambda^2 H in the basis e1 ^ e2
    Q11: np.ndarray        # Hermitian form on (1,1) 2-vectors eta_j ^ conj(eta_k)

    @property
    def RH(self):
        return self.R[1:, 1:, 1:, 1:]

    def to_dict(self):
        return {
            "point": self.point.tolist(),
            "R_horizontal": self.RH.tolist(),
            "Q": self.Q.tolist(),
            "Q11_real": np.real(self.Q11).tolist(),
            "Q11_imag": np.imag(self.Q11).tolist(),
            "K_hol": float(self.RH[0, 1, 0, 1]),
        }


def _R4(model, p):
    curv = model.curvature_tensor(p)  # curv[D, C, A, B]
    # R(X,Y,Z,W) = <R(Z,W)Y, X> = curv[X, Y, Z, W] in an orthonormal frame
    return curv.copy()


def eta_vector(j=1):
    v = np.zeros(3, dtype=complex)
    v[1] = 1 / math.sqrt(2)
    v[2] = -1j / math.sqrt(2)
    return v


def r4_complex(R, a, b, c, d):
    return np.einsum("ijkl,i,j,k,l->", R, a, b, c, d)


def curvature_at(model, point):
    p = np.asarray(point, dtype=float)
    model.check_point(p)
    R = _R4(model, p)
    RH = R[1:, 1:, 1:, 1:]
    Q = np.array([[RH[0, 1, 0, 1]]])
    eta = eta_vector()
    etab = np.conj(eta)
    # <Q(eta ^ conj eta), conj(eta ^ conj eta)> = R(eta, conj eta, conj eta, eta)
    q11 = r4_complex(R, eta, etab, etab, eta)
    return CurvatureOperator(point=p, R=R, Q=Q, Q11=np.array([[q11]]))


def _wedge_norm_sq(X, Y):
    return float(X @ X * (Y @ Y) - (X @ Y) ** 2)


def _as_frame_vector(X):
    X = np.asarray(X, dtype=float)
    if X.shape == (2,):
        X = np.concatenate([[0.0], X])
    if X.shape != (3,):
        raise GeometryError("vectors are given by frame components (e1, e2) or (xi, e1, e2)")
    if abs(X[0]) > 1e-12:
        raise GeometryError("sectional curvature needs horizontal vectors (xi component must vanish)")
    return X


def sectional(model, point, X, Y):
    X, Y = _as_frame_vector(X), _as_frame_vector(Y)
    nrm = _wedge_norm_sq(X, Y)
    if nrm <= 1e-14 * max(X @ X * (Y @ Y), 1e-300):
        raise GeometryError("degenerate plane: X and Y are (nearly) linearly dependent")
    R = curvature_at(model, point).R
    return float(np.einsum("ijkl,i,j,k,l->", R, X, Y, X, Y) / nrm)


def hol_sectional(model, point, X):
    X = _as_frame_vector(X)
    return sectional(model, point, X, J_FRAME @ X)


def negativity_class(model, point, tol=1e-10):
    H = curvature_at(model, point).Q11
    ev = np.linalg.eigvalsh(0.5 * (H + H.conj().T))
    if np.all(ev < -tol):
        return "strongly-negative"
    if np.all(ev <= tol):
        return "strongly-seminegative"
    return "indefinite"


def order_k_negativity_sample(model, point, k, trials, seed=0, tol=1e-10):
    """Randomized search for a counterexample to negativity of order k.

    Random draws can only refute the property.  When k exceeds the CR dimension
    the rank condition rank[[A, B], [conj B, conj A]] = 2k is unattainable, so the
    defining implication holds vacuously and the report says so.
    """
    if int(k) < 1:
        raise GeometryError(f"order k must be at least 1, got {k}")
    if int(trials) < 1:
        raise GeometryError("trials must be at least 1")
    k, m = int(k), model.m
    R = curvature_at(model, point).R
    # complex components R_{a bbar c dbar} on eta_1 (m = 1 frames)
    eta = eta_vector()
    etab = np.conj(eta)
    Rc = np.array([[[[r4_complex(R, eta, etab, eta, etab)]]]])
    rng = np.random.default_rng(seed)
    eligible = 0
    found = None
    for _ in range(int(trials)):
        A = rng.normal(size=(m, k)) + 1j * rng.normal(size=(m, k))
        B = rng.normal(size=(m, k)) + 1j * rng.normal(size=(m, k))
        block = np.block([[A, B], [np.conj(B), np.conj(A)]])
        if np.linalg.matrix_rank(block) != 2 * k:
            continue
        eligible += 1
        worst = 0.0
        for i in range(k):
            for j in range(k):
                xi = np.einsum("a,b->ab", A[:, i], np.conj(B[:, j])) - np.einsum("a,b->ab", A[:, j], np.conj(B[:, i]))
                val = np.einsum("abcd,ab,dc->", Rc, xi, np.conj(xi))
                worst = max(worst, abs(val))
        if worst <= tol and np.any(A) and np.any(B):
            found = (A, B)
            break
    report = {
        "k": k,
        "m": m,
        "trials": int(trials),
        "eligible_trials": eligible,
        "vacuous": k > m,
        "result": "no-counterexample" if found is None else "counterexample",
        "note": "random sampling can refute but never certify negativity of order k",
    }
    if found is not None:
        report["A"] = found[0].tolist()
        report["B"] = found[1].tolist()
    return report


# ------------------------------------------------------- connection offset


@dataclass(frozen=True)
class ConnectionOffset:
    point: np.ndarray
    S: np.ndarray   # S[C, Z1, Z2]: e_C component of S(e_Z1, e_Z2)

    def apply(self, Z1, Z2):
        return np.einsum("cab,a,b->c", self.S, Z1, Z2)


def sasakian_offset_tensor():
    """S(Z1, Z2) = -1/2 dtheta(Z2, Z1) xi + 1/2 (theta(Z2) J Z1 + theta(Z1) J Z2)."""
    dth = np.array([[0.0, 0.0, 0.0], [0.0, 0.0, 1.0], [0.0, -1.0, 0.0]])
    S = np.zeros((3, 3, 3))
    for a in range(3):
        for b in range(3):
            S[0, a, b] += -0.5 * dth[b, a]
            S[:, a, b] += 0.5 * ((1.0 if b == 0 else 0.0) * J_FRAME[:, a] + (1.0 if a == 0 else 0.0) * J_FRAME[:, b])
    return S


def levi_civita_gamma(model, p):
    """Levi-Civita coefficients of g_theta in the same index layout as gamma."""
    c = model.structure(p)
    lc = np.zeros((3, 3, 3))
    for C in range(3):
        for A in range(3):
            for B in range(3):
                lc[C, A, B] = 0.5 * (c[C, A, B] - c[A, B, C] + c[B, C, A])
    return lc


def connection_offset(model, point):
    p = np.asarray(point, dtype=float)
    model.check_point(p)
    lc = levi_civita_gamma(model, p)
    tw = model.gamma(p)
    # S(e_a, e_b) = nabla^theta_{e_b} e_a - nabla_{e_b} e_a
    S = np.transpose(lc - tw, (0, 2, 1))
    return ConnectionOffset(point=p, S=S)

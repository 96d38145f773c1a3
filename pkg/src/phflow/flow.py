"""Subelliptic harmonic map heat flow with forward Euler time stepping.

Intrinsic backend (nilmanifold target): the lifted coordinates move with
velocity sum_A tau^A e~_A(f), where tau = trace of the covariant Hessian over
the horizontal source frame.  On the nilmanifold the horizontal rows of the
target coframe are dX and dY, so the X and Y equations are exactly the
discrete gradient flow of the discrete horizontal energy.

Extrinsic backend (sphere target embedded in R^4): u evolves by
Delta_H u - sum_A [Pi''(u)(D_A u, D_A u) + S^(D_A u, D_A u)] without
re-projection, so the distance to the sphere is a monitored quantity.
"""

from __future__ import annotations

import csv
import io
import json
import math
import warnings
from dataclasses import dataclass, field, replace

import numpy as np

from . import fields as fl
from . import geometry as geo
from . import maps as mp


class FlowError(RuntimeError):
    pass


BACKENDS = ("intrinsic", "extrinsic")
TRACE_COLUMNS = ("step", "time", "E_HH", "E_LH", "E_HL", "E_LL", "K", "tau_HH_sup", "tau_HL_sup",
                 "energy_identity_residual", "rho_sq", "foliated_defect")


@dataclass(frozen=True)
class FlowConfig:
    source: str = "heisenberg-nilmanifold"
    target: str = "heisenberg-nilmanifold"
    backend: str = "intrinsic"
    initial: str = "perturbed-identity"
    amplitude: float = 0.05
    resolution: tuple = (24, 24, 24)
    dt: float | None = None              # None: h^2/8
    steps: int = 2000
    every: int = 1
    tau_threshold: float = 1e-4
    monotonicity_slack: float = 1e-9
    seed: int = 0
    allow_unstable: bool = False
    reproject: bool = False
    scale: float = 1.0

    def validate(self):
        if self.backend not in BACKENDS:
            raise FlowError(f"backend must be one of {BACKENDS}, got {self.backend!r}")
        if self.backend == "intrinsic" and self.target != "heisenberg-nilmanifold":
            raise FlowError("the intrinsic backend needs the nilmanifold target")
        if self.backend == "extrinsic" and (self.target != "round-sphere-3" or self.source != "round-sphere-3"):
            raise FlowError("the extrinsic backend is shipped for the sphere to sphere flow")
        if self.dt is not None and not (self.dt > 0 and math.isfinite(self.dt)):
            raise FlowError(f"dt must be positive, got {self.dt}")
        if self.steps < 0 or self.every < 1:
            raise FlowError("steps must be >= 0 and every >= 1")
        if len(self.resolution) != 3:
            raise FlowError("resolution needs three entries")


# ------------------------------------------------------------ initial data


def _model(kind, scale=1.0):
    return geo.build_model(kind, {"scale": scale} if kind == "round-sphere-3" else {})


def foliated_perturbation(grid, amplitude, seed, modes=3):
    """f(p) = h(pi(p)) * p with h a seeded trigonometric map of the base torus."""
    rng = np.random.default_rng(seed)
    terms = []
    for comp in range(3):
        for _ in range(modes):
            kx, ky = rng.integers(-2, 3, size=2)
            if kx == 0 and ky == 0:
                kx = 1
            terms.append((comp, rng.normal() / modes, int(kx), int(ky), rng.uniform(0, 2 * np.pi)))

    def fn(pts):
        x, y = pts[:, 0], pts[:, 1]
        h = np.zeros((pts.shape[0], 3))
        for comp, a, kx, ky, ph in terms:
            h[:, comp] += amplitude * a * np.cos(2 * np.pi * (kx * x + ky * y) + ph)
        return geo.heis_mul(h, pts)

    return fl.map_from_function(grid, grid.model, fn, np.eye(3))


def embedded_identity(grid, R):
    eta, p1, p2 = grid.points.T
    return np.stack([R * np.cos(eta) * np.cos(p1), R * np.cos(eta) * np.sin(p1),
                     R * np.sin(eta) * np.cos(p2), R * np.sin(eta) * np.sin(p2)], axis=1)


def _cplx(u):
    return u[:, 0] + 1j * u[:, 1], u[:, 2] + 1j * u[:, 3]


def _real(z1, z2):
    return np.stack([z1.real, z1.imag, z2.real, z2.imag], axis=1)


def tangential_perturbation(grid, R, amplitude, seed):
    """z + eps (a e1~ + b e2~ + c xi~) with seeded polynomial coefficients in z."""
    rng = np.random.default_rng(seed)
    u = embedded_identity(grid, R)
    z1, z2 = _cplx(u / R)
    coef = rng.normal(size=(3, 4)) + 1j * rng.normal(size=(3, 4))
    basis = [z1, z2, z1 * np.conj(z2), z1 * z1]
    a, b, c = (sum(cf[i] * basis[i] for i in range(4)).real for cf in coef)
    w1, w2 = _cplx(u)
    e1 = (-np.conj(w2) / R, np.conj(w1) / R)
    xi = (2j * w1 / R ** 2, 2j * w2 / R ** 2)
    v1 = a * e1[0] + b * 1j * e1[0] + c * xi[0]
    v2 = a * e1[1] + b * 1j * e1[1] + c * xi[1]
    return u + amplitude * _real(v1, v2)


# --------------------------------------------------------------- intrinsic


def _tension_parts(f):
    """Frame tension tau[n, A~] and first jets for a lifted grid map."""
    g = f.grid
    jets = mp.grid_jets(f, second=False)
    d1 = jets.d1
    tau = np.zeros((g.size, 3))
    for B in (1, 2):
        tau += g.frame_diff(d1[:, :, B], which=(B,))[0]
    if np.any(g.hdiv):
        tau -= np.einsum("nc,nac->na", g.hdiv, d1)
    Gt = mp._target_gamma(f, f.values)
    if Gt is not None:
        tau += sum(np.einsum("naed,ne,nd->na", Gt, d1[:, :, B], d1[:, :, B]) for B in (1, 2))
    return tau, jets


def intrinsic_velocity(f):
    tau, jets = _tension_parts(f)
    E = f.target.frame_many(f.values)
    return np.einsum("nia,na->ni", E, tau), tau, jets


def step_intrinsic(f, dt, tau=None):
    """One forward Euler step; tau may be passed when already computed for f."""
    if f.ambient:
        raise FlowError("the intrinsic stepper works on lifted nilmanifold maps")
    if tau is None:
        vel, _, _ = intrinsic_velocity(f)
    else:
        vel = np.einsum("nia,na->ni", f.target.frame_many(f.values), tau)
    new = f.values + dt * vel
    if not np.all(np.isfinite(new)):
        raise FlowError("non-finite values after an intrinsic step")
    return f.replace(new)


# --------------------------------------------------------------- extrinsic


@dataclass(frozen=True)
class ExtrinsicTarget:
    """Round sphere of radius R in R^4 with contact form Im(conj(z) dz)/2."""
    R: float
    K: int = 4

    @property
    def tube_radius(self):
        return 0.5 * self.R

    def embed(self, chart_pts):
        eta, p1, p2 = np.asarray(chart_pts, dtype=float).T
        R = self.R
        return np.stack([R * np.cos(eta) * np.cos(p1), R * np.cos(eta) * np.sin(p1),
                         R * np.sin(eta) * np.cos(p2), R * np.sin(eta) * np.sin(p2)], axis=-1)

    def project(self, y):
        y = np.atleast_2d(y)
        return self.R * y / np.linalg.norm(y, axis=1, keepdims=True)

    def rho(self, y):
        y = np.atleast_2d(y)
        return y - self.project(y)

    def dproject(self, y, v):
        return mp.projection_differential(np.atleast_2d(y), self.R, np.atleast_2d(v))

    def second(self, y, v, w=None):
        """Pi''(y)(v, w) for Pi(y) = R y/|y|."""
        y = np.atleast_2d(y)
        v = np.atleast_2d(v)
        w = v if w is None else np.atleast_2d(w)
        r2 = np.sum(y * y, axis=1)
        r = np.sqrt(r2)
        yv = np.sum(y * v, axis=1)
        yw = np.sum(y * w, axis=1)
        vw = np.sum(v * w, axis=1)
        fac = (self.R / r ** 3)[:, None]
        return fac * (-yv[:, None] * w - yw[:, None] * v - vw[:, None] * y
                      + (3 * yv * yw / r2)[:, None] * y)

    def theta(self, y, v):
        """Contact form at Pi(y) applied to a vector v."""
        p = self.project(y)
        z1, z2 = _cplx(p)
        v1, v2 = _cplx(np.atleast_2d(v))
        return 0.5 * np.imag(np.conj(z1) * v1 + np.conj(z2) * v2)

    def reeb(self, y):
        z1, z2 = _cplx(self.project(y))
        return _real(2j * z1 / self.R ** 2, 2j * z2 / self.R ** 2)

    def s_hat(self, y, v):
        """S^(v, v) = theta(Z) J(Z - theta(Z) xi) with Z = d Pi_y (v)."""
        Z = self.dproject(y, v)
        th = self.theta(y, Z)
        hz = Z - th[:, None] * self.reeb(y)
        z1, z2 = _cplx(hz)
        return th[:, None] * _real(1j * z1, 1j * z2)


def extrinsic_rhs(u, grid, target):
    d = grid.frame_diff(u)
    lap = np.zeros_like(u)
    for A in (1, 2):
        lap += grid.frame_diff(d[A], which=(A,))[0]
    if np.any(grid.hdiv):
        lap -= sum(grid.hdiv[:, C][:, None] * d[C] for C in range(3))
    out = lap
    for A in (1, 2):
        out = out - target.second(u, d[A]) - target.s_hat(u, d[A])
    return out


def step_extrinsic(u, grid, target, dt, reproject=False, step_index=None):
    rhs = extrinsic_rhs(u, grid, target)
    new = u + dt * rhs
    if not np.all(np.isfinite(new)):
        raise FlowError(f"non-finite values after extrinsic step {step_index}")
    dist = np.linalg.norm(target.rho(new), axis=1)
    bad = int(np.argmax(dist))
    if dist[bad] > target.tube_radius:
        raise FlowError(f"node {bad} left the tubular neighborhood at step {step_index} (distance {dist[bad]:.3e})")
    if reproject:
        new = target.project(new)
    return new


# -------------------------------------------------------------- diagnostics


@dataclass
class FlowTrace:
    rows: list = field(default_factory=list)
    tau_l2: list = field(default_factory=list)      # integral of |tau_HH|^2 at each row

    def column(self, name):
        return np.array([np.nan if r[name] is None else r[name] for r in self.rows], dtype=float)

    def to_csv(self):
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(TRACE_COLUMNS)
        for r in self.rows:
            w.writerow(["" if r[c] is None else (r[c] if c == "step" else repr(float(r[c]))) for c in TRACE_COLUMNS])
        return buf.getvalue()


def energy_identity_residual(trace):
    """|E(t_end) + rectangle-rule integral of int |tau_HH|^2 - E(0)| / E(0)."""
    if not trace.rows:
        raise FlowError("empty trace")
    E = trace.column("E_HH")
    t = trace.column("time")
    acc = float(np.sum(np.diff(t) * np.asarray(trace.tau_l2[:-1]))) if len(t) > 1 else 0.0
    if E[0] == 0:
        return abs(E[-1] + acc - E[0])
    return abs(E[-1] + acc - E[0]) / abs(E[0])


def _diag_intrinsic(f, cache=None):
    tau, jets = _tension_parts(f)
    if cache is not None:
        cache["state"], cache["tau"] = f, tau
    dens = mp.energy_density(jets.d1)
    en = mp.integrate_density(f.grid, dens)
    tHH = np.sqrt(np.sum(tau[:, 1:] ** 2, axis=1))
    l2 = f.grid.integrate_values(tHH ** 2)
    fol = mp.defects_from(jets.d1)["foliated"]
    return en, float(np.max(tHH)), float(np.max(np.abs(tau[:, 0]))), l2, fol, None


def _diag_extrinsic(u, grid, target, model):
    f = fl.MapField(grid, model, u)
    jets = mp.grid_jets(f, second=False)
    dens = mp.energy_density(jets.d1)
    en = mp.integrate_density(grid, dens)
    rhs = extrinsic_rhs(u, grid, target)
    rows, _, _ = mp._ambient_frames(u, target.R)
    tau = np.einsum("nai,ni->na", rows, rhs)
    tHH = np.sqrt(np.sum(tau[:, 1:] ** 2, axis=1))
    l2 = grid.integrate_values(tHH ** 2)
    rho = target.rho(u)
    rho_sq = grid.integrate_values(np.sum(rho * rho, axis=1))
    fol = mp.defects_from(jets.d1)["foliated"]
    return en, float(np.max(tHH)), float(np.max(np.abs(tau[:, 0]))), l2, fol, rho_sq


@dataclass
class FlowResult:
    trace: FlowTrace
    final: object
    converged: bool
    classification: str
    steps: int
    dt: float
    warnings: list

    def summary(self):
        last = self.trace.rows[-1]
        final = {k: last[k] for k in ("E_HH", "E_LH", "E_HL", "E_LL")}
        final.update({"E_prime": last["_E_prime"], "E_dprime": last["_E_dprime"], "K": last["K"]})
        return {"converged": bool(self.converged), "steps": int(self.steps), "final": final,
                "classification": self.classification}

    def summary_json(self):
        return json.dumps(self.summary(), indent=2, sort_keys=True) + "\n"


def default_dt(grid):
    return grid.h ** 2 / 8.0


def run_flow(config, progress=None):
    config.validate()
    src = _model(config.source, config.scale)
    grid = fl.Grid(src, config.resolution)
    notes = []
    dt = config.dt if config.dt is not None else default_dt(grid)
    cfl = grid.cfl_bound() if config.backend == "intrinsic" or config.dt is not None else None
    if config.backend == "extrinsic" and config.dt is None:
        dt = min(dt, 0.5 * grid.cfl_bound())
        cfl = grid.cfl_bound()
    if cfl is not None and dt > cfl:
        msg = f"dt={dt:.3e} exceeds the stability bound {cfl:.3e}"
        if not config.allow_unstable:
            raise FlowError(msg + " (set allow_unstable to override)")
        warnings.warn(msg, RuntimeWarning, stacklevel=2)
        notes.append(msg)

    if config.backend == "intrinsic":
        if config.initial == "identity":
            state = fl.map_from_function(grid, src, lambda p: p.copy(), np.eye(3))
        elif config.initial == "perturbed-identity":
            state = foliated_perturbation(grid, config.amplitude, config.seed)
        else:
            state = mp.analytic_map_field(grid, config.initial)
        cache = {}
        diag = lambda s: _diag_intrinsic(s, cache)                # noqa: E731

        def step(s, k):
            tau = cache["tau"] if cache.get("state") is s else None
            return step_intrinsic(s, dt, tau)
    else:
        target = ExtrinsicTarget(2.0 * config.scale)
        tmodel = _model(config.target, config.scale)
        if config.initial == "identity":
            state = embedded_identity(grid, target.R)
        elif config.initial == "perturbed-identity":
            state = tangential_perturbation(grid, target.R, config.amplitude, config.seed)
        else:
            raise FlowError(f"unknown initial map {config.initial!r} for the extrinsic backend")
        diag = lambda s: _diag_extrinsic(s, grid, target, tmodel)    # noqa: E731
        step = lambda s, k: step_extrinsic(s, grid, target, dt, config.reproject, k)  # noqa: E731

    trace = FlowTrace()
    E0 = None
    acc = 0.0
    converged = False
    k = 0
    t_prev = None
    l2_prev = None
    blow = None
    while True:
        if k % config.every == 0 or k == config.steps:
            en, tHH, tHL, l2, fol, rho_sq = diag(state)
            t = k * dt
            if E0 is None:
                E0 = en.E_HH
            else:
                acc += (t - t_prev) * l2_prev
            t_prev, l2_prev = t, l2
            resid = abs(en.E_HH + acc - E0) / (abs(E0) if E0 else 1.0)
            trace.rows.append({
                "step": k, "time": t, "E_HH": en.E_HH, "E_LH": en.E_LH, "E_HL": en.E_HL, "E_LL": en.E_LL,
                "K": en.K, "tau_HH_sup": tHH, "tau_HL_sup": tHL, "energy_identity_residual": resid,
                "rho_sq": rho_sq, "foliated_defect": fol, "_E_prime": en.E_prime, "_E_dprime": en.E_dprime,
            })
            trace.tau_l2.append(l2)
            if progress:
                progress(trace.rows[-1])
            if max(tHH, tHL) < config.tau_threshold:
                converged = True
                break
            if blow is None:
                blow = 1e8 * max(abs(E0), 1.0)
            if not math.isfinite(en.E_HH) or en.E_HH > blow:
                raise FlowError(f"flow blew up at step {k} (E_HH={en.E_HH:.3e})")
        if k >= config.steps:
            break
        try:
            state = step(state, k)
        except FlowError as exc:
            raise FlowError(f"step {k}: {exc}") from None
        k += 1

    last = trace.rows[-1]
    if converged:
        cls = "special-harmonic"
    elif last["tau_HH_sup"] < config.tau_threshold:
        cls = "harmonic-horizontal-only"
    else:
        cls = "not-converged"
    return FlowResult(trace, state, converged or cls != "not-converged", cls, k, dt, notes)


def monotonicity_report(trace, slack_rel=1e-9):
    """Largest step-to-step increases of the monitored energies."""
    out = {}
    E0 = trace.rows[0]["E_HH"] or 1.0
    for name in ("E_HH", "E_LH", "E_LL", "rho_sq"):
        col = trace.column(name)
        if np.all(np.isnan(col)) or len(col) < 2:
            out[name] = 0.0
            continue
        inc = np.diff(col)
        out[name] = float(max(0.0, np.max(inc)))
    out["slack"] = slack_rel * E0
    return out


def with_overrides(config, **kw):
    return replace(config, **kw)

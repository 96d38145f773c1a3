"""Registry of named identity checks with machine-readable results.

Each check evaluates one operation of geometry, fields, maps or flow and
reports a residual against a tolerance.  Check ids are stable strings; the
registry is locked against docs/check_manifest.txt by the test suite.
"""

from __future__ import annotations

import json
import math
import time
from dataclasses import dataclass, field

import numpy as np

from . import fields as fl
from . import flow as fw
from . import geometry as geo
from . import maps as mp


class VerifyError(ValueError):
    pass


@dataclass(frozen=True)
class VerifyConfig:
    seed: int = 0
    points: int = 100
    h: float = 1e-3
    nil_flow_resolution: int = 24
    nil_flow_steps: int = 2000
    nil_flow_amplitude: float = 0.05
    sphere_flow_resolution: int = 16
    sphere_flow_steps: int = 500
    sphere_flow_amplitude: float = 0.05


@dataclass(frozen=True)
class CheckResult:
    check_id: str
    scenario: str
    residual: float
    tolerance: float
    passed: bool
    runtime: float = 0.0
    detail: dict = field(default_factory=dict)

    def to_dict(self, timings=False):
        out = {"id": self.check_id, "scenario": self.scenario, "residual": self.residual,
               "tolerance": self.tolerance, "passed": self.passed, "detail": self.detail}
        if timings:
            out["runtime"] = self.runtime
        return out


def _interval_gap(value, lo, hi):
    if value < lo:
        return lo - value
    if value > hi:
        return value - hi
    return 0.0


def _clean(obj):
    """Round-trip-safe plain Python values for the JSON report."""
    if isinstance(obj, dict):
        return {str(k): _clean(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_clean(v) for v in obj]
    if isinstance(obj, (np.floating, float)):
        v = float(obj)
        return v if math.isfinite(v) else repr(v)
    if isinstance(obj, (np.integer,)):
        return int(obj)
    if isinstance(obj, np.bool_):
        return bool(obj)
    return obj


# ------------------------------------------------------------------ context


class _Context:
    """Per-run cache so related checks share expensive computations."""

    def __init__(self, cfg):
        self.cfg = cfg
        self._memo = {}

    def memo(self, key, fn):
        if key not in self._memo:
            self._memo[key] = fn()
        return self._memo[key]

    # models
    def model(self, kind, **params):
        return geo.build_model(kind, params)

    def tw_models(self):
        return [("nil", self.model("heisenberg-nilmanifold")),
                ("M(-1)", self.model("space-form-chart", **{"lambda": -1.0})),
                ("M(0)", self.model("space-form-chart", **{"lambda": 0.0})),
                ("M(1)", self.model("space-form-chart", **{"lambda": 1.0})),
                ("S3", self.model("round-sphere-3", scale=1.0))]

    def tw(self):
        def run():
            out = {}
            for name, m in self.tw_models():
                a = geo.check_tanaka_webster(m, self.cfg.points, self.cfg.h, self.cfg.seed)
                b = geo.check_tanaka_webster(m, self.cfg.points, self.cfg.h / 2, self.cfg.seed)
                out[name] = (a, b)
            return out
        return self.memo("tw", run)

    def nil_grid(self, n):
        return self.memo(("nilgrid", n), lambda: fl.Grid(self.model("heisenberg-nilmanifold"), (n, n, n)))

    def corpus_jets(self, name, count=20, order=2):
        def run():
            spec = mp.get_spec(name)
            pts = spec.source_model().random_points(count, seed=self.cfg.seed)
            return [mp.analytic_jet(spec, p, order) for p in pts]
        return self.memo(("jets", name, count, order), run)

    def nil_flow(self):
        c = self.cfg
        conf = fw.FlowConfig(resolution=(c.nil_flow_resolution,) * 3, steps=c.nil_flow_steps,
                             amplitude=c.nil_flow_amplitude, seed=c.seed)
        return self.memo("nilflow", lambda: fw.run_flow(conf))

    def sphere_flow(self):
        c = self.cfg
        conf = fw.FlowConfig(source="round-sphere-3", target="round-sphere-3", backend="extrinsic",
                             resolution=(c.sphere_flow_resolution,) * 3, steps=c.sphere_flow_steps,
                             amplitude=c.sphere_flow_amplitude, seed=c.seed, tau_threshold=0.0)
        return self.memo("sphereflow", lambda: fw.run_flow(conf))


# ------------------------------------------------------------------- checks

REGISTRY = {}


def check(check_id, scenario):
    def deco(fn):
        if check_id in REGISTRY:
            raise RuntimeError(f"duplicate check id {check_id}")
        REGISTRY[check_id] = (scenario, fn)
        return fn
    return deco


def _tw_axiom(axiom):
    def fn(ctx):
        res = {name: a["residuals"][axiom] for name, (a, _) in ctx.tw().items()}
        return max(res.values()), 1e-5, {"per_model": res}
    return fn


for _ax in ("metric", "complex-structure", "torsion-purity", "reeb-parallel"):
    check(f"prop1.1.{_ax}", "geometry.check_tanaka_webster; nil, M(-1), M(0), M(1), S3; seeded points, h=1e-3")(
        _tw_axiom(_ax))


@check("prop1.1.halving-order", "geometry.check_tanaka_webster at h and h/2; ratio in [3, 5.5]")
def _tw_order(ctx):
    ratios, skipped = {}, []
    for name, (a, b) in ctx.tw().items():
        if a["max_residual"] <= max(1e-10, 100 * a["rounding_floor"]):
            skipped.append(name)         # exact up to rounding: no truncation error to halve
            continue
        ratios[name] = a["max_residual"] / b["max_residual"]
    gap = max((_interval_gap(r, 3.0, 5.5) for r in ratios.values()), default=0.0)
    return gap, 0.0, {"ratios": ratios, "exact_models": skipped}


@check("eq1.24.hol-sectional", "geometry.hol_sectional on M(lambda), lambda in {-1, 0, 1}; 50 points")
def _hol(ctx):
    worst, per = 0.0, {}
    for lam in (-1.0, 0.0, 1.0):
        m = ctx.model("space-form-chart", **{"lambda": lam})
        pts = m.random_points(50, seed=ctx.cfg.seed)
        err = max(abs(geo.hol_sectional(m, p, np.array([0.0, 1.0, 0.0])) - lam) for p in pts)
        per[str(lam)] = err
        worst = max(worst, err)
    return worst, 1e-6, {"per_lambda": per}


@check("eq1.24.nil-flat", "geometry.curvature_at on the nilmanifold; 50 points")
def _nil_flat(ctx):
    m = ctx.model("heisenberg-nilmanifold")
    pts = m.random_points(50, seed=ctx.cfg.seed)
    return max(float(np.max(np.abs(geo.curvature_at(m, p).R))) for p in pts), 1e-9, {}


@check("def1.5.negativity-class", "geometry.negativity_class on M(-1), nil, S3")
def _neg(ctx):
    expect = {"M(-1)": ("space-form-chart", {"lambda": -1.0}, "strongly-negative"),
              "nil": ("heisenberg-nilmanifold", {}, "strongly-seminegative"),
              "S3": ("round-sphere-3", {"scale": 1.0}, "indefinite")}
    got, bad = {}, 0
    for name, (kind, params, want) in expect.items():
        m = ctx.model(kind, **params)
        classes = {geo.negativity_class(m, p) for p in m.random_points(5, seed=ctx.cfg.seed)}
        got[name] = sorted(classes)
        bad += classes != {want}
    return float(bad), 0.0, {"classes": got}


@check("def1.5.order2-sample", "geometry.order_k_negativity_sample on M(-1), k=2, 10^4 trials")
def _order2(ctx):
    m = ctx.model("space-form-chart", **{"lambda": -1.0})
    rep = geo.order_k_negativity_sample(m, m.random_points(1, seed=ctx.cfg.seed)[0], 2, 10000, seed=ctx.cfg.seed)
    return float(rep["result"] != "no-counterexample"), 0.0, {
        "result": rep["result"], "eligible_trials": rep["eligible_trials"], "vacuous": rep["vacuous"]}


@check("lemma1.2.connection-offset", "geometry.connection_offset vs closed-form Sasakian offset; all models")
def _offset(ctx):
    S = geo.sasakian_offset_tensor()
    worst = 0.0
    for _, m in ctx.tw_models():
        for p in m.random_points(10, seed=ctx.cfg.seed):
            worst = max(worst, float(np.max(np.abs(geo.connection_offset(m, p).S - S))))
    return worst, 1e-9, {}


@check("eq6.11.delta-omega-xi", "fields.delta_omega_xi on the nilmanifold, n=32^3; value near m=1")
def _dw32(ctx):
    v = fl.delta_omega_xi(ctx.nil_grid(32))[0]
    return abs(v - 1.0), 5e-3, {"value": v}


@check("eq6.11.delta-omega-xi-fine", "fields.delta_omega_xi on the nilmanifold, n=64^3")
def _dw64(ctx):
    v = fl.delta_omega_xi(ctx.nil_grid(64))[0]
    return abs(v - 1.0), 1.25e-3, {"value": v}


@check("ex5.2.scalar-commutation-order", "fields.scalar_commutation_residual, theta function, n=32^3 vs 64^3")
def _scomm(ctx):
    fn = fl.nil_theta(1, 0.3)
    r = [fl.scalar_commutation_residual(fl.scalar_from_function(ctx.nil_grid(n), fn)).max_abs() for n in (32, 64)]
    ratio = r[0] / r[1]
    return _interval_gap(ratio, 3.0, 5.5), 0.0, {"residual_32": r[0], "residual_64": r[1], "ratio": ratio}


@check("eq6.10.divergence-theorem", "fields.divergence integrated over the nilmanifold, random field, n=16^3")
def _div(ctx):
    g = ctx.nil_grid(16)
    comps = [fl.random_smooth(g, seed=ctx.cfg.seed + i).values for i in range(3)]
    V = fl.VectorField(g, np.stack(comps, axis=1))
    return abs(fl.integrate(fl.divergence(V))), 1e-10, {}


_COMM_IDS = ("eq2.14.reeb", "eq2.14.reeb-bar", "eq2.14.mixed", "eq2.17.mixed",
             "eq2.17.reeb", "eq2.17.reeb-bar", "eq4.18")


def _comm_table(ctx):
    def run():
        table = {}
        for name in mp.CORPUS:
            jets = ctx.corpus_jets(name)
            terms = mp.commutation_terms(np.stack([j.d1 for j in jets]), np.stack([j.d2 for j in jets]))
            table[name] = {k: float(np.max(v)) for k, v in terms.items()}
        return table
    return ctx.memo("comm", run)


def _comm_check(key):
    def fn(ctx):
        per = {name: row[key] for name, row in _comm_table(ctx).items()}
        return max(per.values()), 1e-9, {"per_map": per}
    return fn


for _cid in _COMM_IDS:
    check(_cid, "maps.commutation_residuals on analytic jets of the map corpus; 20 points per map")(_comm_check(_cid))


def _corpus_d1(ctx):
    return np.concatenate([np.stack([j.d1 for j in ctx.corpus_jets(n)]) for n in mp.CORPUS])


@check("eq6.3.energy-split", "maps.energy_density: e_HH = |df^{1,0}|^2 + |df^{0,1}|^2 on corpus jets")
def _esplit(ctx):
    e = mp.energy_density(_corpus_d1(ctx))
    return float(np.max(np.abs(e.e_HH - e.d_sq - e.d_bar_sq))), 1e-12, {}


@check("eq6.5.k-determinant", "maps.energy_density: k = |df^{1,0}|^2 - |df^{0,1}|^2 equals the horizontal determinant")
def _ksplit(ctx):
    d1 = _corpus_d1(ctx)
    e = mp.energy_density(d1)
    return float(np.max(np.abs(e.k - mp.pullback_form_pairing(d1)))), 1e-12, {}


@check("eq3.2.identity-energy", "maps.analytic_energies of the identity on the nilmanifold, n=16^3")
def _eid(ctx):
    E = mp.analytic_energies("identity", ctx.nil_grid(16))
    return abs(E.E_HH - 1.0), 1e-10, {"E_HH": E.E_HH, "K": E.K}


@check("lemma6.2.pairing-identity", "maps.pairing_residual, identity, n=16^3")
def _pair_identity(ctx):
    return mp.pairing_residual(mp.analytic_map_field(ctx.nil_grid(16), "identity")), 1e-10, {}


@check("lemma6.2.pairing-affine", "maps.pairing_residual, lifted affine maps, n=32^3")
def _pair_affine(ctx):
    per = {n: mp.pairing_residual(mp.analytic_map_field(ctx.nil_grid(32), n))
           for n in ("affine-diag21", "affine-shear", "conjugation")}
    return max(per.values()), 1e-3, {"per_map": per}


@check("lemma6.2.pairing-order", "maps.pairing_residual, trig perturbation, n=16^3 vs 32^3")
def _pair_order(ctx):
    r = [mp.pairing_residual(mp.analytic_map_field(ctx.nil_grid(n), "trig-perturbation")) for n in (16, 32)]
    ratio = r[0] / r[1]
    return _interval_gap(ratio, 3.0, 5.5), 0.0, {"residual_16": r[0], "residual_32": r[1], "ratio": ratio}


_BOCHNER_MAPS = ("fiber-rotation", "trig-perturbation", "reeb-tilt")


@check("thm4.1.bochner", "maps.bochner_residual at analytic jets; 20 points; includes a non-foliated map")
def _boch(ctx):
    per = {}
    for name in _BOCHNER_MAPS:
        per[name] = max(abs(float(np.subtract(*mp.bochner_terms(j)))) for j in ctx.corpus_jets(name, order=3))
    return max(per.values()), 1e-7, {"per_map": per}


@check("def4.1.paneitz-affine", "maps.paneitz vanishes for lifted affine maps")
def _pan(ctx):
    worst = 0.0
    for name in ("identity", "affine-diag21", "affine-shear", "conjugation"):
        for j in ctx.corpus_jets(name, 5, order=3):
            worst = max(worst, max(abs(v) for v in mp.paneitz(j).values()))
    return worst, 1e-12, {}


def _analytic_defects(ctx, name):
    def run():
        jets = ctx.corpus_jets(name)
        d1 = np.stack([j.d1 for j in jets])
        d2 = np.stack([j.d2 for j in jets])
        out = mp.defects_from(d1, d2)
        out["tau_HH"] = float(np.max(np.abs(mp.tension_from_d2(d2).tau_HH)))
        return out
    return ctx.memo(("defects", name), run)


_ANALYTIC_TOL = 1e-6


@check("def5.2.holomorphy-classes", "maps.defects: identity holomorphic, conjugation anti-holomorphic, vertical shift foliated")
def _holo(ctx):
    t = _ANALYTIC_TOL
    d = {n: _analytic_defects(ctx, n) for n in ("identity", "conjugation", "vertical-shift")}
    fails = [
        d["identity"]["holo"] > t, d["identity"]["foliated"] > t, d["identity"]["pluriharmonic"] > t,
        d["conjugation"]["antiholo"] > t, not d["conjugation"]["holo"] > 0.5,
        d["vertical-shift"]["foliated"] > t,
    ]
    return float(sum(fails)), 0.0, {"defects": d}


@check("lemma4.5.horizontally-constant", "maps.defects: holo = antiholo = 0 iff df_H = 0, over the corpus")
def _hconst(ctx):
    t = _ANALYTIC_TOL
    bad = []
    for name in mp.CORPUS:
        d = _analytic_defects(ctx, name)
        if (d["holo"] <= t and d["antiholo"] <= t) != (d["horizontally_constant"] <= t):
            bad.append(name)
    return float(len(bad)), 0.0, {"violations": bad}


@check("prop5.1.pluriharmonic-implication", "maps.defects: pluriharmonic implies foliated and tau_HH = 0, over the corpus")
def _pluri(ctx):
    t = _ANALYTIC_TOL
    bad, plur = [], []
    for name in mp.CORPUS:
        d = _analytic_defects(ctx, name)
        if d["pluriharmonic"] <= t:
            plur.append(name)
            if d["foliated"] > t or d["tau_HH"] > t:
                bad.append(name)
    return float(len(bad)), 0.0, {"pluriharmonic_maps": plur, "violations": bad}


@check("thm5.3.foliated-holomorphic", "maps.defects: foliated (anti)holomorphic maps are pluriharmonic, over the corpus")
def _foliated_holo(ctx):
    t = _ANALYTIC_TOL
    bad = []
    for name in mp.CORPUS:
        d = _analytic_defects(ctx, name)
        if d["foliated"] <= t and min(d["holo"], d["antiholo"]) <= t and d["pluriharmonic"] > t:
            bad.append(name)
    return float(len(bad)), 0.0, {"violations": bad}


def _fiber_family(g, shifts):
    return [fl.map_from_function(g, g.model, lambda p, s=s: p + np.array([0.0, 0.0, s]), np.eye(3)) for s in shifts]


@check("rem6.2.vertical-homotopy", "maps.homotopy_invariance_check, fiber rotations of the identity, n=24^3")
def _vert(ctx):
    rep = mp.homotopy_invariance_check(_fiber_family(ctx.nil_grid(24), (0.0, 0.25, 0.5, 0.75)), foliated=True)
    r = max(rep["max_K_drift"], rep["max_E_prime_drift"], rep["max_E_dprime_drift"])
    return r, 1e-3, rep


@check("thm6.6.foliated-homotopy", "maps.homotopy_invariance_check, h_s * p interpolating identity and a perturbation, n=24^3")
def _fol(ctx):
    g = ctx.nil_grid(24)
    fam = [fw.foliated_perturbation(g, s * 0.1, ctx.cfg.seed) for s in (0.0, 1 / 3, 2 / 3, 1.0)]
    rep = mp.homotopy_invariance_check(fam, foliated=True)
    return rep["max_K_drift"], 1e-3, rep


@check("thm6.7.minimality", "maps.energies: E_HH(identity) <= E_HH of 20 seeded foliated perturbations, n=16^3")
def _minimal(ctx):
    g = ctx.nil_grid(16)
    e_id = mp.energies(mp.analytic_map_field(g, "identity")).E_HH
    es = [mp.energies(fw.foliated_perturbation(g, 0.05, ctx.cfg.seed + 1 + i)).E_HH for i in range(20)]
    return max(0.0, e_id - min(es)), 1e-9, {"E_identity": e_id, "E_min_perturbed": min(es)}


@check("eq7.5.identity-fixed-point", "flow.step_intrinsic on the identity, n=16^3")
def _fixed(ctx):
    g = ctx.nil_grid(16)
    f = mp.analytic_map_field(g, "identity")
    f2 = fw.step_intrinsic(f, fw.default_dt(g))
    return float(np.max(np.abs(f2.values - f.values))), 1e-14, {}


def _mono(ctx, name):
    run = ctx.nil_flow()
    col = run.trace.column(name)
    E0 = run.trace.rows[0]["E_HH"]
    inc = float(max(0.0, np.max(np.diff(col)))) if col.size > 1 else 0.0
    return inc, 1e-9 * E0, {"initial": float(col[0]), "final": float(col[-1]), "steps": run.steps}


@check("lemma7.2.energy-monotone", "flow.run_flow nil->nil perturbed identity; E_HH step increases")
def _m1(ctx):
    return _mono(ctx, "E_HH")


@check("lemma7.6.elh-monotone", "flow.run_flow nil->nil perturbed identity; E_LH step increases")
def _m2(ctx):
    return _mono(ctx, "E_LH")


@check("lemma7.10.ell-monotone", "flow.run_flow nil->nil perturbed identity; E_LL step increases")
def _m3(ctx):
    return _mono(ctx, "E_LL")


@check("lemma7.2.energy-identity", "flow.energy_identity_residual on the nil->nil flow")
def _eident(ctx):
    return fw.energy_identity_residual(ctx.nil_flow().trace), 1e-2, {}


@check("eq7.5.tau-reduction", "flow.run_flow nil->nil: final sup|tau_H| / initial")
def _tau(ctx):
    tr = ctx.nil_flow().trace
    t0 = max(tr.rows[0]["tau_HH_sup"], tr.rows[0]["tau_HL_sup"])
    t1 = max(tr.rows[-1]["tau_HH_sup"], tr.rows[-1]["tau_HL_sup"])
    return t1 / t0, 0.1, {"initial": t0, "final": t1, "classification": ctx.nil_flow().classification}


@check("thm7.14.foliated-limit", "flow.run_flow nil->nil: foliated defect of the terminal map")
def _flim(ctx):
    return float(np.max(ctx.nil_flow().trace.column("foliated_defect"))), 1e-3, {}


@check("thm6.6.flow-k-drift", "flow.run_flow nil->nil: relative drift of K along the flow")
def _kdrift(ctx):
    K = ctx.nil_flow().trace.column("K")
    return float(np.max(np.abs(K - K[0])) / abs(K[0])), 1e-3, {}


@check("lemmaB3.rho-monotone", "flow.run_flow extrinsic sphere flow: step increases of int |rho|^2")
def _rho(ctx):
    col = ctx.sphere_flow().trace.column("rho_sq")
    return float(max(0.0, np.max(np.diff(col)))), 1e-9, {"initial": float(col[0]), "final": float(col[-1])}


@check("eqB13.identity-fixed-point", "flow.extrinsic_rhs on the embedded identity; tolerance h^2")
def _bfix(ctx):
    n = ctx.cfg.sphere_flow_resolution
    g = fl.Grid(ctx.model("round-sphere-3", scale=1.0), (n, n, n))
    tgt = fw.ExtrinsicTarget(2.0)
    rhs = fw.extrinsic_rhs(fw.embedded_identity(g, tgt.R), g, tgt)
    return float(np.max(np.abs(rhs))), g.h ** 2, {"h": g.h}


# -------------------------------------------------------------------- suite


def check_ids():
    return list(REGISTRY)


def run_suite(selection="all", config=None, progress=None):
    cfg = config or VerifyConfig()
    if selection == "all" or selection is None:
        ids = list(REGISTRY)
    else:
        ids = list(selection)
        unknown = [i for i in ids if i not in REGISTRY]
        if unknown:
            raise VerifyError(f"unknown check id(s): {', '.join(unknown)}")
    ctx = _Context(cfg)
    results = []
    for cid in ids:
        scenario, fn = REGISTRY[cid]
        t0 = time.perf_counter()
        residual, tol, detail = fn(ctx)
        dt = time.perf_counter() - t0
        residual, tol = float(residual), float(tol)
        if not (math.isfinite(residual) and math.isfinite(tol)):
            passed = False
        else:
            passed = residual <= tol
        res = CheckResult(cid, scenario, residual, tol, bool(passed), dt, _clean(detail))
        results.append(res)
        if progress:
            progress(res)
    return results


def report_json(results, timings=False):
    return json.dumps([r.to_dict(timings) for r in results], indent=2, sort_keys=True) + "\n"


def report_table(results):
    w = max([len(r.check_id) for r in results] + [8])
    lines = [f"{'check':<{w}}  {'residual':>11}  {'tolerance':>10}  {'time':>7}  status"]
    for r in results:
        lines.append(f"{r.check_id:<{w}}  {r.residual:11.3e}  {r.tolerance:10.2e}  {r.runtime:6.2f}s  "
                     f"{'pass' if r.passed else 'FAIL'}")
    ok = sum(r.passed for r in results)
    lines.append(f"{ok}/{len(results)} checks passed")
    return "\n".join(lines) + "\n"

"""Command-line entry point: ``phflow {verify,curvature,energy,flow}``.

Config files are flat INI text, one ``[section]`` per module and
``key = value`` lines.  Unknown sections or keys are errors that cite the
file, line and key.  Environment overrides:

  PHFLOW_OUT      output directory (default: current directory)
  PHFLOW_THREADS  BLAS/FFT thread count (default: available parallelism)

Exit codes: 0 success, 1 a check failed, 2 usage or config error.
"""

from __future__ import annotations

import argparse
import json
import os
import sys
import tempfile
from pathlib import Path

_THREAD_VARS = ("OMP_NUM_THREADS", "OPENBLAS_NUM_THREADS", "MKL_NUM_THREADS", "NUMEXPR_NUM_THREADS")


class ConfigError(ValueError):
    pass


# ------------------------------------------------------------------ schema


def _int(s):
    return int(s)


def _float(s):
    return float(s)


def _bool(s):
    v = s.strip().lower()
    if v in ("1", "true", "yes", "on"):
        return True
    if v in ("0", "false", "no", "off"):
        return False
    raise ValueError(f"expected a boolean, got {s!r}")


def _opt_float(s):
    return None if s.strip().lower() in ("", "auto", "none") else float(s)


def _resolution(s):
    parts = [int(p) for p in s.replace("x", ",").split(",") if p.strip()]
    if len(parts) == 1:
        parts *= 3
    if len(parts) != 3:
        raise ValueError("resolution needs one or three integers")
    return tuple(parts)


def _idlist(s):
    s = s.strip()
    if s == "all":
        return "all"
    return [p.strip() for p in s.split(",") if p.strip()]


SCHEMA = {
    "run": {"seed": _int, "threads": _int, "out": str},
    "flow": {
        "source": str, "target": str, "backend": str, "initial": str, "amplitude": _float,
        "resolution": _resolution, "dt": _opt_float, "steps": _int, "every": _int,
        "tau_threshold": _float, "monotonicity_slack": _float, "allow_unstable": _bool,
        "reproject": _bool, "scale": _float, "report": _bool,
    },
    "verify": {
        "select": _idlist, "points": _int, "h": _float, "timings": _bool,
        "nil_flow_resolution": _int, "nil_flow_steps": _int, "nil_flow_amplitude": _float,
        "sphere_flow_resolution": _int, "sphere_flow_steps": _int, "sphere_flow_amplitude": _float,
    },
    "curvature": {"model": str, "lambda": _float, "scale": _float, "points": _int, "h": _float},
    "energy": {"map": str, "resolution": _resolution, "points": _int},
}


def parse_config(path):
    """Parse a strict INI file into {section: {key: value}}."""
    p = Path(path)
    if not p.is_file():
        raise ConfigError(f"config file not found: {p}")
    out = {}
    section = None
    for lineno, raw in enumerate(p.read_text().splitlines(), 1):
        line = raw.strip()
        if not line or line[0] in "#;":
            continue
        where = f"{p}:{lineno}"
        if line.startswith("["):
            if not line.endswith("]"):
                raise ConfigError(f"{where}: malformed section header {line!r}")
            section = line[1:-1].strip()
            if section not in SCHEMA:
                raise ConfigError(f"{where}: unknown section [{section}]; expected one of {', '.join(SCHEMA)}")
            out.setdefault(section, {})
            continue
        if "=" not in line:
            raise ConfigError(f"{where}: expected 'key = value', got {line!r}")
        key, value = (s.strip() for s in line.split("=", 1))
        if section is None:
            raise ConfigError(f"{where}: key '{key}' appears before any [section]")
        if key not in SCHEMA[section]:
            raise ConfigError(f"{where}: unknown key '{key}' in [{section}]")
        if key in out[section]:
            raise ConfigError(f"{where}: duplicate key '{key}' in [{section}]")
        try:
            out[section][key] = SCHEMA[section][key](value)
        except ValueError as exc:
            raise ConfigError(f"{where}: bad value for '{key}': {exc}") from None
    return out


# ------------------------------------------------------------------ output


def atomic_write(path, data):
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    fd, tmp = tempfile.mkstemp(dir=path.parent, prefix=f".{path.name}.", suffix=".tmp")
    try:
        with os.fdopen(fd, "wb") as fh:
            fh.write(data.encode() if isinstance(data, str) else data)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


def _out_dir(args, cfg):
    d = args.out_dir or os.environ.get("PHFLOW_OUT") or cfg.get("run", {}).get("out") or "."
    return Path(d)


def _set_threads(n):
    if n is None:
        n = os.environ.get("PHFLOW_THREADS")
    if n is None:
        return
    n = int(n)
    if n < 1:
        raise ConfigError(f"thread count must be >= 1, got {n}")
    for var in _THREAD_VARS:
        os.environ[var] = str(n)


# ---------------------------------------------------------------- commands


def cmd_verify(args, cfg):
    from . import verify as vf

    sec = cfg.get("verify", {})
    seed = args.seed if args.seed is not None else cfg.get("run", {}).get("seed", 0)
    fields = {k: v for k, v in sec.items() if k not in ("select", "timings")}
    conf = vf.VerifyConfig(seed=seed, **fields)
    if args.all:
        selection = "all"
    elif args.check:
        selection = [c for item in args.check for c in item.split(",") if c]
    else:
        selection = sec.get("select", "all")
    if args.list:
        print("\n".join(vf.check_ids()))
        return 0
    try:
        results = vf.run_suite(selection, conf)
    except vf.VerifyError as exc:
        print(f"phflow verify: {exc}", file=sys.stderr)
        return 2
    sys.stdout.write(vf.report_table(results) if results else "no checks selected\n")
    timings = args.timings or sec.get("timings", False)
    out = Path(args.out) if args.out else _out_dir(args, cfg) / "verify_report.json"
    atomic_write(out, vf.report_json(results, timings))
    print(f"report written to {out}")
    return 0 if all(r.passed for r in results) else 1


def _model_from(kind, lam, scale):
    from . import geometry as geo

    aliases = {"nil": "heisenberg-nilmanifold", "sphere": "round-sphere-3", "space-form": "space-form-chart"}
    kind = aliases.get(kind, kind)
    params = {}
    if kind == "space-form-chart":
        params["lambda"] = lam if lam is not None else 0.0
    elif kind == "round-sphere-3":
        params["scale"] = scale if scale is not None else 1.0
    return geo.build_model(kind, params)


def cmd_curvature(args, cfg):
    import numpy as np

    from . import geometry as geo

    sec = cfg.get("curvature", {})
    kind = args.model or sec.get("model", "heisenberg-nilmanifold")
    lam = args.lam if args.lam is not None else sec.get("lambda")
    scale = args.scale if args.scale is not None else sec.get("scale")
    points = args.points or sec.get("points", 10)
    seed = args.seed if args.seed is not None else cfg.get("run", {}).get("seed", 0)
    model = _model_from(kind, lam, scale)
    tw = geo.check_tanaka_webster(model, points, sec.get("h", 1e-3), seed)
    rows = []
    for p in model.random_points(points, seed=seed):
        op = geo.curvature_at(model, p)
        rows.append({"point": [float(x) for x in p], "K_hol": float(op.RH[0, 1, 0, 1]),
                     "class": geo.negativity_class(model, p),
                     "Q11_eigenvalues": [float(e) for e in np.linalg.eigvalsh(0.5 * (op.Q11 + op.Q11.conj().T))]})
    report = {"model": model.kind, "params": model.param_dict, "tanaka_webster": tw, "samples": rows}
    text = json.dumps(report, indent=2, sort_keys=True) + "\n"
    out = _out_dir(args, cfg) / "curvature.json"
    atomic_write(out, text)
    classes = sorted({r["class"] for r in rows})
    print(f"{model.kind} {model.param_dict}: max TW residual {tw['max_residual']:.3e}, classes {classes}")
    print(f"report written to {out}")
    return 0


def cmd_energy(args, cfg):
    import numpy as np

    from . import fields as fl
    from . import maps as mp

    sec = cfg.get("energy", {})
    name = args.map or sec.get("map", "identity")
    res = args.resolution or sec.get("resolution", (16, 16, 16))
    seed = args.seed if args.seed is not None else cfg.get("run", {}).get("seed", 0)
    try:
        spec = mp.get_spec(name)
    except mp.MapError as exc:
        print(f"phflow energy: {exc}", file=sys.stderr)
        return 2
    pts = spec.source_model().random_points(sec.get("points", 20), seed=seed)
    jets = [mp.analytic_jet(spec, p, order=2) for p in pts]
    d1 = np.stack([j.d1 for j in jets])
    d2 = np.stack([j.d2 for j in jets])
    report = {"map": spec.name, "source": spec.source, "target": spec.target,
              "defects": mp.defects_from(d1, d2)}
    comm = mp.commutation_terms(d1, d2)
    report["commutation"] = {k: float(np.max(v)) for k, v in comm.items()}
    if spec.hom is not None or spec.source != mp.NIL:
        grid = fl.Grid(spec.source_model(), res)
        report["resolution"] = list(res)
        report["energies_exact_jets"] = mp.analytic_energies(spec, grid).to_dict()
        report["energies_grid"] = mp.energies(mp.analytic_map_field(grid, spec)).to_dict()
    text = json.dumps(report, indent=2, sort_keys=True) + "\n"
    out = _out_dir(args, cfg) / f"energy_{spec.name}.json"
    atomic_write(out, text)
    sys.stdout.write(text)
    return 0


def cmd_flow(args, cfg):
    from . import flow as fw

    sec = dict(cfg.get("flow", {}))
    report = args.report or sec.pop("report", False)
    seed = args.seed if args.seed is not None else cfg.get("run", {}).get("seed", 0)
    for key in ("steps",):
        if getattr(args, key) is not None:
            sec[key] = getattr(args, key)
    conf = fw.FlowConfig(seed=seed, **sec)
    try:
        conf.validate()
    except fw.FlowError as exc:
        raise ConfigError(str(exc)) from None
    try:
        result = fw.run_flow(conf, progress=_progress(args.quiet))
    except fw.FlowError as exc:
        print(f"phflow flow: {exc}", file=sys.stderr)
        return 1
    out = _out_dir(args, cfg)
    atomic_write(out / "trace.csv", result.trace.to_csv())
    atomic_write(out / "summary.json", result.summary_json())
    mono = fw.monotonicity_report(result.trace, conf.monotonicity_slack)
    slack = mono.pop("slack")
    bad = {k: v for k, v in mono.items() if v > slack}
    print(f"{result.classification} after {result.steps} steps; "
          f"E_HH {result.trace.rows[0]['E_HH']:.6g} -> {result.trace.rows[-1]['E_HH']:.6g}")
    print(f"trace and summary written to {out}")
    if report:
        from . import report as rp
        for path in rp.render_flow_report(result.trace, out):
            print(f"figure written to {path}")
    if bad:
        print(f"monotonicity violated: {bad}", file=sys.stderr)
        return 1
    return 0


def _progress(quiet):
    if quiet:
        return None

    def cb(row):
        if row["step"] % 100 == 0:
            print(f"  step {row['step']:6d}  E_HH={row['E_HH']:.9f}  tau_HH_sup={row['tau_HH_sup']:.3e}",
                  file=sys.stderr)
    return cb


# ------------------------------------------------------------------- main


def build_parser():
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", help="INI config file")
    common.add_argument("--out-dir", help="output directory (env PHFLOW_OUT)")
    common.add_argument("--seed", type=int)
    common.add_argument("--threads", type=int, help="thread count (env PHFLOW_THREADS)")

    p = argparse.ArgumentParser(prog="phflow", description="Pseudo-Hermitian harmonic map toolkit.")
    sub = p.add_subparsers(dest="command", required=True)

    v = sub.add_parser("verify", parents=[common], help="run the identity check suite")
    v.add_argument("--all", action="store_true", help="run every registered check")
    v.add_argument("--check", action="append", help="check id (repeatable or comma separated)")
    v.add_argument("--out", help="JSON report path")
    v.add_argument("--timings", action="store_true", help="include runtimes in the JSON report")
    v.add_argument("--list", action="store_true", help="list check ids and exit")

    c = sub.add_parser("curvature", parents=[common], help="curvature and negativity at sample points")
    c.add_argument("--model")
    c.add_argument("--lambda", dest="lam", type=float)
    c.add_argument("--scale", type=float)
    c.add_argument("--points", type=int)

    e = sub.add_parser("energy", parents=[common], help="energies and defects of a corpus map")
    e.add_argument("--map")
    e.add_argument("--resolution", type=_resolution)

    f = sub.add_parser("flow", parents=[common], help="run the subelliptic heat flow")
    f.add_argument("--steps", type=int)
    f.add_argument("--report", action="store_true", help="render PNG figures of the trace")
    f.add_argument("--quiet", action="store_true")
    return p


def main(argv=None):
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code or 0)
    try:
        cfg = parse_config(args.config) if args.config else {}
        _set_threads(args.threads if args.threads is not None else cfg.get("run", {}).get("threads"))
        handler = {"verify": cmd_verify, "curvature": cmd_curvature, "energy": cmd_energy, "flow": cmd_flow}
        return handler[args.command](args, cfg)
    except ConfigError as exc:
        print(f"phflow: {exc}", file=sys.stderr)
        return 2
    except (ValueError, TypeError) as exc:
        # model, grid and flow validation errors are configuration problems
        print(f"phflow {args.command}: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())

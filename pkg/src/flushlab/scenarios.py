"""Scenario configs and runners for the experiment harness.

A scenario is an INI file:

    [scenario]
    name = bl-decay-n1
    kind = bl-decay
    seed = 0

    [profile]
    n = 1

    [solver]
    t_end = 1e9

Every key is checked against SCHEMA before any computation starts and all
problems are reported together.  Outputs go to <root>/<name>/ where root is
--out, $FLUSHLAB_OUT or ./flushlab-out.  Each CSV starts with a comment line
carrying the scenario hash and seed; bodies contain no timings so reruns are
byte-identical.
"""

import configparser
import csv
import hashlib
import json
import os
import time
import traceback
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

KINDS = ("bl-decay", "w-scaling", "final-state", "remainder", "lp-suite", "fullrun")
MARKER = "PARTIAL_RUN"


class ConfigError(ValueError):
    def __init__(self, problems):
        super().__init__("\n".join(problems))
        self.problems = list(problems)


def _floats(text):
    return tuple(float(v) for v in text.replace(";", ",").split(",") if v.strip())


# section -> key -> (parser, default)
SCHEMA = {
    "scenario": {"name": (str, None), "kind": (str, None), "seed": (int, 0), "output": (str, "")},
    "profile": {"T": (float, 1.0), "L": (float, 1.0), "n": (int, 3)},
    "solver": {
        "epsilon": (float, 1e-2), "epsilons": (_floats, (1e-1, 3e-2, 1e-2)), "kappa": (float, 0.5),
        "Lambda": (float, 8.0), "nx": (int, 128), "ny": (int, 257), "dt": (float, 1e-3),
        "t_end": (float, 1e9), "nz": (int, 4001), "growth": (float, 2e-3), "dealias": (str, "2/3"),
    },
    "ansatz": {"delta": (float, 0.1), "rho": (float, 3.0), "band_limit": (float, 8.0)},
    "analysis": {"s": (int, 0), "m": (int, 0), "window_start": (float, 5.0), "samples": (int, 100),
                 "measured_CB": (float, 0.0)},
}


@dataclass
class Scenario:
    name: str
    kind: str
    seed: int
    params: dict
    source: str
    output: str = ""
    digest: str = field(init=False)

    def __post_init__(self):
        canon = json.dumps({"kind": self.kind, "seed": self.seed, "params": self.params}, sort_keys=True)
        self.digest = hashlib.sha256(canon.encode()).hexdigest()[:16]

    def out_dir(self, root=None):
        root = root or self.output or os.environ.get("FLUSHLAB_OUT") or "flushlab-out"
        return Path(root) / self.name


def parse_config(text, source="<string>"):
    """Parse and validate; raise ConfigError listing every problem."""
    cp = configparser.ConfigParser()
    cp.optionxform = str
    problems = []
    try:
        cp.read_string(text, source=source)
    except configparser.Error as exc:
        raise ConfigError([f"unparsable config: {exc}"])
    if not cp.sections():
        raise ConfigError(["config is empty"])
    params = {}
    for sec in cp.sections():
        if sec not in SCHEMA:
            problems.append(f"unknown section [{sec}]")
            continue
        for key in cp[sec]:
            if key not in SCHEMA[sec]:
                problems.append(f"unknown key {sec}.{key}")
    for sec, keys in SCHEMA.items():
        for key, (conv, default) in keys.items():
            raw = cp.get(sec, key, fallback=None) if cp.has_section(sec) else None
            if raw is None:
                if default is None:
                    problems.append(f"missing required key {sec}.{key}")
                params[f"{sec}.{key}"] = default
                continue
            try:
                params[f"{sec}.{key}"] = conv(raw)
            except ValueError:
                problems.append(f"{sec}.{key}: cannot parse {raw!r} as {getattr(conv, '__name__', 'value')}")
    kind = params.get("scenario.kind")
    if kind is not None and kind not in KINDS:
        problems.append(f"scenario.kind must be one of {', '.join(KINDS)}, got {kind!r}")
    problems.extend(_check_ranges(params))
    if problems:
        raise ConfigError(problems)
    name = params.pop("scenario.name")
    kind = params.pop("scenario.kind")
    seed = params.pop("scenario.seed")
    output = params.pop("scenario.output")
    params = {k: list(v) if isinstance(v, tuple) else v for k, v in params.items()}
    return Scenario(name, kind, seed, params, source, output)


def _check_ranges(p):
    """Module preconditions, checked before any compute."""
    from .band_field import ResolutionError, check_wall_resolution

    out = []

    def need(cond, msg):
        if not cond:
            out.append(msg)

    def num(key):
        v = p.get(key)
        return v if isinstance(v, (int, float)) else None

    for key in ("profile.T", "profile.L", "solver.dt", "solver.t_end", "solver.Lambda"):
        v = num(key)
        need(v is None or v > 0, f"{key} must be positive")
    v = num("profile.n")
    need(v is None or 0 <= v <= 8, "profile.n must lie in [0, 8]")
    eps = [p.get("solver.epsilon")] + list(p.get("solver.epsilons") or [])
    need(all(isinstance(e, float) and 0 < e < 1 for e in eps), "epsilons must lie in (0, 1)")
    v = num("solver.kappa")
    need(v is None or 0 < v < 1, "solver.kappa must lie in (0, 1)")
    v = num("ansatz.delta")
    need(v is None or 0 < v < 0.5, "ansatz.delta must lie in (0, 1/2)")
    nx = num("solver.nx")
    need(nx is None or (nx >= 8 and nx & (nx - 1) == 0), "solver.nx must be a power of two >= 8")
    ny = num("solver.ny")
    need(ny is None or ny >= 65, "solver.ny must be at least 65")
    if isinstance(ny, int) and all(isinstance(e, float) and 0 < e < 1 for e in eps):
        for e in eps:
            try:
                check_wall_resolution(ny, e)
            except ResolutionError as exc:
                out.append(str(exc))
    need(p.get("solver.dealias") in (None, "2/3", "none"), "solver.dealias must be '2/3' or 'none'")
    return out


def load_config(path):
    path = Path(path)
    if not path.exists():
        raise ConfigError([f"config file {path} does not exist"])
    return parse_config(path.read_text(), str(path))


# --------------------------------------------------------------------------
# output helpers
# --------------------------------------------------------------------------


def _fmt(v):
    if isinstance(v, (float, np.floating)):
        return repr(float(v))
    return str(v)


def write_csv(path, scenario, header, rows):
    path = Path(path)
    with path.open("w", newline="") as fh:
        fh.write(f"# scenario={scenario.name} hash={scenario.digest} seed={scenario.seed}\n")
        w = csv.writer(fh)
        w.writerow(header)
        for r in rows:
            w.writerow([_fmt(v) for v in r])
    return path


def read_csv(path):
    """Header and float rows of a harness CSV (comment lines skipped)."""
    with open(path, newline="") as fh:
        lines = [ln for ln in fh if not ln.startswith("#")]
    rd = csv.reader(lines)
    header = next(rd)
    rows = [[float(v) for v in r] for r in rd if r]
    return header, np.array(rows)


# --------------------------------------------------------------------------
# runners: each returns (summary dict, passed flag, list of (csv, plot spec))
# --------------------------------------------------------------------------


def _profile(sc):
    from .flush_profile import build_flush_profile

    p = sc.params
    return build_flush_profile(p["profile.T"], p["profile.L"], p["profile.n"])


def _data(sc):
    from .band_field import make_analytic_data

    p = sc.params
    return make_analytic_data(seed=sc.seed, Lambda=p["solver.Lambda"], nx=p["solver.nx"], ny=p["solver.ny"],
                              rho_target=p["ansatz.rho"], N=p["ansatz.band_limit"])


def run_bl_decay(sc, out):
    from .boundary_layer import decay_exponent_target, solve_boundary_layer, verify_decay_rate, weighted_sobolev_norm

    p = sc.params
    prof = _profile(sc)
    ts = np.geomspace(p["analysis.window_start"] * prof.T, p["solver.t_end"], 120)
    bl = solve_boundary_layer(prof, 40.0, p["solver.nz"], p["solver.dt"], p["solver.t_end"], snapshot_times=ts,
                              regrid=True, growth=p["solver.growth"])
    s, m = p["analysis.s"], p["analysis.m"]
    fit = verify_decay_rate(bl, s, m, n=max(prof.n, 1), window_start=p["analysis.window_start"])
    norms = [weighted_sobolev_norm(bl.values[i], bl.z_max[i] / (bl.nz - 1), s, m) for i in range(len(bl.times))]
    csvp = write_csv(out / "decay.csv", sc, ["t", "norm"], zip(bl.times, norms))
    target = decay_exponent_target(prof.n, m)
    summary = {"exponent": fit.exponent, "width": fit.width, "target": target, "threshold": fit.threshold,
               "regrids": bl.regrids}
    return summary, bool(fit.passed), [(csvp, {"kind": "loglog", "x": "t", "y": ["norm"],
                                              "title": f"layer norm, n={prof.n}"})]


def run_w_scaling(sc, out):
    from .criteria import corrector_sup
    from .fitting import fit_power_law

    p = sc.params
    prof = _profile(sc)
    eps = p["solver.epsilons"]
    sups = [corrector_sup(prof, e, p["solver.ny"], p["solver.dt"], p["solver.growth"], p["solver.kappa"])[0]
            for e in eps]
    csvp = write_csv(out / "w_scaling.csv", sc, ["epsilon", "sup_W"], zip(eps, sups))
    fit = fit_power_law(eps, sups, "pure-power", min_points=min(len(eps), 3))
    summary = {"exponent": fit.exponent, "width": fit.width, "sup": sups}
    ok = -0.85 <= fit.exponent <= -0.4
    return summary, ok, [(csvp, {"kind": "loglog", "x": "epsilon", "y": ["sup_W"], "title": "corrector sup norm"})]


def run_final_state(sc, out):
    from .ansatz import build_bundle, final_state_estimate

    p = sc.params
    prof = _profile(sc)
    ub = _data(sc)
    reps = [final_state_estimate(build_bundle(prof, ub, e, p["solver.kappa"], p["ansatz.delta"]))
            for e in p["solver.epsilons"]]
    header = ["epsilon", "total", "layer", "transport", "corrector", "layer_bound", "tail", "minus_tail", "comparison"]
    rows = [(r.epsilon, r.total, r.layer, r.transport, r.corrector, r.layer_bound, r.tail, r.minus_tail, r.comparison)
            for r in reps]
    csvp = write_csv(out / "final_state.csv", sc, header, rows)
    q = [r.minus_tail for r in reps]
    ok = all(b < a for a, b in zip(q, q[1:]))
    summary = {"minus_tail": q, "complete": all(r.complete for r in reps)}
    return summary, ok, [(csvp, {"kind": "loglog", "x": "epsilon", "y": ["layer", "corrector", "layer_bound"],
                                 "title": "final-state contributions"})]


def _remainder(sc, eps):
    from .ansatz import AnsatzBundle
    from .ns_solver import SolverConfig, solve_remainder

    p = sc.params
    b = AnsatzBundle(_profile(sc), _data(sc), eps, p["solver.kappa"], p["ansatz.delta"])
    cfg = SolverConfig(eps, p["solver.Lambda"], p["solver.nx"], p["solver.ny"], kappa=p["solver.kappa"],
                       T=p["profile.T"], dealias=p["solver.dealias"])
    return b, solve_remainder(b, cfg, seed=sc.seed)


def run_remainder(sc, out):
    from .fitting import fit_power_law

    eps = sc.params["solver.epsilons"]
    sups, arts, failures = [], [], []
    for e in eps:
        _, tr = _remainder(sc, e)
        sups.append(tr.sup_l2)
        if not tr.complete:
            failures.append(tr.failure)
        csvp = write_csv(out / f"remainder_eps{e:g}.csv", sc, ["t", "l2", "grad_acc"], tr.history_rows()[::10])
        arts.append((csvp, {"kind": "lines", "x": "t", "y": ["l2"], "title": f"remainder norm, eps={e:g}"}))
    csvp = write_csv(out / "remainder_sup.csv", sc, ["epsilon", "sup_l2"], zip(eps, sups))
    arts.append((csvp, {"kind": "loglog", "x": "epsilon", "y": ["sup_l2"], "title": "sup of remainder norm"}))
    fit = fit_power_law(eps, sups, "pure-power", min_points=min(len(eps), 3))
    ok = not failures and fit.exponent >= 0.2 and all(b < a for a, b in zip(sups, sups[1:]))
    return {"sup": sups, "exponent": fit.exponent, "failures": failures}, ok, arts


def run_lp_suite(sc, out):
    from .littlewood_paley import dyadic_partition, inequality_reports

    reps = inequality_reports(sc.params["analysis.samples"], sc.seed)
    csvp = write_csv(out / "inequalities.csv", sc, ["inequality", "worst_ratio", "bound", "samples", "passed"],
                     [(r.name, r.worst_ratio, r.bound, r.n_samples, int(r.passed)) for r in reps])
    res = dyadic_partition(sc.params["solver.Lambda"], sc.params["solver.nx"]).residual()
    ok = all(r.passed for r in reps) and res < 1e-10
    return {"worst": {r.name: r.worst_ratio for r in reps}, "partition_residual": res}, ok, \
        [(csvp, {"kind": "bars", "x": "inequality", "y": ["worst_ratio"], "title": "worst constant ratios"})]


def run_fullrun(sc, out):
    from .ansatz import final_state_estimate
    from .criteria import radius_report
    from .littlewood_paley import RadiusConstants, measured_bernstein_constant

    eps = sc.params["solver.epsilon"]
    b, tr = _remainder(sc, eps)
    csvp = write_csv(out / "remainder.csv", sc, ["t", "l2", "grad_acc"], tr.history_rows()[::10])
    arts = [(csvp, {"kind": "lines", "x": "t", "y": ["l2"], "title": f"remainder norm, eps={eps:g}"})]
    cb = sc.params["analysis.measured_CB"] or measured_bernstein_constant(100, sc.seed)
    summary = {"sup_l2": tr.sup_l2, "complete": tr.complete, "failure": tr.failure}
    for const in (RadiusConstants.measured(cb), RadiusConstants.proof()):
        rows, s = radius_report(tr, b, const)
        summary[f"radius_{const.name}"] = s
        csvp = write_csv(out / f"radius_{const.name}.csv", sc, ["t", "rho", "log_beta", "log_drain"], rows)
        arts.append((csvp, {"kind": "lines", "x": "t", "y": ["rho"], "title": f"radius ({const.name} constants)"}))
    from dataclasses import replace

    from .ansatz import assemble_uapp, build_bundle
    from .band_field import l2_norm

    bb = build_bundle(b.profile, b.ub, eps, b.kappa, b.delta)
    fs = final_state_estimate(bb)
    # controlled state at the horizon in original scaling: (u_app + eps r) / eps on [0, L]
    uapp = assemble_uapp(bb, bb.horizon)
    uc = l2_norm(replace(uapp, coeffs=uapp.coeffs / eps + tr.final), (0.0, bb.L))
    sigma = 2.0 * fs.total
    summary["final_state"] = {"total": fs.total, "tail": fs.tail, "remainder_final": tr.l2[-1],
                              "controlled": uc, "sigma": sigma, "bound_holds": bool(uc <= sigma + fs.tail)}
    ok = tr.complete and summary["final_state"]["bound_holds"] and not summary["radius_measured"]["collapsed"]
    return summary, ok, arts


RUNNERS = {"bl-decay": run_bl_decay, "w-scaling": run_w_scaling, "final-state": run_final_state,
           "remainder": run_remainder, "lp-suite": run_lp_suite, "fullrun": run_fullrun}


def run_scenario(sc, root=None, plots=True):
    """Run one scenario; returns (passed, summary).  Leaves MARKER on failure."""
    out = sc.out_dir(root)
    out.mkdir(parents=True, exist_ok=True)
    marker = out / MARKER
    marker.write_text(f"started scenario {sc.name} hash={sc.digest}\n")
    t0 = time.perf_counter()
    try:
        summary, ok, arts = RUNNERS[sc.kind](sc, out)
    except Exception:
        with marker.open("a") as fh:
            fh.write(traceback.format_exc())
        raise
    if plots:
        from .plotting import render_csv

        for path, spec in arts:
            render_csv(path, spec)
    record = {"scenario": sc.name, "kind": sc.kind, "hash": sc.digest, "seed": sc.seed, "passed": bool(ok),
              "runtime_seconds": time.perf_counter() - t0, "summary": _jsonable(summary),
              "artifacts": [str(Path(p).name) for p, _ in arts]}
    (out / "summary.json").write_text(json.dumps(record, indent=2, sort_keys=True))
    marker.unlink()
    return bool(ok), record


def _jsonable(v):
    from .criteria import _plain

    return _plain(v)

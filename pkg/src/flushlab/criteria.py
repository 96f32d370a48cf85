"""The ten acceptance criteria as callable checks.

Each check returns a CriterionResult with the measured numbers, the
threshold it was held to and its wall time.  The CLI suite and the test
module both call these functions.
"""

import time
from dataclasses import asdict, dataclass, field

import numpy as np

from .ansatz import AnsatzBundle, build_bundle, final_state_estimate, momentum_residual, phantom_force_check
from .band_field import make_analytic_data
from .boundary_layer import fourier_moment_check, solve_boundary_layer, verify_decay_rate
from .fitting import fit_power_law
from .flush_profile import build_flush_profile, eval_h
from .littlewood_paley import (RadiusConstants, dyadic_partition, inequality_reports, measured_bernstein_constant,
                               radius_history)
from .ns_solver import SolverConfig, solve_remainder
from .technical_profile import solve_technical_profile

EPS_LADDER = (1e-1, 3e-2, 1e-2)
W_LADDER = (1e-2, 3e-3, 1e-3, 3e-4)


@dataclass
class CriterionResult:
    number: int
    name: str
    passed: bool
    detail: str
    budget: float
    runtime: float = 0.0
    measured: dict = field(default_factory=dict)

    def line(self):
        tag = "PASS" if self.passed else "FAIL"
        return f"[{tag}] {self.number:2d} {self.name}: {self.detail} ({self.runtime:.1f}s, budget {self.budget:g}s)"

    def record(self):
        out = asdict(self)
        out["measured"] = {k: _plain(v) for k, v in self.measured.items()}
        return out


def _plain(v):
    if isinstance(v, (np.floating, np.integer, np.bool_)):
        return v.item()
    if isinstance(v, np.ndarray):
        return v.tolist()
    if isinstance(v, (list, tuple)):
        return [_plain(x) for x in v]
    if isinstance(v, dict):
        return {k: _plain(x) for k, x in v.items()}
    return v


def _timed(fn):
    def run(*args, **kwargs):
        t0 = time.perf_counter()
        res = fn(*args, **kwargs)
        res.runtime = time.perf_counter() - t0
        return res
    run.__name__ = fn.__name__
    run.__doc__ = fn.__doc__
    return run


# --------------------------------------------------------------------------
# 1. moments of the flushing profile
# --------------------------------------------------------------------------


_GL64 = np.polynomial.legendre.leggauss(64)


def _quad_moment(profile, k, lo, hi, panels=8):
    """int_lo^hi t^k h(t) dt by composite 64-node Gauss-Legendre over each bump."""
    x, w = _GL64
    total = 0.0
    for c, r in zip(profile.centers, profile.widths):
        a, b = max(c - r, lo), min(c + r, hi)
        if b <= a:
            continue
        edges = np.linspace(a, b, panels + 1)
        mid = 0.5 * (edges[1:] + edges[:-1])[:, None]
        half = 0.5 * (edges[1:] - edges[:-1])[:, None]
        t = mid + half * x
        total += float(np.sum(half * w * t**k * eval_h(profile, t)))
    return total


@_timed
def criterion_moments(ns=(0, 1, 2, 3, 4), T=1.0, L=1.0):
    worst_m, worst_f = 0.0, 0.0
    for n in ns:
        p = build_flush_profile(T, L, n)
        for k in range(n):
            worst_m = max(worst_m, abs(_quad_moment(p, k, 0.0, T)))
        worst_f = max(worst_f, abs(_quad_moment(p, 0, 0.0, T / 3.0) - 2.0 * L))
    ok = worst_m < 1e-9 and worst_f <= 1e-10
    return CriterionResult(1, "profile moments", ok,
                           f"max |moment| {worst_m:.2e} (< 1e-9), max flux error {worst_f:.2e} (<= 1e-10)", 1.0,
                           measured={"max_moment": worst_m, "max_flux_error": worst_f})


# --------------------------------------------------------------------------
# 2. boundary-layer decay
# --------------------------------------------------------------------------


def layer_decay_fit(profile, t_end=1e9, nz=4001, dt=1e-3, growth=2e-3, n_snap=120, window_start=5.0):
    ts = np.geomspace(window_start * profile.T, t_end, n_snap)
    bl = solve_boundary_layer(profile, 40.0, nz, dt, t_end, snapshot_times=ts, regrid=True, growth=growth)
    return bl, verify_decay_rate(bl, 0, 0, n=max(profile.n, 1), window_start=window_start)


@_timed
def criterion_layer_decay(t_end=1e9):
    n = 1
    target = 0.25 + 1.5
    lo, hi = 0.9 * target, 1.15 * target
    p = build_flush_profile(1.0, 1.0, n)
    _, fit = layer_decay_fit(p, t_end)
    # same bumps with the moment constraint dropped
    ctrl = build_flush_profile(1.0, 1.0, 0, n_bumps=n + 2)
    _, cfit = layer_decay_fit(ctrl, t_end)
    drop = fit.exponent - cfit.exponent
    ok = lo <= fit.exponent <= hi and drop >= 0.5
    return CriterionResult(2, "boundary-layer decay", ok,
                           f"exponent {fit.exponent:.3f} in [{lo:.3f}, {hi:.3f}], control {cfit.exponent:.3f} "
                           f"(drop {drop:.3f} >= 0.5)", 120.0,
                           measured={"exponent": fit.exponent, "width": fit.width, "control": cfit.exponent,
                                     "drop": drop, "t_end": t_end})


# --------------------------------------------------------------------------
# 3. Fourier moment criterion
# --------------------------------------------------------------------------


@_timed
def criterion_fourier_moments(ns=(1, 2, 3)):
    vals = {n: fourier_moment_check(build_flush_profile(1.0, 1.0, n)) for n in ns}
    worst = max(vals.values())
    return CriterionResult(3, "Fourier moments", worst < 1e-8, f"max derivative at 0 {worst:.2e} (< 1e-8)", 10.0,
                           measured={f"n{n}": v for n, v in vals.items()})


# --------------------------------------------------------------------------
# 4. corrector scaling
# --------------------------------------------------------------------------


def resolved_ny(eps, ny=257):
    """Smallest 2^k + 1 >= ny that resolves the wall layer at eps."""
    need = int(np.ceil(8.0 / np.sqrt(eps))) + 1
    while ny < need:
        ny = 2 * ny - 1
    return ny


def corrector_sup(profile, eps, ny=257, dt=1e-3, growth=2e-3, kappa=0.5):
    tp = solve_technical_profile(profile, eps, resolved_ny(eps, ny), dt, profile.T / eps**kappa, growth=growth)
    return tp.sup_bound(), tp


@_timed
def criterion_corrector_scaling(epsilons=W_LADDER):
    p = build_flush_profile(1.0, 1.0, 3)
    sups = [corrector_sup(p, e)[0] for e in epsilons]
    fit = fit_power_law(epsilons, sups, "pure-power", min_points=len(epsilons))
    ok = -0.85 <= fit.exponent <= -0.4
    return CriterionResult(4, "corrector scaling", ok,
                           f"fitted exponent {fit.exponent:.3f} (target -0.75, accepted [-0.85, -0.4]); "
                           f"sup values {', '.join(f'{s:.3g}' for s in sups)}", 300.0,
                           measured={"epsilons": list(epsilons), "sup": sups, "exponent": fit.exponent})


# --------------------------------------------------------------------------
# 5. Littlewood-Paley inequalities
# --------------------------------------------------------------------------


@_timed
def criterion_inequalities(n_samples=100, seed=0):
    reports = inequality_reports(n_samples, seed)
    part = dyadic_partition(8.0, 128)
    res = part.residual()
    ok = all(r.passed for r in reports) and res < 1e-10
    worst = {r.name: r.worst_ratio for r in reports}
    txt = ", ".join(f"{k} {v:.3g}" for k, v in worst.items())
    return CriterionResult(5, "Littlewood-Paley inequalities", ok, f"{txt}; partition residual {res:.1e}", 60.0,
                           measured={"worst": worst, "partition_residual": res,
                                     "passed": {r.name: r.passed for r in reports}})


# --------------------------------------------------------------------------
# 6. defining identity of the approximate trajectory
# --------------------------------------------------------------------------


def default_data(seed=0, nx=128, ny=257):
    return make_analytic_data(seed=seed, nx=nx, ny=ny)


@_timed
def criterion_identity(eps=1e-2, times=(0.2, 0.5, 0.8), tau=2.5e-4, seed=0):
    p = build_flush_profile(1.0, 1.0, 3)
    b = build_bundle(p, default_data(seed), eps, t_end=max(times) + 5 * tau, dt=tau, growth=1.0, layer="exact")
    reps = [momentum_residual(b, t, tau) for t in times]
    ok = all(r.passed for r in reps)
    txt = "; ".join(f"t={r.t:g}: {r.residual:.2e} <= 10 x {r.time_error:.2e} (W defect {r.corrector_defect:.1e}, "
                    f"eps f_app {r.scale:.2e})" for r in reps)
    return CriterionResult(6, "ansatz identity", ok, txt, 300.0,
                           measured={"t": [r.t for r in reps], "residual": [r.residual for r in reps],
                                     "time_error": [r.time_error for r in reps],
                                     "corrector_defect": [r.corrector_defect for r in reps], "scale": [r.scale for r in reps]})


# --------------------------------------------------------------------------
# 7. final-state smallness
# --------------------------------------------------------------------------


@_timed
def criterion_final_state(epsilons=EPS_LADDER, seed=0):
    p = build_flush_profile(1.0, 1.0, 3)
    ub = default_data(seed)
    reps = [final_state_estimate(build_bundle(p, ub, e)) for e in epsilons]
    q = [r.minus_tail for r in reps]
    ok = all(b < a for a, b in zip(q, q[1:]))
    txt = ", ".join(f"eps={r.epsilon:g}: {r.minus_tail:.6f}" for r in reps)
    return CriterionResult(7, "final-state smallness", ok, f"total minus tail {txt} (must decrease)", 900.0,
                           measured={"epsilons": list(epsilons), "minus_tail": q,
                                     "total": [r.total for r in reps], "layer": [r.layer for r in reps],
                                     "corrector": [r.corrector for r in reps],
                                     "transport": [r.transport for r in reps], "tail": reps[0].tail})


# --------------------------------------------------------------------------
# 8. remainder trend
# --------------------------------------------------------------------------

_REMAINDER_CACHE = {}


def remainder_run(eps, seed=0, nx=128, ny=257):
    """Remainder trajectory on [0, T/eps^kappa] (memoised per process)."""
    key = (eps, seed, nx, ny)
    if key not in _REMAINDER_CACHE:
        p = build_flush_profile(1.0, 1.0, 3)
        b = AnsatzBundle(p, default_data(seed, nx, ny), eps)
        _REMAINDER_CACHE[key] = (b, solve_remainder(b, SolverConfig(eps, nx=nx, ny=ny), seed=seed))
    return _REMAINDER_CACHE[key]


@_timed
def criterion_remainder(epsilons=EPS_LADDER, seed=0):
    runs = [remainder_run(e, seed)[1] for e in epsilons]
    sups = [r.sup_l2 for r in runs]
    fit = fit_power_law(epsilons, sups, "pure-power", min_points=len(epsilons))
    mono = all(b < a for a, b in zip(sups, sups[1:]))
    gaps = [max(d[1] for d in r.dual) for r in runs]
    disc = [max(d[3] for d in r.dual) for r in runs]
    dual_ok = all(g <= 10.0 * d for g, d in zip(gaps, disc))
    complete = all(r.complete for r in runs)
    ok = complete and mono and fit.exponent >= 0.2 and dual_ok
    txt = (f"sup|r| {', '.join(f'{s:.3f}' for s in sups)}, exponent {fit.exponent:.3f} (>= 0.2); "
           f"dual gap {max(gaps):.2e} vs 10 x discretization {10 * max(disc):.2e}")
    return CriterionResult(8, "remainder trend", ok, txt, 1800.0,
                           measured={"epsilons": list(epsilons), "sup": sups, "exponent": fit.exponent,
                                     "dual_gap": gaps, "discretization": disc, "complete": complete})


# --------------------------------------------------------------------------
# 9. phantom force
# --------------------------------------------------------------------------


@_timed
def criterion_phantom(eps=1e-2, delta=0.1, seed=0):
    p = build_flush_profile(1.0, 1.0, 3)
    b = AnsatzBundle(p, default_data(seed), eps, delta=delta)
    reps = phantom_force_check(b)
    ok = all(r.passed for r in reps)
    txt = "; ".join(f"k={r.k}: {r.measured:.3g} <= {r.constant:.3g} x {r.data_norm:.3g}" for r in reps)
    return CriterionResult(9, "phantom-force bound", ok, txt + f"; support ok {reps[0].support_ok}", 60.0,
                           measured={"k": [r.k for r in reps], "measured": [r.measured for r in reps],
                                     "constant": [r.constant for r in reps], "data": [r.data_norm for r in reps]})


# --------------------------------------------------------------------------
# 10. analyticity radius
# --------------------------------------------------------------------------


def radius_report(traj, bundle, const):
    base = bundle.field
    return radius_history(traj.rad_times, traj.zdz, traj.sup_w, traj.grad_u1_energy, traj.grad_r_energy,
                          base.Lambda, base.nx, bundle.epsilon, bundle.kappa, const,
                          zdz_integral=traj.zdz_integral)


@_timed
def criterion_radius(eps=1e-2, seed=0, measured_CB=None):
    b, traj = remainder_run(eps, seed)
    t0 = time.perf_counter()
    if measured_CB is None:
        measured_CB = measured_bernstein_constant(100, seed)
    _, meas = radius_report(traj, b, RadiusConstants.measured(measured_CB))
    _, proof = radius_report(traj, b, RadiusConstants.proof())
    post = time.perf_counter() - t0
    ok_meas = (not meas["collapsed"]) and meas["rho_final"] >= 1.0
    # the ODE is an exact ledger: rho = rho0 - layer loss - drain wherever it is defined
    if proof["collapsed"]:
        ledger = True
    else:
        ledger = proof["rho_final"] >= proof["rho0"] - proof["layer_loss"] - proof["drain"] - 1e-9 * proof["rho0"]
    ok = ok_meas and ledger

    def desc(s):
        if s["collapsed"]:
            return (f"{s['variant']}: rho0 {s['rho0']:.3g}, collapsed at t={s['collapse_time']:.3g} "
                    f"(log10 beta* {s['log10_beta_star']:.3g})")
        return f"{s['variant']}: rho0 {s['rho0']:.3g} -> rho(T/eps^k) {s['rho_final']:.3g}"

    return CriterionResult(10, "analyticity radius", ok, f"{desc(meas)}; {desc(proof)}; post-processing {post:.1f}s",
                           120.0, measured={"measured": meas, "proof": proof, "postprocess_seconds": post})


ALL = (criterion_moments, criterion_layer_decay, criterion_fourier_moments, criterion_corrector_scaling,
       criterion_inequalities, criterion_identity, criterion_final_state, criterion_remainder, criterion_phantom,
       criterion_radius)

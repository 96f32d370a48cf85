"""Approximate trajectory of the flushing strategy and its forcing terms.

In rescaled variables the approximate velocity is

    u_app = h(t) e_x - chi(y) [V] e_x + eps u1 + eps^2 W e_x,

where [.] evaluates a fast-variable profile at z = phi(y)/sqrt(eps), u1
transports the initial data u_b along the base flow (switched off by the
time cutoff beta inside |y| <= 1 - 2 delta), and W is the technical
corrector.  The x-independent part is carried by the x-mean mode.

Layer traces come either from the exact heat-kernel evaluator (``exact``)
or from a Crank-Nicolson layer stepped alongside W (``stepped``).
"""

import warnings
from dataclasses import dataclass, field, replace
from math import comb

import numpy as np
from scipy.interpolate import CubicSpline

from .band_field import (_apply_y, _ik, check_wall_resolution, dx, hk_norm, l2_norm,
                         perp_grad, y_derivative)
from .boundary_layer import layer_exact
from .cutoffs import interior_cutoff, time_cutoff, wall_cutoff, wall_distance
from .flush_profile import displacement_table, eval_h
from .ns_solver import advection
from .technical_profile import CorrectorStepper, forcing_from_layer, second_difference


class ConstructionError(ValueError):
    """A cutoff derivative is nonzero where the distance function vanishes."""


class IncompleteHorizon(RuntimeError):
    pass


# --------------------------------------------------------------------------
# base flow
# --------------------------------------------------------------------------


def eval_u0_p0(profile, t):
    """u0 = h(t) e_x and the pressure gradient grad p0 = -h'(t) e_x."""
    h = float(eval_h(profile, t))
    hd = float(eval_h(profile, t, 1))
    return np.array([h, 0.0]), np.array([-hd, 0.0])


def euler_residual(profile, t):
    """dt u0 + (u0 . grad) u0 + grad p0 (the advection term vanishes identically)."""
    u0dot = float(eval_h(profile, t, 1))
    _, gp = eval_u0_p0(profile, t)
    return np.array([u0dot, 0.0]) + gp


# --------------------------------------------------------------------------
# technical corrector history
# --------------------------------------------------------------------------


class CorrectorTrack:
    """W^eps on the band's y grid, stored at every step of a co-stepped solve.

    The step is ``dt`` until the datum has switched off, then grows by the
    factor ``growth`` per step up to ``dt_max``.  Values between stored
    times come from a cubic spline in t.  With layer="exact" the forcing is
    built from the closed-form layer instead of the co-stepped CN layer.
    """

    def __init__(self, profile, epsilon, ny, t_end, dt=1e-3, dt_max=None, growth=1.0, landing=(),
                 layer="stepped"):
        if layer not in ("stepped", "exact"):
            raise ValueError(f"unknown layer mode {layer!r}")
        self.layer = layer
        forcing = None
        if layer == "exact":
            y = np.linspace(-1.0, 1.0, ny)
            zq = wall_distance(y)[0] / np.sqrt(epsilon)
            act = wall_cutoff(y)[0] != 0.0
            act |= wall_cutoff(y)[1] != 0.0

            def exact_traces(t):
                V, dV = np.zeros(ny), np.zeros(ny)
                V[act] = layer_exact(profile, t, zq[act], 0)
                dV[act] = layer_exact(profile, t, zq[act], 1)
                return V, dV

            self._exact = exact_traces

            def forcing(t, yy):
                return forcing_from_layer(*exact_traces(t), yy, epsilon)

        self.stepper = CorrectorStepper(profile, epsilon, ny, forcing=forcing)
        self.times = [0.0]
        self.W = [self.stepper.W.copy()]
        self.traces = [self._layer_traces()]
        dt_max = dt if dt_max is None else dt_max
        marks = sorted(t for t in landing if 0.0 < t < t_end) + [t_end]
        step = dt
        st = self.stepper
        for mark in marks:
            while st.t < mark - 1e-12:
                if st.t >= profile.T and growth > 1.0:
                    step = min(step * growth, dt_max)
                st.step(min(step, mark - st.t))
                self.times.append(st.t)
                self.W.append(st.W.copy())
                self.traces.append(self._layer_traces())
        self.times = np.array(self.times)
        self.W = np.array(self.W)
        self._spline = None

    def _layer_traces(self):
        # exact traces are recomputed on demand in layer_at
        return None if self.layer == "exact" else self.stepper.layer_traces()

    def _index(self, t):
        i = int(np.argmin(np.abs(self.times - t)))
        return i if abs(self.times[i] - t) <= 1e-10 * max(1.0, t) else None

    def at(self, t):
        i = self._index(t)
        if i is not None:
            return self.W[i]
        if not self.times[0] <= t <= self.times[-1]:
            raise ValueError(f"t={t} lies outside the solved corrector interval [0, {self.times[-1]:g}]")
        if self._spline is None:
            self._spline = CubicSpline(self.times, self.W, axis=0)
        return self._spline(t)

    def layer_at(self, t):
        """CN layer traces (V, dV/dz) on the y grid at a stored time."""
        i = self._index(t)
        if i is None:
            raise ValueError(f"t={t} is not a stored corrector time")
        if self.layer == "exact":
            return self._exact(self.times[i])
        return self.traces[i]


# --------------------------------------------------------------------------
# bundle
# --------------------------------------------------------------------------


@dataclass
class Traces:
    V: np.ndarray
    Vz: np.ndarray
    Vzz: np.ndarray
    W: np.ndarray
    Wy: np.ndarray
    Wyy: np.ndarray


@dataclass
class AnsatzBundle:
    profile: object
    ub: object              # AnalyticData (field, psi)
    epsilon: float
    kappa: float = 0.5
    delta: float = 0.1
    tech: CorrectorTrack = None
    L: float = None
    cache: dict = field(default_factory=dict, repr=False)

    def __post_init__(self):
        if not 0.0 < self.delta < 0.5:
            raise ValueError("delta must lie in (0, 1/2)")
        if self.L is None:
            self.L = self.profile.L
        u = self.ub.field
        check_wall_resolution(u.ny, self.epsilon)
        y = u.y
        self.chi = wall_cutoff(y)
        self.phi = wall_distance(y)
        self.chi_d = interior_cutoff(y, self.delta)
        c0, c1, c2 = self.chi
        if np.any(((c1 != 0) | (c2 != 0)) & (self.phi[0] <= 0)):
            raise ConstructionError("wall cutoff derivatives do not vanish where phi = 0")
        self.z = self.phi[0] / np.sqrt(self.epsilon)
        self.active = (c0 != 0) | (c1 != 0) | (c2 != 0)
        psi = self.ub.psi
        cd = self.chi_d[0]
        A = perp_grad(replace(psi, coeffs=psi.coeffs * cd))
        B = perp_grad(replace(psi, coeffs=psi.coeffs * (1.0 - cd)))
        self.A, self.B = A.coeffs, B.coeffs
        # closed form chi_d u_b - chi_d' psi_b e_x of A; the discrete product
        # rule is only approximate, so f1 itself uses A
        F = u.coeffs * cd
        F[0] -= self.chi_d[1] * psi.coeffs[0]
        self.F_formula = F
        self.F = self.A

    def formula_defect(self):
        """max |A - (chi_d u_b - chi_d' psi_b e_x)| relative to max |A|."""
        base = self.field
        a = replace(base, coeffs=self.A).values()
        f = replace(base, coeffs=self.F_formula).values()
        return float(np.max(np.abs(a - f)) / np.max(np.abs(a)))

    @property
    def field(self):
        return self.ub.field

    @property
    def horizon(self):
        return self.profile.T / self.epsilon**self.kappa

    def shift(self, coeffs, d):
        xi = self.field.xi
        return coeffs * np.exp(-1j * xi * d)[None, :, None]

    def displacement(self, t):
        d = float(displacement_table(self.profile, np.array([t]))[0])
        if abs(d) > 0.5 * self.field.Lambda:
            warnings.warn(f"displacement {d:.3f} exceeds half the period; the translation wraps around",
                          RuntimeWarning, stacklevel=2)
        return d


def build_bundle(profile, ub, epsilon, kappa=0.5, delta=0.1, t_end=None, dt=1e-3, dt_max=0.02,
                 growth=1.02, landing=(), layer="stepped"):
    """Bundle with the corrector solved on [0, t_end] (default: the horizon)."""
    b = AnsatzBundle(profile, ub, float(epsilon), float(kappa), float(delta))
    t_end = b.horizon if t_end is None else t_end
    b.tech = CorrectorTrack(profile, epsilon, ub.field.ny, t_end, dt, dt_max, growth,
                            tuple(landing) + (b.horizon,) if b.horizon < t_end else tuple(landing), layer)
    return b


def traces(bundle, t, mode="exact"):
    """Layer and corrector profiles on the y grid at time t."""
    ny = bundle.field.ny
    V = np.zeros(ny)
    Vz = np.zeros(ny)
    Vzz = np.zeros(ny)
    act = bundle.active
    if mode == "exact":
        z = bundle.z[act]
        V[act] = layer_exact(bundle.profile, t, z, 0)
        Vz[act] = layer_exact(bundle.profile, t, z, 1)
        Vzz[act] = layer_exact(bundle.profile, t, z, 2)
    elif mode == "stepped":
        Vs, Vzs = bundle.tech.layer_at(t)
        V[act], Vz[act] = Vs[act], Vzs[act]
    else:
        raise ValueError(f"unknown trace mode {mode!r}")
    if bundle.tech is None:
        W = np.zeros(ny)
    else:
        W = bundle.tech.at(t)
    Wy = y_derivative(ny, 1) @ W
    # second derivative with the stencil W is advanced with
    Wyy = second_difference(W, 2.0 / (ny - 1))
    return Traces(V, Vz, Vzz, W, Wy, Wyy)


# --------------------------------------------------------------------------
# transported data
# --------------------------------------------------------------------------


def eval_u1_f1(bundle, t):
    """u1 and f1 at time t as BandFields."""
    T = bundle.profile.T
    beta, bdot, _ = time_cutoff(t, T)
    d = bundle.displacement(t)
    u1 = float(beta) * bundle.shift(bundle.A, d) + bundle.shift(bundle.B, d)
    f1 = float(bdot) * bundle.shift(bundle.F, d)
    base = bundle.field
    return (replace(base, coeffs=u1, divergence_free=True, no_slip=True),
            replace(base, coeffs=f1, divergence_free=False, no_slip=False))


def _profile_field(base, prof):
    """x-independent field prof(y) e_x as coefficients."""
    c = np.zeros_like(base.coeffs)
    c[0, 0] = base.nx * prof
    return c


def base_profile(bundle, t, tr):
    """U(t, y) = h - chi [V] + eps^2 W and its first two y-derivatives (exact chain rule)."""
    eps = bundle.epsilon
    c0, c1, c2 = bundle.chi
    p0, p1, p2 = bundle.phi
    se = np.sqrt(eps)
    h = float(eval_h(bundle.profile, t))
    U = h - c0 * tr.V + eps**2 * tr.W
    Uy = -c1 * tr.V - c0 * p1 * tr.Vz / se + eps**2 * tr.Wy
    Uyy = (-c2 * tr.V - 2.0 * c1 * p1 * tr.Vz / se - c0 * p2 * tr.Vz / se
           - c0 * p1**2 * tr.Vzz / eps + eps**2 * tr.Wyy)
    return U, Uy, Uyy


def assemble_uapp(bundle, t, tr=None, mode="exact"):
    tr = traces(bundle, t, mode) if tr is None else tr
    u1, _ = eval_u1_f1(bundle, t)
    U, _, _ = base_profile(bundle, t, tr)
    c = bundle.epsilon * u1.coeffs + _profile_field(u1, U)
    return replace(u1, coeffs=c, divergence_free=True, no_slip=True)


def singular_factor(bundle, tr):
    """(sqrt(eps) chi' [z V] + chi phi' [z dV/dz]) / phi, with the wall limit where phi = 0."""
    eps = bundle.epsilon
    c0, c1, _ = bundle.chi
    p0, p1, _ = bundle.phi
    z = bundle.z
    out = np.zeros_like(p0)
    pos = p0 > 0
    out[pos] = (np.sqrt(eps) * c1[pos] * z[pos] * tr.V[pos] + c0[pos] * p1[pos] * z[pos] * tr.Vz[pos]) / p0[pos]
    wall = ~pos
    if np.any(c1[wall] != 0):
        raise ConstructionError("chi' is nonzero where phi vanishes")
    out[wall] = c0[wall] * p1[wall] * tr.Vz[wall] / np.sqrt(eps)
    return out


def _transport_products(bundle):
    """Laplacians and pairwise advection products of the two transported fields."""
    pre = bundle.cache.get("products")
    if pre is None:
        base = bundle.field
        Lam, nx, ny = base.Lambda, base.nx, base.ny
        D2 = y_derivative(ny, 2)
        x2 = (base.xi**2)[None, :, None]
        A, B = bundle.A, bundle.B
        pre = {
            "lapA": _apply_y(D2, A) - x2 * A,
            "lapB": _apply_y(D2, B) - x2 * B,
            "AA": advection(A, Lam, nx, ny),
            "AB": advection(B, Lam, nx, ny, a_coeffs=A) + advection(A, Lam, nx, ny, a_coeffs=B),
            "BB": advection(B, Lam, nx, ny),
        }
        bundle.cache["products"] = pre
    return pre


def assemble_fapp(bundle, t, tr=None, mode="exact", parts=False):
    """The seven-term source of the approximate trajectory."""
    tr = traces(bundle, t, mode) if tr is None else tr
    eps = bundle.epsilon
    u1, _ = eval_u1_f1(bundle, t)
    base = u1
    c = u1.coeffs
    ik = _ik(base)
    # u1 = beta A_d + B_d and translation commutes with Lap and the product
    pre = _transport_products(bundle)
    beta = float(time_cutoff(t, bundle.profile.T)[0])
    d = bundle.displacement(t)
    lap = bundle.shift(beta * pre["lapA"] + pre["lapB"], d)
    selfadv = bundle.shift(beta**2 * pre["AA"] + beta * pre["AB"] + pre["BB"], d)
    c0 = bundle.chi[0]
    terms = {
        "viscous": -eps * lap,
        "self": eps * selfadv,
        "corrector_x": eps**2 * tr.W * (ik * c),
        "corrector_y": np.stack([eps**2 * tr.Wy * c[1], np.zeros_like(c[1])]),
        "layer_x": -c0 * tr.V * (ik * c),
        "layer_y": np.stack([-singular_factor(bundle, tr) * c[1], np.zeros_like(c[1])]),
    }
    total = sum(terms.values())
    out = replace(base, coeffs=total, divergence_free=False, no_slip=False)
    if parts:
        return out, {k: replace(base, coeffs=v, divergence_free=False, no_slip=False) for k, v in terms.items()}
    return out


# --------------------------------------------------------------------------
# identity checks
# --------------------------------------------------------------------------

_D4 = np.array([1.0, -8.0, 0.0, 8.0, -1.0]) / 12.0


def _central(fs, tau):
    return sum(w * f for w, f in zip(_D4, fs)) / tau


def transport_residual(bundle, t, tau=1e-3):
    """max |dt u1 + h dx u1 - f1| with a fourth-order time difference, relative to max |f1|."""
    us = [eval_u1_f1(bundle, t + k * tau)[0].coeffs for k in (-2, -1, 0, 1, 2)]
    u1, f1 = eval_u1_f1(bundle, t)
    h = float(eval_h(bundle.profile, t))
    r = _central(us, tau) + h * dx(u1).coeffs - f1.coeffs
    base = u1
    num = np.max(np.abs(replace(base, coeffs=r).values()))
    den = max(np.max(np.abs(f1.values())), np.max(np.abs(u1.values())))
    return float(num / den)


@dataclass
class ResidualReport:
    t: float
    tau: float
    residual: float        # max |R - eps f_app|
    scale: float           # max |eps f_app|
    time_error: float      # Richardson estimate of the time-difference error plus round-off
    passed: bool
    corrector_defect: float = 0.0   # eps^2 max |dt W - eps W_yy - f_W| of the stepped W


def momentum_residual(bundle, t, tau=1e-3, factor=10.0):
    """Check dt u_app + (u_app.grad) u_app - eps Lap u_app + grad p_app - eps f1 = eps f_app.

    dt u_app comes from fourth-order central differences of assembled
    snapshots at spacing tau; spatial derivatives of the x-independent part
    use the exact chain rule through the layer traces, those of u1 the grid
    operators.  The time-difference error is estimated by comparing spacings
    tau and 2 tau.  W comes from a Crank-Nicolson solve, so it satisfies its
    own equation only to O(dt^2); that defect, measured with the same time
    difference, is added to the error budget.
    """
    eps = bundle.epsilon
    snaps = {}
    for k in (-4, -2, -1, 0, 1, 2, 4):
        snaps[k] = assemble_uapp(bundle, t + k * tau).coeffs
    dt1 = _central([snaps[k] for k in (-2, -1, 0, 1, 2)], tau)
    dt2 = _central([snaps[k] for k in (-4, -2, 0, 2, 4)], 2.0 * tau)
    tr = traces(bundle, t)
    u1, f1 = eval_u1_f1(bundle, t)
    base = u1
    Lam, nx, ny = base.Lambda, base.nx, base.ny
    U, Uy, Uyy = base_profile(bundle, t, tr)
    c = u1.coeffs
    ik = _ik(base)
    # (u_app . grad) u_app = eps U dx u1 + eps^2 (u1 . grad) u1 + eps u1_2 U_y e_x
    adv = eps * U * (ik * c) + eps**2 * advection(c, Lam, nx, ny)
    adv[0] += eps * c[1] * Uy
    lap_u1 = _apply_y(y_derivative(ny, 2), c) - (base.xi**2)[None, :, None] * c
    visc = eps * (_profile_field(base, Uyy) + eps * lap_u1)
    _, gp = eval_u0_p0(bundle.profile, t)
    grad_p = _profile_field(base, np.full(ny, gp[0]))
    fapp = assemble_fapp(bundle, t, tr)
    R = dt1 + adv - visc + grad_p - eps * f1.coeffs - eps * fapp.coeffs
    res = np.max(np.abs(replace(base, coeffs=R).values()))
    scale = np.max(np.abs(fapp.values())) * eps
    rich = np.max(np.abs(replace(base, coeffs=dt1 - dt2).values())) / 15.0
    umax = np.max(np.abs(replace(base, coeffs=snaps[0]).values()))
    roundoff = np.finfo(float).eps * umax * np.sum(np.abs(_D4)) / tau * 10.0
    Ws = [traces(bundle, t + k * tau).W for k in (-2, -1, 0, 1, 2)]
    fW = forcing_from_layer(tr.V, tr.Vz, base.y, eps)
    cdef = eps**2 * np.max(np.abs(_central(Ws, tau) - eps * tr.Wyy - fW))
    err = rich + roundoff + cdef
    return ResidualReport(float(t), float(tau), float(res), float(scale), float(err), bool(res <= factor * err),
                          float(cdef))


# --------------------------------------------------------------------------
# final state
# --------------------------------------------------------------------------


@dataclass
class FinalStateReport:
    epsilon: float
    kappa: float
    horizon: float
    total: float               # eps^-1 ||u_app(horizon)|_Omega||
    base_flow: float           # eps^-1 ||u0||
    layer: float               # eps^-1 ||chi [v0]||
    transport: float           # ||u1||
    corrector: float           # eps ||W||
    layer_bound: float         # 2 eps^{1/4} ||V(horizon)||_{L2(R+)} * sqrt(L) / eps
    tail: float                # ||u_b restricted to |y| >= 1 - 2 delta||
    comparison: float          # eps^{1/4} + eps^{kappa(n - 3/4(1/kappa - 1))} |ln eps|^{n+3/4}
    complete: bool = True

    @property
    def minus_tail(self):
        return self.total - self.tail


def _layer_l2_halfline(profile, t, z_max=None, n=4001):
    z_max = max(40.0, 12.0 * np.sqrt(t)) if z_max is None else z_max
    z = np.linspace(0.0, z_max, n)
    V = layer_exact(profile, t, z)
    return float(np.sqrt(np.trapezoid(V**2, z)))


def tail_norm(ub_field, delta):
    """||u_b restricted to |y| >= 1 - 2 delta|| over the torus."""
    y = ub_field.y
    mask = (np.abs(y) >= 1.0 - 2.0 * delta).astype(float)
    return l2_norm(replace(ub_field, coeffs=ub_field.coeffs * mask))


def final_state_estimate(bundle, t_reached=None):
    """Decompose eps^-1 ||u_app(T/eps^kappa)|_Omega|| into its four summands."""
    eps = bundle.epsilon
    t = bundle.horizon
    complete = True
    if t_reached is not None and t_reached < t - 1e-9:
        complete = False
    tr = traces(bundle, t)
    win = (0.0, bundle.L)
    base = bundle.field
    h = float(eval_h(bundle.profile, t))
    c0 = bundle.chi[0]
    u0 = replace(base, coeffs=_profile_field(base, np.full(base.ny, h)))
    lay = replace(base, coeffs=_profile_field(base, -c0 * tr.V))
    u1, _ = eval_u1_f1(bundle, t)
    cor = replace(base, coeffs=_profile_field(base, tr.W))
    total = assemble_uapp(bundle, t, tr)
    n = bundle.profile.n
    kap = bundle.kappa
    comp = eps**0.25 + eps ** (kap * (n - 0.75 * (1.0 / kap - 1.0))) * abs(np.log(eps)) ** (n + 0.75)
    return FinalStateReport(
        eps, kap, t,
        total=l2_norm(total, win) / eps,
        base_flow=l2_norm(u0, win) / eps,
        layer=l2_norm(lay, win) / eps,
        transport=l2_norm(u1, win),
        corrector=eps * l2_norm(cor, win),
        layer_bound=2.0 * eps**0.25 * _layer_l2_halfline(bundle.profile, t) * np.sqrt(bundle.L) / eps,
        tail=tail_norm(base, bundle.delta),
        comparison=float(comp),
        complete=complete,
    )


# --------------------------------------------------------------------------
# phantom force
# --------------------------------------------------------------------------


def _leibniz_factor(derivs, k):
    """M with ||g v||_{H^k} <= M ||v||_{H^k} for g = g(y), from sup norms of g^(j)."""
    total = 0.0
    for a in range(k + 1):
        for b in range(k + 1 - a):
            s = sum(comb(b, j) * derivs[j] for j in range(b + 1))
            total += s**2
    return float(np.sqrt(total))


def cutoff_sup_norms(delta, order, n=20001):
    """sup |chi_delta^(j)| for j = 0..order (finite differences beyond the second)."""
    y = np.linspace(-1.0, 1.0, n)
    c0, c1, c2 = interior_cutoff(y, delta)
    out = [np.max(np.abs(c0)), np.max(np.abs(c1)), np.max(np.abs(c2))]
    g = c2
    dy_ = y[1] - y[0]
    for _ in range(3, order + 1):
        g = np.gradient(g, dy_, edge_order=2)
        out.append(np.max(np.abs(g)))
    return out[: order + 1]


def phantom_constant(delta, k):
    """C_{k,delta} = M_k(chi_delta) + sqrt(3) M_k(chi_delta').

    sqrt(3) bounds ||psi_b||_{H^k(G)} by ||u_b||_{H^k(G)}: the y-primitive
    over (-1, 1) has L2 norm at most sqrt(2) times that of its integrand.
    """
    s = cutoff_sup_norms(delta, k + 1)
    return _leibniz_factor(s[: k + 1], k) + np.sqrt(3.0) * _leibniz_factor(s[1: k + 2], k)


@dataclass
class PhantomReport:
    k: int
    measured: float      # ||f1 restricted to Omega||_{L1(0, horizon; H^k)}
    data_norm: float     # ||u_b restricted to G||_{H^k(G)}
    constant: float      # C_{k,delta}
    support_ok: bool
    passed: bool


def phantom_force_check(bundle, ks=(0, 1, 2), n_times=201):
    """Measure the phantom-force size against C_{k,delta} ||u_b||_{H^k(G)}."""
    T = bundle.profile.T
    L = bundle.L
    ts = np.linspace(T / 3.0, 2.0 * T / 3.0, n_times)
    win = (0.0, L)
    G = (-2.0 * L, -L)
    ub = bundle.field
    y = ub.y
    # support: zero for |y| >= 1 - delta, and only while beta' != 0; the
    # y-derivative stencil reaches two grid points past the cutoff
    _, f_mid = eval_u1_f1(bundle, 0.5 * T)
    vals = f_mid.values()
    outside = np.abs(y) >= 1.0 - bundle.delta + 2.0 * (y[1] - y[0])
    support_ok = bool(np.max(np.abs(vals[:, :, outside])) == 0.0)
    for tt in (0.5 * T / 3.0, T / 3.0, 2.0 * T / 3.0, 0.9 * T):
        _, f = eval_u1_f1(bundle, tt)
        support_ok &= bool(np.max(np.abs(f.coeffs)) == 0.0)
    out = []
    for k in ks:
        norms = np.array([hk_norm(eval_u1_f1(bundle, t)[1], k, win) for t in ts])
        measured = float(np.trapezoid(norms, ts))
        data = hk_norm(ub, k, G)
        C = phantom_constant(bundle.delta, k)
        out.append(PhantomReport(k, measured, data, C, support_ok, support_ok and measured <= C * data))
    return out


def structural_checks(bundle, t, mode="exact"):
    """Relative divergence and wall values of u_app at time t."""
    from .band_field import divergence_defect

    u = assemble_uapp(bundle, t, mode=mode)
    vals = u.values()
    scale = max(np.max(np.abs(vals)), 1e-300)
    wall = max(np.max(np.abs(vals[:, :, 0])), np.max(np.abs(vals[:, :, -1])))
    return {"divergence": divergence_defect(u), "wall": float(wall / scale), "scale": float(scale)}

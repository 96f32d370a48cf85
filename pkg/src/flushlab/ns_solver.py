"""IMEX time stepping of incompressible flow on the periodised band.

The velocity lives in the discrete space of no-slip, divergence-free fields:
for each x-mode xi != 0 it is (-D psi, i xi psi) with psi = E theta (psi and
its wall derivative vanish), and for xi = 0 it is (u1, 0) with u1 = 0 on the
walls.  A step is a Galerkin Crank-Nicolson solve in that space,

    <u+, v> + (eps dt/2) a(u+, v) = <u, v> - (eps dt/2) a(u, v) + dt <G, v>,

with a(u, v) = <Du, Dv> + xi^2 <u, v> and G the explicit part (AB2
extrapolation of advection and forcing).  Gradients are orthogonal to the
test space, so the pressure never appears.  The per-mode matrices are real,
symmetric positive definite and banded.
"""

from dataclasses import dataclass, field
from functools import lru_cache

import numpy as np
from scipy import sparse
from scipy.linalg import cho_solve_banded, cholesky_banded

from .band_field import (BandField, _apply_y, band_grid, inverse_fft, l2_norm, noslip_basis,
                         tangential_fft, wavenumbers, y_derivative, y_weights)

CFL_MAX = 0.5
BLOWUP = 1e3


class CFLError(RuntimeError):
    def __init__(self, dt, umax, suggested):
        super().__init__(f"dt={dt:.3e} violates the CFL bound (max|u|={umax:.3e}); try dt <= {suggested:.3e}")
        self.suggested = suggested


class InstabilityError(RuntimeError):
    """Remainder norm exceeded the blow-up guard."""


@dataclass
class SolverConfig:
    epsilon: float
    Lambda: float = 8.0
    nx: int = 128
    ny: int = 257
    dt: float = 1e-2
    kappa: float = 0.5
    T: float = 1.0
    dealias: str = "2/3"
    snapshot_every: int = 0

    @property
    def horizon(self):
        return self.T / self.epsilon**self.kappa


def cfl_number(dt, umax, nx, Lambda):
    return dt * umax * nx / Lambda


def check_cfl(dt, umax, nx, Lambda):
    c = cfl_number(dt, umax, nx, Lambda)
    if c > CFL_MAX:
        raise CFLError(dt, umax, 0.9 * CFL_MAX * Lambda / (nx * umax))
    return c


def dealias_mask(nx, rule="2/3"):
    """Keep modes with index below nx/3 (2/3 rule); 'none' keeps all but Nyquist."""
    k = np.arange(nx // 2 + 1)
    if rule == "none":
        return k < nx // 2
    if rule != "2/3":
        raise ValueError(f"unknown dealiasing rule {rule!r}")
    return k < nx / 3.0


# --------------------------------------------------------------------------
# per-mode operators
# --------------------------------------------------------------------------


def _bandwidth(A, tol=0.0):
    i, j = np.nonzero(np.abs(A) > tol)
    return int(np.max(np.abs(i - j))) if len(i) else 0


def _bands(A, bw):
    """Upper banded storage for solveh_banded."""
    m = A.shape[0]
    ab = np.zeros((bw + 1, m))
    for d in range(bw + 1):
        ab[bw - d, d:] = np.diagonal(A, d)
    return ab


@lru_cache(maxsize=8)
def _mode_blocks(ny):
    D = y_derivative(ny, 1).toarray()
    w = y_weights(ny)
    E = noslip_basis(ny)
    DE = D @ E
    DDE = D @ DE
    K0 = DDE.T @ (w[:, None] * DDE)
    K1 = DE.T @ (w[:, None] * DE)
    K2 = E.T @ (w[:, None] * E)
    Ei = np.eye(ny)[:, 1:-1]
    DEi = D @ Ei
    Z0 = Ei.T @ (w[:, None] * Ei)
    Z1 = DEi.T @ (w[:, None] * DEi)
    return D, w, E, K0, K1, K2, Z0, Z1


class ModeSolver:
    """Factorised Galerkin Crank-Nicolson operators for one (grid, eps, dt)."""

    def __init__(self, Lambda, nx, ny, epsilon, dt):
        self.Lambda, self.nx, self.ny = float(Lambda), nx, ny
        self.epsilon, self.dt = float(epsilon), float(dt)
        D, w, E, K0, K1, K2, Z0, Z1 = _mode_blocks(ny)
        self.D = y_derivative(ny, 1)
        self.w = w
        self.E = sparse.csr_matrix(E)
        self.xi = wavenumbers(self.Lambda, nx)
        c = 0.5 * self.epsilon * self.dt
        self.c = c
        self.active = np.arange(len(self.xi)) < nx // 2  # Nyquist dropped
        # Cholesky factors in upper banded storage, computed once
        self.bands = [cholesky_banded(_bands(Z0 + c * Z1, _bandwidth(Z1)))]
        bw = max(_bandwidth(K0), _bandwidth(K1), _bandwidth(K2))
        for k in range(1, len(self.xi)):
            x2 = self.xi[k] ** 2
            A = K1 + x2 * K2 + c * (K0 + 2.0 * x2 * K1 + x2 * x2 * K2)
            self.bands.append(cholesky_banded(_bands(A, bw)))

    def _solve_mode(self, k, b):
        """Real SPD solve applied to the real and imaginary parts together."""
        rhs = np.stack([b.real, b.imag], axis=-1)
        x = cho_solve_banded((self.bands[k], False), rhs, check_finite=False)
        return x[:, 0] + 1j * x[:, 1]

    def _lhs_rhs(self, u, G):
        """b = B^H [H(u + dt G) - c (D^T H D u + xi^2 H u)] per mode."""
        D, w, xi, c = self.D, self.w, self.xi, self.c
        u1, u2 = u[0], u[1]
        g1, g2 = G[0], G[1]
        x2 = (xi**2)[:, None]
        Du1 = _apply_y(D, u1)
        Du2 = _apply_y(D, u2)
        r1 = w * (u1 + self.dt * g1) - c * (_apply_y(D.T, w * Du1) + x2 * w * u1)
        r2 = w * (u2 + self.dt * g2) - c * (_apply_y(D.T, w * Du2) + x2 * w * u2)
        return r1, r2

    def solve(self, u, G):
        """One Crank-Nicolson step with explicit part G; u, G shaped (2, nk, ny)."""
        r1, r2 = self._lhs_rhs(u, G)
        xi = self.xi
        out = np.zeros_like(u, dtype=complex)
        # x-mean: u1 with Dirichlet walls, u2 = 0
        b0 = r1[0, 1:-1]
        out[0, 0, 1:-1] = self._solve_mode(0, b0)
        # other modes: b = -E^T D^T r1 - i xi E^T r2
        Dt_r1 = _apply_y(self.D.T, r1)
        Et = self.E.T
        b = -(Et @ Dt_r1.T).T - 1j * xi[:, None] * (Et @ r2.T).T
        theta = np.zeros_like(b)
        for k in range(1, len(xi)):
            if not self.active[k]:
                continue
            theta[k] = self._solve_mode(k, b[k])
        psi = (self.E @ theta.T).T
        psi[0] = 0.0
        out[0, 1:] = -_apply_y(self.D, psi[1:])
        out[1, 1:] = 1j * xi[1:, None] * psi[1:]
        return out


def project_to_space(u_coeffs, Lambda, nx, ny):
    """Mass-orthogonal projection onto the discrete no-slip divergence-free space."""
    ms = ModeSolver(Lambda, nx, ny, 0.0, 0.0)
    return ms.solve(u_coeffs, np.zeros_like(u_coeffs))


# --------------------------------------------------------------------------
# explicit terms
# --------------------------------------------------------------------------


def _phys(c, nx):
    return inverse_fft(c, nx)


def advection(u_coeffs, Lambda, nx, ny, mask=None, a_coeffs=None):
    """Coefficients of (a . grad) u, dealiased; a defaults to u."""
    xi = wavenumbers(Lambda, nx)
    D = y_derivative(ny, 1)
    ik = (1j * xi)[:, None]
    a = u_coeffs if a_coeffs is None else a_coeffs
    av = _phys(a, nx)
    out = np.empty_like(u_coeffs)
    for c in range(2):
        ux = _phys(ik * u_coeffs[c], nx)
        uy = _phys(_apply_y(D, u_coeffs[c]), nx)
        out[c] = tangential_fft(av[0] * ux + av[1] * uy)
    if mask is not None:
        out *= mask[None, :, None]
    return out


def weak_laplacian(u_coeffs, Lambda, nx, ny):
    """w with <w, v> = -a(u, v) for every grid vector v.

    Equals D^2 u - H^{-1} B D u - xi^2 u, B = diag(-1, 0, ..., 0, 1).
    """
    xi = wavenumbers(Lambda, nx)
    D = y_derivative(ny, 1)
    w = y_weights(ny)
    Du = _apply_y(D, u_coeffs)
    return -_apply_y(D.T, w * Du) / w - (xi**2)[None, :, None] * u_coeffs


def dissipation(u_coeffs, Lambda, nx, ny):
    """a(u, u) = ||grad u||^2 in the discrete inner product."""
    xi = wavenumbers(Lambda, nx)
    D = y_derivative(ny, 1)
    w = y_weights(ny)
    Du = _apply_y(D, u_coeffs)
    mult = np.full(len(xi), 2.0)
    mult[0] = 1.0
    if nx % 2 == 0:
        mult[-1] = 1.0
    e = np.sum((np.abs(Du) ** 2 + (xi**2)[None, :, None] * np.abs(u_coeffs) ** 2) * w, axis=(0, 2))
    return float(np.sum(mult * e) * Lambda / nx**2)


def energy(u_coeffs, Lambda, nx, ny):
    xi = wavenumbers(Lambda, nx)
    w = y_weights(ny)
    mult = np.full(len(xi), 2.0)
    mult[0] = 1.0
    if nx % 2 == 0:
        mult[-1] = 1.0
    e = np.sum(np.abs(u_coeffs) ** 2 * w, axis=(0, 2))
    return float(np.sum(mult * e) * Lambda / nx**2)


# --------------------------------------------------------------------------
# Navier-Stokes
# --------------------------------------------------------------------------


@dataclass
class FlowState:
    t: float
    u: np.ndarray                 # (2, nk, ny) coefficients
    G_prev: np.ndarray = None     # advection term of the previous step (AB2)


def _as_coeffs(u):
    return u.coeffs if isinstance(u, BandField) else np.asarray(u)


def step_navier_stokes(state, config, forcing=None, solver=None, mask=None, umax=None):
    """One IMEX step of du/dt + (u.grad)u - eps Lap u + grad p = forcing(t).

    ``forcing(t)`` returns coefficients (2, nk, ny).  The first step uses
    forward Euler for the explicit part, later steps AB2.
    """
    Lambda, nx, ny, dt = config.Lambda, config.nx, config.ny, config.dt
    if solver is None:
        solver = ModeSolver(Lambda, nx, ny, config.epsilon, dt)
    if mask is None:
        mask = dealias_mask(nx, config.dealias)
    u = state.u
    if umax is None:
        umax = float(np.max(np.abs(_phys(u, nx))))
    check_cfl(dt, umax, nx, Lambda)
    A = -advection(u, Lambda, nx, ny, mask)
    Gx = A if state.G_prev is None else 1.5 * A - 0.5 * state.G_prev
    if forcing is not None:
        Gx = Gx + forcing(state.t + 0.5 * dt)
    unew = solver.solve(u, Gx)
    return FlowState(state.t + dt, unew, A)


@dataclass
class FlowRun:
    times: list = field(default_factory=list)
    energy: list = field(default_factory=list)
    dissipation: list = field(default_factory=list)
    snapshots: list = field(default_factory=list)
    final: np.ndarray = None


def solve_navier_stokes(u0, config, t_end, forcing=None):
    """Integrate from u0 (BandField or coefficients) to t_end with fixed dt."""
    Lambda, nx, ny = config.Lambda, config.nx, config.ny
    solver = ModeSolver(Lambda, nx, ny, config.epsilon, config.dt)
    mask = dealias_mask(nx, config.dealias)
    st = FlowState(0.0, _as_coeffs(u0).astype(complex))
    run = FlowRun()
    nsteps = int(round(t_end / config.dt))
    run.times.append(0.0)
    run.energy.append(energy(st.u, Lambda, nx, ny))
    run.dissipation.append(dissipation(st.u, Lambda, nx, ny))
    for i in range(nsteps):
        u_old = st.u
        st = step_navier_stokes(st, config, forcing, solver, mask)
        run.times.append(st.t)
        run.energy.append(energy(st.u, Lambda, nx, ny))
        # Crank-Nicolson dissipates a(.,.) at the midpoint state
        run.dissipation.append(dissipation(0.5 * (st.u + u_old), Lambda, nx, ny))
        if config.snapshot_every and (i + 1) % config.snapshot_every == 0:
            run.snapshots.append((st.t, st.u.copy()))
    run.final = st.u
    return run


def energy_balance(run, epsilon):
    """Relative excess of ||u(t)||^2 + 2 eps int ||grad u||^2 over ||u(0)||^2 (max over t).

    run.dissipation[i] holds the midpoint value for the step ending at times[i].
    """
    t = np.asarray(run.times)
    e = np.asarray(run.energy)
    d = np.asarray(run.dissipation)
    acc = np.concatenate([[0.0], np.cumsum(d[1:] * np.diff(t))])
    return float(np.max(e + 2.0 * epsilon * acc - e[0]) / max(e[0], 1e-300))


def rescale_trajectory(snapshots, epsilon):
    """Rescaled snapshots (t, u) -> original variables (eps t, u / eps)."""
    return [(epsilon * t, np.asarray(u) / epsilon) for t, u in snapshots]


def rescale_force(snapshots, epsilon):
    """Forces scale as f / eps^2 under the same change of variables."""
    return [(epsilon * t, np.asarray(f) / epsilon**2) for t, f in snapshots]


# --------------------------------------------------------------------------
# remainder around the approximate trajectory
# --------------------------------------------------------------------------
#
#   dt r + (u_app.grad) r + eps (r.grad) r + (r.grad) u_app - eps Lap r + grad pi = -f_app,
#
# r(0) = 0.  u_app = U(t, y) e_x + eps u1 with U = h - chi [V] + eps^2 W; the
# layer and corrector are stepped in lock-step with r (same dt).


@dataclass
class AppState:
    """Pieces of u_app at one time on the band grid."""
    t: float
    U: np.ndarray
    Uy: np.ndarray
    u1: np.ndarray          # coefficients of u1
    fapp: np.ndarray        # coefficients of f_app
    sup_w: float            # ||chi' [v0] + eps^2 dy W||_inf
    zdz: float              # ||z dz v0||_inf over the half-line
    umax: float
    V: np.ndarray = None    # layer traces on the y grid
    Vz: np.ndarray = None
    Wy: np.ndarray = None


def app_state(bundle, stepper):
    """u_app pieces from a co-stepped CorrectorStepper (v0 = -V)."""
    from .ansatz import Traces, assemble_fapp, eval_u1_f1

    eps = bundle.epsilon
    V, Vz = stepper.layer_traces()
    act = bundle.active
    V = np.where(act, V, 0.0)
    Vz = np.where(act, Vz, 0.0)
    D = y_derivative(len(stepper.W), 1)
    W = stepper.W
    Wy = D @ W
    tr = Traces(V, Vz, np.zeros_like(V), W, Wy, D @ Wy)
    t = stepper.t
    c0, c1, _ = bundle.chi
    p1 = bundle.phi[1]
    h = float(bundle.profile(t))
    U = h - c0 * V + eps**2 * W
    Uy = -c1 * V - c0 * p1 * Vz / np.sqrt(eps) + eps**2 * Wy
    u1, _ = eval_u1_f1(bundle, t)
    fapp = assemble_fapp(bundle, t, tr)
    lay = stepper.layer
    z = lay.z
    zdz = float(np.max(np.abs(z * np.gradient(lay.V, z))))
    sup_w = float(np.max(np.abs(-c1 * V + eps**2 * Wy)))
    umax = float(np.max(np.abs(U))) + eps * float(np.max(np.abs(_phys(u1.coeffs, bundle.field.nx))))
    return AppState(t, U, Uy, u1.coeffs, fapp.coeffs, sup_w, zdz, umax, V, Vz, Wy)


def remainder_terms(r, app, bundle, mask=None, form="direct"):
    """(u_app.grad) r + (r.grad) u_app + eps (r.grad) r as coefficients.

    form="direct" uses r2 dy U with the chain-rule profile U_y; form="recast"
    trades the singular part for the averaging operator M applied to dx r1.
    """
    base = bundle.field
    Lambda, nx, ny = base.Lambda, base.nx, base.ny
    eps = bundle.epsilon
    xi = wavenumbers(Lambda, nx)
    ik = (1j * xi)[None, :, None]
    out = app.U * (ik * r)
    out = out + eps * _coupled_products(r, app.u1, Lambda, nx, ny, mask)
    out[0] = out[0] + singular_product(r, app, bundle, form)
    return out


def _coupled_products(r, u1, Lambda, nx, ny, mask=None):
    """(u1.grad) r + (r.grad) u1 + (r.grad) r with one batched transform each way."""
    xi = wavenumbers(Lambda, nx)
    ik = (1j * xi)[None, :, None]
    D = y_derivative(ny, 1)
    stack = np.concatenate([r, ik * r, _apply_y(D, r), u1, ik * u1, _apply_y(D, u1)])
    v = _phys(stack, nx)
    rv, rx, ry, uv, ux, uy = v[0:2], v[2:4], v[4:6], v[6:8], v[8:10], v[10:12]
    a = uv + rv
    phys = a[0] * rx + a[1] * ry + rv[0] * ux + rv[1] * uy
    out = tangential_fft(phys)
    if mask is not None:
        out *= mask[None, :, None]
    return out


def singular_product(r, app, bundle, form="direct"):
    """x-component of (r.grad)(U e_x) = r2 dU/dy."""
    if form == "direct":
        return r[1] * app.Uy
    if form != "recast":
        raise ValueError(f"unknown form {form!r}")
    from .band_field import amplification_M

    # with v0 = -V: chi phi' [dz v0] r2 / sqrt(eps) = M[dx r1] [z dz v0]
    eps = bundle.epsilon
    c1 = bundle.chi[1]
    xi = wavenumbers(bundle.field.Lambda, bundle.field.nx)
    dxr1 = (1j * xi)[:, None] * r[0]
    Ma = amplification_M(dxr1, bundle.field.y)
    return Ma * (-bundle.z * app.Vz) + r[1] * (-c1 * app.V + eps**2 * app.Wy)


@dataclass
class RemainderTrajectory:
    epsilon: float
    times: list = field(default_factory=list)
    l2: list = field(default_factory=list)          # ||r(t)||
    grad_acc: list = field(default_factory=list)    # sqrt(eps int_0^t ||grad r||^2)
    snapshots: list = field(default_factory=list)
    final: np.ndarray = None
    complete: bool = False
    failure: str = ""
    # series sampled every `radius_every` steps for the analyticity diagnostic
    rad_times: list = field(default_factory=list)
    zdz: list = field(default_factory=list)
    sup_w: list = field(default_factory=list)
    grad_u1_energy: list = field(default_factory=list)
    grad_r_energy: list = field(default_factory=list)
    zdz_integral: float = 0.0
    dual: list = field(default_factory=list)        # (t, relative gap, recast scale)

    @property
    def sup_l2(self):
        return float(np.max(self.l2)) if self.l2 else 0.0

    def history_rows(self):
        return list(zip(self.times, self.l2, self.grad_acc))


def remainder_dt(bundle, nx=None, Lambda=None, cfl=0.4, dt_cap=0.02):
    """Time steps (during the datum, after it) from the CFL bound on u_app."""
    base = bundle.field
    nx = base.nx if nx is None else nx
    Lambda = base.Lambda if Lambda is None else Lambda
    ts = np.linspace(0.0, bundle.profile.T, 2001)
    hmax = float(np.max(np.abs(bundle.profile(ts))))
    u1max = float(np.max(np.abs(_phys(bundle.A, nx))) + np.max(np.abs(_phys(bundle.B, nx))))
    # |h - chi [V]| <= 2 max |h| (maximum principle for the layer)
    dt1 = cfl * Lambda / (nx * max(2.0 * hmax + bundle.epsilon * u1max, 1e-12))
    # after the datum |U| has relaxed well below max |h|
    dt2 = min(dt_cap, cfl * Lambda / (nx * max(1.0, 0.1 * hmax + bundle.epsilon * u1max)))
    return dt1, dt2


def solve_remainder(bundle, config, dt_active=None, dt_after=None, form="direct", snapshot_every=0,
                    radius_every=10, dual_steps=10, seed=0, t_end=None, blowup=BLOWUP):
    """Integrate the remainder system on [0, t_end] (default: the horizon).

    dt_active is used while the datum h is on (t < T), dt_after afterwards;
    each phase restarts the explicit AB2 history.  An InstabilityError is
    recorded (not raised) when ||r|| exceeds ``blowup``; the trajectory is then
    flagged incomplete.
    """
    from .littlewood_paley import grad_mode_energy
    from .technical_profile import CorrectorStepper

    base = bundle.field
    Lambda, nx, ny = base.Lambda, base.nx, base.ny
    eps = bundle.epsilon
    t_end = bundle.horizon if t_end is None else float(t_end)
    d1, d2 = remainder_dt(bundle, nx, Lambda)
    dt_active = d1 if dt_active is None else dt_active
    dt_after = d2 if dt_after is None else dt_after
    T = bundle.profile.T
    n1 = int(np.ceil(min(T, t_end) / dt_active))
    dt_active = min(T, t_end) / n1
    n2 = int(np.ceil(max(t_end - T, 0.0) / dt_after)) if t_end > T else 0
    dt_after = (t_end - T) / n2 if n2 else dt_after
    steps = [dt_active] * n1 + [dt_after] * n2
    rng = np.random.default_rng(seed)
    dual_at = set(rng.choice(np.arange(1, len(steps)), size=min(dual_steps, len(steps) - 1), replace=False).tolist()) \
        if dual_steps else set()

    mask = dealias_mask(nx, config.dealias)
    stepper = CorrectorStepper(bundle.profile, eps, ny)
    app = app_state(bundle, stepper)
    r = np.zeros_like(base.coeffs, dtype=complex)
    traj = RemainderTrajectory(eps)
    traj.times.append(0.0)
    traj.l2.append(0.0)
    traj.grad_acc.append(0.0)
    acc = 0.0
    zdz_prev = app.zdz
    solver = None
    E_prev = None

    def sample(a, r_):
        traj.rad_times.append(a.t)
        traj.zdz.append(a.zdz)
        traj.sup_w.append(a.sup_w)
        traj.grad_u1_energy.append(grad_mode_energy(a.u1, Lambda, nx, ny))
        traj.grad_r_energy.append(grad_mode_energy(r_, Lambda, nx, ny))

    sample(app, r)
    for i, dt in enumerate(steps):
        if solver is None or solver.dt != dt:
            solver = ModeSolver(Lambda, nx, ny, eps, dt)
            E_prev = None
        umax = app.umax + eps * float(np.max(np.abs(_phys(r, nx))))
        check_cfl(dt, umax, nx, Lambda)
        if i in dual_at:
            g = dual_form_gap(r, app, bundle)
            traj.dual.append((app.t, g["gap"], g["scale"], g["discretization"]))
        E = -remainder_terms(r, app, bundle, mask, form)
        f_old = app.fapp
        stepper.step(dt)
        app = app_state(bundle, stepper)
        G = (E if E_prev is None else 1.5 * E - 0.5 * E_prev) - 0.5 * (f_old + app.fapp)
        r_old = r
        r = solver.solve(r, G)
        E_prev = E
        acc += dt * dissipation(0.5 * (r + r_old), Lambda, nx, ny)
        traj.zdz_integral += 0.5 * dt * (zdz_prev + app.zdz)
        zdz_prev = app.zdz
        nrm = np.sqrt(energy(r, Lambda, nx, ny))
        traj.times.append(app.t)
        traj.l2.append(float(nrm))
        traj.grad_acc.append(float(np.sqrt(eps * acc)))
        if radius_every and (i + 1) % radius_every == 0:
            sample(app, r)
        if snapshot_every and (i + 1) % snapshot_every == 0:
            traj.snapshots.append((app.t, r.copy()))
        if not np.isfinite(nrm) or nrm > blowup:
            traj.failure = str(InstabilityError(f"||r|| = {nrm:.3e} exceeded {blowup:g} at t = {app.t:.4g}"))
            traj.final = r
            return traj
    traj.final = r
    traj.complete = True
    return traj


def dual_form_gap(r, app, bundle):
    """Compare the direct and recast singular products for one remainder state.

    ``gap`` is max |direct - recast| / max |direct|; ``discretization``
    is the same quantity for a grid y-derivative of U against the chain-rule
    U_y, the size of error the comparison should be judged against.
    """
    nx = bundle.field.nx
    ny = bundle.field.ny
    a = _phys(singular_product(r, app, bundle, "direct")[None], nx)
    b = _phys(singular_product(r, app, bundle, "recast")[None], nx)
    Uy_grid = y_derivative(ny, 1) @ app.U
    c = _phys((r[1] * Uy_grid)[None], nx)
    scale = max(float(np.max(np.abs(a))), 1e-300)
    return {"gap": float(np.max(np.abs(a - b)) / scale), "scale": scale,
            "discretization": float(np.max(np.abs(a - c)) / scale)}

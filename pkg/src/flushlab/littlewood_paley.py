"""Tangential Littlewood-Paley analysis on the band.

Windows: chi_lp is a smooth step equal to 1 on |tau| <= 3/4 and 0 on
|tau| >= 4/3, and phi_lp(tau) = chi_lp(tau/2) - chi_lp(tau).  On the torus
of period Lambda the frequencies are 2 pi m / Lambda, so dyadic sums run over
a finite range of k and the x-mean (xi = 0) is kept out of every block.

Weighted quantities e^{rho |xi|} are evaluated in log space because the
radii of interest make them overflow.
"""

from dataclasses import dataclass, field, replace
from functools import lru_cache

import numpy as np
from scipy.special import logsumexp

from .band_field import (BandField, _apply_y, band_grid, inverse_fft, noslip_basis, perp_grad,
                         from_values, wavenumbers, y_derivative, y_weights)
from .cutoffs import smoothstep

LOW, HIGH = 0.75, 4.0 / 3.0
OVERFLOW_EXP = 700.0
# Declared constant for the Bernstein-type inequalities.  The ring inequality
# allows frequencies down to 2^k/100, which alone forces C_B >= 100; the
# (p, q) = (1, inf) ball case with a derivative scales like 100^2/pi.
C_B = 4000.0


class MultiplierOverflowError(OverflowError):
    pass


class RadiusCollapse(RuntimeError):
    """The analyticity radius dropped below zero."""

    def __init__(self, msg, t, history):
        super().__init__(msg)
        self.t = t
        self.history = history


# --------------------------------------------------------------------------
# windows
# --------------------------------------------------------------------------


def chi_lp(tau):
    tau = np.abs(np.asarray(tau, dtype=float))
    s = (tau - LOW) / (HIGH - LOW)
    return 1.0 - smoothstep(np.clip(s, 0.0, 1.0))[0]


def phi_lp(tau):
    return chi_lp(0.5 * np.asarray(tau, dtype=float)) - chi_lp(tau)


@dataclass(frozen=True)
class DyadicPartition:
    Lambda: float
    nx: int
    k_min: int
    k_max: int
    weights: np.ndarray   # (n_blocks, nk): phi_lp(2^-k xi)
    lows: np.ndarray      # (n_blocks + 1, nk): chi_lp(2^-k xi), k = k_min .. k_max + 1

    @property
    def k_range(self):
        return np.arange(self.k_min, self.k_max + 1)

    @property
    def xi(self):
        return wavenumbers(self.Lambda, self.nx)

    def residual(self, octaves_above=1.0):
        """max |sum_k phi_lp(2^-k xi) - 1| over xi >= 2^octaves_above * xi_1 (Nyquist excluded)."""
        xi = self.xi
        sel = (xi >= 2.0**octaves_above * xi[1] - 1e-12) & (np.arange(len(xi)) < self.nx // 2)
        return float(np.max(np.abs(self.weights[:, sel].sum(axis=0) - 1.0)))

    def square_sum_range(self):
        s = (self.weights[:, 1:self.nx // 2] ** 2).sum(axis=0)
        return float(s.min()), float(s.max())


@lru_cache(maxsize=32)
def dyadic_partition(Lambda, nx):
    xi = wavenumbers(float(Lambda), nx)
    xi1, xmax = xi[1], xi[-1]
    # chi_lp(2^-k_min xi_1) must vanish and chi_lp(2^-(k_max+1) xi_max) must be 1
    k_min = int(np.floor(np.log2(xi1 / HIGH)))
    k_max = int(np.ceil(np.log2(xmax / LOW))) - 1
    ks = np.arange(k_min, k_max + 1)
    w = np.array([phi_lp(2.0 ** (-k) * xi) for k in ks])
    lows = np.array([chi_lp(2.0 ** (-k) * xi) for k in range(k_min, k_max + 2)])
    w.flags.writeable = False
    lows.flags.writeable = False
    return DyadicPartition(float(Lambda), nx, k_min, k_max, w, lows)


def _partition(field):
    return dyadic_partition(field.Lambda, field.nx)


def dyadic_block(field, k):
    """Fourier multiplier phi_lp(2^-k xi)."""
    w = phi_lp(2.0 ** (-k) * field.xi)
    return replace(field, coeffs=field.coeffs * w[None, :, None])


def low_pass(field, k, include_mean=False):
    """chi_lp(2^-k xi); the x-mean is dropped unless include_mean."""
    w = chi_lp(2.0 ** (-k) * field.xi)
    if not include_mean:
        w = w.copy()
        w[0] = 0.0
    return replace(field, coeffs=field.coeffs * w[None, :, None])


def remove_mean(field):
    c = field.coeffs.copy()
    c[:, 0] = 0.0
    return replace(field, coeffs=c)


# --------------------------------------------------------------------------
# norms
# --------------------------------------------------------------------------


def _mode_mult(nx, nk):
    mult = np.full(nk, 2.0)
    mult[0] = 1.0
    if nx % 2 == 0:
        mult[-1] = 1.0
    return mult


def mode_energy(coeffs, Lambda, nx, ny):
    """e(xi) with ||a||_{L2}^2 = sum_xi e(xi) (all components, y weights H)."""
    w = y_weights(ny)
    e = np.einsum("ckj,j->k", np.abs(coeffs) ** 2, w)
    return e * _mode_mult(nx, coeffs.shape[1]) * Lambda / nx**2


def grad_mode_energy(coeffs, Lambda, nx, ny):
    """Mode energy of the full gradient (dx and dy of each component)."""
    xi = wavenumbers(Lambda, nx)
    Dc = _apply_y(y_derivative(ny, 1), coeffs)
    return xi**2 * mode_energy(coeffs, Lambda, nx, ny) + mode_energy(Dc, Lambda, nx, ny)


def block_norms(field, grad=False):
    """||Delta_k a||_{L2} (or of grad a) for k in the partition range."""
    part = _partition(field)
    e = (grad_mode_energy if grad else mode_energy)(field.coeffs, field.Lambda, field.nx, field.ny)
    return np.sqrt(part.weights**2 @ e)


def besov_norm(field, s=0.0):
    part = _partition(field)
    return float(np.sum(2.0 ** (s * part.k_range) * block_norms(field)))


def grad_besov_norm(field):
    """||grad a||_{B^0}."""
    return float(np.sum(block_norms(field, grad=True)))


def log_weighted_besov(energy, Lambda, nx, rho, s=0.0):
    """log sum_k 2^{ks} (sum_xi phi_k^2 e^{2 rho xi} e(xi))^{1/2} from mode energies."""
    part = dyadic_partition(float(Lambda), nx)
    xi = part.xi
    with np.errstate(divide="ignore"):
        le = np.log(energy)
        lw = 2.0 * np.log(part.weights)
    terms = lw + (2.0 * rho * xi + le)[None, :]
    blocks = 0.5 * logsumexp(terms, axis=1)
    return float(logsumexp(blocks + s * part.k_range * np.log(2.0)))


def lp_l2(field, p):
    """||a||_{L^p_x(L^2_y)} with periodic rectangle rule in x."""
    vals = field.values()
    w = y_weights(field.ny)
    col = np.sqrt(np.einsum("cij,j->i", vals**2, w))
    dxs = field.Lambda / field.nx
    if np.isinf(p):
        return float(col.max())
    return float((np.sum(col**p) * dxs) ** (1.0 / p))


def l2_linf(field):
    """||a||_{L^2_x(L^inf_y)}."""
    vals = field.values()
    col = np.max(np.sqrt(np.sum(vals**2, axis=0)), axis=1)
    return float(np.sqrt(np.sum(col**2) * field.Lambda / field.nx))


def linf(field):
    return float(np.max(np.sqrt(np.sum(field.values() ** 2, axis=0))))


# --------------------------------------------------------------------------
# analytic multiplier and the modulus transform
# --------------------------------------------------------------------------


def support_xi_max(field, tol=0.0):
    xi = field.xi
    mag = np.max(np.abs(field.coeffs), axis=(0, 2))
    nz = np.nonzero(mag > tol * max(mag.max(), 1e-300))[0]
    return float(xi[nz[-1]]) if len(nz) else 0.0


def analytic_multiplier(field, rho):
    """e^{rho |d_x|}; refuses when rho * xi_max exceeds the overflow guard."""
    xmax = support_xi_max(field)
    if rho * xmax > OVERFLOW_EXP:
        raise MultiplierOverflowError(
            f"rho={rho} too large for support |xi| <= {xmax:.4g}; max admissible rho is {OVERFLOW_EXP / xmax:.6g}")
    return replace(field, coeffs=field.coeffs * np.exp(rho * field.xi)[None, :, None])


def modulus(field):
    """a^+ = F^{-1} |F a| (per y row)."""
    return replace(field, coeffs=np.abs(field.coeffs).astype(complex), divergence_free=False, no_slip=False)


def inner(a, b):
    """<a, b> over the band (sum over components)."""
    w = y_weights(a.ny)
    return float(np.einsum("cij,cij,j->", a.values(), b.values(), w) * a.Lambda / a.nx)


def product(a, b):
    """Pointwise product of scalar fields (no dealiasing: inputs must be band-limited to nx/4)."""
    return from_values(a.values()[0] * b.values()[0], a.Lambda)


def band_limit(field, N):
    keep = (field.xi <= N + 1e-12)[None, :, None]
    return replace(field, coeffs=np.where(keep, field.coeffs, 0.0))


# --------------------------------------------------------------------------
# random admissible samples
# --------------------------------------------------------------------------


def random_profile(rng, ny, noslip=True, n_modes=6):
    """Random smooth y-profile; vanishes at both walls when noslip."""
    y = np.linspace(-1.0, 1.0, ny)
    c = rng.standard_normal(n_modes) / (1.0 + np.arange(n_modes))
    p = np.polynomial.legendre.legval(y, c)
    if noslip:
        p = p * (1.0 - y**2)
    return p


def random_band_field(rng, Lambda, nx, ny, xi_lo, xi_hi, components=1, noslip=False):
    """Random field whose x-spectrum sits in xi_lo <= |xi| <= xi_hi."""
    xi = wavenumbers(Lambda, nx)
    sel = np.nonzero((xi >= xi_lo - 1e-12) & (xi <= xi_hi + 1e-12) & (np.arange(len(xi)) < nx // 2))[0]
    c = np.zeros((components, len(xi), ny), complex)
    if len(sel) == 0:
        return BandField(float(Lambda), nx, ny, c)
    picks = rng.choice(sel, size=min(len(sel), rng.integers(1, 5)), replace=False)
    for comp in range(components):
        for m in picks:
            amp = rng.standard_normal() + 1j * rng.standard_normal()
            if m == 0:
                amp = amp.real
            c[comp, m] = amp * nx * random_profile(rng, ny, noslip)
    return BandField(float(Lambda), nx, ny, c)


def random_solenoidal(rng, Lambda, nx, ny, xi_hi):
    """Divergence-free no-slip field from a random stream function psi = E theta."""
    xi = wavenumbers(Lambda, nx)
    E = noslip_basis(ny)
    y = np.linspace(-1.0, 1.0, ny)
    psi = np.zeros((1, len(xi), ny), complex)
    for m in range(1, len(xi)):
        if xi[m] > xi_hi + 1e-12 or m >= nx // 2:
            continue
        prof = (1.0 - y**2) ** 2 * random_profile(rng, ny, noslip=False)
        amp = (rng.standard_normal() + 1j * rng.standard_normal()) * np.exp(-0.3 * m)
        psi[0, m] = amp * nx * (E @ prof[2:-2])
    f = perp_grad(BandField(float(Lambda), nx, ny, psi))
    return replace(f, no_slip=True)


# --------------------------------------------------------------------------
# inequality checks
# --------------------------------------------------------------------------


@dataclass
class InequalityReport:
    name: str
    worst_ratio: float      # max over samples of lhs / rhs (constant-free form)
    bound: float            # the constant the ratio is compared with
    n_samples: int
    passed: bool
    detail: dict = field(default_factory=dict)


def _xdx(field):
    return replace(field, coeffs=field.coeffs * (1j * field.xi)[None, :, None])


def verify_bernstein(n_samples=100, seed=0, Lambda=8.0, nx=256, ny=33, declared=C_B):
    """Best constants of the ball and ring inequalities over random samples.

    For each sample a dyadic index k is drawn from the resolved range and the
    spectrum is drawn inside the ball 2^-k|xi| <= 100 or the ring
    1/100 <= 2^-k|xi| <= 100.  Both inequalities are checked for every
    p <= q in {1, 2, inf} and alpha in {0, 1}.
    """
    rng = np.random.default_rng(seed)
    part = dyadic_partition(float(Lambda), nx)
    xi = part.xi
    ps = [1.0, 2.0, np.inf]
    ball, ring = 0.0, 0.0
    worst = {}
    for _ in range(n_samples):
        k = int(rng.integers(part.k_min + 2, part.k_max + 1))
        a_ball = random_band_field(rng, Lambda, nx, ny, 0.0, min(100.0 * 2.0**k, xi[-2]))
        lo = 2.0**k / 100.0
        # half the ring samples sit at the lowest admissible frequencies, where
        # the ring constant is attained
        hi = 4.0 * max(lo, xi[1]) if rng.random() < 0.5 else min(100.0 * 2.0**k, xi[-2])
        a_ring = random_band_field(rng, Lambda, nx, ny, lo, hi)
        for alpha in (0, 1):
            da = _xdx(a_ball) if alpha else a_ball
            for ip, p in enumerate(ps):
                den = lp_l2(a_ball, p)
                if den == 0:
                    continue
                for q in ps[ip:]:
                    invp = 0.0 if np.isinf(p) else 1.0 / p
                    invq = 0.0 if np.isinf(q) else 1.0 / q
                    r = lp_l2(da, q) / (2.0 ** (k * (alpha + invp - invq)) * den)
                    if r > ball:
                        ball = r
                        worst["ball"] = (k, alpha, p, q)
            dr = _xdx(a_ring) if alpha else a_ring
            for p in ps:
                den = 2.0 ** (-k * alpha) * lp_l2(dr, p)
                if den == 0:
                    continue
                r = lp_l2(a_ring, p) / den
                if r > ring:
                    ring = r
                    worst["ring"] = (k, alpha, p)
    return (InequalityReport("bernstein-ball", ball, declared, n_samples, ball <= declared, worst),
            InequalityReport("bernstein-ring", ring, declared, n_samples, ring <= declared, worst))


def verify_gns(n_samples=100, seed=0, ny=257):
    """||a||_inf <= ||a||^{1/2} ||a'||^{1/2} for a in H^1_0(-1, 1)."""
    rng = np.random.default_rng(seed)
    w = y_weights(ny)
    D = y_derivative(ny, 1)
    worst = 0.0
    for _ in range(n_samples):
        a = random_profile(rng, ny, noslip=True, n_modes=int(rng.integers(2, 12)))
        lhs = np.max(np.abs(a))
        rhs = np.sqrt(np.sqrt(np.sum(w * a**2)) * np.sqrt(np.sum(w * (D @ a) ** 2)))
        worst = max(worst, lhs / rhs)
    return InequalityReport("gagliardo-nirenberg", worst, 1.0, n_samples, worst <= 1.0)


def verify_vertical_embedding(n_samples=100, seed=0, Lambda=8.0, nx=64, ny=65, declared=C_B):
    """||Delta_k a_2||_{L2(Linf)} <= C_B 2^{k/2} ||Delta_k a|| on solenoidal no-slip samples."""
    rng = np.random.default_rng(seed)
    part = dyadic_partition(float(Lambda), nx)
    worst = 0.0
    for _ in range(n_samples):
        a = random_solenoidal(rng, Lambda, nx, ny, part.xi[-1])
        for k in part.k_range:
            blk = dyadic_block(a, k)
            den = np.sqrt(np.sum(mode_energy(blk.coeffs, Lambda, nx, ny)))
            if den == 0:
                continue
            a2 = replace(blk, coeffs=blk.coeffs[1:2])
            worst = max(worst, l2_linf(a2) / (2.0 ** (0.5 * k) * den))
    return InequalityReport("vertical-embedding", worst, declared, n_samples, worst <= declared)


def verify_embedding(n_samples=100, seed=0, Lambda=8.0, nx=64, ny=65, declared=C_B):
    """Both embeddings of the dyadic sums into ||grad a||_{B^0} for a in H^1_0."""
    rng = np.random.default_rng(seed)
    part = dyadic_partition(float(Lambda), nx)
    w1 = w2 = 0.0
    for _ in range(n_samples):
        a = random_band_field(rng, Lambda, nx, ny, part.xi[1], part.xi[-2], components=2, noslip=True)
        g = grad_besov_norm(a)
        if g == 0:
            continue
        s1 = s2 = 0.0
        for k in part.k_range:
            blk = dyadic_block(a, k)
            s1 += 2.0 ** (0.5 * k) * l2_linf(blk)
            s2 += linf(blk)
        w1 = max(w1, s1 / g)
        w2 = max(w2, s2 / g)
    return (InequalityReport("embedding-l2linf", w1, declared, n_samples, w1 <= declared),
            InequalityReport("embedding-linf", w2, declared**2, n_samples, w2 <= declared**2))


def verify_product(n_samples=100, seed=0, Lambda=8.0, nx=64, ny=33, rho=0.5, N=None):
    """Modulus identity ||a+|| = ||a|| and the modulus majorisation of products.

    The product report holds max (|lhs| - rhs) / scale, which must not exceed
    round-off.
    """
    rng = np.random.default_rng(seed)
    xi = wavenumbers(Lambda, nx)
    qmax = xi[nx // 4 - 1]
    N = qmax if N is None else N
    iso = 0.0
    worst = -np.inf
    for _ in range(n_samples):
        a = random_band_field(rng, Lambda, nx, ny, 0.0, qmax / 2)
        b = random_band_field(rng, Lambda, nx, ny, 0.0, qmax / 2)
        c = random_band_field(rng, Lambda, nx, ny, 0.0, qmax)
        na = np.sqrt(np.sum(mode_energy(a.coeffs, Lambda, nx, ny)))
        npl = np.sqrt(np.sum(mode_energy(modulus(a).coeffs, Lambda, nx, ny)))
        iso = max(iso, abs(npl - na) / na)
        lhs = abs(inner(analytic_multiplier(band_limit(product(a, b), N), rho), c))
        ap, bp, cp = analytic_multiplier(modulus(a), rho), analytic_multiplier(modulus(b), rho), modulus(c)
        rhs = abs(inner(product(ap, bp), cp))
        # both sides vanish when the spectra do not interact; measure the
        # excess against the natural scale of the trilinear form
        scale = lp_l2(ap, 2.0) * linf(bp) * lp_l2(cp, 2.0)
        if scale > 0:
            worst = max(worst, (lhs - rhs) / scale)
    return (InequalityReport("modulus-isometry", iso, 1e-12, n_samples, iso <= 1e-12),
            InequalityReport("modulus-product", worst, 1e-12, n_samples, worst <= 1e-12))


def inequality_reports(n_samples=100, seed=0):
    """Every inequality check as a flat list of reports."""
    out = []
    for fn in (verify_bernstein, verify_gns, verify_vertical_embedding, verify_embedding, verify_product):
        r = fn(n_samples, seed)
        out.extend(r if isinstance(r, tuple) else (r,))
    return out


def measured_bernstein_constant(n_samples=100, seed=0):
    """Largest best-constant ratio over the ball and ring inequalities."""
    return float(max(r.worst_ratio for r in verify_bernstein(n_samples, seed)))


# --------------------------------------------------------------------------
# analyticity radius
# --------------------------------------------------------------------------


@dataclass(frozen=True)
class RadiusConstants:
    """Prefactors of the radius ODE and of beta.

    'proof' uses the proof constants; 'measured' replaces C_B by a measured
    Bernstein constant and every numeric prefactor by 1.
    """

    name: str
    C_B: float
    k_layer: float = 1e2    # multiplies C_B * ||z dz v0||
    k_drain: float = 1e7    # multiplies C_B^4 eps e^{beta*}
    k_beta_w: float = 5.0
    k_beta_l: float = 1e9   # multiplies C_B^2 eps l1^2
    k_beta_a: float = 10.0

    @classmethod
    def proof(cls, C_B=C_B):
        return cls("proof", float(C_B))

    @classmethod
    def measured(cls, C_B):
        return cls("measured", float(C_B), 1.0, 1.0, 1.0, 1.0, 1.0)


def initial_radius(zdz_integral, const):
    """rho_0 = 2 + k C_B int ||z dz v0||_inf dt."""
    return 2.0 + const.k_layer * const.C_B * zdz_integral


def alpha_weight(t, epsilon, kappa):
    return epsilon**kappa + 1.0 / (1.0 + np.asarray(t, dtype=float) ** 2)


def log_ell1(grad_u1_energy, Lambda, nx, rho0):
    """log of sum_k ||e^{rho0 |dx|} Delta_k grad u1||."""
    return log_weighted_besov(grad_u1_energy, Lambda, nx, rho0)


def log_beta_rate(sup_w, log_l1, alpha, epsilon, const):
    """log of the integrand of beta: k5 sup|.| + k9 C_B^2 eps l1^2 + k10 alpha."""
    parts = [np.log(const.k_beta_w * sup_w) if sup_w > 0 else -np.inf,
             np.log(const.k_beta_l * const.C_B**2 * epsilon) + 2.0 * log_l1,
             np.log(const.k_beta_a * alpha)]
    return float(logsumexp(parts))


@dataclass
class AnalyticityState:
    t: float
    rho: float
    log_beta: float          # log beta(t) (beta can exceed the float range)
    rho0: float
    layer_loss: float = 0.0  # accumulated k C_B int ||z dz v0||
    drain: float = 0.0       # accumulated nonlinear part
    history: list = field(default_factory=list)


def integrate_beta(times, sup_w, log_l1, epsilon, kappa, const):
    """log beta(t_i) by the left-point rule; returns an array aligned with times."""
    times = np.asarray(times, dtype=float)
    out = np.full(len(times), -np.inf)
    acc = -np.inf
    for i in range(1, len(times)):
        dt = times[i] - times[i - 1]
        rate = log_beta_rate(sup_w[i - 1], log_l1[i - 1], alpha_weight(times[i - 1], epsilon, kappa),
                             epsilon, const)
        acc = float(np.logaddexp(acc, rate + np.log(dt)))
        out[i] = acc
    return out


def _beta_diff(log_bstar, log_b):
    """beta* - beta(t) from logs, stable when both are large."""
    if log_b == -np.inf:
        return np.exp(log_bstar) if log_bstar < 700 else np.inf
    d = log_bstar - log_b
    if d <= 0:
        return 0.0
    big = log_b + np.log(np.expm1(d)) if d < 700 else log_bstar
    return np.exp(big) if big < 700 else np.inf


def track_radius(state, zdz_v0, grad_r_energy, Lambda, nx, dt, epsilon, log_beta_star, log_beta_next,
                 const):
    """One forward-Euler step of the radius ODE.

    drain = k C_B^4 eps e^{beta* - beta} ||e^{rho |dx|} grad r||_{B^0}, all in
    log space.  Raises RadiusCollapse when rho would become negative.
    """
    lin = const.k_layer * const.C_B * zdz_v0
    if np.any(grad_r_energy > 0):
        lognorm = log_weighted_besov(grad_r_energy, Lambda, nx, state.rho)
        gap = _beta_diff(log_beta_star, state.log_beta)
        log_drain = np.log(const.k_drain * const.C_B**4 * epsilon) + gap + lognorm
    else:
        log_drain = -np.inf
    drain = np.exp(log_drain) if log_drain < 700 else np.inf
    rho_new = state.rho - dt * (lin + drain)
    row = (state.t + dt, rho_new, log_beta_next, log_drain)
    state.history.append(row)
    if not rho_new >= 0.0:
        raise RadiusCollapse(
            f"radius collapsed at t={state.t + dt:.4g}: log(drain rate)={log_drain:.4g}, rho before={state.rho:.4g}",
            state.t + dt, state.history)
    state.layer_loss += dt * lin
    state.drain += dt * drain
    state.t += dt
    state.rho = rho_new
    state.log_beta = log_beta_next
    return state


def radius_history(times, zdz_v0, sup_w, grad_u1_energy, grad_r_energy, Lambda, nx, epsilon, kappa,
                   const, zdz_integral=None):
    """Integrate rho and beta along stored series.

    ``grad_u1_energy[i]`` and ``grad_r_energy[i]`` are mode energies of grad
    u1 and grad r at times[i].  ``zdz_integral`` (the full-time integral of
    ||z dz v0||) sets rho_0; it defaults to the left-point sum the radius
    is stepped with, so that rho(inf) = 2 exactly when the drain vanishes.
    Returns (rows, summary) where rows carry t, rho, log beta, log drain rate.
    """
    times = np.asarray(times, dtype=float)
    if zdz_integral is None:
        zdz_integral = float(np.sum(np.asarray(zdz_v0)[:-1] * np.diff(times)))
    rho0 = initial_radius(zdz_integral, const)
    log_l1 = np.array([log_ell1(g, Lambda, nx, rho0) if np.any(g > 0) else -np.inf for g in grad_u1_energy])
    log_beta = integrate_beta(times, sup_w, log_l1, epsilon, kappa, const)
    log_bstar = float(log_beta[-1])
    st = AnalyticityState(0.0, rho0, -np.inf, rho0)
    st.history.append((0.0, rho0, -np.inf, -np.inf))
    collapsed = None
    for i in range(1, len(times)):
        try:
            track_radius(st, zdz_v0[i - 1], grad_r_energy[i - 1], Lambda, nx, times[i] - times[i - 1],
                         epsilon, log_bstar, log_beta[i], const)
        except RadiusCollapse as exc:
            collapsed = exc
            break
    summary = {
        "variant": const.name,
        "C_B": const.C_B,
        "rho0": rho0,
        "rho_final": st.rho if collapsed is None else float("nan"),
        "layer_loss": st.layer_loss,
        "drain": st.drain,
        "log10_beta_star": log_bstar / np.log(10.0),
        "log10_ell1_max": float(np.max(log_l1)) / np.log(10.0),
        "collapsed": collapsed is not None,
        "collapse_time": collapsed.t if collapsed is not None else None,
        "collapse_reason": str(collapsed) if collapsed is not None else "",
    }
    return st.history, summary

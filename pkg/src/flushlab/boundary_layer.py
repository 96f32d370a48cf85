"""Boundary-layer profile V(t, z) on the half line.

V solves the heat equation dV/dt = d2V/dz2 on z > 0 with V(t, 0) = h(t) and
V(0, z) = 0.  The half line is truncated at z_max with a homogeneous Dirichlet
row.  After the datum switches off the solution only spreads, so the stepper
can double the domain (keeping the node count) and grow the time step; this
keeps long decay runs cheap without losing relative accuracy.

Besides the Crank-Nicolson solver the module has an exact evaluator of the
heat-kernel representation, used as an oracle and wherever V is needed at
arbitrary (t, z) with quadrature accuracy.
"""

from dataclasses import dataclass, field

import numpy as np
from scipy.interpolate import CubicSpline
from scipy.linalg import solve_banded
from scipy.special import erfc

from .fitting import FitError, fit_power_law
from .flush_profile import bump_derivatives, eval_h
from .stencils import derivative_matrix, trapezoid_weights

Z_MAX_MIN = 40.0
NZ_MIN = 400
TAIL_TOL = 1e-12


class TruncationError(RuntimeError):
    """The solution reached the artificial boundary at z_max."""


class OrderError(ValueError):
    pass


# --------------------------------------------------------------------------
# exact evaluation of the heat-kernel representation
# --------------------------------------------------------------------------

_U_CAP = 8.0  # exp(-64) is far below double precision relative to h
_PIECES = 16
_GL_U = np.polynomial.legendre.leggauss(24)
_GL_S = np.polynomial.legendre.leggauss(64)


def _bump_pieces(profile, t):
    """(c, r, a, s0, s1) for bumps that started before t."""
    out = []
    for c, r, a in zip(profile.centers, profile.widths, profile.coefficients):
        s0, s1 = c - r, min(c + r, t)
        if a != 0.0 and s1 > s0:
            out.append((c, r, a, s0, s1))
    return out


def layer_exact(profile, t, z, dz_order=0):
    """V(t, z), dV/dz or d2V/dz2 (dz_order 0, 1, 2) from the heat-kernel formula.

    Uses the substitution u = z / (2 sqrt(t - s)), which turns

        V = int_0^t z/(2 sqrt(pi) (t-s)^{3/2}) exp(-z^2/(4(t-s))) h(s) ds

    into (2/sqrt(pi)) int exp(-u^2) h(t - z^2/(4u^2)) du, integrated per bump
    on a geometric partition of the u-range.  Since V_zz = V_t, the second
    derivative is the same integral with h replaced by h'.
    """
    if dz_order not in (0, 1, 2):
        raise OrderError("dz_order must be 0, 1 or 2")
    z = np.atleast_1d(np.asarray(z, dtype=float))
    out = np.zeros_like(z)
    if t <= 0.0:
        return out
    pos = z > 0
    zero = ~pos
    xg, wg = _GL_U
    for c, r, a, s0, s1 in _bump_pieces(profile, t):
        # z > 0: log-u partition
        if np.any(pos):
            zp = z[pos]
            u_lo = zp / (2.0 * np.sqrt(t - s0))
            u_hi = np.full_like(zp, _U_CAP) if s1 >= t else np.minimum(zp / (2.0 * np.sqrt(t - s1)), _U_CAP)
            ok = u_hi > u_lo
            if np.any(ok):
                lo = np.log(u_lo[ok])
                hi = np.log(u_hi[ok])
                edges = lo[:, None] + (hi - lo)[:, None] * np.linspace(0.0, 1.0, _PIECES + 1)[None, :]
                mid = 0.5 * (edges[:, 1:] + edges[:, :-1])
                half = 0.5 * (edges[:, 1:] - edges[:, :-1])
                ell = mid[:, :, None] + half[:, :, None] * xg[None, None, :]
                u = np.exp(ell)
                zz = zp[ok][:, None, None]
                s = t - zz**2 / (4.0 * u**2)
                sarg = (s - c) / r
                if dz_order == 0:
                    f = np.exp(-u**2) * bump_derivatives(sarg, 0)[0] * u
                    val = (2.0 / np.sqrt(np.pi)) * np.sum(f * half[:, :, None] * wg, axis=(1, 2))
                elif dz_order == 2:
                    f = np.exp(-u**2) * bump_derivatives(sarg, 1)[1] / r * u
                    val = (2.0 / np.sqrt(np.pi)) * np.sum(f * half[:, :, None] * wg, axis=(1, 2))
                else:
                    hdot = bump_derivatives(sarg, 1)[1] / r
                    f = np.exp(-u**2) * hdot / u**2 * u
                    val = -(zp[ok] / np.sqrt(np.pi)) * np.sum(f * half[:, :, None] * wg, axis=(1, 2))
                tmp = np.zeros_like(zp)
                tmp[ok] = val
                out[pos] += a * tmp
        if np.any(zero) and dz_order == 1:
            # dV/dz(t, 0) = -(2/sqrt(pi)) int_0^{sqrt t} h'(t - sigma^2) dsigma
            xs, ws = _GL_S
            sig_lo, sig_hi = np.sqrt(t - s1), np.sqrt(t - s0)
            sig = 0.5 * (sig_hi + sig_lo) + 0.5 * (sig_hi - sig_lo) * xs
            hdot = bump_derivatives((t - sig**2 - c) / r, 1)[1] / r
            out[zero] += a * (-(2.0 / np.sqrt(np.pi)) * 0.5 * (sig_hi - sig_lo) * np.sum(ws * hdot))
    if np.any(zero) and dz_order in (0, 2):
        out[zero] = eval_h(profile, np.full(np.count_nonzero(zero), t), dz_order // 2)
    return out


def layer_constant_datum(t, z):
    """Reference solution for a unit step datum: erfc(z / (2 sqrt t))."""
    return erfc(np.asarray(z) / (2.0 * np.sqrt(t)))


# --------------------------------------------------------------------------
# Crank-Nicolson stepper
# --------------------------------------------------------------------------


class LayerStepper:
    """Crank-Nicolson time stepper for the truncated half-line problem.

    The grid is uniform, z_i = i * z_max / (nz - 1).  With ``regrid`` enabled
    and once the boundary datum has switched off for good, the domain doubles
    (every other node is kept) whenever the tail of the solution becomes
    visible at the outer boundary.
    """

    def __init__(self, profile, z_max=Z_MAX_MIN, nz=4001, regrid=False):
        if z_max < Z_MAX_MIN:
            raise ValueError(f"z_max must be at least {Z_MAX_MIN}")
        if nz < NZ_MIN:
            raise ValueError(f"nz must be at least {NZ_MIN}")
        if regrid and (nz - 1) % 2:
            raise ValueError("regridding needs an odd node count")
        self.profile = profile
        self.nz = int(nz)
        self.z = np.linspace(0.0, z_max, self.nz)
        self.V = np.zeros(self.nz)
        self.t = 0.0
        self.regrid = regrid
        self.datum_end = max(np.asarray(profile.centers) + np.asarray(profile.widths)) if not profile.is_zero() else 0.0
        self.regrids = 0
        self._cache = None

    @property
    def dz(self):
        return self.z[1] - self.z[0]

    @property
    def z_max(self):
        return self.z[-1]

    def _banded(self, dt):
        key = (dt, self.dz)
        if self._cache is None or self._cache[0] != key:
            lam = dt / self.dz**2
            m = self.nz - 2
            ab = np.zeros((3, m))
            ab[0, 1:] = -0.5 * lam
            ab[1, :] = 1.0 + lam
            ab[2, :-1] = -0.5 * lam
            self._cache = (key, ab, lam)
        return self._cache[1], self._cache[2]

    def step(self, dt):
        ab, lam = self._banded(dt)
        V = self.V
        h_new = float(eval_h(self.profile, self.t + dt))
        rhs = V[1:-1] + 0.5 * lam * (V[2:] - 2.0 * V[1:-1] + V[:-2])
        rhs[0] += 0.5 * lam * h_new
        Vn = np.empty_like(V)
        Vn[1:-1] = solve_banded((1, 1), ab, rhs)
        Vn[0] = h_new
        Vn[-1] = 0.0
        self.V = Vn
        self.t += dt
        if self.regrid and self.t > self.datum_end:
            self._maybe_grow()

    def tail_value(self):
        """Largest |V| over the outer 10% of the domain."""
        k = max(int(0.9 * self.nz), 1)
        return float(np.max(np.abs(self.V[k:])))

    def _maybe_grow(self):
        scale = max(np.max(np.abs(self.V)), 1e-300)
        if self.tail_value() <= TAIL_TOL * scale:
            return
        half = (self.nz - 1) // 2
        Vn = np.zeros_like(self.V)
        Vn[: half + 1] = self.V[::2]
        self.V = Vn
        self.z = np.linspace(0.0, 2.0 * self.z_max, self.nz)
        self.regrids += 1
        self._cache = None

    def spline(self):
        return CubicSpline(self.z, self.V)

    def probe(self, zq, dz_order=0):
        """V or dV/dz at arbitrary z by cubic interpolation, zero beyond z_max."""
        zq = np.asarray(zq, dtype=float)
        sp = self.spline()
        val = sp(zq, dz_order)
        return np.where(zq <= self.z_max, val, 0.0)


@dataclass
class BoundaryLayerField:
    profile: object
    dt: float
    nz: int
    times: np.ndarray
    z_max: list = field(default_factory=list)
    values: list = field(default_factory=list)
    regrids: int = 0

    def grid(self, i):
        return np.linspace(0.0, self.z_max[i], self.nz)

    def snapshot(self, i):
        return self.grid(i), self.values[i]

    def evaluate(self, i, z, dz_order=0):
        zq = np.asarray(z, dtype=float)
        sp = CubicSpline(self.grid(i), self.values[i])
        return np.where(zq <= self.z_max[i], sp(zq, dz_order), 0.0)

    def norm_history(self, s=0, m=0):
        return np.array([weighted_sobolev_norm(v, self.z_max[i] / (self.nz - 1), s, m)
                         for i, v in enumerate(self.values)])

    def to_csv_rows(self, stride=1):
        rows = []
        for i, t in enumerate(self.times):
            z, v = self.snapshot(i)
            for zz, vv in zip(z[::stride], v[::stride]):
                rows.append((t, zz, vv))
        return rows


def solve_boundary_layer(profile, z_max=Z_MAX_MIN, nz=4001, dt=1e-3, t_end=1.0,
                         snapshot_times=None, regrid=False, growth=0.0):
    """Crank-Nicolson solution up to t_end with snapshots at the given times.

    ``growth`` > 0 lets the step grow to ``growth * t`` once the datum has
    switched off; ``regrid`` enables domain doubling in that phase.  Without
    regridding a TruncationError is raised if the tail reaches z_max.
    """
    stepper = LayerStepper(profile, z_max, nz, regrid=regrid)
    if snapshot_times is None:
        snapshot_times = np.linspace(0.0, t_end, 101)
    snapshot_times = np.unique(np.clip(np.asarray(snapshot_times, dtype=float), 0.0, t_end))
    out = BoundaryLayerField(profile, dt, nz, snapshot_times)
    k = 0
    while k < len(snapshot_times) and snapshot_times[k] <= 0.0:
        out.z_max.append(stepper.z_max)
        out.values.append(stepper.V.copy())
        k += 1
    while k < len(snapshot_times):
        step = dt
        if growth > 0 and stepper.t > stepper.datum_end:
            step = max(dt, growth * stepper.t)
        target = snapshot_times[k]
        if stepper.t + step >= target - 1e-12 * max(1.0, target):
            step = target - stepper.t
        stepper.step(step)
        if not regrid and stepper.tail_value() > TAIL_TOL * max(1.0, np.max(np.abs(stepper.V))):
            raise TruncationError(
                f"solution reached z_max={stepper.z_max} at t={stepper.t:.4g} "
                f"(tail {stepper.tail_value():.3e}); enlarge z_max or enable regridding")
        if abs(stepper.t - target) <= 1e-12 * max(1.0, target):
            stepper.t = target
            out.z_max.append(stepper.z_max)
            out.values.append(stepper.V.copy())
            k += 1
    out.regrids = stepper.regrids
    return out


# --------------------------------------------------------------------------
# weighted norms and decay verification
# --------------------------------------------------------------------------

_DERIV_CACHE = {}


def _dmat(n, h, order):
    key = (n, h, order)
    if key not in _DERIV_CACHE:
        if len(_DERIV_CACHE) > 32:
            _DERIV_CACHE.clear()
        _DERIV_CACHE[key] = derivative_matrix(n, h, order, accuracy=4)
    return _DERIV_CACHE[key]


@dataclass
class WeightedNorm:
    s: int
    m: int
    value: float


def weighted_sobolev_norm(values, dz, s=0, m=0, as_record=False):
    """H^{s,m} norm: sum over alpha <= s of int (1+z^2)^m |d^alpha f|^2 dz."""
    if not 0 <= s <= 3:
        raise OrderError("s must be in [0, 3]")
    if m < 0:
        raise OrderError("m must be non-negative")
    f = np.asarray(values, dtype=float)
    n = f.size
    z = dz * np.arange(n)
    w = trapezoid_weights(n, dz) * (1.0 + z**2) ** m
    total = float(np.sum(w * f**2))
    for alpha in range(1, s + 1):
        d = _dmat(n, dz, alpha) @ f
        total += float(np.sum(w * d**2))
    val = np.sqrt(total)
    return WeightedNorm(s, m, val) if as_record else val


def decay_exponent_target(n, m):
    return 0.25 + (2 * n + 1) / 2.0 - m / 2.0


@dataclass
class DecayFit:
    exponent: float
    width: float
    threshold: float
    passed: bool
    inconclusive: bool
    n_points: int


def verify_decay_rate(bl, s=0, m=0, n=1, window_start=5.0):
    """Fit ||V(t)||_{H^{s,m}} ~ (ln(2+t)/(2+t))^p on t in [window_start*T, t_end]."""
    T = bl.profile.T
    target = decay_exponent_target(n, m)
    threshold = 0.9 * target
    times = np.asarray(bl.times)
    if bl.profile.is_zero():
        return DecayFit(np.inf, 0.0, threshold, True, False, 0)
    sel = np.nonzero(times >= window_start * T)[0]
    short = times[-1] < 50.0 * T
    norms = np.array([weighted_sobolev_norm(bl.values[i], bl.z_max[i] / (bl.nz - 1), s, m) for i in sel])
    try:
        fit = fit_power_law(times[sel], norms, model="log-corrected")
    except FitError:
        return DecayFit(np.nan, np.nan, threshold, False, True, len(sel))
    # the abscissa ln(2+t)/(2+t) itself decreases, so the slope is the decay exponent
    p = fit.exponent
    return DecayFit(p, fit.width, threshold, bool(p >= threshold), bool(short), fit.n_used)


# --------------------------------------------------------------------------
# Fourier moment criterion
# --------------------------------------------------------------------------


def _time_moments(profile, kmax):
    """M_k = int_0^T (h - h')(t) (T - t)^k dt for k = 0..kmax (Gauss-Legendre per bump)."""
    T = profile.T
    x, w = np.polynomial.legendre.leggauss(128)
    out = np.zeros(kmax + 1)
    for c, r, a in zip(profile.centers, profile.widths, profile.coefficients):
        if a == 0.0:
            continue
        t = c + r * x
        b = bump_derivatives(x, 1)
        g = a * (b[0] - b[1] / r)
        for k in range(kmax + 1):
            out[k] += r * np.sum(w * g * (T - t) ** k)
    return out


def fourier_transform_at(profile, zeta):
    """f_T^(zeta) = -(2 i zeta/(1+zeta^2)) int_0^T exp(-(T-t) zeta^2)(h - h') dt."""
    T = profile.T
    zeta = np.atleast_1d(np.asarray(zeta, dtype=float))
    x, w = np.polynomial.legendre.leggauss(128)
    acc = np.zeros_like(zeta)
    for c, r, a in zip(profile.centers, profile.widths, profile.coefficients):
        if a == 0.0:
            continue
        t = c + r * x
        b = bump_derivatives(x, 1)
        g = a * (b[0] - b[1] / r)
        acc += r * np.sum(w * g * np.exp(-np.outer(zeta**2, T - t)), axis=1)
    return -2j * zeta / (1.0 + zeta**2) * acc


def fourier_derivatives_at_zero(profile, jmax):
    """d^j/dzeta^j f_T^(0) for j = 0..jmax.

    f_T^ = -2i g(zeta) G(zeta^2) with g = zeta/(1+zeta^2) = sum (-1)^l zeta^{2l+1}
    and G(w) = sum_k (-w)^k M_k / k!, M_k the time moments of (h - h') against
    (T - t)^k.  Only odd powers of zeta survive; the Taylor coefficients are
    combined by a Cauchy product.
    """
    kmax = jmax // 2 + 1
    M = _time_moments(profile, kmax)
    # coefficients of G(zeta^2) in powers of zeta
    Gc = np.zeros(jmax + 2)
    fact = 1.0
    for k in range(kmax + 1):
        if k > 0:
            fact *= k
        if 2 * k <= jmax + 1:
            Gc[2 * k] = (-1) ** k * M[k] / fact
    gc = np.zeros(jmax + 2)
    for l in range((jmax + 1) // 2 + 1):
        if 2 * l + 1 <= jmax + 1:
            gc[2 * l + 1] = (-1) ** l
    prod = np.convolve(gc, Gc)[: jmax + 1]
    out = np.zeros(jmax + 1, dtype=complex)
    fact = 1.0
    for j in range(jmax + 1):
        if j > 0:
            fact *= j
        out[j] = -2j * prod[j] * fact
    return out


def fourier_moment_check(profile, n=None):
    """max over j <= 2n of |d^j f_T^(0)|; the well-prepared criterion asks < 1e-8."""
    n = profile.n if n is None else n
    d = fourier_derivatives_at_zero(profile, 2 * n)
    return float(np.max(np.abs(d)))

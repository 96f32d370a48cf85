"""Fields on the periodised band [-Lambda/2, Lambda/2) x [-1, 1].

x is Fourier (real FFT, nx a power of two), y is a uniform grid with a
summation-by-parts first derivative (fourth order inside, second order at
the walls) and its diagonal quadrature.  Coefficients are stored per y-row with
shape (components, nx//2 + 1, ny).

Divergence-free fields with zero normal velocity are parametrised by stream
functions psi (u = (-dpsi/dy, dpsi/dx)); the Leray projector is the exact
orthogonal projection onto that set in the discrete L2 inner product, so it
is idempotent and discretely divergence-free by construction.
"""

import struct
from dataclasses import dataclass, replace
from functools import lru_cache

import numpy as np
from scipy.integrate import cumulative_simpson
from scipy.interpolate import CubicSpline
from scipy.linalg import cho_factor, cho_solve
from scipy.special import gammaln, logsumexp

from .cutoffs import wall_cutoff
from .stencils import sbp_first_derivative, sbp_norm

DIV_TOL = 1e-8
_MAGIC = b"BFLD"
_HEADER = struct.Struct("<4sIdIIIdI")


class DivergenceError(ValueError):
    pass


class ResolutionError(ValueError):
    pass


@dataclass(frozen=True)
class BandField:
    Lambda: float
    nx: int
    ny: int
    coeffs: np.ndarray  # (components, nx//2+1, ny) complex
    divergence_free: bool = False
    no_slip: bool = False

    @property
    def components(self):
        return self.coeffs.shape[0]

    @property
    def x(self):
        return band_grid(self.Lambda, self.nx, self.ny)[0]

    @property
    def y(self):
        return band_grid(self.Lambda, self.nx, self.ny)[1]

    @property
    def xi(self):
        return wavenumbers(self.Lambda, self.nx)

    def values(self):
        """Physical samples, shape (components, nx, ny)."""
        return inverse_fft(self.coeffs, self.nx)

    def with_coeffs(self, coeffs, **flags):
        return replace(self, coeffs=coeffs, **flags)

    def __add__(self, other):
        return replace(self, coeffs=self.coeffs + other.coeffs,
                       divergence_free=self.divergence_free and other.divergence_free,
                       no_slip=self.no_slip and other.no_slip)

    def __sub__(self, other):
        return self + other.scale(-1.0)

    def scale(self, a):
        return replace(self, coeffs=a * self.coeffs)


# --------------------------------------------------------------------------
# grids and transforms
# --------------------------------------------------------------------------


def _check_nx(nx):
    if nx < 2 or nx & (nx - 1):
        raise ValueError(f"nx must be a power of two, got {nx}")


@lru_cache(maxsize=32)
def band_grid(Lambda, nx, ny):
    _check_nx(nx)
    x = -0.5 * Lambda + Lambda * np.arange(nx) / nx
    y = np.linspace(-1.0, 1.0, ny)
    x.flags.writeable = False
    y.flags.writeable = False
    return x, y


@lru_cache(maxsize=32)
def wavenumbers(Lambda, nx):
    xi = 2.0 * np.pi * np.arange(nx // 2 + 1) / Lambda
    xi.flags.writeable = False
    return xi


def tangential_fft(values):
    """Real FFT along x (axis -2) of samples shaped (..., nx, ny)."""
    values = np.asarray(values, dtype=float)
    _check_nx(values.shape[-2])
    return np.fft.rfft(values, axis=-2)


def inverse_fft(coeffs, nx):
    return np.fft.irfft(coeffs, n=nx, axis=-2)


def from_values(values, Lambda, **flags):
    values = np.asarray(values, dtype=float)
    if values.ndim == 2:
        values = values[None]
    nx, ny = values.shape[-2:]
    return BandField(float(Lambda), nx, ny, tangential_fft(values), **flags)


def zeros(Lambda, nx, ny, components=1):
    return BandField(float(Lambda), nx, ny, np.zeros((components, nx // 2 + 1, ny), complex))


def l2_norm(field, x_range=None):
    """L2 norm over the torus band, or over x in x_range (trapezoid in x and y)."""
    vals = field.values()
    wy = y_weights(field.ny)
    dx = field.Lambda / field.nx
    if x_range is None:
        wx = np.full(field.nx, dx)
    else:
        wx = _window_weights(field.x, dx, *x_range)
    return float(np.sqrt(np.einsum("cxy,x,y->", vals**2, wx, wy)))


def _window_weights(x, dx, a, b):
    """Trapezoid weights for grid points inside [a, b] (endpoints on the grid)."""
    inside = (x >= a - 1e-12) & (x <= b + 1e-12)
    w = np.where(inside, dx, 0.0)
    idx = np.nonzero(inside)[0]
    if idx.size:
        w[idx[0]] *= 0.5
        w[idx[-1]] *= 0.5
    return w


def parseval_norm(field):
    """L2 norm from the Fourier coefficients."""
    c = field.coeffs
    nx = field.nx
    mult = np.full(c.shape[1], 2.0)
    mult[0] = 1.0
    if nx % 2 == 0:
        mult[-1] = 1.0
    wy = y_weights(field.ny)
    total = np.einsum("ckj,k,j->", np.abs(c) ** 2, mult, wy) * field.Lambda / nx**2
    return float(np.sqrt(total))


# --------------------------------------------------------------------------
# derivatives
# --------------------------------------------------------------------------


@lru_cache(maxsize=64)
def y_derivative(ny, order=1):
    """Powers of the summation-by-parts first-derivative matrix."""
    D = sbp_first_derivative(ny, 2.0 / (ny - 1))
    out = D
    for _ in range(order - 1):
        out = (D @ out).tocsr()
    return out


def y_weights(ny):
    """Quadrature weights in y matching the derivative operator."""
    return sbp_norm(ny, 2.0 / (ny - 1))


def _apply_y(mat, arr):
    shape = arr.shape
    flat = arr.reshape(-1, shape[-1])
    return (mat @ flat.T).T.reshape(shape)


def _ik(field, power=1):
    xi = wavenumbers(field.Lambda, field.nx)
    mult = (1j * xi) ** power
    if power % 2 and field.nx % 2 == 0:
        mult = mult.copy()
        mult[-1] = 0.0  # odd derivatives of the Nyquist mode are not real
    return mult[None, :, None]


def dx(field, order=1):
    return replace(field, coeffs=field.coeffs * _ik(field, order))


def dy(field, order=1):
    return replace(field, coeffs=_apply_y(y_derivative(field.ny, order), field.coeffs))


def divergence(field):
    c = field.coeffs
    out = c[0] * _ik(field)[0] + _apply_y(y_derivative(field.ny, 1), c[1])
    return replace(field, coeffs=out[None], divergence_free=False, no_slip=False)


def perp_grad(psi):
    """(-dpsi/dy, dpsi/dx) for a scalar field."""
    c = psi.coeffs[0]
    u1 = -_apply_y(y_derivative(psi.ny, 1), c)
    u2 = c * _ik(psi)[0]
    return replace(psi, coeffs=np.stack([u1, u2]), divergence_free=True, no_slip=False)


def gradient(q):
    c = q.coeffs[0]
    return replace(q, coeffs=np.stack([c * _ik(q)[0], _apply_y(y_derivative(q.ny, 1), c)]),
                   divergence_free=False, no_slip=False)


def divergence_defect(field):
    """max |div u| divided by max(|du1/dx|, |du2/dy|)."""
    d1 = inverse_fft(field.coeffs[0] * _ik(field)[0], field.nx)
    d2 = inverse_fft(_apply_y(y_derivative(field.ny, 1), field.coeffs[1]), field.nx)
    scale = max(np.max(np.abs(d1)), np.max(np.abs(d2)), 1e-300)
    return float(np.max(np.abs(d1 + d2)) / scale)


def hk_norm(field, k, x_range=None):
    """H^k norm: sum over a + b <= k of ||dx^a dy^b u||^2."""
    total = 0.0
    for a in range(k + 1):
        fa = dx(field, a) if a else field
        for b in range(k + 1 - a):
            fab = dy(fa, b) if b else fa
            total += l2_norm(fab, x_range) ** 2
    return float(np.sqrt(total))


# --------------------------------------------------------------------------
# projections
# --------------------------------------------------------------------------


def project_band_limit(field, N):
    """Zero the Fourier coefficients with |xi| > N."""
    xi = wavenumbers(field.Lambda, field.nx)
    keep = (xi <= N + 1e-12)[None, :, None]
    return replace(field, coeffs=np.where(keep, field.coeffs, 0.0))


@lru_cache(maxsize=16)
def _leray_factors(Lambda, nx, ny):
    D = y_derivative(ny, 1).toarray()
    w = y_weights(ny)
    Di = D[:, 1:-1]  # psi vanishes on both walls
    Wi = np.diag(w)
    base = Di.T @ Wi @ Di
    xi = wavenumbers(Lambda, nx)
    facs = [None]
    for k in range(1, len(xi)):
        facs.append(cho_factor(base + xi[k] ** 2 * np.diag(w[1:-1])))
    return D, w, facs


def leray_stream(field):
    """Stream-function coefficients (nk, ny) of the Leray projection of field."""
    D, w, facs = _leray_factors(field.Lambda, field.nx, field.ny)
    xi = wavenumbers(field.Lambda, field.nx)
    a1, a2 = field.coeffs[0], field.coeffs[1]
    psi = np.zeros_like(a1)
    for k in range(1, len(xi)):
        if field.nx % 2 == 0 and k == len(xi) - 1:
            continue  # Nyquist mode dropped
        rhs = -(D[:, 1:-1].T @ (w * a1[k])) - 1j * xi[k] * (w * a2[k])[1:-1]
        psi[k, 1:-1] = cho_solve(facs[k], rhs)
    return psi


def leray_project(field):
    """Orthogonal projection onto divergence-free fields tangent to the walls."""
    if field.components != 2:
        raise ValueError("Leray projection needs a vector field")
    psi = leray_stream(field)
    D = y_derivative(field.ny, 1)
    xi = wavenumbers(field.Lambda, field.nx)
    u1 = -_apply_y(D, psi)
    u2 = 1j * xi[:, None] * psi
    # the x-mean: u2 must vanish, u1 is unconstrained
    u1[0] = field.coeffs[0, 0]
    u2[0] = 0.0
    return replace(field, coeffs=np.stack([u1, u2]), divergence_free=True, no_slip=False)


def stream_function(field, tol=DIV_TOL):
    """psi with u = (-dpsi/dy, dpsi/dx) and psi(x, -1) = 0.

    Non-zero modes use psi = u2 / (i xi), exact for discretely divergence-free
    input; the x-mean uses psi = -int_{-1}^y u1 by cumulative Simpson.
    """
    if field.components != 2:
        raise ValueError("stream function needs a vector field")
    defect = divergence_defect(field)
    if defect > tol:
        raise DivergenceError(f"field is not divergence-free (relative divergence {defect:.3e})")
    xi = wavenumbers(field.Lambda, field.nx)
    psi = np.zeros_like(field.coeffs[0])
    nz = xi > 0
    psi[nz] = field.coeffs[1][nz] / (1j * xi[nz, None])
    if field.nx % 2 == 0:
        psi[-1] = 0.0
    y = band_grid(field.Lambda, field.nx, field.ny)[1]
    psi[0] = -cumulative_simpson(field.coeffs[0, 0].real, x=y, initial=0.0)
    return replace(field, coeffs=psi[None], divergence_free=False, no_slip=False)


# --------------------------------------------------------------------------
# amplification operator
# --------------------------------------------------------------------------

_GL_M = np.polynomial.legendre.leggauss(32)


def amplification_M(a, y, chi=wall_cutoff):
    """M[a](y) = -chi(y) int_0^1 a(+-1 -+ s(1 -+ y)) ds (sign of y picks the wall).

    ``a`` may carry leading axes; the last axis runs over the y grid.  Values
    at off-grid points come from a cubic spline.
    """
    a = np.asarray(a)
    y = np.asarray(y, dtype=float)
    c0 = chi(y)[0]
    sp = CubicSpline(y, a, axis=-1)
    s = 0.5 * (_GL_M[0] + 1.0)
    ws = 0.5 * _GL_M[1]
    wall = np.where(y < 0, -1.0, 1.0)
    pts = wall[:, None] - wall[:, None] * s[None, :] * (1.0 - wall[:, None] * y[:, None])
    vals = sp(pts)  # (..., ny, nodes)
    avg = np.sum(vals * ws, axis=-1)
    return -c0 * avg


# --------------------------------------------------------------------------
# no-slip stream-function space
# --------------------------------------------------------------------------


@lru_cache(maxsize=16)
def noslip_basis(ny):
    """Matrix E (ny x (ny-4)): free values psi_2..psi_{ny-3} -> full psi with
    psi = dpsi/dy = 0 on both walls (discrete one-sided derivative rows)."""
    D = y_derivative(ny, 1).toarray()
    E = np.zeros((ny, ny - 4))
    E[2:-2, :] = np.eye(ny - 4)
    # row 0 of D: sum_j D[0, j] psi_j = 0 with psi_0 = 0 fixes psi_1
    r0 = D[0]
    E[1, :] = -(r0[2:-2] @ np.eye(ny - 4)) / r0[1]
    rN = D[-1]
    E[-2, :] = -(rN[2:-2] @ np.eye(ny - 4)) / rN[-2]
    return E


def enforce_noslip_profile(profile):
    """Adjust psi_1 and psi_{ny-2} so that the discrete wall derivative vanishes."""
    p = np.array(profile, dtype=float)
    p[0] = p[-1] = 0.0
    E = noslip_basis(len(p))
    return E @ p[2:-2]


# --------------------------------------------------------------------------
# analytic data
# --------------------------------------------------------------------------


@dataclass
class AnalyticData:
    field: BandField
    psi: BandField
    band_limit: float
    rho: float
    C_b: float
    seed: int


def gevrey_constant(field, rho, m_max=None):
    """sup_m (rho^m / m!) ||dx^m u||_{H^3}, evaluated in log space."""
    xi = wavenumbers(field.Lambda, field.nx)
    c = field.coeffs
    nx = field.nx
    mult = np.full(c.shape[1], 2.0)
    mult[0] = 1.0
    if nx % 2 == 0:
        mult[-1] = 1.0
    wy = y_weights(field.ny)
    # spectral weight S(xi) = sum_{a+b<=3} xi^{2a} ||dy^b u^(xi)||^2
    S = np.zeros(len(xi))
    for b in range(4):
        cb = _apply_y(y_derivative(field.ny, b), c) if b else c
        eb = np.einsum("ckj,j->k", np.abs(cb) ** 2, wy) * mult * field.Lambda / nx**2
        for a in range(4 - b):
            S += xi ** (2 * a) * eb
    pos = S > 0
    if not np.any(pos):
        return 0.0
    logS = np.log(S[pos])
    logxi = np.log(np.where(xi[pos] > 0, xi[pos], 1e-300))
    if m_max is None:
        m_max = int(np.ceil(3.0 * rho * xi.max())) + 20
    best = -np.inf
    for m in range(m_max + 1):
        if m == 0:
            lognorm = 0.5 * logsumexp(logS)
        else:
            lognorm = 0.5 * logsumexp(2 * m * logxi + logS)
        val = m * np.log(rho) - gammaln(m + 1) + lognorm
        best = max(best, val)
    return float(np.exp(best))


def make_analytic_data(seed=0, Lambda=8.0, nx=128, ny=257, rho_target=3.0, N=8.0,
                       center=0.5, width=0.6, amplitude=1.0):
    """Divergence-free, no-slip, band-limited field from a separable stream function.

    psi(x, y) = X(x) Y(y), X a Gaussian bump with random spectral modulation
    truncated at |xi| <= N, Y = (1 - y^2)^2 (1 + c1 y + c2 y^2).  All
    randomness comes from numpy's default_rng(seed).
    """
    rng = np.random.default_rng(seed)
    x, y = band_grid(float(Lambda), nx, ny)
    xi = wavenumbers(float(Lambda), nx)
    mod = 1.0 + 0.3 * (rng.standard_normal(len(xi)) + 1j * rng.standard_normal(len(xi)))
    Xhat = np.exp(-0.5 * (width * xi) ** 2) * mod * np.exp(-1j * xi * (center + 0.5 * Lambda))
    Xhat[xi > N + 1e-12] = 0.0
    Xhat[0] = Xhat[0].real
    if nx % 2 == 0:
        Xhat[-1] = 0.0
    X = np.fft.irfft(Xhat, n=nx)
    X /= np.max(np.abs(X))
    c1, c2 = 0.5 * rng.standard_normal(2)
    Y = enforce_noslip_profile((1.0 - y**2) ** 2 * (1.0 + c1 * y + c2 * y**2))
    # the FFT round trip leaves round-off above N, which the Gevrey sup would amplify
    psi = project_band_limit(from_values(amplitude * np.outer(X, Y), Lambda), N)
    u = perp_grad(psi)
    u = replace(u, divergence_free=True, no_slip=True)
    C_b = gevrey_constant(u, rho_target)
    return AnalyticData(u, psi, float(N), float(rho_target), C_b, int(seed))


# --------------------------------------------------------------------------
# resolution check and I/O
# --------------------------------------------------------------------------


def check_wall_resolution(ny, epsilon):
    """The boundary layer of thickness sqrt(eps) needs ny >= 8/sqrt(eps) + 1."""
    need = int(np.ceil(8.0 / np.sqrt(epsilon))) + 1
    if ny < need:
        raise ResolutionError(f"ny={ny} under-resolves the wall layer at eps={epsilon}; need ny >= {need}")
    return need


def write_snapshot(path, field, time=0.0):
    """Little-endian binary: header (magic, version, Lambda, nx, ny, components, time, flags) + float64 samples."""
    flags = int(field.divergence_free) | (int(field.no_slip) << 1)
    head = _HEADER.pack(_MAGIC, 1, field.Lambda, field.nx, field.ny, field.components, float(time), flags)
    with open(path, "wb") as fh:
        fh.write(head)
        fh.write(field.values().astype("<f8").tobytes())


def read_snapshot(path):
    with open(path, "rb") as fh:
        raw = fh.read()
    magic, version, Lambda, nx, ny, comps, time, flags = _HEADER.unpack_from(raw)
    if magic != _MAGIC or version != 1:
        raise ValueError("not a band-field snapshot")
    vals = np.frombuffer(raw, dtype="<f8", offset=_HEADER.size).reshape(comps, nx, ny)
    field = from_values(vals, Lambda, divergence_free=bool(flags & 1), no_slip=bool(flags & 2))
    return field, time


def snapshot_csv_rows(field, stride=1):
    vals = field.values()
    x, y = field.x, field.y
    rows = []
    for i in range(0, field.nx, stride):
        for j in range(0, field.ny, stride):
            rows.append((x[i], y[j]) + tuple(vals[:, i, j]))
    return rows

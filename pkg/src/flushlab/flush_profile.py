"""Flushing profile h(t) for the base Euler flow.

h is a finite combination of C-infinity bumps exp(-1/(1-s^2)) placed inside
the two windows (0, T/3] and [2T/3, T).  The coefficients solve the linear
constraints

    int_0^{T/3} h = 2L,        int_0^T t^k h = 0  for k < n

in the least-norm sense.
"""

from dataclasses import dataclass
from math import comb, factorial

import numpy as np
from scipy import integrate

FLUX_TOL = 1e-10
MOMENT_TOL = 1e-9
MAX_ORDER = 6

_GL_NODES = 128
# past this distance from the bump edge exp(-1/(1-s^2)) < 1e-217
_BUMP_EDGE = 2e-3


class ProfileConstructionError(ValueError):
    """Constraint system is singular or the profile violates its invariants."""


class ProfileCapacityError(ValueError):
    """Not enough bumps to satisfy the requested number of constraints."""


@dataclass(frozen=True)
class FlushProfile:
    T: float
    L: float
    n: int
    centers: tuple
    widths: tuple
    coefficients: tuple

    def __call__(self, t, order=0):
        return eval_h(self, t, order)

    @property
    def windows(self):
        return (0.0, self.T / 3.0), (2.0 * self.T / 3.0, self.T)

    def support_breaks(self):
        """Sorted bump edges, useful as quadrature break points."""
        c = np.asarray(self.centers)
        w = np.asarray(self.widths)
        return np.unique(np.concatenate([c - w, c + w]))

    def is_zero(self):
        return not np.any(np.asarray(self.coefficients))


def bump_derivatives(s, max_order=MAX_ORDER):
    """Derivatives 0..max_order of exp(-1/(1-s^2)), zero outside (-1, 1).

    Uses b' = g' b with g = -1/(1-s^2) and the Leibniz rule, where the
    derivatives of g are closed-form partial fractions.
    """
    s = np.asarray(s, dtype=float)
    shape = s.shape
    s = s.reshape(-1)
    out = np.zeros((max_order + 1, s.size))
    inside = 1.0 - s**2 > _BUMP_EDGE
    if not np.any(inside):
        return out.reshape((max_order + 1,) + shape)
    si = s[inside]
    a = 1.0 / (1.0 - si)
    b = 1.0 / (1.0 + si)
    # g^{(j)} for j = 0..max_order+1
    g = [-0.5 * factorial(j) * (a ** (j + 1) + (-1) ** j * b ** (j + 1)) for j in range(max_order + 2)]
    d = [np.exp(g[0])]
    for k in range(max_order):
        d.append(sum(comb(k, j) * g[j + 1] * d[k - j] for j in range(k + 1)))
    for k in range(max_order + 1):
        out[k, inside] = d[k]
    return out.reshape((max_order + 1,) + shape)


def _layout(T, n_bumps):
    """Split n_bumps bumps between the two windows and place them disjointly."""
    first = (n_bumps + 1) // 2
    second = n_bumps - first
    centers, widths = [], []
    for count, lo, hi in ((first, 0.0, T / 3.0), (second, 2.0 * T / 3.0, T)):
        cell = (hi - lo) / max(count, 1)
        for i in range(count):
            centers.append(lo + (i + 0.5) * cell)
            widths.append(0.45 * cell)
    return np.array(centers), np.array(widths)


def _constraint_matrix(T, n, centers, widths):
    """Rows: moments k=0..n-1, then the flux over the first window."""
    x, w = np.polynomial.legendre.leggauss(_GL_NODES)
    bump = bump_derivatives(x, 0)[0]
    A = np.zeros((n + 1, len(centers)))
    for j, (c, r) in enumerate(zip(centers, widths)):
        t = c + r * x
        weights = r * w * bump
        for k in range(n):
            A[k, j] = np.sum(weights * t**k)
        A[n, j] = np.sum(weights) if c < T / 3.0 else 0.0
    return A


def build_flush_profile(T=1.0, L=1.0, n=0, n_bumps=None):
    """Construct h with flux 2L over (0, T/3] and n vanishing moments on [0, T]."""
    if T <= 0 or L <= 0:
        raise ValueError("T and L must be positive")
    if n < 0 or int(n) != n:
        raise ValueError("n must be a non-negative integer")
    n = int(n)
    n_bumps = n + 2 if n_bumps is None else int(n_bumps)
    if n_bumps < n + 1:
        raise ProfileCapacityError(
            f"{n_bumps} bumps cannot satisfy {n + 1} constraints (flux + {n} moments)"
        )
    centers, widths = _layout(T, n_bumps)
    A = _constraint_matrix(T, n, centers, widths)
    rhs = np.zeros(n + 1)
    rhs[n] = 2.0 * L
    rank = np.linalg.matrix_rank(A)
    if rank < n + 1:
        # find the first row that is dependent on the previous ones
        for row in range(n + 1):
            if np.linalg.matrix_rank(A[: row + 1]) <= row:
                name = "flux" if row == n else f"moment k={row}"
                raise ProfileConstructionError(f"degenerate bump placement: {name} constraint is dependent")
    coef = np.linalg.pinv(A) @ rhs
    profile = FlushProfile(float(T), float(L), n, tuple(centers), tuple(widths), tuple(coef))
    check_profile(profile)
    return profile


def profile_moments(profile, kmax=None):
    """Return (flux, [int t^k h for k < kmax]) by Gauss-Legendre per bump."""
    kmax = profile.n if kmax is None else kmax
    A = _constraint_matrix(profile.T, kmax, profile.centers, profile.widths)
    vals = A @ np.asarray(profile.coefficients)
    return vals[kmax], vals[:kmax]


def check_profile(profile):
    """Raise ProfileConstructionError if flux or moment constraints fail."""
    flux, moments = profile_moments(profile)
    if abs(flux - 2.0 * profile.L) > FLUX_TOL:
        raise ProfileConstructionError(f"flux {flux!r} differs from 2L = {2.0 * profile.L!r}")
    for k, mk in enumerate(moments):
        if abs(mk) > MOMENT_TOL:
            raise ProfileConstructionError(f"moment k={k} is {mk:.3e}, above {MOMENT_TOL}")
    return True


def eval_h(profile, t, derivative_order=0):
    """Exact derivative of h of the given order (0..6); zero off the support."""
    if not 0 <= derivative_order <= MAX_ORDER:
        raise ValueError("derivative_order must be in [0, 6]")
    t = np.asarray(t, dtype=float)
    out = np.zeros_like(t)
    for c, r, a in zip(profile.centers, profile.widths, profile.coefficients):
        if a == 0.0:
            continue
        s = (t - c) / r
        out = out + a * bump_derivatives(s, derivative_order)[derivative_order] / r**derivative_order
    return out if out.ndim else float(out)


def flow_displacement(profile, t):
    """int_0^t h(s) ds by adaptive quadrature split at the bump edges."""
    t = float(t)
    if t <= 0.0:
        return 0.0
    total = 0.0
    for c, r, a in zip(profile.centers, profile.widths, profile.coefficients):
        lo, hi = c - r, min(c + r, t)
        if hi <= lo or a == 0.0:
            continue
        val, _ = integrate.quad(lambda s: eval_h_bump(s, c, r), lo, hi, epsabs=1e-14, epsrel=1e-13, limit=200)
        total += a * val
    return total


def eval_h_bump(s, c, r):
    return float(bump_derivatives((s - c) / r, 0)[0])


_GL64 = np.polynomial.legendre.leggauss(64)


def displacement_table(profile, times):
    """Vectorised int_0^t h for many times (exact bump antiderivative by Gauss-Legendre)."""
    times = np.asarray(times, dtype=float)
    x, w = _GL64
    out = np.zeros_like(times)
    for c, r, a in zip(profile.centers, profile.widths, profile.coefficients):
        if a == 0.0:
            continue
        hi = np.clip(times, c - r, c + r)
        half = 0.5 * (hi - (c - r))
        nodes = (c - r) + half[..., None] * (x + 1.0)
        vals = bump_derivatives((nodes - c) / r, 0)[0]
        out = out + a * half * np.sum(vals * w, axis=-1)
    return out


def zero_profile(T=1.0, L=1.0, n=0):
    """Profile with all coefficients zero (violates the flux constraint)."""
    centers, widths = _layout(T, n + 2)
    return FlushProfile(float(T), float(L), n, tuple(centers), tuple(widths), tuple(np.zeros(n + 2)))


def to_record(profile):
    """Serialise to key = value lines (floats in round-trip repr)."""
    def fmt(seq):
        return ", ".join(repr(float(v)) for v in seq)

    return "\n".join([
        f"T = {profile.T!r}",
        f"L = {profile.L!r}",
        f"n = {profile.n}",
        f"centers = {fmt(profile.centers)}",
        f"widths = {fmt(profile.widths)}",
        f"coefficients = {fmt(profile.coefficients)}",
    ]) + "\n"


def from_record(text):
    fields = {}
    for line in text.splitlines():
        if "=" not in line or line.lstrip().startswith("#"):
            continue
        key, val = line.split("=", 1)
        fields[key.strip()] = val.strip()

    def seq(key):
        return tuple(float(v) for v in fields[key].split(",")) if fields[key] else ()

    return FlushProfile(float(fields["T"]), float(fields["L"]), int(fields["n"]),
                        seq("centers"), seq("widths"), seq("coefficients"))

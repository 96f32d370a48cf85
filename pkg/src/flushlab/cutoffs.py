"""Smooth cutoff functions shared by the corrector, ansatz and band-field code.

All cutoffs are built from one C-infinity transition ``smoothstep`` that is 0
for x <= 0, 1 for x >= 1 and satisfies S(x) + S(1 - x) = 1.  Each public
function returns the value and its first two derivatives.
"""

import numpy as np
from scipy.special import expit

# below this distance from the transition ends exp(-1/x) underflows anyway
_EDGE = 2e-3

_GL_X, _GL_W = np.polynomial.legendre.leggauss(48)


def smoothstep(x):
    """Return (S, S', S'') for the exponential smooth step."""
    x = np.asarray(x, dtype=float)
    s0 = np.where(x >= 1.0, 1.0, 0.0)
    s1 = np.zeros_like(x)
    s2 = np.zeros_like(x)
    inner = (x > _EDGE) & (x < 1.0 - _EDGE)
    if np.any(inner):
        xi = x[inner]
        q = 1.0 / xi - 1.0 / (1.0 - xi)
        dq = -1.0 / xi**2 - 1.0 / (1.0 - xi) ** 2
        d2q = 2.0 / xi**3 - 2.0 / (1.0 - xi) ** 3
        sig = expit(-q)
        dsig = -sig * expit(q)  # derivative of expit(-u) in u
        d2sig = -dsig * (1.0 - 2.0 * sig)
        s0[inner] = sig
        s1[inner] = dsig * dq
        s2[inner] = d2sig * dq**2 + dsig * d2q
    # thin edge layers: value is 0 or 1 to machine precision
    s0 = np.where((x > 1.0 - _EDGE) & (x < 1.0), 1.0, s0)
    return s0, s1, s2


def smoothstep_integral(x):
    """Antiderivative of S from 0 to x (x clipped to [0, 1] then extended linearly)."""
    x = np.asarray(x, dtype=float)
    xc = np.clip(x, 0.0, 1.0)
    # Gauss-Legendre on [0, xc] for each point
    nodes = 0.5 * xc[..., None] * (_GL_X + 1.0)
    vals = smoothstep(nodes)[0]
    out = 0.5 * xc * np.sum(vals * _GL_W, axis=-1)
    return out + np.maximum(x - 1.0, 0.0)


def wall_cutoff(y):
    """chi(y): 0 for |y| <= 1/3, 1 for |y| >= 2/3.  Returns (chi, chi', chi'')."""
    y = np.asarray(y, dtype=float)
    s0, s1, s2 = smoothstep(3.0 * np.abs(y) - 1.0)
    sgn = np.sign(y)
    return s0, 3.0 * sgn * s1, 9.0 * s2


# mollification window for the distance function near y = 0
_PHI_A, _PHI_B = 0.05, 0.2
_PHI_OFFSET = _PHI_A + 0.5 * (_PHI_B - _PHI_A)


def wall_distance(y):
    """phi(y) = 1 - |y| away from y = 0, smoothed on |y| < 0.2.  Returns (phi, phi', phi'')."""
    y = np.asarray(y, dtype=float)
    r = np.abs(y)
    width = _PHI_B - _PHI_A
    x = (r - _PHI_A) / width
    g0, g1, _ = smoothstep(x)
    m = _PHI_OFFSET + width * smoothstep_integral(x)
    phi = 1.0 - m
    dphi = -np.sign(y) * g0
    d2phi = -g1 / width
    return phi, dphi, d2phi


def time_cutoff(t, T):
    """beta(t): 1 on [0, T/3], 0 for t >= 2T/3.  Returns (beta, beta', beta'')."""
    t = np.asarray(t, dtype=float)
    s0, s1, s2 = smoothstep((t - T / 3.0) * 3.0 / T)
    return 1.0 - s0, -s1 * 3.0 / T, -s2 * 9.0 / T**2


def interior_cutoff(y, delta):
    """chi_delta(y): 1 for |y| <= 1 - 2 delta, 0 for |y| >= 1 - delta."""
    y = np.asarray(y, dtype=float)
    s0, s1, s2 = smoothstep((np.abs(y) - (1.0 - 2.0 * delta)) / delta)
    sgn = np.sign(y)
    return 1.0 - s0, -sgn * s1 / delta, -s2 / delta**2

"""Finite-difference stencils on uniform grids (Fornberg weights)."""

import numpy as np
from scipy import sparse


def fornberg_weights(x0, x, order):
    """Weights w such that sum(w * f(x)) approximates f^{(order)}(x0)."""
    x = np.asarray(x, dtype=float)
    n = len(x)
    c = np.zeros((n, order + 1))
    c1, c4 = 1.0, x[0] - x0
    c[0, 0] = 1.0
    for i in range(1, n):
        mn = min(i, order)
        c2, c5, c4 = 1.0, c4, x[i] - x0
        for j in range(i):
            c3 = x[i] - x[j]
            c2 *= c3
            if j == i - 1:
                for k in range(mn, 0, -1):
                    c[i, k] = c1 * (k * c[i - 1, k - 1] - c5 * c[i - 1, k]) / c2
                c[i, 0] = -c1 * c5 * c[i - 1, 0] / c2
            for k in range(mn, 0, -1):
                c[j, k] = (c4 * c[j, k] - k * c[j, k - 1]) / c3
            c[j, 0] = c4 * c[j, 0] / c3
        c1 = c2
    return c[:, order]


def derivative_matrix(n, h, order=1, accuracy=4):
    """Sparse (n x n) matrix for the order-th derivative on a uniform grid.

    Centred stencils of the given accuracy in the interior, one-sided stencils
    of the same width near the ends.
    """
    width = accuracy + order - (1 if order % 2 == 0 else 0)
    width = max(width, order + 1)
    if width % 2 == 0:
        width += 1
    half = width // 2
    # one-sided stencils need one extra point to keep the same accuracy
    edge_width = accuracy + order
    if n < edge_width:
        raise ValueError("grid too small for the requested stencil")
    rows, cols, vals = [], [], []
    for i in range(n):
        if half <= i < n - half:
            idx = np.arange(i - half, i + half + 1)
        elif i < half:
            idx = np.arange(0, edge_width)
        else:
            idx = np.arange(n - edge_width, n)
        w = fornberg_weights(float(i), idx.astype(float), order) / h**order
        rows.extend([i] * len(idx))
        cols.extend(idx)
        vals.extend(w)
    return sparse.csr_matrix((vals, (rows, cols)), shape=(n, n))


def trapezoid_weights(n, h):
    w = np.full(n, h)
    w[0] = w[-1] = 0.5 * h
    return w


# diagonal-norm summation-by-parts first derivative, 4th order interior,
# 2nd order boundary closure (Strand's coefficients)
_SBP_NORM = np.array([17.0 / 48, 59.0 / 48, 43.0 / 48, 49.0 / 48])
_SBP_BLOCK = [
    (0, [-24.0 / 17, 59.0 / 34, -4.0 / 17, -3.0 / 34]),
    (0, [-1.0 / 2, 0.0, 1.0 / 2]),
    (0, [4.0 / 43, -59.0 / 86, 0.0, 59.0 / 86, -4.0 / 43]),
    (0, [3.0 / 98, 0.0, -59.0 / 98, 0.0, 32.0 / 49, -4.0 / 49]),
]
_SBP_INTERIOR = np.array([1.0 / 12, -2.0 / 3, 0.0, 2.0 / 3, -1.0 / 12])


def sbp_norm(n, h):
    """Quadrature weights H of the SBP operator (integrates polynomials exactly to degree 3)."""
    if n < 9:
        raise ValueError("SBP operator needs at least 9 points")
    w = np.full(n, h)
    w[:4] = h * _SBP_NORM
    w[-4:] = h * _SBP_NORM[::-1]
    return w


def sbp_first_derivative(n, h):
    """D with H D + (H D)^T = diag(-1, 0, ..., 0, 1)."""
    if n < 9:
        raise ValueError("SBP operator needs at least 9 points")
    D = sparse.lil_matrix((n, n))
    for i, (start, coef) in enumerate(_SBP_BLOCK):
        for j, c in enumerate(coef):
            if c:
                D[i, start + j] = c
                D[n - 1 - i, n - 1 - (start + j)] = -c
    for i in range(4, n - 4):
        for j, c in enumerate(_SBP_INTERIOR):
            if c:
                D[i, i - 2 + j] = c
    return (D / h).tocsr()

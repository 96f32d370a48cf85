import numpy as np
import pytest
from hypothesis import given, strategies as st
from scipy import integrate

from flushlab.boundary_layer import (LayerStepper, OrderError, TruncationError, decay_exponent_target,
                                     fourier_moment_check, fourier_transform_at, layer_exact, solve_boundary_layer,
                                     verify_decay_rate, weighted_sobolev_norm)
from flushlab.flush_profile import build_flush_profile, eval_h, zero_profile


def duhamel(profile, t, z):
    """Heat-kernel convolution by adaptive quadrature in s (independent of the u-substitution)."""
    def kern(s):
        tau = t - s
        return z / (2.0 * np.sqrt(np.pi) * tau**1.5) * np.exp(-z * z / (4.0 * tau)) * eval_h(profile, s)

    pts = [b for b in profile.support_breaks() if 0.0 < b < t]
    val, _ = integrate.quad(kern, 0.0, t, points=pts or None, limit=400, epsabs=1e-13, epsrel=1e-11)
    return val


@pytest.mark.parametrize("t, z", [(0.2, 0.3), (0.5, 1.0), (0.9, 0.05), (3.0, 2.5)])
def test_exact_layer_matches_duhamel(profile3, t, z):
    assert layer_exact(profile3, t, z)[0] == pytest.approx(duhamel(profile3, t, z), abs=1e-9)


def test_exact_layer_boundary_value(profile3):
    for t in (0.1, 0.25, 0.8):
        assert layer_exact(profile3, t, 0.0)[0] == pytest.approx(eval_h(profile3, t))


def test_exact_layer_z_derivatives(profile3):
    z = np.linspace(0.2, 4.0, 40)
    t, dz = 0.7, 1e-4
    v = [layer_exact(profile3, t, z + k * dz) for k in (-1, 0, 1)]
    fd1 = (v[2] - v[0]) / (2 * dz)
    fd2 = (v[2] - 2 * v[1] + v[0]) / dz**2
    assert np.max(np.abs(fd1 - layer_exact(profile3, t, z, 1))) < 1e-6 * np.max(np.abs(fd1))
    assert np.max(np.abs(fd2 - layer_exact(profile3, t, z, 2))) < 1e-4 * np.max(np.abs(fd2))
    with pytest.raises(OrderError):
        layer_exact(profile3, t, z, 3)


def test_crank_nicolson_converges(profile3):
    # halving dz and dt cuts the sup error by at least 3
    z = np.linspace(0.0, 6.0, 61)
    ref = layer_exact(profile3, 1.0, z)
    errs = []
    for nz, dt in ((801, 4e-3), (1601, 2e-3)):
        bl = solve_boundary_layer(profile3, 40.0, nz, dt, 1.0, snapshot_times=[1.0])
        errs.append(np.max(np.abs(bl.evaluate(0, z) - ref)))
    assert errs[0] / errs[1] >= 3.0


def test_maximum_principle_and_dissipation(profile3):
    bl = solve_boundary_layer(profile3, 40.0, 2001, 1e-3, 3.0, snapshot_times=np.linspace(0, 3, 31))
    ts = np.linspace(0.0, 3.0, 3001)
    hmax = np.maximum.accumulate(np.abs(eval_h(profile3, ts)))
    for i, t in enumerate(bl.times):
        assert np.max(np.abs(bl.values[i])) <= hmax[np.searchsorted(ts, t)] * (1 + 1e-12) + 1e-14
    norms = bl.norm_history()
    late = np.asarray(bl.times) > profile3.T
    assert np.all(np.diff(norms[late]) <= 1e-14)


def test_truncation_error_without_regrid():
    p = build_flush_profile(1.0, 1.0, 0)
    with pytest.raises(TruncationError):
        solve_boundary_layer(p, 40.0, 801, 1e-2, 30.0, snapshot_times=[30.0])


def test_regrid_keeps_tail_inside():
    p = build_flush_profile(1.0, 1.0, 1)
    bl = solve_boundary_layer(p, 40.0, 801, 1e-2, 2e4, snapshot_times=[1e4, 2e4], regrid=True, growth=1e-2)
    assert bl.regrids > 0
    assert abs(bl.values[-1][-1]) == 0.0


def test_stepper_rejects_bad_grids(profile3):
    with pytest.raises(ValueError):
        LayerStepper(profile3, 10.0)
    with pytest.raises(ValueError):
        LayerStepper(profile3, 40.0, 100)


def test_zero_profile_layer_is_zero():
    p = zero_profile()
    assert np.all(layer_exact(p, 1.0, np.linspace(0, 5, 11)) == 0.0)
    assert fourier_moment_check(p, 2) == 0.0


@pytest.mark.parametrize("n", [1, 2, 3])
def test_fourier_moments_vanish(n):
    assert fourier_moment_check(build_flush_profile(1.0, 1.0, n)) < 1e-8


def test_fourier_derivative_matches_stencil():
    from flushlab.boundary_layer import fourier_derivatives_at_zero

    p = build_flush_profile(1.0, 1.0, 1)
    d = 1e-2
    z = np.arange(-3, 4) * d
    f = fourier_transform_at(p, z)
    # antisymmetric 7-point stencil for f''' (error O(d^4))
    w = np.array([1.0 / 8, -1.0, 13.0 / 8, 0.0, -13.0 / 8, 1.0, -1.0 / 8]) / d**3
    fd = np.sum(w * f)
    exact = fourier_derivatives_at_zero(p, 3)[3]
    assert abs(exact) > 1e-3
    assert abs(fd - exact) <= 1e-6 * abs(exact)


def test_weighted_norm_properties():
    z = np.linspace(0.0, 40.0, 4001)
    dz = z[1]
    assert weighted_sobolev_norm(np.zeros_like(z), dz) == 0.0
    v = np.exp(-z**2)
    # s = 0, m = 0 is the plain L2 norm
    assert weighted_sobolev_norm(v, dz) == pytest.approx(np.sqrt(np.sqrt(np.pi / 2) / 2), rel=1e-6)
    assert decay_exponent_target(1, 0) == pytest.approx(1.75)


@given(a=st.floats(-5.0, 5.0).filter(lambda a: abs(a) > 1e-3), s=st.integers(0, 2), m=st.integers(0, 2))
def test_weighted_norm_homogeneous(a, s, m):
    z = np.linspace(0.0, 40.0, 2001)
    v = np.exp(-z) * z
    base = weighted_sobolev_norm(v, z[1], s, m)
    assert weighted_sobolev_norm(a * v, z[1], s, m) == pytest.approx(abs(a) * base, rel=1e-12)


def test_decay_fit_zero_and_short_runs():
    bl = solve_boundary_layer(zero_profile(), 40.0, 401, 1e-2, 1.0, snapshot_times=[0.5, 1.0])
    assert verify_decay_rate(bl).passed
    p = build_flush_profile(1.0, 1.0, 1)
    bl = solve_boundary_layer(p, 40.0, 801, 1e-2, 20.0, snapshot_times=np.geomspace(5, 20, 12), regrid=True)
    assert verify_decay_rate(bl, n=1).inconclusive

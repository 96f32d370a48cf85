from dataclasses import replace

import numpy as np
import pytest
from hypothesis import given, strategies as st

from flushlab.band_field import band_grid, dx, from_values, l2_norm
from flushlab.littlewood_paley import (HIGH, LOW, MultiplierOverflowError, RadiusCollapse, RadiusConstants,
                                       AnalyticityState, analytic_multiplier, chi_lp, dyadic_block,
                                       dyadic_partition, inequality_reports, modulus, phi_lp, radius_history,
                                       track_radius, verify_gns)

LAM = 8.0


@pytest.mark.parametrize("nx", [64, 128, 256])
def test_partition_of_unity(nx):
    part = dyadic_partition(LAM, nx)
    assert part.residual() < 1e-10
    lo, hi = part.square_sum_range()
    assert 0.5 - 1e-12 <= lo and hi <= 1.0 + 1e-12


@given(st.floats(0.0, 10.0), st.floats(0.0, 10.0))
def test_chi_is_radial_nonincreasing_window(a, b):
    lo, hi = sorted((a, b))
    assert chi_lp(hi) <= chi_lp(lo) + 1e-15
    assert chi_lp(-a) == chi_lp(a)


def test_chi_plateau_and_cutoff():
    assert chi_lp(LOW) == 1.0 and chi_lp(0.0) == 1.0
    assert chi_lp(HIGH) == 0.0
    assert np.all(phi_lp(np.linspace(0.0, LOW, 11)) == 0.0)


def test_blocks_sum_to_field_without_mean(rng):
    nx, ny = 64, 17
    f = from_values(rng.standard_normal((nx, ny)), LAM)
    part = dyadic_partition(LAM, nx)
    total = sum(dyadic_block(f, k).coeffs for k in part.k_range)
    c = f.coeffs.copy()
    c[:, 0] = 0.0
    c[:, -1] = 0.0   # Nyquist is not resolved by the partition
    total[:, -1] = 0.0
    assert np.max(np.abs(total - c)) < 1e-10 * np.max(np.abs(c))


def test_pure_tone_derivative_ratio_is_frequency():
    x, y = band_grid(LAM, 64, 33)
    X, Y = np.meshgrid(x, y, indexing="ij")
    xi = 2 * np.pi * 5 / LAM
    f = from_values(np.cos(xi * X) * (1 - Y**2), LAM)
    assert l2_norm(dx(f)) / l2_norm(f) == pytest.approx(xi, rel=1e-12)


def test_gns_holds():
    rep = verify_gns(n_samples=30, seed=3)
    assert rep.passed and 0.5 < rep.worst_ratio <= 1.0


def test_inequality_suite_small_sample():
    reps = inequality_reports(n_samples=10, seed=1)
    assert len(reps) == 8
    assert all(r.passed for r in reps), [(r.name, r.worst_ratio, r.bound) for r in reps if not r.passed]


def test_modulus_is_an_isometry(rng):
    f = from_values(rng.standard_normal((64, 17)), LAM)
    assert l2_norm(modulus(f)) == pytest.approx(l2_norm(f), rel=1e-12)


def test_multiplier_overflow_guard(small_data):
    u = small_data.field
    with pytest.raises(MultiplierOverflowError, match="max admissible rho"):
        analytic_multiplier(u, 1e4)
    g = analytic_multiplier(u, 0.1)
    assert l2_norm(g) > l2_norm(u)


def _zero_remainder_series(n=201):
    t = np.linspace(0.0, 2.0, n)
    zdz = 1e-4 * np.exp(-t)
    sup_w = 1e-3 * np.ones(n)
    nk = 33
    g_u1 = np.zeros((n, nk))
    g_u1[:, 1:4] = 1.0
    g_r = np.zeros((n, nk))
    return t, zdz, sup_w, g_u1, g_r, nk


def test_zero_remainder_keeps_radius_above_two():
    t, zdz, sup_w, g_u1, g_r, _ = _zero_remainder_series()
    const = RadiusConstants.measured(50.0)
    rows, summ = radius_history(t, zdz, sup_w, g_u1, g_r, LAM, 64, 1e-2, 0.5, const)
    rho = np.array([r[1] for r in rows])
    logb = np.array([r[2] for r in rows])
    assert not summ["collapsed"]
    assert rho[-1] >= 2.0 - 1e-12
    assert np.all(np.diff(rho) <= 0.0)
    assert np.all(np.diff(logb[1:]) >= 0.0)
    assert summ["rho0"] == pytest.approx(2.0 + 50.0 * np.sum(zdz[:-1] * np.diff(t)))


def test_radius_collapse_reports_time():
    const = RadiusConstants.measured(50.0)
    st_ = AnalyticityState(0.0, 0.01, 0.0, 0.01)
    g = np.zeros(33)
    g[2] = 1.0
    with pytest.raises(RadiusCollapse) as exc:
        track_radius(st_, 0.0, g, LAM, 64, 0.1, 1e-2, 50.0, 1.0, const)
    assert exc.value.t == pytest.approx(0.1)
    assert exc.value.history

import math

import numpy as np
import pytest
from hypothesis import given, strategies as st

from flushlab.band_field import (BandField, DivergenceError, ResolutionError, amplification_M, band_grid,
                                 check_wall_resolution, divergence_defect, dx, dy, from_values, hk_norm, l2_norm,
                                 leray_project, make_analytic_data, parseval_norm, perp_grad, project_band_limit,
                                 read_snapshot, stream_function, tangential_fft, inverse_fft, write_snapshot,
                                 y_weights, zeros)
from flushlab.cutoffs import wall_cutoff

LAM, NX, NY = 8.0, 64, 129


def field_from(fn, components=1):
    x, y = band_grid(LAM, NX, NY)
    X, Y = np.meshgrid(x, y, indexing="ij")
    vals = np.array([f(X, Y) for f in fn]) if components > 1 else fn(X, Y)
    return from_values(vals, LAM)


def test_fft_round_trip(rng):
    v = rng.standard_normal((2, NX, NY))
    assert np.max(np.abs(inverse_fft(tangential_fft(v), NX) - v)) < 1e-12


def test_parseval(rng):
    f = from_values(rng.standard_normal((NX, NY)), LAM)
    assert parseval_norm(f) == pytest.approx(l2_norm(f), rel=1e-10)


def test_l2_norm_against_direct_quadrature():
    f = field_from(lambda X, Y: np.cos(2 * np.pi * X / LAM) * (1 - Y**2))
    # int cos^2 over a period = Lam / 2, int (1 - y^2)^2 = 16/15
    assert l2_norm(f) == pytest.approx(np.sqrt(LAM / 2 * 16 / 15), rel=1e-8)


def test_derivatives_of_trig_polynomial():
    k = 2 * np.pi * 3 / LAM
    f = field_from(lambda X, Y: np.sin(k * X) * Y**3)
    x, y = band_grid(LAM, NX, NY)
    X, Y = np.meshgrid(x, y, indexing="ij")
    assert np.max(np.abs(dx(f).values()[0] - k * np.cos(k * X) * Y**3)) < 1e-10
    # fourth-order interior stencil is exact on cubics; the boundary closure on quadratics
    assert np.max(np.abs((dy(f).values()[0] - 3 * np.sin(k * X) * Y**2)[:, 4:-4])) < 1e-8
    g = field_from(lambda X, Y: np.sin(k * X) * Y**2)
    assert np.max(np.abs(dy(g).values()[0] - 2 * np.sin(k * X) * Y)) < 1e-9


def test_band_limit_projection():
    f = make_analytic_data(seed=1, nx=NX, ny=NY).field
    assert np.allclose(project_band_limit(f, 1e9).coeffs, f.coeffs)
    p0 = project_band_limit(f, 0.0)
    assert np.all(p0.coeffs[:, 1:] == 0) and np.allclose(p0.coeffs[:, 0], f.coeffs[:, 0])


def test_band_limit_h1_error_halves():
    x, y = band_grid(16.0, 256, 65)
    X, Y = np.meshgrid(x, y, indexing="ij")
    f = from_values(np.exp(-X**2) * np.cos(3 * X) * (1 - Y**2), 16.0)
    errs = [hk_norm(f - project_band_limit(f, N), 1) for N in (4.0, 8.0, 16.0)]
    assert errs[1] <= 0.5 * errs[0] and errs[2] <= 0.5 * errs[1]


@given(N=st.floats(0.5, 20.0), order=st.integers(1, 3))
def test_derivatives_commute_with_band_limit(N, order):
    f = make_analytic_data(seed=2, nx=NX, ny=NY).field
    a = dx(project_band_limit(f, N), order).coeffs
    b = project_band_limit(dx(f, order), N).coeffs
    assert np.allclose(a, b)
    a = dy(project_band_limit(f, N)).coeffs
    b = project_band_limit(dy(f), N).coeffs
    assert np.allclose(a, b)


def test_stream_function_recovers_known_psi():
    k = 2 * np.pi / LAM
    psi = field_from(lambda X, Y: np.sin(k * X) * np.cos(np.pi * Y / 2) * (1 - Y**2))
    u = perp_grad(psi)
    rec = stream_function(u)
    diff = rec.values()[0] - psi.values()[0]
    assert np.max(np.abs(diff - diff.mean())) < 1e-6
    assert np.max(np.abs(stream_function(zeros(LAM, NX, NY, 2)).coeffs)) == 0.0


def test_stream_function_rejects_divergent_field():
    k = 2 * np.pi / LAM
    u = field_from((lambda X, Y: np.sin(k * X) * (1 - Y**2), lambda X, Y: 0 * X), components=2)
    with pytest.raises(DivergenceError):
        stream_function(u)


def test_stream_function_zero_flux_identity():
    d = make_analytic_data(seed=3, nx=NX, ny=NY)
    psi = stream_function(d.field)
    # mean-zero u1 per x gives psi(x, 1) = 0, up to the cumulative Simpson error
    assert np.max(np.abs(psi.values()[0][:, -1])) < 1e-5 * np.max(np.abs(psi.values()))


def test_leray_fixed_point_and_idempotence(rng):
    d = make_analytic_data(seed=4, nx=NX, ny=NY).field
    p = leray_project(d)
    assert np.max(np.abs(p.coeffs - d.coeffs)) <= 1e-10 * np.max(np.abs(d.coeffs))
    a = from_values(rng.standard_normal((2, NX, NY)), LAM)
    a = project_band_limit(a, 6.0)
    pa = leray_project(a)
    ppa = leray_project(pa)
    assert l2_norm(ppa - pa) < 1e-10 * l2_norm(pa)
    assert divergence_defect(pa) < 1e-8


def test_leray_kills_gradients():
    k = 2 * np.pi / LAM
    g = field_from((lambda X, Y: k * np.cos(k * X) * Y**2, lambda X, Y: 2 * Y * np.sin(k * X)), components=2)
    p = leray_project(g)
    assert divergence_defect(p) < 1e-8
    # orthogonality to the gradient in the discrete inner product
    w = y_weights(NY)
    inner = np.einsum("cxy,cxy,y->", p.values(), g.values(), w)
    assert abs(inner) < 1e-8 * l2_norm(g) ** 2


def test_amplification_operator():
    y = np.linspace(-1, 1, NY)
    assert np.all(amplification_M(np.zeros_like(y), y) == 0.0)
    assert np.allclose(amplification_M(np.ones_like(y), y), -wall_cutoff(y)[0])


def test_amplification_hardy_bound_and_linearity(rng):
    y = np.linspace(-1, 1, NY)
    w = y_weights(NY)
    for _ in range(100):
        a = np.polynomial.legendre.legval(y, rng.standard_normal(8))
        Ma = amplification_M(a, y)
        assert np.sqrt(np.sum(w * Ma**2)) <= 2.0 * np.sqrt(np.sum(w * a**2))
    a, b = rng.standard_normal(NY), rng.standard_normal(NY)
    assert np.allclose(amplification_M(2.5 * a + b, y), 2.5 * amplification_M(a, y) + amplification_M(b, y))


def test_analytic_data_properties():
    d1 = make_analytic_data(seed=5)
    d2 = make_analytic_data(seed=5)
    assert np.array_equal(d1.field.coeffs, d2.field.coeffs)
    f = d1.field
    assert divergence_defect(f) < 1e-12
    vals = f.values()
    assert np.max(np.abs(vals[:, :, [0, -1]])) < 1e-12
    assert np.all(f.coeffs[:, f.xi > 8.0 + 1e-12] == 0.0)


def test_gevrey_constant_matches_direct_sup():
    d = make_analytic_data(seed=0)
    f = d.field
    direct = max(3.0**m / math.factorial(m) * hk_norm(dx(f, m) if m else f, 3) for m in range(41))
    assert d.C_b == pytest.approx(direct, rel=1e-6)


def test_wall_resolution():
    assert check_wall_resolution(257, 1e-2) == 81
    with pytest.raises(ResolutionError):
        check_wall_resolution(257, 1e-4)


def test_nx_must_be_power_of_two():
    with pytest.raises(ValueError):
        band_grid(8.0, 100, 33)


def test_snapshot_round_trip(tmp_path):
    f = make_analytic_data(seed=6, nx=NX, ny=NY).field
    write_snapshot(tmp_path / "u.bin", f, time=1.25)
    g, t = read_snapshot(tmp_path / "u.bin")
    assert t == 1.25 and g.divergence_free and g.no_slip
    assert np.max(np.abs(g.values() - f.values())) < 1e-14
    (tmp_path / "bad.bin").write_bytes(b"nope" + bytes(60))
    with pytest.raises(ValueError):
        read_snapshot(tmp_path / "bad.bin")

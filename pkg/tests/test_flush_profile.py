import numpy as np
import pytest
from hypothesis import given, strategies as st
from scipy import integrate

from flushlab.flush_profile import (ProfileCapacityError, ProfileConstructionError, build_flush_profile,
                                    check_profile, displacement_table, eval_h, flow_displacement, from_record,
                                    profile_moments, to_record, zero_profile)


def composite_simpson(profile, f, a, b, n=20001):
    t = np.linspace(a, b, n)
    return integrate.simpson(f(t) * eval_h(profile, t), x=t)


def test_single_constraint_flux():
    p = build_flush_profile(1.0, 1.0, 0)
    assert flow_displacement(p, 1.0 / 3.0) == pytest.approx(2.0, abs=1e-10)


def test_zero_profile_rejected():
    with pytest.raises(ProfileConstructionError):
        check_profile(zero_profile())


@pytest.mark.parametrize("n", [1, 2, 3, 4])
def test_moments_vanish_under_independent_quadrature(n):
    p = build_flush_profile(1.0, 1.0, n)
    for k in range(n):
        # Simpson on a fine uniform grid is independent of the per-bump Gauss rule
        assert abs(composite_simpson(p, lambda t: t**k, 0.0, 1.0)) < 1e-9


def test_middle_window_is_empty(profile3):
    t = np.linspace(1.0 / 3.0, 2.0 / 3.0, 1002)[1:-1]
    assert np.max(np.abs(eval_h(profile3, t))) == 0.0
    assert eval_h(profile3, 0.5) == 0.0
    assert eval_h(build_flush_profile(1.0, 1.0, 0), 0.0) == 0.0


@pytest.mark.parametrize("order, tau", [(1, 1e-4), (2, 1e-5), (3, 1e-5), (6, 1e-5)])
def test_derivatives_match_finite_differences(profile3, order, tau):
    t = np.linspace(0.01, 0.99, 200)
    w = np.array([1.0, -8.0, 0.0, 8.0, -1.0]) / (12.0 * tau)
    fd = sum(wk * eval_h(profile3, t + k * tau, order - 1) for k, wk in zip(range(-2, 3), w))
    exact = eval_h(profile3, t, order)
    assert np.max(np.abs(fd - exact)) <= 1e-6 * np.max(np.abs(exact))


def test_displacement_endpoints(profile3):
    assert flow_displacement(profile3, 0.0) == 0.0
    assert flow_displacement(profile3, 1.0 / 3.0) == pytest.approx(2.0, abs=1e-10)
    oracle = composite_simpson(profile3, np.ones_like, 0.0, 1.0, n=200001)
    assert flow_displacement(profile3, 1.0) == pytest.approx(oracle, abs=1e-10)


def test_displacement_table_agrees_with_adaptive(profile3):
    ts = np.linspace(0.0, 1.2, 37)
    tab = displacement_table(profile3, ts)
    ref = np.array([flow_displacement(profile3, t) for t in ts])
    assert np.max(np.abs(tab - ref)) < 1e-11


def test_capacity_error():
    with pytest.raises(ProfileCapacityError):
        build_flush_profile(1.0, 1.0, 3, n_bumps=3)


def test_bad_arguments():
    with pytest.raises(ValueError):
        build_flush_profile(-1.0, 1.0, 0)
    with pytest.raises(ValueError):
        eval_h(build_flush_profile(), 0.1, 7)


def test_record_round_trip(profile3):
    q = from_record(to_record(profile3))
    assert q == profile3


@given(T=st.floats(0.2, 5.0), L=st.floats(0.1, 3.0), n=st.integers(0, 4))
def test_constraints_hold_for_any_scaling(T, L, n):
    p = build_flush_profile(T, L, n)
    flux, moments = profile_moments(p)
    assert abs(flux - 2.0 * L) < 1e-10 * max(1.0, L)
    assert np.all(np.abs(moments) < 1e-9 * max(1.0, T) ** n * max(1.0, L))
    assert flow_displacement(p, T / 3.0) == pytest.approx(2.0 * L, abs=1e-9 * max(1.0, L))

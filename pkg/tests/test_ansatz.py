from dataclasses import replace

import numpy as np
import pytest

from flushlab.ansatz import (AnsatzBundle, ConstructionError, assemble_fapp, build_bundle, euler_residual,
                             eval_u1_f1, final_state_estimate, momentum_residual, phantom_constant,
                             phantom_force_check, structural_checks, traces, transport_residual)
from flushlab.band_field import zeros
from flushlab.flush_profile import zero_profile


def test_base_flow_solves_euler(profile3):
    for t in (0.1, 0.4, 0.77):
        assert np.max(np.abs(euler_residual(profile3, t))) == 0.0


@pytest.mark.parametrize("t", [0.2, 0.5, 0.8])
def test_transport_residual_converges_at_fourth_order(small_bundle, t):
    # the residual is the error of the time difference alone
    r1 = transport_residual(small_bundle, t, tau=1e-3)
    r2 = transport_residual(small_bundle, t, tau=3e-4)
    assert np.log(r1 / r2) / np.log(1e-3 / 3e-4) > 3.5
    assert transport_residual(small_bundle, t, tau=1e-4) < 1e-7


@pytest.mark.parametrize("t", [0.0, 0.5, 1.0])
def test_uapp_divergence_free_and_no_slip(small_bundle, t):
    chk = structural_checks(small_bundle, t)
    assert chk["divergence"] < 1e-10
    assert chk["wall"] < 1e-12


def test_zero_data_and_zero_profile_give_zero_fapp(small_data):
    ub = replace(small_data, field=zeros(8.0, 32, 257, 2), psi=zeros(8.0, 32, 257))
    b = build_bundle(zero_profile(), ub, 0.1, t_end=0.1, dt=1e-2, growth=1.0)
    for t in (0.0, 0.05, 0.1):
        assert np.max(np.abs(assemble_fapp(b, t).coeffs)) == 0.0


@pytest.fixture(scope="module")
def exact_bundle(profile3, small_data):
    # W forced by the closed-form layer, stepped at the difference spacing
    return build_bundle(profile3, small_data, 0.1, t_end=0.5015, dt=2.5e-4, growth=1.0, layer="exact")


def test_momentum_identity(exact_bundle):
    rep = momentum_residual(exact_bundle, 0.5, tau=2.5e-4)
    assert rep.passed, rep
    # at eps = 0.1 the Crank-Nicolson defect of W dominates the budget
    assert rep.corrector_defect > 0.5 * rep.residual


def test_momentum_check_detects_sabotaged_forcing(monkeypatch, exact_bundle):
    import flushlab.ansatz as mod

    good = mod.assemble_fapp
    monkeypatch.setattr(mod, "assemble_fapp",
                        lambda b, t, tr=None, mode="exact", parts=False: replace(good(b, t, tr, mode),
                                                                                  coeffs=1.001 * good(b, t, tr, mode).coeffs))
    assert not momentum_residual(exact_bundle, 0.5, tau=2.5e-4).passed


def test_phantom_force_support_and_bound(small_bundle):
    reps = phantom_force_check(small_bundle, ks=(0, 1), n_times=41)
    for r in reps:
        assert r.support_ok
        assert r.passed, r
    assert phantom_constant(0.1, 1) > phantom_constant(0.1, 0) > 0


def test_f1_vanishes_outside_switching_window(small_bundle):
    for t in (0.1, 0.9):
        _, f1 = eval_u1_f1(small_bundle, t)
        assert np.max(np.abs(f1.coeffs)) == 0.0


def test_final_state_has_no_base_flow(profile3, small_data):
    b = build_bundle(profile3, small_data, 0.1, kappa=0.5, dt=5e-3, dt_max=0.05, growth=1.05)
    rep = final_state_estimate(b)
    assert rep.base_flow == 0.0
    assert rep.layer <= rep.layer_bound * (1 + 1e-6)
    assert np.isfinite(rep.total) and rep.complete


def test_formula_defect_shrinks_with_ny(profile3):
    from flushlab.band_field import make_analytic_data

    d = [AnsatzBundle(profile3, make_analytic_data(seed=0, nx=32, ny=ny), 0.1).formula_defect() for ny in (257, 513)]
    assert d[1] < 0.25 * d[0] and d[1] < 5e-3


def test_bad_delta_rejected(profile3, small_data):
    with pytest.raises(ValueError):
        AnsatzBundle(profile3, small_data, 0.1, delta=0.6)


def test_construction_error_for_bad_cutoff(monkeypatch, profile3, small_data):
    import flushlab.ansatz as mod

    def bad_cutoff(y):
        return np.ones_like(y), np.ones_like(y), np.zeros_like(y)

    monkeypatch.setattr(mod, "wall_cutoff", bad_cutoff)
    with pytest.raises(ConstructionError):
        AnsatzBundle(profile3, small_data, 0.1)


def test_exact_and_stepped_traces_agree(small_bundle):
    a = traces(small_bundle, 0.6, "exact")
    b = traces(small_bundle, 0.6, "stepped")
    assert np.max(np.abs(a.V - b.V)) < 1e-3 * max(np.max(np.abs(a.V)), 1e-12)


def test_corrector_track_refuses_extrapolation(exact_bundle):
    with pytest.raises(ValueError):
        exact_bundle.tech.at(0.51)

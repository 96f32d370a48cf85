import numpy as np
import pytest

from flushlab.cutoffs import wall_cutoff, wall_distance
from flushlab.flush_profile import zero_profile
from flushlab.technical_profile import (ForcingSupportError, forcing_from_layer, second_difference,
                                        solve_technical_profile)


def test_zero_forcing_gives_zero():
    tp = solve_technical_profile(zero_profile(), 1e-2, 257, 1e-2, 1.0, forcing=lambda t, y: np.zeros_like(y))
    assert tp.sup_bound() == 0.0


def test_manufactured_solution():
    # W* = sin(pi y)(1 - e^-t) solves dt W - eps W_yy = f with matched f
    eps = 1e-2

    def forcing(t, y):
        return np.sin(np.pi * y) * (np.exp(-t) + eps * np.pi**2 * (1.0 - np.exp(-t)))

    tp = solve_technical_profile(zero_profile(), eps, 513, 1e-3, 1.0, forcing=forcing)
    exact = np.sin(np.pi * tp.y_grid) * (1.0 - np.exp(-1.0))
    assert np.max(np.abs(tp.final - exact)) < 1e-5


def test_energy_estimate(profile3):
    # ||dt W||_{L inf(L2)} <= 2 ||dt f||_{L1(L2)}, with 25% slack for the discretization
    tp = solve_technical_profile(profile3, 1e-2, 257, 1e-3, 2.0)
    assert np.max(tp.dtW_l2) <= 2.5 * tp.dtf_l1l2


def test_symmetry(profile3):
    tp = solve_technical_profile(profile3, 1e-2, 257, 1e-3, 1.0, snapshot_every=250)
    for W in tp.snapshots:
        assert np.max(np.abs(W - W[::-1])) <= 1e-12 * max(np.max(np.abs(W)), 1e-300)


def test_forcing_vanishes_off_the_cutoff_transition():
    y = np.linspace(-1.0, 1.0, 401)
    eps = 1e-2
    z = wall_distance(y)[0] / np.sqrt(eps)
    V, dV = np.exp(-z), -np.exp(-z)
    f = forcing_from_layer(V, dV, y, eps)
    c1 = wall_cutoff(y)[1]
    c2 = wall_cutoff(y)[2]
    assert np.all(f[(c1 == 0) & (c2 == 0)] == 0.0)


def test_forcing_support_error():
    y = np.linspace(-1.0, 1.0, 101)

    def bad_chi(yy):
        # a cutoff whose derivative survives at the wall
        return np.ones_like(yy), np.ones_like(yy), np.zeros_like(yy)

    with pytest.raises(ForcingSupportError):
        forcing_from_layer(np.zeros_like(y), np.zeros_like(y), y, 1e-2, chi=bad_chi)


def test_second_difference_exact_on_quadratics():
    y = np.linspace(-1.0, 1.0, 65)
    d2 = second_difference(3.0 * y**2 - y, y[1] - y[0])
    assert np.allclose(d2[1:-1], 6.0, atol=1e-10)
    assert d2[0] == d2[-1] == 0.0


def test_small_grid_rejected(profile3):
    with pytest.raises(ValueError):
        solve_technical_profile(profile3, 1e-2, 101, 1e-3, 0.1)
    with pytest.raises(ValueError):
        solve_technical_profile(profile3, 1.5, 257, 1e-3, 0.1)


def test_history_rows(profile3):
    tp = solve_technical_profile(profile3, 1e-2, 257, 1e-2, 0.2)
    rows = tp.sup_history_rows()
    assert len(rows) == len(tp.times)
    assert rows[0] == (0.0, 1e-2, 0.0, 0.0)

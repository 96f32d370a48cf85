import numpy as np
import pytest

from flushlab.band_field import make_analytic_data, wavenumbers, y_derivative, _apply_y
from flushlab.ns_solver import (CFLError, SolverConfig, check_cfl, dealias_mask, dissipation, energy,
                                energy_balance, project_to_space, rescale_force, rescale_trajectory,
                                solve_navier_stokes, solve_remainder, weak_laplacian)

LAM, NX, NY = 8.0, 32, 65


@pytest.fixture(scope="module")
def u0():
    return make_analytic_data(seed=2, nx=NX, ny=NY, N=3.0).field


def _divergence(c):
    xi = wavenumbers(LAM, NX)
    return (1j * xi)[:, None] * c[0] + _apply_y(y_derivative(NY, 1), c[1])


def test_dealias_mask():
    m = dealias_mask(48)
    assert m.sum() == 16 and m[15] and not m[16]
    assert dealias_mask(48, "none").sum() == 24
    with pytest.raises(ValueError):
        dealias_mask(48, "3/2")


def test_cfl_error_suggests_admissible_step():
    with pytest.raises(CFLError) as exc:
        check_cfl(1.0, 2.0, 64, 8.0)
    assert check_cfl(exc.value.suggested, 2.0, 64, 8.0) <= 0.5


def test_projection_is_discretely_solenoidal_and_idempotent(rng):
    c = rng.standard_normal((2, NX // 2 + 1, NY)) + 1j * rng.standard_normal((2, NX // 2 + 1, NY))
    p = project_to_space(c, LAM, NX, NY)
    assert np.max(np.abs(_divergence(p))) < 1e-9 * np.max(np.abs(p))
    assert np.max(np.abs(p[:, :, [0, -1]])) < 1e-13 * np.max(np.abs(p))
    assert np.max(np.abs(p[1, 0])) == 0.0
    q = project_to_space(p, LAM, NX, NY)
    assert np.max(np.abs(q - p)) < 1e-10 * np.max(np.abs(p))


def test_dissipation_matches_weak_laplacian(u0):
    c = u0.coeffs
    w = weak_laplacian(c, LAM, NX, NY)
    # <w, u> = -a(u, u)
    from flushlab.band_field import y_weights

    mult = np.full(c.shape[1], 2.0)
    mult[0] = 1.0
    mult[-1] = 1.0
    ip = np.sum(mult[None, :, None] * (w * np.conj(c)).real * y_weights(NY)) * LAM / NX**2
    assert ip == pytest.approx(-dissipation(c, LAM, NX, NY), rel=1e-10)


def test_energy_balance(u0):
    cfg = SolverConfig(epsilon=0.05, Lambda=LAM, nx=NX, ny=NY, dt=5e-3)
    run = solve_navier_stokes(u0, cfg, 0.5)
    assert run.energy[-1] < run.energy[0]
    assert abs(energy_balance(run, 0.05)) < 1e-3


def test_time_order_is_two(u0):
    finals = []
    for dt in (2e-2, 1e-2, 5e-3):
        cfg = SolverConfig(epsilon=0.05, Lambda=LAM, nx=NX, ny=NY, dt=dt)
        finals.append(solve_navier_stokes(u0, cfg, 0.4).final)
    e1 = np.sqrt(energy(finals[0] - finals[1], LAM, NX, NY))
    e2 = np.sqrt(energy(finals[1] - finals[2], LAM, NX, NY))
    assert np.log2(e1 / e2) == pytest.approx(2.0, abs=0.3)


def test_solution_stays_in_space(u0):
    cfg = SolverConfig(epsilon=0.05, Lambda=LAM, nx=NX, ny=NY, dt=1e-2)
    u = solve_navier_stokes(u0, cfg, 0.2).final
    assert np.max(np.abs(_divergence(u))) < 1e-9 * np.max(np.abs(u))
    assert np.max(np.abs(u[:, :, [0, -1]])) < 1e-13 * np.max(np.abs(u))


def test_rescaling_identity_at_eps_one(rng):
    snaps = [(t, rng.standard_normal(4)) for t in (0.0, 0.5, 1.0)]
    for (t, u), (s, v) in zip(snaps, rescale_trajectory(snaps, 1.0)):
        assert s == t and np.array_equal(u, v)


def test_rescaling_maps_time_and_amplitude():
    out = rescale_trajectory([(2.0, np.ones(3))], 0.1)
    assert out[0][0] == pytest.approx(0.2) and np.allclose(out[0][1], 10.0)
    f = rescale_force([(2.0, np.ones(3))], 0.1)
    assert np.allclose(f[0][1], 100.0)


def test_remainder_blowup_guard_flags_incomplete(small_bundle):
    cfg = SolverConfig(epsilon=0.1, Lambda=8.0, nx=32, ny=257)
    traj = solve_remainder(small_bundle, cfg, t_end=0.2, blowup=1e-12, dual_steps=0)
    assert not traj.complete
    assert "exceeded" in traj.failure
    assert traj.times[-1] < 0.2


def test_remainder_short_run(small_bundle):
    cfg = SolverConfig(epsilon=0.1, Lambda=8.0, nx=32, ny=257)
    traj = solve_remainder(small_bundle, cfg, t_end=0.2, dual_steps=3)
    assert traj.complete and traj.times[-1] == pytest.approx(0.2)
    assert np.all(np.isfinite(traj.l2)) and traj.l2[0] == 0.0
    assert np.all(np.diff(traj.grad_acc) >= 0.0)
    for _, gap, _, disc in traj.dual:
        assert gap <= 10.0 * disc + 1e-12


def test_period_doubling_leaves_localized_flow_unchanged():
    from dataclasses import replace

    from flushlab.band_field import band_grid, from_values, l2_norm, perp_grad

    norms = []
    for lam, nx in ((8.0, 32), (16.0, 64)):
        x, y = band_grid(lam, nx, NY)
        X, Y = np.meshgrid(x, y, indexing="ij")
        u = perp_grad(from_values(np.exp(-((X - 0.5) / 0.6) ** 2) * (1 - Y**2) ** 2, lam))
        run = solve_navier_stokes(u, SolverConfig(epsilon=0.05, Lambda=lam, nx=nx, ny=NY, dt=1e-2), 0.5)
        norms.append(l2_norm(replace(u, coeffs=run.final), (-1.0, 2.0)))
    assert norms[0] == pytest.approx(norms[1], rel=1e-5)

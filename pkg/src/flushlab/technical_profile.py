"""Technical corrector W^eps(t, y).

W solves dW/dt - eps d2W/dy2 = f_W on (-1, 1) with W(+-1) = 0 and W(0) = 0,
where the source collects the cutoff commutators of the boundary layer,

    f_W = -(chi''/phi^2) [z^2 V] - 2 (chi' phi'/phi^3) [z^3 dV/dz],

and [.] means evaluation at z = phi(y)/sqrt(eps).  The boundary layer is
advanced alongside W with the same time step so both stay aligned.
"""

from dataclasses import dataclass, field

import numpy as np
from scipy.linalg import solve_banded

from .boundary_layer import Z_MAX_MIN, LayerStepper
from .cutoffs import wall_cutoff, wall_distance
from .stencils import trapezoid_weights

NY_MIN = 200


class ForcingSupportError(ValueError):
    """chi' or chi'' is nonzero where phi vanishes."""


def _cutoff_data(y, chi=wall_cutoff, phi=wall_distance):
    c0, c1, c2 = chi(y)
    p0, p1, _ = phi(y)
    active = (c1 != 0.0) | (c2 != 0.0)
    if np.any(active & (p0 <= 0.0)):
        raise ForcingSupportError("cutoff derivatives do not vanish where phi = 0")
    return c0, c1, c2, p0, p1, active


def forcing_from_layer(V, dVdz, y, epsilon, chi=wall_cutoff, phi=wall_distance):
    """f_W on the y grid given V and dV/dz already evaluated at z = phi(y)/sqrt(eps)."""
    _, c1, c2, p0, p1, active = _cutoff_data(y, chi, phi)
    out = np.zeros_like(np.asarray(y, dtype=float))
    a = active
    z = p0[a] / np.sqrt(epsilon)
    out[a] = -(c2[a] / p0[a] ** 2) * z**2 * V[a] - 2.0 * (c1[a] / p0[a] ** 3) * p1[a] * z**3 * dVdz[a]
    return out


def layer_coordinates(y, epsilon, phi=wall_distance):
    return phi(y)[0] / np.sqrt(epsilon)


def build_corrector_forcing(bl, epsilon, t, y, chi=wall_cutoff, phi=wall_distance):
    """f_W(t, .) from a stored boundary-layer snapshot (cubic interpolation in z)."""
    times = np.asarray(bl.times)
    i = int(np.argmin(np.abs(times - t)))
    if abs(times[i] - t) > 1e-9 * max(1.0, abs(t)):
        raise ValueError(f"t={t} is not a stored snapshot time")
    z = layer_coordinates(y, epsilon, phi)
    V = bl.evaluate(i, z, 0)
    dV = bl.evaluate(i, z, 1)
    return forcing_from_layer(V, dV, y, epsilon, chi, phi)


def second_difference(W, dy):
    out = np.zeros_like(W)
    out[1:-1] = (W[2:] - 2.0 * W[1:-1] + W[:-2]) / dy**2
    return out


def required_z_max(epsilon, margin=20.0):
    """Largest z sampled by the cutoff region (|y| >= 1/3), plus a diffusion margin."""
    return max(Z_MAX_MIN, (2.0 / 3.0) / np.sqrt(epsilon) + margin)


class CorrectorStepper:
    """Advance the boundary layer and W^eps together with a shared time step."""

    def __init__(self, profile, epsilon, ny=257, z_max=None, dz=0.01, forcing=None):
        if not 0.0 < epsilon < 1.0:
            raise ValueError("epsilon must lie in (0, 1)")
        if ny < NY_MIN and forcing is None:
            raise ValueError(f"ny must be at least {NY_MIN}")
        self.epsilon = float(epsilon)
        self.y = np.linspace(-1.0, 1.0, ny)
        self.dy = self.y[1] - self.y[0]
        z_max = required_z_max(epsilon) if z_max is None else z_max
        nz = int(np.ceil(z_max / dz)) + 1
        nz += (nz + 1) % 2  # odd count
        self.layer = LayerStepper(profile, z_max, max(nz, 401))
        self.zq = layer_coordinates(self.y, epsilon)
        self.W = np.zeros(ny)
        self.t = 0.0
        self._external = forcing  # optional f(t, y) replacing the layer forcing
        self.f = self.forcing()
        self._cache = None

    def layer_traces(self):
        """V and dV/dz at z = phi(y)/sqrt(eps) on the y grid."""
        sp = self.layer.spline()
        inside = self.zq <= self.layer.z_max
        V = np.where(inside, sp(self.zq), 0.0)
        dV = np.where(inside, sp(self.zq, 1), 0.0)
        return V, dV

    def forcing(self):
        if self._external is not None:
            return self._external(self.t, self.y)
        V, dV = self.layer_traces()
        return forcing_from_layer(V, dV, self.y, self.epsilon)

    def _banded(self, dt):
        if self._cache is None or self._cache[0] != dt:
            lam = self.epsilon * dt / self.dy**2
            m = len(self.y) - 2
            ab = np.zeros((3, m))
            ab[0, 1:] = -0.5 * lam
            ab[1, :] = 1.0 + lam
            ab[2, :-1] = -0.5 * lam
            self._cache = (dt, ab, lam)
        return self._cache[1], self._cache[2]

    def step(self, dt):
        f_old = self.f
        if self._external is None:
            self.layer.step(dt)
        self.t += dt
        self.f = self.forcing()
        ab, lam = self._banded(dt)
        W = self.W
        rhs = W[1:-1] + 0.5 * lam * (W[2:] - 2.0 * W[1:-1] + W[:-2]) + 0.5 * dt * (f_old + self.f)[1:-1]
        Wn = np.zeros_like(W)
        Wn[1:-1] = solve_banded((1, 1), ab, rhs)
        self.W = Wn
        return f_old

    def laplacian(self, W):
        """The three-point second difference W is advanced with (zero at the walls)."""
        return second_difference(W, self.dy)

    def dyW(self):
        return np.gradient(self.W, self.dy, edge_order=2)


@dataclass
class TechnicalProfile:
    epsilon: float
    y_grid: np.ndarray
    times: np.ndarray = None
    snapshots: list = field(default_factory=list)
    snapshot_times: list = field(default_factory=list)
    sup_W: np.ndarray = None
    sup_dyW: np.ndarray = None
    dtW_l2: np.ndarray = None   # ||dW/dt||_{L2} per step
    dtf_l1l2: float = 0.0       # int ||df/dt||_{L2} dt

    def sup_bound(self):
        """sup_t (||W||_inf + ||dW/dy||_inf)."""
        return float(np.max(self.sup_W + self.sup_dyW))

    def sup_history_rows(self):
        return [(t, self.epsilon, a, b) for t, a, b in zip(self.times, self.sup_W, self.sup_dyW)]


def solve_technical_profile(profile, epsilon, ny=257, dt=1e-3, t_end=1.0, snapshot_every=0,
                            dz=0.01, growth=0.0, forcing=None):
    """Crank-Nicolson solve of the corrector equation, tracking sup norms each step.

    ``profile`` (a flushing profile or a solved layer field) drives the
    boundary layer that is stepped with the same dt.
    ``forcing`` (callable f(t, y)) replaces the layer source, e.g. for
    manufactured solutions.  ``growth`` > 0 lets dt grow to growth*t once the
    flushing datum has switched off.
    """
    # a solved layer field carries its profile; the layer is re-stepped in lock-step
    profile = getattr(profile, "profile", profile)
    st = CorrectorStepper(profile, epsilon, ny, dz=dz, forcing=forcing)
    w = trapezoid_weights(ny, st.dy)
    times, supW, supD, dtW = [0.0], [0.0], [0.0], [0.0]
    out = TechnicalProfile(float(epsilon), st.y.copy())
    l1 = 0.0
    k = 0
    while st.t < t_end - 1e-12:
        step = dt
        if growth > 0 and st.t > st.layer.datum_end:
            step = max(dt, growth * st.t)
        step = min(step, t_end - st.t)
        W_old = st.W
        f_old = st.step(step)
        k += 1
        l1 += float(np.sqrt(np.sum(w * (st.f - f_old) ** 2)))
        times.append(st.t)
        supW.append(float(np.max(np.abs(st.W))))
        supD.append(float(np.max(np.abs(st.dyW()))))
        dtW.append(float(np.sqrt(np.sum(w * ((st.W - W_old) / step) ** 2))))
        if snapshot_every and k % snapshot_every == 0:
            out.snapshots.append(st.W.copy())
            out.snapshot_times.append(st.t)
    out.times = np.array(times)
    out.sup_W = np.array(supW)
    out.sup_dyW = np.array(supD)
    out.dtW_l2 = np.array(dtW)
    out.dtf_l1l2 = l1
    out.final = st.W.copy()
    return out

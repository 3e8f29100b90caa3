import math

import numpy as np
import pytest

from gradheat import grid as G
from gradheat.params import ProblemParams


def test_operators_exact_on_quadratics_2d():
    g = G.Grid(2, 1.0, 0.05)
    X, Y = g.coords
    u = (X - 0.1) ** 2 + (Y + 0.2) ** 2 + 3 * X * Y
    lap = G.laplacian(u, g.h)
    assert np.max(np.abs(lap[1:-1, 1:-1] - 4.0)) < 1e-9
    gr = G.gradient(u, g.h)
    assert np.max(np.abs(gr[0][1:-1, 1:-1] - (2 * (X - 0.1) + 3 * Y)[1:-1, 1:-1])) < 1e-10
    H = G.hessian(u, g.h)
    assert np.allclose(H[0][1][2:-2, 2:-2], 3.0, atol=1e-9)


def test_constant_field():
    g = G.Grid(1, 1.0, 0.1)
    u = np.full(g.shape, 2.5)
    assert np.all(G.gradient(u, g.h) == 0) and np.all(G.laplacian(u, g.h)[1:-1] == 0)


def test_gradient_convergence_slope():
    errs, hs = [], [0.02, 0.01, 0.005]
    for h in hs:
        g = G.Grid(1, 1.0, h)
        x = g.coords[0]
        d = G.gradient(np.sin(x), h)[0]
        errs.append(np.max(np.abs(d - np.cos(x))[1:-1]))
    slope = np.polyfit(np.log(hs), np.log(errs), 1)[0]
    assert abs(slope - 2) < 0.1


def test_zero_data_stays_zero():
    g = G.Grid(1, 1.0, 0.05)
    P = ProblemParams(1, 3, "3/2", 1.0)
    tr = G.solve(G.Field(g, g.zeros()), P, G.SolverConfig(dt=G.stable_dt(g), T=0.05))
    assert tr.status is G.Status.COMPLETED
    assert np.all(tr.snapshots == 0) and tr.clamp_count == 0


def test_small_data_decays_without_clamping():
    g = G.Grid(1, 1.0, 0.02)
    P = ProblemParams(1, 3, "3/2", 1.0)
    u0 = g.sample(lambda x: 1e-2 * np.cos(np.pi * x / 2))
    tr = G.solve(G.Field(g, u0), P, G.SolverConfig(dt=G.stable_dt(g), T=0.2, stride=20))
    s = tr.sup_norms()
    assert tr.status is G.Status.COMPLETED
    assert np.all(np.diff(s) < 0) and tr.clamp_count == 0
    assert tr.min_preclamp >= -10 * np.finfo(float).eps


def test_heat_contracts_sup_norm():
    g = G.Grid(2, 1.0, 0.1)
    P = ProblemParams(2, 3, "3/2", 0.0)
    rng = np.random.default_rng(3)
    u0 = np.where(g.mask, rng.random(g.shape) * 1e-6, 0)
    tr = G.solve(G.Field(g, u0), P, G.SolverConfig(dt=G.stable_dt(g, 1.0), T=0.05, stop_at_steady=False))
    assert np.all(np.diff(tr.sup_norms()) <= 1e-18)


def test_unstable_dt_rejected():
    g = G.Grid(1, 1.0, 0.1)
    P = ProblemParams(1, 3, "3/2")
    with pytest.raises(ValueError):
        G.solve(G.Field(g, g.zeros()), P, G.SolverConfig(dt=0.01, T=0.1))


def test_blowup_flagged():
    g = G.Grid(1, 1.0, 0.05)
    P = ProblemParams(1, 3, 2, 0.0)
    u0 = np.where(g.interior, 20.0, 0.0)
    tr = G.solve(G.Field(g, u0), P, G.SolverConfig(dt=G.stable_dt(g) / 10, T=0.01))
    assert tr.status is G.Status.BLOWUP and tr.blowup_time < 0.01
    assert tr.sup_norms()[-1] <= 1e8  # last stored snapshot is the last stable one


def test_manufactured_richardson():
    """Forcing chosen so that e^{-t} cos x is exact; second order in h (dt ∝ h²)."""
    P = ProblemParams(1, 2, "3/2", 1.0)

    def exact(x, t):
        return math.exp(-t) * np.cos(x)

    def forcing(x, t):
        u = exact(x, t)
        return -(np.maximum(u, 0) ** 2 + np.abs(math.exp(-t) * np.sin(x)) ** 1.5)

    errs, hs = [], [0.1, 0.05, 0.025]
    for h in hs:
        g = G.Grid(1, 1.0, h)
        cfg = G.SolverConfig(dt=0.2 * h * h, T=0.1, forcing=forcing, boundary_fn=exact,
                             stop_at_steady=False)
        tr = G.solve(G.Field(g, g.sample(lambda x: exact(x, 0.0))), P, cfg)
        errs.append(np.max(np.abs(tr.snapshots[-1] - g.sample(lambda x: exact(x, 0.1)))))
    order = np.polyfit(np.log(hs), np.log(errs), 1)[0]
    assert 1.7 <= order <= 2.3


def test_time_derivative_flat_ode():
    p, u0 = 3.0, 1.0
    t = np.linspace(0, 0.2, 41)
    u = (u0 ** (1 - p) - (p - 1) * t) ** (-1 / (p - 1))
    g = G.Grid(1, 1.0, 0.2)
    S = np.repeat(u[:, None], g.shape[0], axis=1)
    tr = G.Trajectory(g, ProblemParams(1, 3, 2), t, S)
    f, order = G.time_derivative(tr, 20)
    assert order == 2
    assert f.values[0] == pytest.approx(u[20] ** p, rel=1e-3)
    _, order0 = G.time_derivative(tr, 0)
    assert order0 == 1


def test_rescaling_identity_and_window(sub_traj):
    r1 = G.pde_residual(sub_traj)
    assert G.rescaling_residual(sub_traj, 1.0, sub_traj.params) == r1
    with pytest.raises(ValueError):
        G.rescaling_residual(sub_traj, -1.0, sub_traj.params)
    with pytest.raises(G.OutOfWindow):
        G.rescaling_residual(sub_traj, 0.05, sub_traj.params)


def test_export_roundtrip(tmp_path, sub_traj):
    man = G.export_trajectory(sub_traj, tmp_path / "traj")
    back = G.load_trajectory(man)
    assert np.array_equal(back.times, sub_traj.times)
    assert np.allclose(back.snapshots, sub_traj.snapshots, rtol=0, atol=1e-15)

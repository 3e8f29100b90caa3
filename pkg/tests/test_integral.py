from fractions import Fraction

import numpy as np
import pytest

from gradheat import grid as G
from gradheat import integral as I
from gradheat.params import INF, DomainError, ProblemParams


def test_admissible_window():
    assert I.admissible_k(1, 3) == (0, INF)
    lo, hi = I.admissible_k(3, 3)
    assert lo == Fraction(6, 5) and hi == Fraction(3, 2)
    with pytest.raises(DomainError):
        I.admissible_k(3, Fraction(15, 4))
    for N, p in [(1, 2), (2, 3), (3, 2), (4, 2)]:
        k = I.default_k(N, p)
        lo, hi = I.admissible_k(N, p)
        assert lo < -k < hi and k != -1


def test_coefficients_positive_in_window():
    rng = np.random.default_rng(11)
    for _ in range(100):
        N = int(rng.integers(1, 6))
        pB = 8 if N == 1 else float(I.bidaut_veron_exponent(N))
        p = Fraction(1 + (pB - 1) * rng.uniform(0.02, 0.98)).limit_denominator(1000)
        lo, hi = I.admissible_k(N, p)
        top = float(lo) + 5 if hi is INF else float(hi)
        mk = Fraction(rng.uniform(float(lo), top)).limit_denominator(10**6)
        if not lo < mk < (hi if hi is not INF else mk + 1) or mk == 1:
            continue
        co = I.souplet_coefficients(0, -mk, N, p)
        assert co.alpha > 0 and co.delta > 0


def test_k_minus_one_excluded():
    with pytest.raises(DomainError):
        I.souplet_coefficients(0, -1, 2)


def test_smooth_step():
    s = np.linspace(-0.5, 1.5, 201)
    S = I.smooth_step(s)
    assert np.all(S[s <= 0] == 0) and np.all(S[s >= 1] == 1)
    assert np.all(np.diff(S) >= 0)
    fd = np.gradient(S, s)
    assert np.max(np.abs(fd - I.smooth_step(s, 1))) < 0.05


def test_test_function_plateau_and_support():
    phi = I.TestFunction.make(1.0, 3, 2, t0=2.0)
    X = np.meshgrid(np.linspace(-1.2, 1.2, 49), np.linspace(-1.2, 1.2, 49), indexing="ij")
    sb, _, _ = phi.space_parts(X)
    r = np.hypot(*X)
    assert np.all(sb[r <= 0.5] == 1) and np.all(sb[r >= 1] == 0)
    tb, _ = phi.time_parts(np.array([2.0, 2.4, 3.0, 3.5]))
    assert tb[0] == 1 and tb[1] == 1 and tb[3] == 0
    assert phi.b == I.bump_exponent(phi.alpha_bar)
    assert np.isfinite(phi.measured_constant(X, np.linspace(1.0, 3.0, 21)))
    with pytest.raises(ValueError):
        I.TestFunction.make(1.0, 3, 2, alpha_bar=0.5)


@pytest.mark.parametrize("field", [I.ConstantField(2.0), I.Paraboloid()])
def test_souplet_simple_fields(field):
    for dim in (1, 2):
        k = Fraction(-1, 2) if dim == 1 else I.default_k(dim, 2)
        chk = I.verify_souplet_inequality(field, I.TestFunction.bump(1.0, dim), 0, k)
        assert chk.passed and chk.agreement < 0.01


def test_souplet_identity_part_vanishes_on_constants():
    sides = I.souplet_sides(I.ConstantField(3.0), I.TestFunction.bump(1.0, 2), 0, Fraction(-1, 2), 32)
    assert sides["lhs"] == 0 and sides["rhs"] == 0


def test_trig_polynomial_derivatives():
    rng = np.random.default_rng(0)
    v = I.TrigPolynomial.random(rng, 1)
    x = np.linspace(-1, 1, 2001)
    assert np.all(v.value([x]) > 0)
    fd = np.gradient(v.value([x]), x)
    assert np.max(np.abs(fd - v.grad([x])[0])[1:-1]) < 1e-4
    with pytest.raises(ValueError):
        I.TrigPolynomial([1.0], [[1.0]], [0.0], 0.5)


def test_u2p_scaling_exponent():
    assert I.u2p_scaling_exponent(1, 3) == -3
    assert I.u2p_scaling_exponent(2, 2) == -4


def test_u2p_integral_constant():
    g = G.Grid(1, 2.0, 0.05)
    S = np.ones((5,) + g.shape)
    tr = G.Trajectory(g, ProblemParams(1, 2, 2), np.linspace(0, 1, 5), S)
    n = np.count_nonzero(g.within(1.0))
    assert I.u2p_integral(tr, 2.0, 1.0, 0.0, 1.0) == pytest.approx(n * g.h)


def _critical_run(T=0.5):
    P = ProblemParams(1, 2, Fraction(4, 3), 0.01)
    g = G.Grid(1, 1.0, 0.02)
    u0 = g.sample(lambda x: 0.2 * (1 - x * x) ** 2)
    cfg = G.SolverConfig(dt=G.stable_dt(g), T=T, bc=G.BC.DIRICHLET_ZERO, stop_at_steady=False)
    return G.solve(G.Field(g, u0), P, cfg)


def test_sign_invariants_and_theta_limit():
    tr = _critical_run()
    phi = I.TestFunction.make(0.5, 2, 1, t0=0.25)
    Ls = []
    for theta in (1e-1, 1e-2, 1e-3):
        Q = I.space_time_quantities(tr, theta, phi)
        assert min(Q.I, Q.L, Q.G, Q.K) >= 0 and Q.f_theta_max <= 0
        Ls.append(Q.L)
    assert Ls[0] > Ls[1] > Ls[2] > 0


def test_support_not_covered():
    tr = _critical_run(0.1)
    with pytest.raises(I.SupportNotCovered):
        I.space_time_quantities(tr, 1e-3, I.TestFunction.make(0.5, 2, 1, t0=0.05))
    with pytest.raises(I.SupportNotCovered):
        I.space_time_quantities(tr, 1e-3, I.TestFunction.make(2.0, 2, 1, t0=0.05))


def test_explicit_constant_dominates_unit_terms():
    C = I.explicit_constant(1, 2, Fraction(-1, 2))
    assert C >= 1.0

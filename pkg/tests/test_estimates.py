import math
from fractions import Fraction

import numpy as np
import pytest

from gradheat import estimates as E
from gradheat import grid as G
from gradheat.params import ProblemParams, smallness_threshold


def test_critical_template_exponents_agree():
    for p in [Fraction(2), Fraction(3), Fraction(7, 3), Fraction(11, 2)]:
        q = 2 * p / (p + 1)
        P = ProblemParams(1, p, q)
        sub = E.BoundTemplate.SUBCRITICAL.exponents(P)
        crit = E.BoundTemplate.CRITICAL.exponents(P)
        assert sub["t"] == crit["t"] == (p + 1) / (2 * p)
        assert sub["R"][1] == crit["R"][1] == (p + 1) / (p - 1)


def test_template_mismatch(sub_traj):
    with pytest.raises(E.TemplateMismatch):
        E.fit_bound(sub_traj, E.BoundTemplate.CRITICAL)
    with pytest.raises(E.TemplateMismatch):
        E.universal_bound_check(sub_traj)
    with pytest.raises(ValueError):
        E.BoundTemplate.UNIVERSAL.evaluate(sub_traj.params, 1.0, 0.1)


def test_hypotheses_on_subcritical_run(sub_traj):
    rep = E.check_hypotheses(sub_traj)
    assert rep.passed and rep.bound_kind == "upper"
    assert rep.monotonicity <= 1e-9
    tight = E.check_hypotheses(sub_traj, c=1e-3 * smallness_threshold(sub_traj.params))
    assert not tight.bound_pass


def test_fitted_constant_is_minimal(sub_traj):
    rep = E.fit_bound(sub_traj)
    assert rep.violations == 0 and rep.fitted_C > 0
    C, viol, *_ = E._fit_C(sub_traj, rep.template, sub_traj.params, rep.radius, 1.0, 0.0)
    assert C == rep.fitted_C
    sel = sub_traj.grid.within(rep.radius) & sub_traj.grid.interior
    g = E._grad_norm(sub_traj)[1:][:, sel]
    env = rep.template.evaluate(sub_traj.params, sub_traj.grid.R, sub_traj.times[1:])[:, None]
    assert np.count_nonzero(g > 0.99 * rep.fitted_C * env) >= 1


def test_loglog_fit_power_law():
    t = np.logspace(-3, -1, 20)
    s, r2 = E.loglog_fit(t, 3 * t**-0.75)
    assert s == pytest.approx(-0.75) and r2 == pytest.approx(1.0)


def test_parabolic_boundary_distance():
    g = G.Grid(1, 1.0, 0.1)
    d = E.parabolic_boundary_distance(g, [0.04, 0.5], 1.0)
    assert d[0, g.n_half] == pytest.approx(0.2)
    assert d[1, g.n_half] == pytest.approx(math.sqrt(0.5))
    assert d[1, 0] == 0.0


def test_universal_bound_small_critical_run():
    P = ProblemParams(1, 2, Fraction(4, 3), 0.01)
    g = G.Grid(1, 1.0, 0.02)
    cfg = G.SolverConfig(dt=G.stable_dt(g), T=0.3, stride=20, stop_at_steady=False)
    a = G.solve(G.Field(g, E.decreasing_profile(g, 0.2, spread=1.5)), P, cfg)
    b = G.solve(G.Field(g, E.cone_data(g, 0.2)), P, cfg)
    rep = E.universal_bound_check(a, other=b)
    assert rep.violations == 0 and rep.fitted_C > 0
    assert rep.universality_ratio <= 10
    i, node = 3, g.n_half
    assert E.universal_margin_ratio(rep, i, node) >= 1 - 1e-12


def test_cone_is_superharmonic_supersolution():
    for dim in (1, 2):
        g = G.Grid(dim, 4.0, 0.1)
        u0 = E.cone_data(g, 1e-5)
        assert E.supersolution_defect(u0, g, ProblemParams(dim, 3, Fraction(3, 2), 1.0)) < 0
        assert np.all(u0[g.radius >= g.R] == 0) and np.all(u0 >= 0)


def test_liouville_trivial_and_supercritical():
    P = ProblemParams(1, 3, Fraction(6, 5), 1.0)
    rep = E.liouville_probe(P, R=2.0, data="zero")
    assert rep.trend is E.Trend.DECAYING and rep.ratio == 0.0
    S = ProblemParams(1, 2, Fraction(19, 10), 1.0)
    rep = E.liouville_probe(S, R=2.0)
    assert rep.trend is E.Trend.NOT_APPLICABLE and not rep.consistent


def test_blowup_deadline_oracle():
    lam = (math.pi / 2) ** 2
    assert E.blowup_deadline(3, 0.9 * math.sqrt(lam)) == math.inf
    A = 1e3
    assert E.blowup_deadline(3, A) == pytest.approx(1 / (2 * A * A), rel=1e-4)
    assert E.blowup_deadline(3, 10.0) > 1 / (2 * 100.0)


def test_blowup_control_fires():
    rep = E.blowup_control(3, 10.0)
    assert rep.status is G.Status.BLOWUP and rep.fired

"""Gradient-bound templates, hypothesis checks, universal bound and decay probes."""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass, field
from fractions import Fraction

import numpy as np

from . import grid as G
from .params import (ProblemParams, Regime, largeness_threshold, m0_threshold,
                     smallness_threshold)


class TemplateMismatch(ValueError):
    pass


class HypothesisViolated(RuntimeError):
    pass


class BoundTemplate(enum.Enum):
    SUBCRITICAL = "Subcritical"
    CRITICAL = "Critical"
    SUPERCRITICAL_GENERAL = "SupercriticalGeneral"
    SUPERCRITICAL_LARGE = "SupercriticalLarge"
    UNIVERSAL = "Universal"

    @property
    def regime(self) -> Regime:
        return {
            BoundTemplate.SUBCRITICAL: Regime.SUBCRITICAL,
            BoundTemplate.CRITICAL: Regime.CRITICAL,
            BoundTemplate.SUPERCRITICAL_GENERAL: Regime.SUPERCRITICAL,
            BoundTemplate.SUPERCRITICAL_LARGE: Regime.SUPERCRITICAL,
            BoundTemplate.UNIVERSAL: Regime.CRITICAL,
        }[self]

    @classmethod
    def for_params(cls, params: ProblemParams) -> "BoundTemplate":
        return {Regime.SUBCRITICAL: cls.SUBCRITICAL, Regime.CRITICAL: cls.CRITICAL,
                Regime.SUPERCRITICAL: cls.SUPERCRITICAL_GENERAL}[params.regime]

    def exponents(self, params: ProblemParams) -> dict:
        """Exact exponents (as positive rationals) of R^{-e} and t^{-e} terms."""
        p, q = params.p, params.q
        if self is BoundTemplate.SUBCRITICAL:
            return {"R": [Fraction(1), 1 / (q - 1)], "t": 1 / q}
        if self is BoundTemplate.CRITICAL:
            return {"R": [Fraction(1), (p + 1) / (p - 1)], "t": (p + 1) / (2 * p)}
        if self in (BoundTemplate.SUPERCRITICAL_GENERAL, BoundTemplate.SUPERCRITICAL_LARGE):
            return {"R": [1 / (q - 1)], "t": 1 / (2 * (q - 1))}
        return {"dP": 2 / (p - 1)}

    def evaluate(self, params: ProblemParams, R: float, t, b: float = 1.0, tau: float = 0.0):
        """Template value (without the constant C) at radius R and time(s) t."""
        if self is BoundTemplate.UNIVERSAL:
            raise ValueError("the universal template depends on d_P, use universal_bound_check")
        t = np.asarray(t, dtype=float)
        ex = self.exponents(params)
        val = sum(R ** -float(e) for e in ex["R"]) + t ** -float(ex["t"])
        if self is BoundTemplate.CRITICAL:
            val = b * val
        elif self is BoundTemplate.SUPERCRITICAL_GENERAL:
            p, q, M = params.p, params.q, params.M
            val = val + M ** -float((p + 1) / ((p + 1) * q - 2 * p)) + M ** (-1 / params.qf) * tau ** (1 / params.qf)
        return val


@dataclass
class HypothesisReport:
    template: BoundTemplate
    bound_kind: str              # "upper", "lower" or "none"
    bound: float
    extreme_u: float             # sup u (upper) or inf u (lower) over Q_{T,R}, t >= dt
    bound_margin: float          # positive when the bound holds
    bound_pass: bool
    monotonicity: float          # max u_t over the checked cylinder
    monotone_tol: float
    monotone_pass: bool
    tau: float
    radius: float
    extra: dict = field(default_factory=dict)

    @property
    def passed(self) -> bool:
        return self.bound_pass and self.monotone_pass and all(
            v for k, v in self.extra.items() if k.endswith("_ok"))


def _ut_max(traj: G.Trajectory, sel: np.ndarray) -> float:
    if len(traj) < 2:
        return 0.0
    dt = np.diff(traj.times)
    keep = dt > 0
    ut = np.diff(traj.snapshots, axis=0)[keep] / dt[keep][(...,) + (None,) * traj.grid.dim]
    if ut.size == 0:
        return 0.0
    return float(np.max(ut[:, sel])) if np.any(sel) else 0.0


def check_hypotheses(traj: G.Trajectory, params: ProblemParams | None = None,
                     template: BoundTemplate | None = None, c: float | None = None,
                     b: float | None = None, tau: float = 0.0, monotone_tol: float = 1e-9,
                     radius: float | None = None) -> HypothesisReport:
    """Evaluate the template's hypotheses on the snapshots with t >= dt.

    u_t is taken from consecutive snapshots (one-sided), which is the
    discrete statement of monotonicity along the recorded trajectory.
    """
    params = traj.params if params is None else params
    template = BoundTemplate.for_params(params) if template is None else template
    grid = traj.grid
    radius = grid.R if radius is None else radius
    sel = grid.within(radius)
    later = traj.snapshots[1:] if len(traj) > 1 else traj.snapshots
    vals = later[:, sel]
    sup_u = float(np.max(vals)) if vals.size else 0.0
    extra = {}
    if template is BoundTemplate.SUBCRITICAL:
        kind, bound = "upper", smallness_threshold(params, c)
        ext, margin = sup_u, bound - sup_u
    elif template is BoundTemplate.CRITICAL:
        kind = "upper"
        bound = max(1.0, sup_u) if b is None else float(b)
        ext, margin = sup_u, bound - sup_u
        extra["M0"] = m0_threshold(params.dim, params.p)
        extra["M_ok"] = params.M >= extra["M0"]
        extra["b_ok"] = bound >= 1.0
    elif template is BoundTemplate.SUPERCRITICAL_LARGE:
        kind, bound = "lower", largeness_threshold(params, c, tau)
        interior = traj.snapshots[1:][:, sel & grid.interior] if len(traj) > 1 else vals
        ext = float(np.min(interior)) if interior.size else 0.0
        margin = ext - bound
    else:
        kind, bound, ext, margin = "none", math.nan, sup_u, math.inf
    mono_bound = 0.0 if template in (BoundTemplate.SUBCRITICAL, BoundTemplate.CRITICAL) else tau
    ut = _ut_max(traj, sel)
    return HypothesisReport(template, kind, bound, ext, margin, margin >= 0, ut,
                            monotone_tol, ut <= mono_bound + monotone_tol, tau, radius, extra)


# ------------------------------------------------------------- bound fits

@dataclass
class EstimateReport:
    template: BoundTemplate
    fitted_C: float
    violations: int
    R: float
    radius: float
    stability_ratio: float | None = None
    time_exponent: float | None = None
    time_r2: float | None = None
    time_window: tuple | None = None
    universality_ratio: float | None = None
    extra: dict = field(default_factory=dict)


def loglog_fit(x, y):
    """Least-squares slope of log y against log x, with R^2."""
    lx, ly = np.log(np.asarray(x, float)), np.log(np.asarray(y, float))
    slope, icept = np.polyfit(lx, ly, 1)
    pred = slope * lx + icept
    ss_res = float(np.sum((ly - pred) ** 2))
    ss_tot = float(np.sum((ly - ly.mean()) ** 2))
    r2 = 1.0 - ss_res / ss_tot if ss_tot > 0 else 1.0
    return float(slope), r2


def _grad_norm(traj: G.Trajectory) -> np.ndarray:
    h = traj.grid.h
    return np.sqrt(np.stack([G.grad_norm_sq(s, h) for s in traj.snapshots]))


def _fit_C(traj, template, params, radius, b, tau):
    grid = traj.grid
    sel = grid.within(radius) & grid.interior
    t = traj.times[1:]
    g = _grad_norm(traj)[1:][:, sel]
    env = np.asarray(template.evaluate(params, grid.R, t, b=b, tau=tau))[:, None]
    ratio = g / env
    C = float(np.max(ratio)) if ratio.size else 0.0
    viol = int(np.count_nonzero(g > C * env * (1 + 1e-12)))
    return C, viol, t, g


def fit_bound(traj: G.Trajectory, template: BoundTemplate | None = None,
              params: ProblemParams | None = None, radius: float | None = None,
              b: float = 1.0, tau: float = 0.0, rerun: G.Trajectory | None = None,
              time_window: tuple = (0.0, 0.1)) -> EstimateReport:
    """Smallest C with |∇u| <= C·template over the inner cylinder Q_{T,R/2}."""
    params = traj.params if params is None else params
    template = BoundTemplate.for_params(params) if template is None else template
    if template.regime is not params.regime:
        raise TemplateMismatch(f"{template.value} template on a {params.regime} problem")
    grid = traj.grid
    radius = grid.R / 2 if radius is None else radius
    C, viol, t, g = _fit_C(traj, template, params, radius, b, tau)
    rep = EstimateReport(template, C, viol, grid.R, radius)
    if rerun is not None:
        C2, _, _, _ = _fit_C(rerun, template, params, rerun.grid.R / 2, b, tau)
        rep.stability_ratio = max(C, C2) / min(C, C2) if min(C, C2) > 0 else math.inf
        rep.extra["C_rerun"] = C2
        rep.extra["R_rerun"] = rerun.grid.R
    lo, hi = time_window
    sup_g = g.max(axis=1) if g.size else np.zeros(len(t))
    w = (t >= max(lo, traj.dt * 0.999)) & (t <= hi) & (sup_g > 0)
    if np.count_nonzero(w) >= 3:
        rep.time_exponent, rep.time_r2 = loglog_fit(t[w], sup_g[w])
        rep.time_window = (float(t[w][0]), float(t[w][-1]))
    return rep


# -------------------------------------------------------- universal bound

def parabolic_boundary_distance(grid: G.Grid, t, T: float, omega_radius: float | None = None):
    """d_P((x,t), ∂D) for D = B(x0, ρ) × (0, T): min(ρ - |x-x0|, √t, √(T-t))."""
    rho = grid.R if omega_radius is None else omega_radius
    t = np.asarray(t, dtype=float)
    space = np.maximum(rho - grid.radius, 0.0)
    tt = np.sqrt(np.minimum(t, T - t).clip(min=0.0))
    return np.minimum(space[None, ...], tt[(...,) + (None,) * grid.dim])


def universal_quantity(traj: G.Trajectory, params: ProblemParams | None = None) -> np.ndarray:
    params = traj.params if params is None else params
    return traj.snapshots + _grad_norm(traj) ** (2 / (params.pf + 1))


def _universal_fit(traj, params, T, omega_radius):
    grid = traj.grid
    keep = (traj.times > 0) & (traj.times < T)
    Q = universal_quantity(traj, params)[keep]
    d = parabolic_boundary_distance(grid, traj.times[keep], T, omega_radius)
    sel = grid.interior[None, ...] & (d > 0)
    env = np.where(sel, d, 1.0) ** (-2 / (params.pf - 1))
    ratio = np.where(sel, Q / env, 0.0)
    C = float(ratio.max()) if ratio.size else 0.0
    viol = int(np.count_nonzero(sel & (Q > C * env * (1 + 1e-12))))
    return C, viol, Q, env, sel, traj.times[keep]


def universal_bound_check(traj: G.Trajectory, params: ProblemParams | None = None,
                          T: float | None = None, omega_radius: float | None = None,
                          other: G.Trajectory | None = None,
                          time_window: tuple = (0.0, 0.1)) -> EstimateReport:
    """Fit C in u + |∇u|^{2/(p+1)} <= C d_P^{-2/(p-1)} over D = Ω×(0,T)."""
    params = traj.params if params is None else params
    if params.regime is not Regime.CRITICAL:
        raise TemplateMismatch("the universal bound is stated for critical q")
    T = float(traj.times[-1]) if T is None else T
    C, viol, Q, env, sel, t = _universal_fit(traj, params, T, omega_radius)
    rep = EstimateReport(BoundTemplate.UNIVERSAL, C, viol, traj.grid.R,
                         traj.grid.R if omega_radius is None else omega_radius)
    if other is not None:
        C2, *_ = _universal_fit(other, params, float(other.times[-1]), omega_radius)
        rep.universality_ratio = max(C, C2) / min(C, C2) if min(C, C2) > 0 else math.inf
        rep.extra["C_other"] = C2
    lo, hi = time_window
    supQ = np.array([q[s].max() if np.any(s) else 0.0 for q, s in zip(Q, sel)])
    w = (t >= lo) & (t <= hi) & (supQ > 0)
    if np.count_nonzero(w) >= 3:
        rep.time_exponent, rep.time_r2 = loglog_fit(t[w], supQ[w])
        rep.time_window = (float(t[w][0]), float(t[w][-1]))
    rep.extra.update(Q=Q, envelope=env, included=sel, times=t)
    return rep


def universal_margin_ratio(rep: EstimateReport, snapshot: int, node) -> float:
    """C·d_P^{-2/(p-1)} / (u + |∇u|^{2/(p+1)}) at one node; inf where u vanishes."""
    Q = rep.extra["Q"][snapshot][node]
    env = rep.extra["envelope"][snapshot][node]
    return math.inf if Q == 0 else float(rep.fitted_C * env / Q)


# --------------------------------------------------------- decay probes

class Trend(enum.Enum):
    DECAYING = "Decaying"
    STAGNANT = "Stagnant"
    GROWING = "Growing"
    NOT_APPLICABLE = "NotApplicable"


@dataclass
class LiouvilleReport:
    params: ProblemParams
    R: float
    T: float
    ratio: float
    trend: Trend
    hypotheses: HypothesisReport | None
    amplitude: float
    status: G.Status | None = None

    @property
    def consistent(self) -> bool:
        return self.trend is Trend.DECAYING


def cone_data(grid: G.Grid, amplitude: float, smoothing: float | None = None) -> np.ndarray:
    """A(√(R²+ε²) - √(r²+ε²))/R: radially decreasing, vanishing at r = R, with
    r·u' decreasing so that the profile is superharmonic in 1D and 2D."""
    R = grid.R
    eps = R / 8 if smoothing is None else smoothing
    u = amplitude * (math.sqrt(R * R + eps * eps) - np.sqrt(grid.radius**2 + eps * eps)) / R
    return np.where(grid.mask, np.maximum(u, 0.0), 0.0)


def supersolution_defect(u0: np.ndarray, grid: G.Grid, params: ProblemParams) -> float:
    """max over interior nodes of Δu0 + u0^p + M|∇u0|^q (must be <= 0 for u_t <= 0)."""
    lap = G.laplacian(u0, grid.h)
    g2 = G.grad_norm_sq(u0, grid.h)
    r = lap + np.power(u0, params.pf) + params.M * np.power(g2, params.qf / 2)
    return float(np.max(r[grid.interior]))


def _default_amplitude(params: ProblemParams, c: float | None) -> float:
    if params.regime is Regime.SUBCRITICAL:
        return 0.9 * smallness_threshold(params, c)
    if params.regime is Regime.CRITICAL:
        return 1.0
    return 2.0 * largeness_threshold(params, c)


def liouville_probe(params: ProblemParams, R: float = 8.0, data="cone", T: float | None = None,
                    h: float | None = None, amplitude: float | None = None,
                    c: float | None = None, monotone_tol: float = 1e-9,
                    decay_threshold: float = 0.5) -> LiouvilleReport:
    """Solve with Dirichlet zero data on B_R, horizon T = R, and report sup u(T)/sup u(0).

    ``data`` is "cone" (amplitude halved until the profile is a strict
    supersolution, so u_t <= 0 holds), "zero", or an array of initial values.
    """
    if params.dim not in (1, 2):
        raise ValueError("simulation is limited to dimensions 1 and 2")
    T = R if T is None else T
    h = (R / 40 if params.dim == 2 else R / 200) if h is None else h
    grid = G.Grid(params.dim, R, h)
    if isinstance(data, str) and data == "zero":
        u0, A = grid.zeros(), 0.0
    elif isinstance(data, str) and data == "cone":
        A = _default_amplitude(params, c) if amplitude is None else amplitude
        u0 = cone_data(grid, A)
        for _ in range(200):
            if supersolution_defect(u0, grid, params) < 0:
                break
            A /= 2
            u0 = cone_data(grid, A)
    else:
        u0 = np.asarray(data, dtype=float)
        A = float(u0.max())
    template = BoundTemplate.for_params(params)
    if params.regime is Regime.SUPERCRITICAL:
        template = BoundTemplate.SUPERCRITICAL_LARGE
        hyp = check_hypotheses(G.Trajectory(grid, params, np.array([0.0, 0.0]),
                                            np.stack([u0, u0]), G.Status.COMPLETED, None,
                                            0, 0.0, 0.0, 0),
                               params, template, c=c, monotone_tol=monotone_tol)
        if not hyp.bound_pass:
            return LiouvilleReport(params, R, T, math.nan, Trend.NOT_APPLICABLE, hyp, A)
    if not np.any(u0 > 0):
        return LiouvilleReport(params, R, T, 0.0, Trend.DECAYING, None, A, G.Status.COMPLETED)
    cfg = G.SolverConfig(dt=G.stable_dt(grid), T=T, bc=G.BC.DIRICHLET_ZERO,
                         stride=max(1, int(round(0.05 * T / G.stable_dt(grid)))),
                         stop_at_steady=False)
    traj = G.solve(G.Field(grid, u0), params, cfg)
    hyp = check_hypotheses(traj, params, template, c=c, monotone_tol=monotone_tol)
    if not hyp.monotone_pass:
        raise HypothesisViolated(f"max u_t = {hyp.monotonicity:.3e} exceeds tolerance")
    if traj.status is G.Status.BLOWUP:
        return LiouvilleReport(params, R, T, math.inf, Trend.GROWING, hyp, A, traj.status)
    sup = traj.sup_norms()
    ratio = float(sup[-1] / sup[0])
    trend = Trend.DECAYING if ratio < decay_threshold else (Trend.GROWING if ratio > 1 else Trend.STAGNANT)
    return LiouvilleReport(params, R, T, ratio, trend, hyp, A, traj.status)


def liouville_two_scales(params: ProblemParams, scales=(4.0, 8.0), **kw) -> list[LiouvilleReport]:
    return [liouville_probe(params, R=R, **kw) for R in scales]


def decreasing_profile(grid: G.Grid, amplitude: float, spread: float = 50.0) -> np.ndarray:
    """A(1 - |x-x0|^2 / (spread·R^2)): a flat concave cap, scaled with the ball.

    With a large spread the Laplacian dominates the source terms, so the cap
    is a supersolution and a frozen-boundary run is nonincreasing in time.
    """
    return grid.sample(lambda *X: amplitude * (1 - sum(
        (x - c) ** 2 for x, c in zip(X, grid.center)) / (spread * grid.R**2)))


def blowup_deadline(p: float, amplitude: float, R: float = 1.0) -> float:
    """Upper bound on the blow-up time of u_t = u_xx + u^p on (-R, R), zero
    boundary, u0 ≡ A inside.

    With φ = (π/4R) cos(πx/2R) (unit mass) and a(t) = ∫uφ, Jensen gives
    a' >= a^p - λa, λ = (π/2R)^2, and a(0) = A. The deadline is the ODE blow-up
    time ∫_A^∞ da / (a^p - λa), finite once A > λ^{1/(p-1)}.
    """
    from scipy.integrate import quad

    p = float(p)
    lam = (math.pi / (2 * R)) ** 2
    if amplitude ** (p - 1) <= lam:
        return math.inf
    val, _ = quad(lambda a: 1.0 / (a**p - lam * a), amplitude, math.inf)
    return val


@dataclass
class BlowupControl:
    amplitude: float
    deadline: float
    status: G.Status
    blowup_time: float | None

    @property
    def fired(self) -> bool:
        return self.status is G.Status.BLOWUP and self.blowup_time <= self.deadline


def blowup_control(p, amplitude: float = 10.0, R: float = 1.0, h: float = 0.01,
                   threshold: float = 1e8, steps_per_deadline: int = 20000) -> BlowupControl:
    """Large flat data, M = 0, zero Dirichlet boundary in 1D, run to twice the deadline.

    dt is capped at deadline/steps_per_deadline: forward Euler lags the exact
    growth of u' = u^p by O(dt) near the singularity.
    """
    P = ProblemParams(1, p, 2, 0.0)
    deadline = blowup_deadline(P.pf, amplitude, R)
    if not math.isfinite(deadline):
        raise ValueError("amplitude below the ODE-comparison blow-up bound")
    grid = G.Grid(1, R, h)
    u0 = np.where(grid.interior, amplitude, 0.0)
    dt = min(G.stable_dt(grid), deadline / steps_per_deadline)
    cfg = G.SolverConfig(dt=dt, T=2 * deadline, bc=G.BC.DIRICHLET_ZERO,
                         blowup_threshold=threshold, stride=10, stop_at_steady=False)
    traj = G.solve(G.Field(grid, u0), P, cfg)
    return BlowupControl(amplitude, deadline, traj.status, traj.blowup_time)

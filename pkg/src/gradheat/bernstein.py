"""Bernstein machinery: v = f^{-1}(-u), w = |∇v|^2, z = wη and the operator
L(z) = z_t - Δz + H·∇z, checked against its differential inequality.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import mpmath
import numpy as np

from . import grid as G
from .params import ProblemParams, bernstein_gamma


class RangeError(ValueError):
    pass


class HypothesisViolated(RuntimeError):
    pass


# ------------------------------------------------------------ auxiliary f

@dataclass(frozen=True)
class AuxiliaryFunction:
    """f(s) = m(s+1)^γ - 2m ("power") or f(s) = s ("identity")."""

    kind: str = "power"
    m: float = 1.0
    gamma: float = 2.0

    def __post_init__(self):
        if self.kind not in ("power", "identity"):
            raise ValueError(f"unknown auxiliary function {self.kind!r}")
        if self.kind == "power" and not (self.m > 0 and self.gamma > 1):
            raise ValueError("power variant needs m > 0 and gamma > 1")

    @classmethod
    def power(cls, m: float, gamma) -> "AuxiliaryFunction":
        return cls("power", float(m), float(gamma))

    @classmethod
    def for_params(cls, params: ProblemParams, m: float) -> "AuxiliaryFunction":
        return cls.power(m, bernstein_gamma(params.dim, params.q))

    @classmethod
    def identity(cls) -> "AuxiliaryFunction":
        return cls("identity", 1.0, 1.0)

    @property
    def s_max(self) -> float:
        return 2 ** (1 / self.gamma) - 1 if self.kind == "power" else math.inf

    def f(self, s):
        if self.kind == "identity":
            return np.asarray(s, dtype=float)
        return self.m * np.power(np.asarray(s) + 1.0, self.gamma) - 2 * self.m

    def d1(self, s):
        if self.kind == "identity":
            return np.ones_like(np.asarray(s, dtype=float))
        g = self.gamma
        return self.m * g * np.power(np.asarray(s) + 1.0, g - 1)

    def d2(self, s):
        if self.kind == "identity":
            return np.zeros_like(np.asarray(s, dtype=float))
        g = self.gamma
        return self.m * g * (g - 1) * np.power(np.asarray(s) + 1.0, g - 2)

    def d3(self, s):
        if self.kind == "identity":
            return np.zeros_like(np.asarray(s, dtype=float))
        g = self.gamma
        return self.m * g * (g - 1) * (g - 2) * np.power(np.asarray(s) + 1.0, g - 3)

    def ratio(self, s):
        """f''/f'."""
        return self.d2(s) / self.d1(s)

    def ratio_prime(self, s):
        """(f''/f')' = (f''' f' - f''^2) / f'^2."""
        a, b, c = self.d1(s), self.d2(s), self.d3(s)
        return (c * a - b * b) / (a * a)

    def transform(self, u):
        """v = f^{-1}(-u)."""
        u = np.asarray(u, dtype=float)
        if self.kind == "identity":
            return -u
        if np.any(u < 0) or np.any(u > self.m * (1 + 1e-12)):
            raise RangeError(f"u must lie in [0, m={self.m:g}] for the power transform")
        return np.power((2 * self.m - np.minimum(u, self.m)) / self.m, 1 / self.gamma) - 1.0

    def untransform(self, v):
        """u = -f(v)."""
        return -self.f(v)


def transform(u, f: AuxiliaryFunction):
    return f.transform(G._values(u))


def gamma_identity_residual(gamma, dim: int, q, samples, m: float = 1.0) -> float:
    """max |(f''/f')' + (3(q-1)/N)(f''/f')^2| over ``samples`` for the power f.

    Derivatives are taken by mpmath numerical differentiation of f itself at
    40 digits, independent of the closed-form derivative formulas.
    """
    if gamma is None:
        raise ValueError("the identity auxiliary function makes the identity vacuous")
    with mpmath.workdps(40):
        g = mpmath.mpf(str(float(gamma))) if not hasattr(gamma, "numerator") else (
            mpmath.mpf(gamma.numerator) / gamma.denominator)
        qq = mpmath.mpf(q.numerator) / q.denominator if hasattr(q, "numerator") else mpmath.mpf(str(q))
        mm = mpmath.mpf(m)

        def f(s):
            return mm * (s + 1) ** g - 2 * mm

        worst = mpmath.mpf(0)
        for s in samples:
            s = mpmath.mpf(str(float(s)))
            f1 = mpmath.diff(f, s, 1)
            f2 = mpmath.diff(f, s, 2)
            f3 = mpmath.diff(f, s, 3)
            r = (f3 * f1 - f2 * f2) / (f1 * f1) + 3 * (qq - 1) / dim * (f2 / f1) ** 2
            worst = max(worst, abs(r))
        return float(worst)


def identity_function_gamma_residual(f: AuxiliaryFunction, *args, **kwargs):
    if f.kind == "identity":
        raise ValueError("f(s) = s has f'' = 0; the γ-identity is vacuous")
    return gamma_identity_residual(f.gamma, *args, m=f.m, **kwargs)


# ----------------------------------------------------------------- cutoff

@dataclass
class Cutoff:
    eta: np.ndarray
    grad: np.ndarray      # (dim, *shape)
    hess: np.ndarray      # (dim, dim, *shape)
    alpha: float
    k: float
    R: float
    C_grad: float
    C_hess: float

    @property
    def C(self) -> float:
        return max(self.C_grad, self.C_hess)

    @property
    def grad_norm(self) -> np.ndarray:
        return np.sqrt(np.sum(self.grad**2, axis=0))

    @property
    def hess_norm(self) -> np.ndarray:
        return np.sqrt(np.sum(self.hess**2, axis=(0, 1)))


def cutoff(grid: G.Grid, alpha: float, k: float, R: float | None = None) -> Cutoff:
    """η = ρ^k, ρ = 1 - |x-x0|^2 / R'^2, R' = 3R/4, with closed-form derivatives.

    Reports the smallest C with |∇η| <= C R^{-1} η^α and
    |D²η| + η^{-1}|∇η|^2 <= C R^{-2} η^α over nodes with η > 0.
    """
    if not 0 < alpha < 1:
        raise ValueError("alpha must lie in (0, 1)")
    if k < 2 / (1 - alpha) - 1e-12:
        raise ValueError("need k >= 2/(1-alpha)")
    R = grid.R if R is None else R
    Rp = 0.75 * R
    X = [c - c0 for c, c0 in zip(grid.coords, grid.center)]
    r2 = sum(x * x for x in X)
    rho = 1.0 - r2 / Rp**2
    pos = rho > 0
    rp = np.where(pos, rho, 0.0)
    eta = np.power(rp, k)
    d = grid.dim
    grad_rho = np.stack([-2 * x / Rp**2 for x in X])
    grad = k * np.power(rp, k - 1) * grad_rho * pos
    hess = np.empty((d, d) + grid.shape)
    for i in range(d):
        for j in range(d):
            hij = k * (k - 1) * np.power(rp, k - 2) * grad_rho[i] * grad_rho[j]
            if i == j:
                hij = hij + k * np.power(rp, k - 1) * (-2 / Rp**2)
            hess[i, j] = np.where(pos, hij, 0.0)
    cut = Cutoff(eta, grad, hess, alpha, k, R, 0.0, 0.0)
    sel = pos & grid.mask
    ea = np.power(eta[sel], alpha)
    cg = cut.grad_norm[sel] * R / ea
    ch = (cut.hess_norm[sel] + cut.grad_norm[sel] ** 2 / eta[sel]) * R**2 / ea
    cut.C_grad = float(np.max(cg)) if cg.size else 0.0
    cut.C_hess = float(np.max(ch)) if ch.size else 0.0
    return cut


# ---------------------------------------------------------------- Bochner

def extended_lattice(dim: int, n: int, R: float = 1.0):
    """Uniform lattice on [-R, R]^dim with spacing R/n, built in extended
    precision so the nodes are equispaced to ~1e-19 rather than ~1e-16."""
    h = np.longdouble(R) / n
    ax = h * np.arange(-n, n + 1, dtype=np.longdouble)
    return h, list(np.meshgrid(*([ax] * dim), indexing="ij"))


def bochner_residual(v, h: float, margin: int = 2) -> float:
    """max |2∇v·∇(Δv) - (Δw - 2|D²v|^2)|, w = |∇v|^2, away from the box edges.

    Evaluated in extended precision: the nested stencils amplify roundoff by
    h^{-3}, which would otherwise mask the exactness on quadratics.
    """
    a = G._values(v).astype(np.longdouble)
    g = G.gradient(a, h)
    lap = G.laplacian(a, h)
    lhs = 2 * np.sum(g * G.gradient(lap, h), axis=0)
    w = np.sum(g * g, axis=0)
    H = G.hessian(a, h)
    rhs = G.laplacian(w, h) - 2 * np.sum(H * H, axis=(0, 1))
    res = np.abs(lhs - rhs)
    cut = margin + 1
    sl = tuple(slice(cut, -cut) for _ in range(a.ndim))
    return float(np.max(res[sl]))


# ------------------------------------------- differential inequality

@dataclass
class LResidual:
    residual: np.ndarray      # L(z) - RHS, NaN outside included nodes
    Lz: np.ndarray
    rhs: np.ndarray
    terms: dict
    included: np.ndarray
    excluded_degenerate: int
    t: float

    def max_violation(self) -> float:
        r = self.residual[self.included]
        return float(np.max(r)) if r.size else 0.0

    def violations(self, tol: float) -> int:
        return int(np.count_nonzero(self.residual[self.included] > tol))


def bernstein_fields(u: np.ndarray, grid: G.Grid, f: AuxiliaryFunction):
    v = f.transform(u)
    g = G.gradient(v, grid.h)
    w = np.sum(g * g, axis=0)
    return v, g, w


def rhs_terms(v, gv, w, hess_v, cut: Cutoff, f: AuxiliaryFunction, params: ProblemParams,
              C1: float = 4.0) -> dict:
    """The nine terms on the right of the inequality for L(z)."""
    p, q, M, N = params.pf, params.qf, params.M, params.dim
    eta = cut.eta
    mf = -f.f(v)
    mf = np.maximum(mf, 0.0)
    F1, F2 = f.d1(v), f.d2(v)
    r, rp = F2 / F1, f.ratio_prime(v)
    gn, hn = cut.grad_norm, cut.hess_norm
    with np.errstate(divide="ignore", invalid="ignore"):
        ge2_over_eta = np.where(eta > 0, gn**2 / eta, 0.0)
    return {
        "source_p": 2 * p * np.power(mf, p - 1) * w * eta,
        "source_f": 2 * F2 / F1**2 * np.power(mf, p) * w * eta,
        "ratio_prime": 2 * rp * w**2 * eta,
        "gradient_absorption": -2 * (q - 1) * M * np.power(F1, q - 2) * F2 * np.power(w, (q + 2) / 2) * eta,
        "hess_eta": math.sqrt(N) * hn * w,
        "drift_eta": q * M * np.power(F1, q - 1) * gn * np.power(w, (q + 1) / 2),
        "ratio_eta": 2 * np.abs(r) * gn * np.power(w, 1.5),
        "young_eta": C1 * ge2_over_eta * w,
        "hess_v": -np.sum(hess_v**2, axis=(0, 1)) * eta,
    }


def operator_L_residual(traj: G.Trajectory, f: AuxiliaryFunction, cut: Cutoff,
                        params: ProblemParams | None = None, index: int = 1,
                        grad_threshold: float = 1e-8, C1: float = 4.0,
                        require_monotone: bool = False, monotone_tol: float = 0.0) -> LResidual:
    """L(z) - RHS at snapshot ``index`` (central differences in time).

    Nodes with |∇u| <= grad_threshold are excluded and counted.
    """
    params = traj.params if params is None else params
    n = len(traj)
    if not 0 < index < n - 1:
        raise ValueError("index needs neighbours on both sides")
    grid = traj.grid
    h = grid.h
    S, T = traj.snapshots, traj.times
    if require_monotone:
        ut = (S[index + 1] - S[index - 1]) / (T[index + 1] - T[index - 1])
        sel = grid.mask & (cut.eta > 0)
        if np.any(ut[sel] > monotone_tol):
            raise HypothesisViolated(f"u_t > {monotone_tol:g} at t={T[index]:g}")
    try:
        zs = []
        for j in (index - 1, index + 1):
            _, _, wj = bernstein_fields(S[j], grid, f)
            zs.append(wj * cut.eta)
        v, gv, w = bernstein_fields(S[index], grid, f)
    except RangeError as e:
        raise HypothesisViolated(str(e)) from e
    z = w * cut.eta
    zt = (zs[1] - zs[0]) / (T[index + 1] - T[index - 1])
    gz = G.gradient(z, h)
    lapz = G.laplacian(z, h)
    q, M = params.qf, params.M
    F1 = f.d1(v)
    with np.errstate(divide="ignore", invalid="ignore"):
        wpow = np.where(w > 0, np.power(w, (q - 2) / 2), 0.0)
    coef = q * M * np.power(F1, q - 1) * wpow - 2 * f.ratio(v)
    Hdrift = coef * gv
    Lz = zt - lapz + np.sum(Hdrift * gz, axis=0)
    hess_v = G.hessian(v, h)
    terms = rhs_terms(v, gv, w, hess_v, cut, f, params, C1)
    rhs = sum(terms.values())
    gu = np.sqrt(G.grad_norm_sq(S[index], h))
    base = grid.interior & (cut.eta > 0)
    degenerate = base & (gu <= grad_threshold)
    included = base & ~degenerate
    res = np.where(included, Lz - rhs, np.nan)
    return LResidual(res, Lz, rhs, terms, included, int(np.count_nonzero(degenerate)), float(T[index]))


# ---------------------------------------------------------- tolerance model

def manufactured_solution(amplitude: float, shift: float = 1.5):
    """u(x,t) = a(shift + e^{-t} cos x) and its derivatives (1D)."""
    a = amplitude

    def u(x, t):
        return a * (shift + np.exp(-t) * np.cos(x))

    def ux(x, t):
        return -a * np.exp(-t) * np.sin(x)

    def uxx(x, t):
        return -a * np.exp(-t) * np.cos(x)

    def ut(x, t):
        return -a * np.exp(-t) * np.cos(x)

    return u, ux, uxx, ut


def manufactured_forcing(params: ProblemParams, amplitude: float, shift: float = 1.5):
    u, ux, uxx, ut = manufactured_solution(amplitude, shift)
    p, q, M = params.pf, params.qf, params.M

    def F(x, t):
        return ut(x, t) - uxx(x, t) - u(x, t) ** p - M * np.abs(ux(x, t)) ** q

    return F


def exact_Lz_1d(x, t, amplitude, shift, f: AuxiliaryFunction, cut_R: float, k: float,
                params: ProblemParams, x0: float = 0.0):
    """L(z) for the manufactured solution from closed-form derivatives.

    With u = -f(v): v_x = -u_x/f', and derivatives of v follow from the
    chain rule. Only 1D is needed.
    """
    p_, q, M = params.pf, params.qf, params.M
    a = amplitude
    e = np.exp(-t)
    c, s = np.cos(x), np.sin(x)
    u = a * (shift + e * c)
    ux, uxx, uxxx, uxxxx = -a * e * s, -a * e * c, a * e * s, a * e * c
    ut, uxt, uxxt = -a * e * c, a * e * s, a * e * c
    v = f.transform(u)
    F1, F2, F3 = f.d1(v), f.d2(v), f.d3(v)
    # higher derivative of f for v_xxx
    g = f.gamma
    F4 = f.m * g * (g - 1) * (g - 2) * (g - 3) * np.power(v + 1.0, g - 4) if f.kind == "power" else 0.0 * v
    vx = -ux / F1
    vt = -ut / F1
    # u_x = -F1 v_x  ->  u_xx = -F2 vx^2 - F1 vxx
    vxx = -(uxx + F2 * vx**2) / F1
    # u_xxx = -F3 vx^3 - 3 F2 vx vxx - F1 vxxx
    vxxx = -(uxxx + F3 * vx**3 + 3 * F2 * vx * vxx) / F1
    # u_xxxx = -F4 vx^4 - 6 F3 vx^2 vxx - 3 F2 vxx^2 - 4 F2 vx vxxx - F1 vxxxx
    vxxxx = -(uxxxx + F4 * vx**4 + 6 * F3 * vx**2 * vxx + 3 * F2 * vxx**2 + 4 * F2 * vx * vxxx) / F1
    # u_xt = -F2 vt vx - F1 vxt
    vxt = -(uxt + F2 * vt * vx) / F1
    del uxxt
    w = vx**2
    wx = 2 * vx * vxx
    wxx = 2 * vxx**2 + 2 * vx * vxxx
    wt = 2 * vx * vxt
    del vxxxx
    Rp = 0.75 * cut_R
    X = x - x0
    rho = np.maximum(1 - X**2 / Rp**2, 0.0)
    eta = rho**k
    rx = -2 * X / Rp**2
    eta_x = k * rho ** (k - 1) * rx
    eta_xx = k * (k - 1) * rho ** (k - 2) * rx**2 + k * rho ** (k - 1) * (-2 / Rp**2)
    z_t = wt * eta
    z_x = wx * eta + w * eta_x
    z_xx = wxx * eta + 2 * wx * eta_x + w * eta_xx
    coef = q * M * F1 ** (q - 1) * np.sign(vx) * np.abs(vx) ** (q - 1) - 2 * F2 / F1 * vx
    return z_t - z_xx + coef * z_x


@dataclass
class ToleranceModel:
    """tol = C0 (h^2 + dt), C0 frozen from a manufactured-solution run."""

    C0: float
    h: float
    dt: float
    details: dict = field(default_factory=dict)

    def tol(self, h: float | None = None, dt: float | None = None) -> float:
        h = self.h if h is None else h
        dt = self.dt if dt is None else dt
        return self.C0 * (h * h + dt)


def calibrate_tolerance(params: ProblemParams, amplitude: float, R: float, h: float, dt: float,
                        T: float = 0.1, stride: int = 10, alpha: float = 0.6, k: float = 5.0,
                        shift: float = 1.5) -> ToleranceModel:
    """Solve the forced problem whose exact solution is a(shift + e^{-t}cos x),
    then C0 = max |L_h z - L z| / (h^2 + dt) over included nodes and
    interior snapshots."""
    grid = G.Grid(1, R, h)
    u_ex, *_ = manufactured_solution(amplitude, shift)
    cfg = G.SolverConfig(dt=dt, T=T, bc=G.BC.DIRICHLET_FROZEN, stride=stride,
                         forcing=manufactured_forcing(params, amplitude, shift),
                         boundary_fn=lambda x, t: u_ex(x, t), stop_at_steady=False)
    traj = G.solve(G.Field(grid, grid.sample(lambda x: u_ex(x, 0.0))), params, cfg)
    m = amplitude * (shift + 1)
    f = AuxiliaryFunction.for_params(params, m)
    cut = cutoff(grid, alpha, k)
    x = grid.coords[0]
    worst = 0.0
    for i in range(1, len(traj) - 1):
        res = operator_L_residual(traj, f, cut, params, i)
        exact = exact_Lz_1d(x, traj.times[i], amplitude, shift, f, R, k, params)
        err = np.abs(res.Lz - exact)[res.included]
        worst = max(worst, float(np.max(err)))
    C0 = worst / (h * h + traj.dt)
    return ToleranceModel(C0, h, traj.dt, {"amplitude": amplitude, "R": R, "snapshots": len(traj)})

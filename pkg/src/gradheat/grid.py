"""Explicit finite differences for u_t - Δu = u^p + M|∇u|^q on a ball.

Fields live on the bounding box of the ball (a 1D segment or a square
lattice); a mask selects the nodes that belong to B(x0, R). Nodes of the
mask whose stencil leaves the mask are Dirichlet nodes.
"""

from __future__ import annotations

import enum
import json
import math
from dataclasses import dataclass, field
from functools import cached_property
from pathlib import Path
from typing import Callable, Optional

import numpy as np
from scipy.interpolate import make_interp_spline

from .params import ProblemParams


class BlowUp(RuntimeError):
    def __init__(self, t_last: float, peak: float):
        super().__init__(f"solution exceeded blow-up threshold after t={t_last:g} (max {peak:g})")
        self.t_last = t_last
        self.peak = peak


class NonFiniteError(FloatingPointError):
    pass


class OutOfWindow(ValueError):
    pass


class BC(enum.Enum):
    DIRICHLET_ZERO = "dirichlet_zero"
    DIRICHLET_FROZEN = "dirichlet_frozen"
    PERIODIC = "periodic"


class Status(enum.Enum):
    COMPLETED = "CompletedT"
    BLOWUP = "BlowUp"
    STEADY = "Steady"
    NONFINITE = "NonFinite"


@dataclass(frozen=True)
class Grid:
    dim: int
    R: float
    h: float
    center: tuple = None
    periodic: bool = False

    def __post_init__(self):
        if self.dim not in (1, 2):
            raise ValueError("only dimensions 1 and 2 are simulated")
        if not (0 < self.h < self.R / 4):
            raise ValueError(f"need 0 < h < R/4, got h={self.h}, R={self.R}")
        if self.periodic and self.dim != 1:
            raise ValueError("periodic grids are 1D only")
        c = (0.0,) * self.dim if self.center is None else tuple(float(v) for v in self.center)
        if len(c) != self.dim:
            raise ValueError("center has wrong dimension")
        object.__setattr__(self, "center", c)

    @property
    def n_half(self) -> int:
        return int(math.floor(self.R / self.h + 1e-9))

    @property
    def shape(self) -> tuple:
        n = 2 * self.n_half + 1
        return (n,) * self.dim

    @cached_property
    def axis(self) -> np.ndarray:
        """Offsets from the center along one axis."""
        return self.h * np.arange(-self.n_half, self.n_half + 1)

    @cached_property
    def coords(self) -> list[np.ndarray]:
        axes = [self.axis + c for c in self.center]
        return list(np.meshgrid(*axes, indexing="ij"))

    @cached_property
    def radius(self) -> np.ndarray:
        """|x - x0| at every box node."""
        if self.dim == 1:
            return np.abs(self.axis)
        X, Y = np.meshgrid(self.axis, self.axis, indexing="ij")
        return np.hypot(X, Y)

    @cached_property
    def mask(self) -> np.ndarray:
        return self.radius <= self.R * (1 + 1e-12)

    @cached_property
    def interior(self) -> np.ndarray:
        m = self.mask
        if self.periodic:
            return m.copy()
        inner = m.copy()
        for ax in range(self.dim):
            for shift in (1, -1):
                nb = np.roll(m, shift, axis=ax)
                edge = [slice(None)] * self.dim
                edge[ax] = 0 if shift == 1 else -1
                nb[tuple(edge)] = False
                inner &= nb
        return inner

    @cached_property
    def boundary(self) -> np.ndarray:
        return self.mask & ~self.interior

    def within(self, r: float) -> np.ndarray:
        return self.mask & (self.radius <= r * (1 + 1e-12))

    def zeros(self) -> np.ndarray:
        return np.zeros(self.shape)

    def sample(self, fn: Callable, t: float | None = None) -> np.ndarray:
        """Evaluate fn(*coords[, t]) on the box, zero outside the ball."""
        X = self.coords
        vals = fn(*X) if t is None else fn(*X, t)
        vals = np.broadcast_to(np.asarray(vals, dtype=float), self.shape).copy()
        vals[~self.mask] = 0.0
        return vals


@dataclass
class Field:
    grid: Grid
    values: np.ndarray
    t: float = 0.0


# ---------------------------------------------------------------- operators

def _d1(u: np.ndarray, h: float, axis: int, periodic: bool) -> np.ndarray:
    if periodic:
        return (np.roll(u, -1, axis) - np.roll(u, 1, axis)) / (2 * h)
    return np.gradient(u, h, axis=axis, edge_order=2)


def _d2(u: np.ndarray, h: float, axis: int, periodic: bool) -> np.ndarray:
    if periodic:
        return (np.roll(u, -1, axis) - 2 * u + np.roll(u, 1, axis)) / h**2
    u = np.moveaxis(u, axis, 0)
    out = np.empty_like(u)
    out[1:-1] = (u[2:] - 2 * u[1:-1] + u[:-2]) / h**2
    # one-sided, exact on cubics
    out[0] = (2 * u[0] - 5 * u[1] + 4 * u[2] - u[3]) / h**2
    out[-1] = (2 * u[-1] - 5 * u[-2] + 4 * u[-3] - u[-4]) / h**2
    return np.moveaxis(out, 0, axis)


def _values(u) -> np.ndarray:
    a = u.values if isinstance(u, Field) else np.asarray(u)
    return a if np.issubdtype(a.dtype, np.floating) else a.astype(float)


def gradient(u, h: float, dim: int | None = None, periodic: bool = False) -> np.ndarray:
    """Central differences; returns shape (dim, *u.shape)."""
    a = _values(u)
    dim = a.ndim if dim is None else dim
    return np.stack([_d1(a, h, ax, periodic) for ax in range(dim)])


def hessian(u, h: float, dim: int | None = None, periodic: bool = False) -> np.ndarray:
    a = _values(u)
    dim = a.ndim if dim is None else dim
    H = np.empty((dim, dim) + a.shape, dtype=a.dtype)
    for i in range(dim):
        H[i, i] = _d2(a, h, i, periodic)
        for j in range(i + 1, dim):
            H[i, j] = H[j, i] = _d1(_d1(a, h, i, periodic), h, j, periodic)
    return H


def laplacian(u, h: float, dim: int | None = None, periodic: bool = False) -> np.ndarray:
    a = _values(u)
    dim = a.ndim if dim is None else dim
    return sum(_d2(a, h, ax, periodic) for ax in range(dim))


def grad_norm_sq(u, h: float, periodic: bool = False) -> np.ndarray:
    g = gradient(u, h, periodic=periodic)
    return np.sum(g * g, axis=0)


# ------------------------------------------------------------------- solver

@dataclass
class SolverConfig:
    dt: float
    T: float
    bc: BC = BC.DIRICHLET_ZERO
    blowup_threshold: float = 1e8
    stride: int = 1
    steady_tol: float = 1e-13
    stop_at_steady: bool = True
    # optional extras for manufactured-solution runs
    forcing: Optional[Callable] = None
    boundary_fn: Optional[Callable] = None

    def __post_init__(self):
        if self.dt <= 0 or self.T <= 0:
            raise ValueError("dt and T must be positive")
        if self.stride < 1:
            raise ValueError("stride must be a positive integer")
        self.bc = BC(self.bc)

    def check_stability(self, grid: Grid, safety: float = 1.0):
        bound = safety * grid.h**2 / (2 * grid.dim)
        if self.dt > bound * (1 + 1e-12):
            raise ValueError(f"dt={self.dt:g} exceeds explicit stability bound {bound:g}")


def stable_dt(grid: Grid, safety: float = 0.9) -> float:
    return safety * grid.h**2 / (2 * grid.dim)


@dataclass
class Trajectory:
    grid: Grid
    params: ProblemParams
    times: np.ndarray
    snapshots: np.ndarray  # (n_snap, *grid.shape)
    status: Status = Status.COMPLETED
    blowup_time: Optional[float] = None
    clamp_count: int = 0
    min_preclamp: float = 0.0
    dt: float = 0.0
    steps: int = 0
    meta: dict = field(default_factory=dict)

    def __len__(self):
        return len(self.times)

    def field(self, i: int) -> Field:
        return Field(self.grid, self.snapshots[i], float(self.times[i]))

    def sup_norms(self) -> np.ndarray:
        m = self.grid.mask
        return np.array([np.max(np.abs(s[m])) for s in self.snapshots])


def _source(u, g2, params: ProblemParams):
    # |∇u|^q as (|∇u|^2)^{q/2}: continuous at 0 for q > 1
    return np.power(u, params.pf) + params.M * np.power(g2, params.qf / 2)


def _rhs(u: np.ndarray, grid: Grid, params: ProblemParams, t: float, cfg: SolverConfig):
    periodic = grid.periodic or cfg.bc is BC.PERIODIC
    g2 = grad_norm_sq(u, grid.h, periodic=periodic)
    r = laplacian(u, grid.h, periodic=periodic) + _source(np.maximum(u, 0.0), g2, params)
    if cfg.forcing is not None:
        r = r + np.asarray(cfg.forcing(*grid.coords, t))
    return r


def step(u: Field, params: ProblemParams, cfg: SolverConfig, boundary_values=None):
    """One forward-Euler step. Returns (new Field, number of clamped nodes, min before clamp)."""
    grid = u.grid
    a = u.values
    if not np.all(np.isfinite(a[grid.mask])):
        raise NonFiniteError(f"non-finite values at t={u.t:g}")
    upd = cfg.dt * _rhs(a, grid, params, u.t, cfg)
    new = a.copy()
    active = grid.interior
    new[active] += upd[active]
    t_new = u.t + cfg.dt
    if cfg.bc is not BC.PERIODIC:
        bnd = grid.boundary
        if cfg.boundary_fn is not None:
            new[bnd] = np.asarray(grid.sample(cfg.boundary_fn, t_new))[bnd]
        elif cfg.bc is BC.DIRICHLET_ZERO:
            new[bnd] = 0.0
        else:
            new[bnd] = a[bnd] if boundary_values is None else boundary_values[bnd]
    new[~grid.mask] = 0.0
    if not np.all(np.isfinite(new[grid.mask])):
        raise NonFiniteError(f"non-finite values at t={t_new:g}")
    lo = float(np.min(new[grid.mask]))
    neg = new < 0
    n_clamped = int(np.count_nonzero(neg & grid.mask))
    new[neg] = 0.0
    peak = float(np.max(new[grid.mask]))
    if peak > cfg.blowup_threshold:
        raise BlowUp(u.t, peak)
    return Field(grid, new, t_new), n_clamped, lo


def solve(u0: Field, params: ProblemParams, cfg: SolverConfig) -> Trajectory:
    grid = u0.grid
    cfg.check_stability(grid)
    nsteps = max(1, int(math.ceil(cfg.T / cfg.dt - 1e-9)))
    dt = cfg.T / nsteps
    run_cfg = SolverConfig(**{**cfg.__dict__, "dt": dt})
    u = Field(grid, np.where(grid.mask, u0.values, 0.0).astype(float), float(u0.t))
    if np.any(u.values < 0):
        raise ValueError("initial data must be nonnegative")
    frozen = u.values.copy()
    times, snaps = [u.t], [u.values.copy()]
    status, t_blow = Status.COMPLETED, None
    clamps, lo_min = 0, 0.0
    k = 0
    for k in range(1, nsteps + 1):
        try:
            new, nc, lo = step(u, params, run_cfg, boundary_values=frozen)
        except BlowUp as e:
            status, t_blow = Status.BLOWUP, e.t_last
            k -= 1
            break
        except NonFiniteError:
            status, t_blow = Status.NONFINITE, u.t
            k -= 1
            break
        clamps += nc
        lo_min = min(lo_min, lo)
        delta = float(np.max(np.abs(new.values - u.values)))
        u = new
        if k % cfg.stride == 0 or k == nsteps:
            times.append(u.t)
            snaps.append(u.values.copy())
        if (cfg.stop_at_steady and delta < cfg.steady_tol
                and float(np.max(np.abs(u.values))) > 0.0):
            status = Status.STEADY
            if times[-1] != u.t:
                times.append(u.t)
                snaps.append(u.values.copy())
            break
    if status in (Status.BLOWUP, Status.NONFINITE) and times[-1] != u.t:
        times.append(u.t)
        snaps.append(u.values.copy())
    return Trajectory(grid, params, np.array(times), np.array(snaps), status, t_blow,
                      clamps, lo_min, dt, k)


def time_derivative(traj: Trajectory, index: int):
    """u_t at snapshot ``index``. Returns (Field, order): central differences
    (order 2) inside, one-sided (order 1) at the two ends."""
    n = len(traj)
    if n < 2:
        raise ValueError("need at least two snapshots")
    i = index % n
    T, S = traj.times, traj.snapshots
    if 0 < i < n - 1:
        vals = (S[i + 1] - S[i - 1]) / (T[i + 1] - T[i - 1])
        order = 2
    elif i == 0:
        vals = (S[1] - S[0]) / (T[1] - T[0])
        order = 1
    else:
        vals = (S[-1] - S[-2]) / (T[-1] - T[-2])
        order = 1
    return Field(traj.grid, vals, float(T[i])), order


# ------------------------------------------------------- residual / rescaling

def _lattice_residual(U, times, h, dim, params: ProblemParams, M_eff: float, keep: np.ndarray) -> float:
    """max |u_t - Δu - u^p - M_eff|∇u|^q| over interior times and ``keep`` nodes."""
    worst = 0.0
    for j in range(1, len(times) - 1):
        ut = (U[j + 1] - U[j - 1]) / (times[j + 1] - times[j - 1])
        u = U[j]
        g2 = grad_norm_sq(u, h)
        r = ut - laplacian(u, h) - np.power(np.maximum(u, 0), params.pf) - M_eff * np.power(g2, params.qf / 2)
        worst = max(worst, float(np.max(np.abs(r[keep]))))
    return worst


def _window(grid: Grid, radius: float):
    """Box sub-lattice covering |x - x0| <= radius with one stencil layer."""
    m = int(math.floor(radius / grid.h + 1e-9))
    lo, hi = grid.n_half - m - 1, grid.n_half + m + 2
    if lo < 0:
        raise OutOfWindow("evaluation radius exceeds grid")
    sl = tuple(slice(lo, hi) for _ in range(grid.dim))
    offs = grid.h * np.arange(-(m + 1), m + 2)
    if grid.dim == 1:
        rr = np.abs(offs)
    else:
        X, Y = np.meshgrid(offs, offs, indexing="ij")
        rr = np.hypot(X, Y)
    keep = rr <= radius * (1 + 1e-12)
    return sl, offs, keep


def pde_residual(traj: Trajectory, radius: float | None = None) -> float:
    """Max-norm PDE residual of the stored snapshots on B(x0, radius)."""
    return rescaling_residual(traj, 1.0, traj.params, radius=radius)


def rescaling_residual(traj: Trajectory, lam: float, params: ProblemParams,
                       radius: float | None = None, modified: bool = True) -> float:
    """Residual of u_λ(x,t) = λ^{-1} u(λ^{(1-p)/2} x, λ^{1-p} t).

    u_λ is sampled on the original lattice (nodes within ``radius``,
    snapshot times) by cubic spline interpolation of the trajectory, then
    checked against u_t - Δu = u^p + M_λ|∇u|^q with
    M_λ = λ^{((p+1)q-2p)/2} M (``modified``) or M_λ = M.
    """
    grid = traj.grid
    if lam <= 0:
        raise ValueError("λ must be positive")
    radius = grid.R / 2 if radius is None else radius
    p = params.pf
    s_space = lam ** ((1 - p) / 2)
    s_time = lam ** (1 - p)
    sl, offs, keep = _window(grid, radius)
    if s_space * (offs.max()) > grid.R - grid.h * (1 - 1e-9) and lam != 1.0:
        raise OutOfWindow(f"rescaled window {s_space * offs.max():g} leaves ball of radius {grid.R:g}")
    times = traj.times
    t_eval = times[(s_time * times >= times[0] - 1e-14) & (s_time * times <= times[-1] + 1e-14)]
    if len(t_eval) < 3:
        raise OutOfWindow("rescaled time window too short")
    if lam == 1.0:
        U = traj.snapshots[(slice(None),) + sl]
    else:
        data = traj.snapshots
        U = make_interp_spline(times, data, k=3, axis=0)(np.clip(s_time * t_eval, times[0], times[-1]))
        ax = grid.axis
        for d in range(grid.dim):
            U = make_interp_spline(ax, U, k=3, axis=d + 1)(s_space * offs)
        U = U / lam
    M_eff = params.M * (lam ** ((float((params.p + 1) * params.q) - 2 * p) / 2) if modified else 1.0)
    return _lattice_residual(U, t_eval, grid.h, grid.dim, params, M_eff, keep)


# ------------------------------------------------------------------- export

def export_trajectory(traj: Trajectory, outdir) -> Path:
    """One plain-text file per snapshot plus manifest.json."""
    out = Path(outdir)
    out.mkdir(parents=True, exist_ok=True)
    grid = traj.grid
    coords = np.stack([c[grid.mask] for c in grid.coords], axis=1)
    names = []
    for i, (t, s) in enumerate(zip(traj.times, traj.snapshots)):
        name = f"snapshot_{i:05d}.txt"
        cols = np.column_stack([coords, s[grid.mask]])
        header = " ".join([f"x{d}" for d in range(grid.dim)] + ["u"]) + f"  t={t:.17g}"
        np.savetxt(out / name, cols, fmt="%.17g", header=header)
        names.append(name)
    manifest = {
        "dim": grid.dim, "R": grid.R, "h": grid.h, "center": list(grid.center),
        "params": {"N": traj.params.dim, "p": str(traj.params.p), "q": str(traj.params.q), "M": traj.params.M},
        "status": traj.status.value,
        "blowup_time": traj.blowup_time,
        "clamp_count": traj.clamp_count,
        "times": [float(t) for t in traj.times],
        "files": names,
    }
    path = out / "manifest.json"
    path.write_text(json.dumps(manifest, indent=2, sort_keys=True) + "\n")
    return path


def load_trajectory(manifest_path) -> Trajectory:
    manifest_path = Path(manifest_path)
    m = json.loads(manifest_path.read_text())
    grid = Grid(m["dim"], m["R"], m["h"], tuple(m["center"]))
    pr = m["params"]
    params = ProblemParams(pr["N"], pr["p"], pr["q"], pr["M"])
    snaps = []
    for name in m["files"]:
        cols = np.loadtxt(manifest_path.parent / name, ndmin=2)
        arr = grid.zeros()
        arr[grid.mask] = cols[:, -1]
        snaps.append(arr)
    return Trajectory(grid, params, np.array(m["times"]), np.array(snaps), Status(m["status"]),
                      m["blowup_time"], m["clamp_count"])

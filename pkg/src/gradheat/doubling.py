"""Doubling search on finite metric spaces and rescaled frames around
doubling points."""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field
from typing import Callable, Sequence

import numpy as np
from scipy.interpolate import make_interp_spline

from . import grid as G
from .params import ProblemParams


class HypothesisFails(ValueError):
    pass


class NonTermination(RuntimeError):
    pass


@dataclass(frozen=True)
class ParabolicPoint:
    x: tuple
    t: float

    def __post_init__(self):
        x = tuple(float(v) for v in np.atleast_1d(self.x))
        if not all(math.isfinite(v) for v in x) or not math.isfinite(self.t):
            raise ValueError("coordinates must be finite")
        object.__setattr__(self, "x", x)
        object.__setattr__(self, "t", float(self.t))

    def key(self):
        return self.x + (self.t,)


def parabolic_distance(a: ParabolicPoint, b: ParabolicPoint) -> float:
    """|x - y| + |t - s|^{1/2}."""
    return math.dist(a.x, b.x) + math.sqrt(abs(a.t - b.t))


def euclidean_distance(a: ParabolicPoint, b: ParabolicPoint) -> float:
    return math.dist(a.key(), b.key())


METRICS: dict[str, Callable] = {"parabolic": parabolic_distance, "euclidean": euclidean_distance}


@dataclass
class DoublingInstance:
    """Σ = ``points``; D = points with a value of M, Γ = the rest."""

    points: list
    M: list                      # float for points of D, None for points of Γ
    k: float
    metric: str = "parabolic"

    def __post_init__(self):
        self.points = [p if isinstance(p, ParabolicPoint) else ParabolicPoint(*p) for p in self.points]
        if len(self.M) != len(self.points):
            raise ValueError("one M entry per point")
        if not self.k > 0:
            raise ValueError("k must be positive")
        if self.metric not in METRICS:
            raise ValueError(f"unknown metric {self.metric!r}")
        if not any(m is not None for m in self.M):
            raise ValueError("D must be nonempty")
        for m in self.M:
            if m is not None and not (m > 0 and math.isfinite(m)):
                raise ValueError("M must be positive and finite on D")
        self._dist = None

    @property
    def D(self) -> list[int]:
        return [i for i, m in enumerate(self.M) if m is not None]

    @property
    def Gamma(self) -> list[int]:
        return [i for i, m in enumerate(self.M) if m is None]

    def _coords(self):
        if self._dist is None:
            P = np.array([p.key() for p in self.points])
            self._dist = (P[:, :-1], P[:, -1])
        return self._dist

    def row(self, i: int) -> np.ndarray:
        """Distances from point i to every point of Σ."""
        X, T = self._coords()
        dx = np.sqrt(np.sum((X - X[i]) ** 2, axis=1))
        dt = np.abs(T - T[i])
        return dx + np.sqrt(dt) if self.metric == "parabolic" else np.sqrt(dx**2 + dt**2)

    def dist_to_gamma(self, i: int) -> float:
        g = self.Gamma
        return math.inf if not g else float(np.min(self.row(i)[g]))

    def to_json(self) -> str:
        pts = [{"x": list(p.x), "t": p.t, "M": m} for p, m in zip(self.points, self.M)]
        return json.dumps({"k": self.k, "metric": self.metric, "points": pts}, sort_keys=True, indent=1)

    @classmethod
    def from_json(cls, text: str) -> "DoublingInstance":
        d = json.loads(text)
        pts = [ParabolicPoint(tuple(p["x"]), p["t"]) for p in d["points"]]
        return cls(pts, [p["M"] for p in d["points"]], d["k"], d.get("metric", "parabolic"))


@dataclass
class DoublingResult:
    index: int
    point: ParabolicPoint
    M_x: float
    M_dist_gamma: float          # M(x)·dist(x, Γ), may be inf
    dominates_start: bool        # M(x) >= M(y)
    ball_violations: int         # z in D ∩ B(x, k/M(x)) with M(z) > 2M(x)
    hops: int
    hop_bound: int
    path: list = field(default_factory=list)

    @property
    def certified(self) -> bool:
        return self.M_dist_gamma > 0 and self.dominates_start and self.ball_violations == 0


def hop_bound(inst: DoublingInstance, y: int) -> int:
    mmax = max(m for m in inst.M if m is not None)
    return int(math.ceil(math.log2(mmax / inst.M[y]))) + 1 if mmax > inst.M[y] else 1


def check_conclusions(inst: DoublingInstance, y: int, x: int) -> tuple:
    """Brute-force check of the three conclusions, independent of the search.

    Returns (M(x)·dist(x,Γ) > 2k, M(x) >= M(y), violation count, M(x)·dist(x,Γ)).
    """
    dist = METRICS[inst.metric]
    px, Mx = inst.points[x], inst.M[x]
    dg = math.inf
    for j, m in enumerate(inst.M):
        if m is None:
            dg = min(dg, dist(px, inst.points[j]))
    md = Mx * dg
    r = inst.k / Mx
    viol = 0
    for j, m in enumerate(inst.M):
        if m is not None and dist(px, inst.points[j]) <= r and m > 2 * Mx:
            viol += 1
    return md > 2 * inst.k, Mx >= inst.M[y], viol, md


def find_doubling_point(inst: DoublingInstance, y: int) -> DoublingResult:
    """Iterative search: while some z in D ∩ B(x, k/M(x)) has M(z) > 2M(x),
    move to the largest such M(z) (ties by coordinates)."""
    if inst.M[y] is None:
        raise HypothesisFails("start point must lie in D")
    if not inst.M[y] * inst.dist_to_gamma(y) > 2 * inst.k:
        raise HypothesisFails(f"M(y)·dist(y,Γ) = {inst.M[y] * inst.dist_to_gamma(y):g} <= 2k")
    Dset = np.array(inst.D)
    Mv = np.array([inst.M[i] for i in Dset])
    bound = hop_bound(inst, y)
    x, hops, path = y, 0, [y]
    while True:
        Mx = inst.M[x]
        near = inst.row(x)[Dset] <= inst.k / Mx
        cand = near & (Mv > 2 * Mx)
        if not np.any(cand):
            break
        best = Mv[cand].max()
        idx = [int(i) for i in Dset[cand & (Mv == best)]]
        x = min(idx, key=lambda i: inst.points[i].key())
        hops += 1
        path.append(x)
        if hops > bound:
            raise NonTermination(f"{hops} hops exceed the bound {bound}")
    ok1, ok2, viol, md = check_conclusions(inst, y, x)
    if not (ok1 and ok2 and viol == 0):
        raise NonTermination("returned point fails the exhaustive check")
    return DoublingResult(x, inst.points[x], inst.M[x], md, ok2, viol, hops, bound, path)


def random_instance(rng: np.random.Generator, max_points: int = 60, dim: int = 1,
                    k: float | None = None) -> DoublingInstance:
    n = int(rng.integers(2, max_points + 1))
    X = rng.uniform(-1, 1, (n, dim))
    T = rng.uniform(0, 1, n)
    is_gamma = rng.random(n) < rng.uniform(0, 0.4)
    is_gamma[int(rng.integers(n))] = False
    M = [None if g else float(rng.uniform(0, 100)) or 1e-3 for g in is_gamma]
    k = float(rng.uniform(0.05, 2.0)) if k is None else k
    return DoublingInstance([ParabolicPoint(tuple(x), t) for x, t in zip(X, T)], M, k)


# -------------------------------------------------------- grid instances

def scaling_function(u, grad_norm, p: float):
    """M(u) = u^{(p-1)/2} + |∇u|^{(p-1)/(p+1)}."""
    return np.power(np.maximum(u, 0), (p - 1) / 2) + np.power(grad_norm, (p - 1) / (p + 1))


def grid_instance(traj: G.Trajectory, params: ProblemParams | None = None, k: float = 1.0,
                  snapshot_stride: int = 1) -> tuple[DoublingInstance, list]:
    """Σ = mask nodes × snapshots; Γ = spatial boundary and the first/last snapshot.

    Returns the instance and the (snapshot, node index) of each point.
    """
    params = traj.params if params is None else params
    grid = traj.grid
    idx_t = list(range(0, len(traj), snapshot_stride))
    if idx_t[-1] != len(traj) - 1:
        idx_t.append(len(traj) - 1)
    nodes = list(zip(*np.nonzero(grid.mask)))
    pts, Ms, where = [], [], []
    for i in idx_t:
        u = traj.snapshots[i]
        gm = np.sqrt(G.grad_norm_sq(u, grid.h))
        Mf = scaling_function(u, gm, params.pf)
        edge_t = i in (0, len(traj) - 1)
        for nd in nodes:
            x = tuple(float(c[nd]) for c in grid.coords)
            pts.append(ParabolicPoint(x, float(traj.times[i])))
            m = float(Mf[nd])
            Ms.append(None if edge_t or grid.boundary[nd] or m <= 0 else m)
            where.append((i, nd))
    return DoublingInstance(pts, Ms, k), where


# -------------------------------------------------------------- frames

@dataclass
class Frame:
    lam: float
    y: np.ndarray                # frame offsets (one axis)
    s: np.ndarray                # frame times
    v: np.ndarray                # (len(s), *spatial) rescaled values
    normalization: float         # M(v)(0,0)
    max_M: float                 # max of M(v) over the frame window
    window: np.ndarray           # mask of lattice points inside D̃


def _spline_sample(traj: G.Trajectory, t_eval, x_offsets):
    grid = traj.grid
    U = make_interp_spline(traj.times, traj.snapshots, k=3, axis=0)(t_eval)
    for d in range(grid.dim):
        U = make_interp_spline(grid.axis, U, k=3, axis=d + 1)(x_offsets[d])
    return U


def rescaling_frame(traj: G.Trajectory, x_k, t_k: float, lam: float | None = None,
                    params: ProblemParams | None = None, k: float = 1.0, n: int = 21,
                    n_t: int = 11) -> Frame:
    """v_k(y,s) = λ^{2/(p-1)} u(x_k + λy, t_k + λ²s) on |y| <= k, |s| <= k².

    λ defaults to 1/M(u)(x_k,t_k) with M(u) from interpolated u and its
    spline gradient; M(v) on the frame uses finite differences of v.
    """
    params = traj.params if params is None else params
    grid = traj.grid
    p = params.pf
    x_k = tuple(np.atleast_1d(np.asarray(x_k, dtype=float)))
    off = [x_k[d] - grid.center[d] for d in range(grid.dim)]
    if lam is None:
        eps = grid.h / 4
        c0 = _spline_sample(traj, np.array([t_k]), [np.array([o]) for o in off])[0]
        u0 = float(np.squeeze(c0))
        g2 = 0.0
        for d in range(grid.dim):
            plus = [np.array([o + (eps if j == d else 0.0)]) for j, o in enumerate(off)]
            minus = [np.array([o - (eps if j == d else 0.0)]) for j, o in enumerate(off)]
            up = float(np.squeeze(_spline_sample(traj, np.array([t_k]), plus)))
            um = float(np.squeeze(_spline_sample(traj, np.array([t_k]), minus)))
            g2 += ((up - um) / (2 * eps)) ** 2
        lam = 1.0 / float(scaling_function(u0, math.sqrt(g2), p))
    y = np.linspace(-k, k, n)
    s = np.linspace(-k * k, k * k, n_t)
    xs = [o + lam * y for o in off]
    ts = t_k + lam**2 * s
    if (max(abs(a).max() for a in xs) > grid.R - grid.h or ts.min() < traj.times[0] - 1e-12
            or ts.max() > traj.times[-1] + 1e-12):
        raise G.OutOfWindow("frame leaves the simulated cylinder")
    v = lam ** (2 / (p - 1)) * _spline_sample(traj, ts, xs)
    hy = y[1] - y[0]
    Mv = np.stack([scaling_function(vi, np.sqrt(G.grad_norm_sq(vi, hy)), p) for vi in v])
    if grid.dim == 1:
        yr = np.abs(y)
    else:
        Y1, Y2 = np.meshgrid(y, y, indexing="ij")
        yr = np.hypot(Y1, Y2)
    window = (yr[None, ...] + np.sqrt(np.abs(s))[(...,) + (None,) * grid.dim]) <= k * (1 + 1e-12)
    centre = (n_t // 2,) + (n // 2,) * grid.dim
    return Frame(lam, y, s, v, float(Mv[centre]), float(Mv[window].max()), window)


# ------------------------------------------------------- nonlinearity limit

@dataclass
class LimitReport:
    samples: list
    ratios: list
    limit: float
    converged: bool


def nonlinearity_limit(f: Callable[[float], float], p: float, samples: Sequence[float] = (1e2, 1e4, 1e6, 1e8),
                       rtol: float = 1e-3) -> LimitReport:
    """Estimate l = lim s^{-p} f(s) from finitely many samples."""
    ratios = [float(f(s)) / s**p for s in samples]
    lim = ratios[-1]
    conv = lim > 0 and abs(ratios[-1] - ratios[-2]) <= rtol * abs(lim)
    return LimitReport(list(samples), ratios, lim, conv)

"""Batch front-end: INI configs in, CSV tables and summary records out."""

from __future__ import annotations

import argparse
import configparser
import csv
import datetime
import io
import itertools
import json
import math
import os
import sys
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from fractions import Fraction
from pathlib import Path

import numpy as np

from . import bernstein as B
from . import doubling as D
from . import estimates as E
from . import grid as G
from . import integral as I
from .params import (INF, DomainError, ProblemParams, as_fraction, bidaut_veron_exponent,
                     classify_pq, exponents, smallness_threshold, sobolev_exponent)

CHECKS = ("classify", "bernstein", "estimates", "integral", "doubling", "rescaling",
          "liouville", "universal")
OUT_ENV = "GRADHEAT_OUT"


class ConfigError(ValueError):
    pass


# ------------------------------------------------------------------ config

@dataclass
class ExperimentConfig:
    params: ProblemParams
    R: float = 2.0
    h: float = 0.01
    T: float = 0.5
    dt: float | None = None
    bc: G.BC = G.BC.DIRICHLET_FROZEN
    stride: int = 10
    profile: str = "cap"
    amplitude: float | None = None
    amplitude_factor: float = 0.9
    c: float | None = None
    checks: tuple = ()
    sweep: dict = field(default_factory=dict)
    out: str | None = None
    seed: int = 0
    n_random: int = 20

    def with_point(self, point: dict) -> "ExperimentConfig":
        kw = dict(self.__dict__)
        pp = {k: point[k] for k in ("p", "q", "M") if k in point}
        kw["params"] = self.params.with_(**pp)
        if "R" in point:
            kw["R"] = float(point["R"])
        kw["sweep"] = {}
        return ExperimentConfig(**kw)


def _get(cp, sec, key, conv, default):
    if not cp.has_option(sec, key):
        return default
    raw = cp.get(sec, key).strip()
    try:
        return conv(raw)
    except (ValueError, ZeroDivisionError) as e:
        raise ConfigError(f"[{sec}] {key} = {raw!r}: {e}") from e


def _list(raw: str) -> list:
    return [s.strip() for s in raw.replace(";", ",").split(",") if s.strip()]


def parse_config(text: str) -> ExperimentConfig:
    cp = configparser.ConfigParser()
    try:
        cp.read_string(text)
    except configparser.Error as e:
        raise ConfigError(str(e)) from e
    if not cp.has_section("problem"):
        raise ConfigError("missing [problem] section")
    try:
        params = ProblemParams(_get(cp, "problem", "dim", int, 1), _get(cp, "problem", "p", as_fraction, None),
                               _get(cp, "problem", "q", as_fraction, None), _get(cp, "problem", "M", float, 1.0))
    except (DomainError, TypeError) as e:
        raise ConfigError(f"invalid problem parameters: {e}") from e
    bc_name = _get(cp, "solver", "bc", str, "dirichlet_frozen").lower()
    bcs = {"dirichlet_zero": G.BC.DIRICHLET_ZERO, "dirichlet_frozen": G.BC.DIRICHLET_FROZEN}
    if bc_name not in bcs:
        raise ConfigError(f"unknown boundary condition {bc_name!r}")
    checks = tuple(_list(_get(cp, "checks", "run", str, "")))
    bad = [c for c in checks if c not in CHECKS]
    if bad:
        raise ConfigError(f"unknown checks: {', '.join(bad)}")
    sweep = {}
    if cp.has_section("sweep"):
        for key in cp.options("sweep"):
            name = {"m": "M", "r": "R"}.get(key, key)
            if name not in ("p", "q", "M", "R"):
                raise ConfigError(f"unknown sweep axis {key!r}")
            vals = _list(cp.get("sweep", key))
            if not vals:
                raise ConfigError(f"empty sweep axis {key!r}")
            conv = as_fraction if name in ("p", "q") else float
            try:
                sweep[name] = [conv(v) for v in vals]
            except (ValueError, ZeroDivisionError) as e:
                raise ConfigError(f"sweep axis {key}: {e}") from e
    profile = _get(cp, "data", "profile", str, "cap")
    if profile not in ("cap", "cone", "zero"):
        raise ConfigError(f"unknown data profile {profile!r}")
    cfg = ExperimentConfig(
        params=params,
        R=_get(cp, "grid", "R", float, 2.0),
        h=_get(cp, "grid", "h", float, 0.01),
        T=_get(cp, "solver", "T", float, 0.5),
        dt=_get(cp, "solver", "dt", float, None),
        bc=bcs[bc_name],
        stride=_get(cp, "solver", "stride", int, 10),
        profile=profile,
        amplitude=_get(cp, "data", "amplitude", float, None),
        amplitude_factor=_get(cp, "data", "amplitude_factor", float, 0.9),
        c=_get(cp, "data", "c", float, None),
        checks=checks,
        sweep=sweep,
        out=_get(cp, "output", "dir", str, None),
        seed=_get(cp, "run", "seed", int, 0),
        n_random=_get(cp, "run", "n_random", int, 20),
    )
    if not (0 < cfg.h < cfg.R / 4) or cfg.T <= 0 or cfg.stride < 1:
        raise ConfigError("grid/solver settings out of range")
    return cfg


def load_config(path) -> ExperimentConfig:
    try:
        text = Path(path).read_text()
    except OSError as e:
        raise ConfigError(f"cannot read {path}: {e}") from e
    return parse_config(text)


# ------------------------------------------------------------- experiments

@dataclass
class CheckResult:
    name: str
    rows: list
    summary: dict
    hard_fail: bool = False


def initial_data(cfg: ExperimentConfig, grid: G.Grid) -> np.ndarray:
    P = cfg.params
    if cfg.profile == "zero":
        return grid.zeros()
    A = cfg.amplitude
    if A is None:
        if P.regime.value == "Subcritical":
            A = cfg.amplitude_factor * smallness_threshold(P, cfg.c)
        else:
            A = 1e-2
    if cfg.profile == "cone":
        return E.cone_data(grid, A)
    return E.decreasing_profile(grid, A)


def solve_config(cfg: ExperimentConfig, R: float | None = None) -> G.Trajectory:
    grid = G.Grid(cfg.params.dim, cfg.R if R is None else R, cfg.h)
    dt = G.stable_dt(grid) if cfg.dt is None else cfg.dt
    scfg = G.SolverConfig(dt=dt, T=cfg.T, bc=cfg.bc, stride=cfg.stride, stop_at_steady=False)
    return G.solve(G.Field(grid, initial_data(cfg, grid)), cfg.params, scfg)


def _num(x):
    if isinstance(x, Fraction):
        return str(x)
    if isinstance(x, (bool, np.bool_)):
        return bool(x)
    if isinstance(x, (int, np.integer)):
        return int(x)
    if isinstance(x, (float, np.floating)):
        x = float(x)
        return x if math.isfinite(x) else repr(x)
    if x is INF:
        return "inf"
    return x if x is None or isinstance(x, (str, list, dict)) else str(x)


def check_classify(cfg: ExperimentConfig, traj=None) -> CheckResult:
    P = cfg.params
    ex = exponents(P)
    s = {"dim": P.dim, "p": P.p, "q": P.q, "M": P.M, "regime": P.regime.value, "q_c": ex.q_c,
         "p_S": ex.p_S, "p_B": ex.p_B, "M_0": ex.M_0, "gamma": ex.gamma}
    return CheckResult("classify", [s], s)


def check_bernstein(cfg: ExperimentConfig, traj=None) -> CheckResult:
    P = cfg.params
    traj = solve_config(cfg) if traj is None else traj
    m = float(traj.snapshots.max())
    if m <= 0:
        s = {"status": "trivial", "violations": 0}
        return CheckResult("bernstein", [], s)
    f = B.AuxiliaryFunction.for_params(P, m)
    cut = B.cutoff(traj.grid, 0.6, 5.0)
    model = B.calibrate_tolerance(P, m / 2.5, traj.grid.R, traj.grid.h, traj.dt)
    tol = model.tol()
    rows, total, excluded = [], 0, 0
    try:
        for i in range(1, len(traj) - 1):
            r = B.operator_L_residual(traj, f, cut, P, i, require_monotone=True, monotone_tol=1e-9)
            v = r.violations(tol)
            total += v
            excluded += r.excluded_degenerate
            mv = r.max_violation()
            rows.append({"snapshot": i, "t": r.t, "max_residual": mv, "tol": tol,
                         "ratio": mv / tol, "violations": v, "excluded": r.excluded_degenerate})
    except B.HypothesisViolated as e:
        return CheckResult("bernstein", rows, {"status": "hypotheses_failed", "reason": str(e)})
    s = {"status": "checked", "C0": model.C0, "tol": tol, "violations": total,
         "excluded_nodes": excluded, "snapshots": len(rows), "C_cutoff": cut.C}
    return CheckResult("bernstein", rows, s, hard_fail=total > 0)


def check_estimates(cfg: ExperimentConfig, traj=None) -> CheckResult:
    traj = solve_config(cfg) if traj is None else traj
    hyp = E.check_hypotheses(traj, cfg.params, c=cfg.c)
    try:
        rerun = solve_config(cfg, R=2 * cfg.R)
        rep = E.fit_bound(traj, rerun=rerun)
    except E.TemplateMismatch as e:
        return CheckResult("estimates", [], {"status": "template_mismatch", "reason": str(e)})
    g = E._grad_norm(traj)
    sel = traj.grid.within(traj.grid.R / 2) & traj.grid.interior
    rows = [{"t": float(t), "sup_grad": float(gi[sel].max())} for t, gi in zip(traj.times, g)]
    s = {"template": rep.template.value, "hypotheses_pass": hyp.passed, "bound_margin": hyp.bound_margin,
         "max_ut": hyp.monotonicity, "fitted_C": rep.fitted_C, "violations": rep.violations,
         "stability_ratio": rep.stability_ratio, "time_exponent": rep.time_exponent,
         "time_r2": rep.time_r2}
    return CheckResult("estimates", rows, s, hard_fail=rep.violations > 0)


def check_integral(cfg: ExperimentConfig, traj=None) -> CheckResult:
    P = cfg.params
    rng = np.random.default_rng(cfg.seed)
    rows, fails = [], 0
    for i in range(cfg.n_random):
        dim = 1 + i % 2
        k = I.default_k(dim, 2) if dim > 1 else Fraction(-1, 2)
        v = I.TrigPolynomial.random(rng, dim)
        try:
            chk = I.verify_souplet_inequality(v, I.TestFunction.bump(1.0, dim), 0, k)
            ok = chk.passed
            rows.append({"case": f"souplet-{i}", "dim": dim, "k": k, "margin": chk.margin,
                         "tolerance": chk.tolerance, "agreement": chk.agreement, "pass": ok})
        except I.QuadratureUnresolved as e:
            ok = False
            rows.append({"case": f"souplet-{i}", "dim": dim, "k": k, "margin": None,
                         "tolerance": None, "agreement": str(e), "pass": False})
        fails += not ok
    s = {"souplet_cases": cfg.n_random, "souplet_failures": fails}
    try:
        if P.dim == 1 or P.p < bidaut_veron_exponent(P.dim):
            traj = solve_config(cfg) if traj is None else traj
            Rphi = min(0.6 * traj.grid.R, 0.99 * math.sqrt(traj.times[-1] / 2))
            phi = I.TestFunction.make(Rphi, P.p, P.dim, t0=float(traj.times[-1]) / 2)
            chk = I.verify_spacetime_inequality(traj, 1e-3, phi, P)
            rows.append({"case": "space-time", "dim": P.dim, "k": chk.k, "margin": chk.margin,
                         "tolerance": chk.tolerance, "agreement": None, "pass": chk.passed})
            s.update(space_time_margin=chk.margin, space_time_pass=chk.passed, C=chk.C)
            fails += not chk.passed
    except (I.SupportNotCovered, DomainError) as e:
        s["space_time"] = f"skipped: {e}"
    return CheckResult("integral", rows, s, hard_fail=fails > 0)


def check_doubling(cfg: ExperimentConfig, traj=None) -> CheckResult:
    rng = np.random.default_rng(cfg.seed)
    rows, fails, hf = [], 0, 0
    for i in range(10 * cfg.n_random):
        inst = D.random_instance(rng)
        starts = [y for y in inst.D if inst.M[y] * inst.dist_to_gamma(y) > 2 * inst.k]
        for y in inst.D:
            if y not in starts:
                try:
                    D.find_doubling_point(inst, y)
                    fails += 1
                except D.HypothesisFails:
                    hf += 1
        if not starts:
            continue
        y = starts[0]
        try:
            r = D.find_doubling_point(inst, y)
            ok1, ok2, viol, _ = D.check_conclusions(inst, y, r.index)
            ok = ok1 and ok2 and viol == 0 and r.hops <= r.hop_bound
            rows.append({"instance": i, "points": len(inst.points), "start": y, "result": r.index,
                         "hops": r.hops, "hop_bound": r.hop_bound, "certified": ok})
        except (D.NonTermination, D.HypothesisFails):
            ok = False
        fails += not ok
    s = {"instances": 10 * cfg.n_random, "certified": sum(r["certified"] for r in rows),
         "failures": fails, "hypothesis_rejections": hf}
    return CheckResult("doubling", rows, s, hard_fail=fails > 0)


def check_rescaling(cfg: ExperimentConfig, traj=None) -> CheckResult:
    traj = solve_config(cfg) if traj is None else traj
    r1 = G.pde_residual(traj)
    rows = [{"lambda": 1.0, "modified": r1, "unmodified": r1}]
    for lam in (2.0, 1.5):
        try:
            rm = G.rescaling_residual(traj, lam, cfg.params, modified=True)
            ru = G.rescaling_residual(traj, lam, cfg.params, modified=False)
        except G.OutOfWindow:
            continue
        rows.append({"lambda": lam, "modified": rm, "unmodified": ru})
    s = {"regime": cfg.params.regime.value, "residual_lambda1": r1,
         "ratio_lambda2": rows[1]["modified"] / r1 if len(rows) > 1 and r1 > 0 else None}
    return CheckResult("rescaling", rows, s)


def check_liouville(cfg: ExperimentConfig, traj=None) -> CheckResult:
    P = cfg.params
    rows = []
    for R in (4.0, 8.0):
        try:
            rep = E.liouville_probe(P, R=R, c=cfg.c)
            rows.append({"R": R, "T": rep.T, "ratio": rep.ratio, "trend": rep.trend.value,
                         "amplitude": rep.amplitude})
        except (E.HypothesisViolated, ValueError) as e:
            rows.append({"R": R, "T": R, "ratio": None, "trend": f"error: {e}", "amplitude": None})
    s = {"consistent": all(r["trend"] == "Decaying" for r in rows), "trends": [r["trend"] for r in rows]}
    return CheckResult("liouville", rows, s)


def check_universal(cfg: ExperimentConfig, traj=None) -> CheckResult:
    P = cfg.params
    if P.regime.value != "Critical":
        return CheckResult("universal", [], {"status": "not_applicable"})
    rows, hard = [], False
    for M in (1e-3, 1e-2, 1e-1):
        c2 = cfg.with_point({"M": M})
        c2.bc = G.BC.DIRICHLET_ZERO
        a = solve_config(c2)
        c3 = ExperimentConfig(**dict(c2.__dict__, profile="cone"))
        b = solve_config(c3)
        rep = E.universal_bound_check(a, other=b)
        rows.append({"M": M, "fitted_C": rep.fitted_C, "violations": rep.violations,
                     "universality_ratio": rep.universality_ratio, "time_exponent": rep.time_exponent})
        hard |= rep.violations > 0
    return CheckResult("universal", rows, {"sweep": [r["M"] for r in rows],
                                           "max_ratio": max(r["universality_ratio"] or 0 for r in rows)},
                       hard_fail=hard)


RUNNERS = {"classify": check_classify, "bernstein": check_bernstein, "estimates": check_estimates,
           "integral": check_integral, "doubling": check_doubling, "rescaling": check_rescaling,
           "liouville": check_liouville, "universal": check_universal}


def run_checks(cfg: ExperimentConfig, names=None) -> list[CheckResult]:
    names = cfg.checks if names is None else names
    needs_traj = {"bernstein", "estimates", "rescaling"}
    traj = solve_config(cfg) if needs_traj & set(names) else None
    out = []
    for n in names:
        try:
            out.append(RUNNERS[n](cfg, traj))
        except (G.NonFiniteError, FloatingPointError) as e:
            out.append(CheckResult(n, [], {"status": "error", "reason": str(e)}, hard_fail=True))
    return out


# ----------------------------------------------------------------- reports

def _csv_text(rows: list) -> str:
    if not rows:
        return ""
    cols = list(rows[0].keys())
    for r in rows[1:]:
        cols += [k for k in r if k not in cols]
    buf = io.StringIO()
    w = csv.DictWriter(buf, fieldnames=cols, lineterminator="\n")
    w.writeheader()
    for r in rows:
        w.writerow({k: _fmt(r.get(k)) for k in cols})
    return buf.getvalue()


def _fmt(v):
    v = _num(v)
    return repr(v) if isinstance(v, float) else ("" if v is None else v)


def summary_line(res: CheckResult) -> str:
    rec = {"check": res.name, "hard_fail": res.hard_fail}
    rec.update({k: _num(v) for k, v in res.summary.items()})
    return json.dumps(rec, sort_keys=True, default=str)


def write_reports(outdir: Path, results: list[CheckResult], prefix: str = "") -> list[Path]:
    outdir.mkdir(parents=True, exist_ok=True)
    files = []
    for r in results:
        base = f"{prefix}{r.name}"
        if r.rows:
            p = outdir / f"{base}.csv"
            p.write_text(_csv_text(r.rows))
            files.append(p)
        p = outdir / f"{base}.summary.json"
        p.write_text(summary_line(r) + "\n")
        files.append(p)
    return files


def write_manifest(outdir: Path, files: list[Path], argv: list[str]):
    stamp = datetime.datetime.now(datetime.timezone.utc).isoformat(timespec="seconds")
    lines = [f"timestamp={stamp}", "argv=" + " ".join(argv)] + [f"file={p.name}" for p in sorted(files)]
    (outdir / "manifest.txt").write_text("\n".join(lines) + "\n")


def _outdir(args, cfg: ExperimentConfig | None) -> Path:
    return Path(args.out or (cfg.out if cfg else None) or os.environ.get(OUT_ENV) or "gradheat-out")


def _sweep_point(payload):
    cfg, point = payload
    sub = cfg.with_point(point)
    return point, run_checks(sub)


def run_sweep(cfg: ExperimentConfig, jobs: int = 1):
    axes = sorted(cfg.sweep)
    points = [dict(zip(axes, vals)) for vals in itertools.product(*(cfg.sweep[a] for a in axes))]
    payload = [(cfg, pt) for pt in points]
    if jobs > 1:
        with ProcessPoolExecutor(max_workers=jobs) as ex:
            results = list(ex.map(_sweep_point, payload))
    else:
        results = [_sweep_point(x) for x in payload]
    rows = []
    for point, res in results:
        for r in res:
            row = {a: _num(point[a]) for a in axes}
            row["check"] = r.name
            row["hard_fail"] = r.hard_fail
            row["summary"] = summary_line(r)
            rows.append(row)
    return rows, any(r["hard_fail"] for r in rows)


# --------------------------------------------------------------------- CLI

def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="gradheat", description=__doc__)
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", help="INI experiment configuration")
    common.add_argument("--seed", type=int, help="override the configured random seed")
    common.add_argument("--out", help=f"output directory (default ${OUT_ENV} or ./gradheat-out)")
    common.add_argument("--jobs", type=int, default=1, help="worker processes for sweeps")
    sub = ap.add_subparsers(dest="cmd", required=True)
    c = sub.add_parser("classify", parents=[common], help="regime of (p, q)")
    c.add_argument("p")
    c.add_argument("q")
    e = sub.add_parser("exponents", parents=[common], help="p_S, p_B, M_0, gamma")
    e.add_argument("--dim", "-N", type=int, required=True)
    e.add_argument("--p")
    e.add_argument("--q")
    sub.add_parser("solve", parents=[common], help="solve and export snapshots")
    for name in ("verify-bernstein", "verify-integral", "verify-estimates", "rescale-check", "sweep"):
        sub.add_parser(name, parents=[common])
    d = sub.add_parser("doubling-check", parents=[common], help="certify a doubling fixture")
    d.add_argument("fixture", nargs="?")
    d.add_argument("--start", type=int)
    r = sub.add_parser("run", parents=[common], help="run every check listed in a config")
    r.add_argument("config_path", nargs="?")
    return ap


def _need_config(args) -> ExperimentConfig:
    path = getattr(args, "config_path", None) or args.config
    if not path:
        raise ConfigError("a --config file is required")
    cfg = load_config(path)
    if args.seed is not None:
        cfg.seed = args.seed
    return cfg


def main(argv=None) -> int:
    argv = sys.argv[1:] if argv is None else list(argv)
    args = build_parser().parse_args(argv)
    try:
        return _dispatch(args, argv)
    except ConfigError as e:
        print(f"config error: {e}", file=sys.stderr)
        return 2


def _finish(args, cfg, results, argv) -> int:
    if results:
        out = _outdir(args, cfg)
        files = write_reports(out, results)
        write_manifest(out, files, argv)
    for r in results:
        print(summary_line(r))
    return 1 if any(r.hard_fail for r in results) else 0


def _dispatch(args, argv) -> int:
    cmd = args.cmd
    if cmd == "classify":
        try:
            print(classify_pq(args.p, args.q).value)
        except (DomainError, ValueError, ZeroDivisionError) as e:
            raise ConfigError(str(e)) from e
        return 0
    if cmd == "exponents":
        N = args.dim
        if N < 1:
            raise ConfigError("dimension must be positive")
        print(f"p_S={sobolev_exponent(N)}")
        print(f"p_B={bidaut_veron_exponent(N)}")
        if args.p:
            try:
                P = ProblemParams(N, args.p, args.q or "2", 1.0)
            except (DomainError, ValueError) as e:
                raise ConfigError(str(e)) from e
            ex = exponents(P)
            print(f"q_c={ex.q_c}")
            print(f"M_0={ex.M_0!r}")
            if args.q:
                print(f"gamma={ex.gamma}")
        return 0
    if cmd == "doubling-check" and args.fixture:
        try:
            inst = D.DoublingInstance.from_json(Path(args.fixture).read_text())
        except (OSError, ValueError, KeyError) as e:
            raise ConfigError(f"bad fixture: {e}") from e
        starts = [args.start] if args.start is not None else inst.D
        fails = 0
        for y in starts:
            try:
                r = D.find_doubling_point(inst, y)
                print(json.dumps({"start": y, "result": r.index, "hops": r.hops,
                                  "M_dist_gamma": _num(r.M_dist_gamma), "dominates_start": r.dominates_start,
                                  "ball_violations": r.ball_violations, "certified": r.certified},
                                 sort_keys=True))
                fails += not r.certified
            except D.HypothesisFails as e:
                print(json.dumps({"start": y, "hypothesis": "fails", "reason": str(e)}, sort_keys=True))
                if args.start is not None:
                    return 1
            except D.NonTermination as e:
                print(json.dumps({"start": y, "error": str(e)}, sort_keys=True))
                fails += 1
        return 1 if fails else 0
    cfg = _need_config(args)
    if cmd == "solve":
        traj = solve_config(cfg)
        out = _outdir(args, cfg)
        man = G.export_trajectory(traj, out / "trajectory")
        print(f"{traj.status.value} steps={traj.steps} snapshots={len(traj)} manifest={man}")
        return 1 if traj.status is G.Status.NONFINITE else 0
    single = {"verify-bernstein": ["bernstein"], "verify-integral": ["integral"],
              "verify-estimates": ["estimates"], "rescale-check": ["rescaling"],
              "doubling-check": ["doubling"]}
    if cmd in single:
        return _finish(args, cfg, run_checks(cfg, single[cmd]), argv)
    if cmd == "sweep":
        if not cfg.sweep:
            raise ConfigError("config has no [sweep] section")
        rows, hard = run_sweep(cfg, args.jobs)
        out = _outdir(args, cfg)
        out.mkdir(parents=True, exist_ok=True)
        p = out / "sweep.csv"
        p.write_text(_csv_text(rows))
        write_manifest(out, [p], argv)
        print(f"{len(rows)} rows -> {p}")
        return 1 if hard else 0
    if cmd == "run":
        return _finish(args, cfg, run_checks(cfg), argv)
    raise ConfigError(f"unknown command {cmd}")


if __name__ == "__main__":
    sys.exit(main())

#!/usr/bin/env python3
"""Fitted R-exponent of ∬u^{2p} over B_{R/2} × (R²/2, 3R²/2) for several p at critical q.

Compares against -4p/(p-1) + N + 2 and writes scaling.csv.

Usage: python scripts/scaling_sweep.py [--p 3 5/2 4] [--out DIR]
"""

import argparse
import csv
from pathlib import Path

from gradheat import integral as I
from gradheat.params import ProblemParams, as_fraction, critical_q


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--p", nargs="+", default=["3", "5/2", "4"])
    ap.add_argument("--M", type=float, default=0.01)
    ap.add_argument("--out", default="gradheat-out")
    args = ap.parse_args()
    rows = []
    for ps in args.p:
        p = as_fraction(ps)
        P = ProblemParams(1, p, critical_q(p), args.M)
        rep = I.verify_u2p_scaling(P)
        rows.append({"p": str(p), "q": str(P.q), "predicted": str(rep.predicted), "slope": rep.slope,
                     "r2": rep.r2, **{f"R{int(R)}": v for R, v in zip(rep.R, rep.integrals)}})
        print(f"p={str(p):>4}  slope {rep.slope:8.4f}  predicted {float(rep.predicted):8.4f}  r2 {rep.r2:.6f}")
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    with open(out / "scaling.csv", "w", newline="") as fh:
        w = csv.DictWriter(fh, fieldnames=list(rows[0]))
        w.writeheader()
        w.writerows(rows)


if __name__ == "__main__":
    main()

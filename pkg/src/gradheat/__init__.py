"""Numerical laboratory for u_t - Δu = u^p + M|∇u|^q."""

from .params import ProblemParams, Regime, classify, exponents, INF

__all__ = ["ProblemParams", "Regime", "classify", "exponents", "INF"]
__version__ = "0.1.0"

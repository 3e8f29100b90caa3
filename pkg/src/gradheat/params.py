"""Parameters of u_t - Δu = u^p + M|∇u|^q and their closed-form exponents.

p and q are carried as exact ``Fraction`` values so that the critical
manifold q(p+1) = 2p is decided without rounding.
"""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass
from fractions import Fraction
from numbers import Rational
from typing import Union


class DomainError(ValueError):
    """Raised when (N, p, q, M) leave the admissible parameter range."""


class _Infinity:
    """The +infinity member of the extended rationals.

    A singleton, compared against Fractions and floats but never a float
    itself (``p_B = ∞`` for N = 1 is a genuine case, not an overflow).
    """

    _instance = None

    def __new__(cls):
        if cls._instance is None:
            cls._instance = super().__new__(cls)
        return cls._instance

    def __repr__(self):
        return "INF"

    def __str__(self):
        return "inf"

    def __float__(self):
        return math.inf

    def __eq__(self, other):
        return other is self

    def __hash__(self):
        return hash("gradheat.INF")

    def __lt__(self, other):
        return False

    def __le__(self, other):
        return other is self

    def __gt__(self, other):
        return other is not self

    def __ge__(self, other):
        return True


INF = _Infinity()
ExtRational = Union[Fraction, _Infinity]


def as_fraction(x) -> Fraction:
    """Exact conversion. Strings like "3/2" and ints are exact; floats are
    converted via their shortest decimal repr so that 1.2 means 6/5."""
    if isinstance(x, Fraction):
        return x
    if isinstance(x, (int, Rational)):
        return Fraction(x)
    if isinstance(x, float):
        return Fraction(repr(x))
    if isinstance(x, str):
        return Fraction(x.strip())
    raise TypeError(f"cannot interpret {x!r} as a rational")


class Regime(enum.Enum):
    SUBCRITICAL = "Subcritical"
    CRITICAL = "Critical"
    SUPERCRITICAL = "Supercritical"

    def __str__(self):
        return self.value


@dataclass(frozen=True)
class ProblemParams:
    dim: int
    p: Fraction
    q: Fraction
    M: float = 1.0

    def __post_init__(self):
        object.__setattr__(self, "p", as_fraction(self.p))
        object.__setattr__(self, "q", as_fraction(self.q))
        object.__setattr__(self, "M", float(self.M))
        if int(self.dim) != self.dim or self.dim < 1:
            raise DomainError(f"dimension must be a positive integer, got {self.dim}")
        if self.p <= 1:
            raise DomainError(f"p must exceed 1, got {self.p}")
        if self.q <= 1:
            raise DomainError(f"q must exceed 1, got {self.q}")
        if not (self.M >= 0 and math.isfinite(self.M)):
            raise DomainError(f"M must be finite and nonnegative, got {self.M}")

    @property
    def pf(self) -> float:
        return float(self.p)

    @property
    def qf(self) -> float:
        return float(self.q)

    @property
    def regime(self) -> Regime:
        return classify(self)

    def with_(self, **changes) -> "ProblemParams":
        d = dict(dim=self.dim, p=self.p, q=self.q, M=self.M)
        d.update(changes)
        return ProblemParams(**d)


@dataclass(frozen=True)
class CriticalExponents:
    q_c: Fraction
    p_S: ExtRational
    p_B: ExtRational
    M_0: float
    gamma: Fraction


def critical_q(p) -> Fraction:
    p = as_fraction(p)
    if p <= 1:
        raise DomainError(f"p must exceed 1, got {p}")
    return 2 * p / (p + 1)


def classify(params: ProblemParams) -> Regime:
    p, q = params.p, params.q
    lhs, rhs = q * (p + 1), 2 * p
    if lhs < rhs:
        return Regime.SUBCRITICAL
    if lhs == rhs:
        return Regime.CRITICAL
    return Regime.SUPERCRITICAL


def classify_pq(p, q) -> Regime:
    """classify() for a bare (p, q) pair; dimension and M are irrelevant."""
    return classify(ProblemParams(1, p, q, 1.0))


def sobolev_exponent(dim: int) -> ExtRational:
    if dim <= 2:
        return INF
    return Fraction(dim + 2, dim - 2)


def bidaut_veron_exponent(dim: int) -> ExtRational:
    if dim == 1:
        return INF
    return Fraction(dim * (dim + 2), (dim - 1) ** 2)


def m0_threshold(dim: int, p) -> float:
    """Smallest gradient coefficient for the critical-case gradient bound."""
    p = float(as_fraction(p))
    return (6 * dim * (p + 1)) ** (p / (p + 1)) * math.sqrt((p + 1) / (p - 1))


def bernstein_gamma(dim: int, q) -> Fraction:
    q = as_fraction(q)
    if q <= 1:
        raise DomainError(f"q must exceed 1, got {q}")
    return 1 + Fraction(dim) / (3 * (q - 1))


def exponents(params: ProblemParams) -> CriticalExponents:
    return CriticalExponents(
        q_c=critical_q(params.p),
        p_S=sobolev_exponent(params.dim),
        p_B=bidaut_veron_exponent(params.dim),
        M_0=m0_threshold(params.dim, params.p),
        gamma=bernstein_gamma(params.dim, params.q),
    )


def young_constant(dim: int, p, q) -> float:
    """C(N,p,q) = ((q-1)/q) (6p)^{q/(q-1)} (2N/(q(q-1)))^{1/(q-1)}.

    The constant produced when 6p(-f)^{p-1}w is split by Young's inequality
    in the subcritical Bernstein argument (M factored out).
    """
    p, q = float(as_fraction(p)), float(as_fraction(q))
    return ((q - 1) / q) * (6 * p) ** (q / (q - 1)) * (2 * dim / (q * (q - 1))) ** (1 / (q - 1))


def default_threshold_constant(dim: int, p, q) -> float:
    """Default c_{N,p,q}: c = (2N C(N,p,q)/(q-1))^{(q-1)/((p+1)q-2p)}.

    Undefined at critical q, where the exponent's denominator vanishes.
    """
    pf, qf = as_fraction(p), as_fraction(q)
    denom = (pf + 1) * qf - 2 * pf
    if denom == 0:
        raise DomainError("threshold constant is undefined at critical q")
    C = young_constant(dim, pf, qf)
    return (2 * dim * C / float(qf - 1)) ** (float(qf - 1) / float(denom))


def smallness_threshold(params: ProblemParams, c: float | None = None) -> float:
    """u-bound c_{N,p,q} M^{2/(2p-(p+1)q)} for the subcritical gradient bound."""
    if c is None:
        c = default_threshold_constant(params.dim, params.p, params.q)
    expo = Fraction(2) / (2 * params.p - (params.p + 1) * params.q)
    return c * params.M ** float(expo)


def largeness_threshold(params: ProblemParams, c: float | None = None, tau: float = 0.0) -> float:
    """Lower bound c (M^{-2/((p+1)q-2p)} + τ^{1/p}) for the supercritical gradient bound.

    The constant c is non-constructive; default 1.
    """
    if c is None:
        c = 1.0
    expo = -Fraction(2) / ((params.p + 1) * params.q - 2 * params.p)
    return c * (params.M ** float(expo) + tau ** (1 / params.pf))

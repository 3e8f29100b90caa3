import math
from fractions import Fraction

import mpmath
import pytest

from gradheat.params import (INF, DomainError, ProblemParams, Regime, as_fraction,
                             bernstein_gamma, bidaut_veron_exponent, classify, classify_pq,
                             critical_q, default_threshold_constant, exponents,
                             largeness_threshold, m0_threshold, smallness_threshold,
                             sobolev_exponent)


@pytest.mark.parametrize("p,q,expected", [
    (3, "3/2", Regime.CRITICAL),
    (3, "6/5", Regime.SUBCRITICAL),
    (3, "7/4", Regime.SUPERCRITICAL),
    (2, "4/3", Regime.CRITICAL),
    ("5/2", "10/7", Regime.CRITICAL),
])
def test_classify_examples(p, q, expected):
    assert classify_pq(p, q) is expected


def test_float_input_is_read_as_decimal():
    assert as_fraction(1.2) == Fraction(6, 5)
    assert classify_pq(3.0, 1.5) is Regime.CRITICAL


@pytest.mark.parametrize("bad", [dict(p=1), dict(p="1/2"), dict(q=1), dict(M=-1.0), dict(dim=0),
                                 dict(M=math.inf)])
def test_domain_errors(bad):
    kw = dict(dim=1, p=3, q=Fraction(3, 2), M=1.0)
    kw.update(bad)
    with pytest.raises(DomainError):
        ProblemParams(**kw)


def test_exponents_dim3():
    assert sobolev_exponent(3) == 5
    assert bidaut_veron_exponent(3) == Fraction(15, 4)
    assert bidaut_veron_exponent(3) < sobolev_exponent(3)


def test_infinity_is_not_a_float():
    assert sobolev_exponent(1) is INF and sobolev_exponent(2) is INF
    assert bidaut_veron_exponent(1) is INF
    assert bidaut_veron_exponent(2) == 8
    assert INF > Fraction(10**9) and not INF < 3
    assert float(INF) == math.inf and not isinstance(INF, float)


def test_m0_against_mpmath():
    mpmath.mp.dps = 40
    for N, p in [(1, 3), (2, 2), (3, Fraction(7, 3))]:
        pp = mpmath.mpf(Fraction(p).numerator) / Fraction(p).denominator
        ref = (6 * N * (pp + 1)) ** (pp / (pp + 1)) * mpmath.sqrt((pp + 1) / (pp - 1))
        assert abs(m0_threshold(N, p) - float(ref)) <= 1e-13 * float(ref)


def test_gamma_and_critical_q():
    assert bernstein_gamma(1, Fraction(3, 2)) == Fraction(5, 3)
    assert critical_q(3) == Fraction(3, 2)
    ex = exponents(ProblemParams(3, 3, Fraction(3, 2)))
    assert ex.q_c == Fraction(3, 2) and ex.gamma == 1 + Fraction(3, Fraction(3, 2))


def test_thresholds():
    P = ProblemParams(1, 3, Fraction(6, 5), 1.0)
    c = default_threshold_constant(1, 3, Fraction(6, 5))
    assert smallness_threshold(P) == pytest.approx(c)
    # M-scaling: exponent 2/(2p-(p+1)q) = 2/(6 - 24/5) = 5/3
    assert smallness_threshold(P.with_(M=2.0)) == pytest.approx(c * 2 ** (5 / 3))
    with pytest.raises(DomainError):
        default_threshold_constant(1, 3, Fraction(3, 2))
    S = ProblemParams(1, 3, Fraction(7, 4), 1.0)
    assert largeness_threshold(S) == pytest.approx(1.0)
    assert largeness_threshold(S, tau=8.0) == pytest.approx(3.0)


def test_params_are_frozen():
    P = ProblemParams(1, 3, "3/2")
    with pytest.raises(Exception):
        P.p = Fraction(2)
    assert P.with_(q="6/5").regime is Regime.SUBCRITICAL
    assert classify(P) is Regime.CRITICAL

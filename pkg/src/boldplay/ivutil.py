"""Conversions between exact rationals and mpmath intervals."""
from __future__ import annotations

from contextlib import contextmanager
from fractions import Fraction

import mpmath
from mpmath.libmp import to_rational

iv = mpmath.iv


def frac_iv(x: Fraction):
    """Interval enclosing the rational x at the current working precision."""
    x = Fraction(x)
    return iv.mpf(x.numerator) / iv.mpf(x.denominator)


def iv_bounds(x) -> tuple[Fraction, Fraction]:
    lo, hi = x._mpi_
    return Fraction(*map(int, to_rational(lo))), Fraction(*map(int, to_rational(hi)))


@contextmanager
def precision(bits: int):
    old = iv.prec
    iv.prec = bits
    try:
        yield
    finally:
        iv.prec = old

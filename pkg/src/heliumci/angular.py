"""Wigner 3j/6j symbols, Clebsch-Gordan coefficients, reduced C^k elements.

Angular momenta are handled as doubled integers internally so half-integer
values are exact.  Racah sums are evaluated in exact rational arithmetic
(Python integers) and only the final square root is taken in floating point.
"""

from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction
from functools import lru_cache
from math import factorial, isqrt, sqrt


@dataclass(frozen=True, order=True)
class AngularMomentum:
    """An angular momentum quantum number stored as the integer 2j."""

    twice: int

    def __post_init__(self):
        if not isinstance(self.twice, int) or self.twice < 0:
            raise ValueError("2j must be a non-negative integer")

    @classmethod
    def of(cls, j) -> AngularMomentum:
        if isinstance(j, AngularMomentum):
            return j
        return cls(_double(j))

    @property
    def value(self) -> float:
        return self.twice / 2

    def projections(self) -> list[int]:
        """Allowed doubled projections 2m = -2j, -2j+2, ..., 2j."""
        return list(range(-self.twice, self.twice + 1, 2))


def _double(x) -> int:
    if isinstance(x, AngularMomentum):
        return x.twice
    d = 2 * Fraction(x).limit_denominator(4)
    if d.denominator != 1:
        raise ValueError(f"{x!r} is not an integer or half-integer")
    return int(d)


@lru_cache(maxsize=None)
def _fact(n: int) -> int:
    return factorial(n)


def _triangle(a: int, b: int, c: int) -> bool:
    """Triangle rule on doubled values, including integer perimeter."""
    return (a + b + c) % 2 == 0 and abs(a - b) <= c <= a + b


def _delta(a: int, b: int, c: int) -> Fraction:
    """Triangle coefficient Delta(abc) on doubled arguments."""
    return Fraction(
        _fact((a + b - c) // 2) * _fact((a - b + c) // 2) * _fact((-a + b + c) // 2),
        _fact((a + b + c) // 2 + 1),
    )


def _signed_sqrt(sign_sum: Fraction, square: Fraction) -> float:
    """sign_sum * sqrt(square) evaluated to double precision."""
    if sign_sum == 0 or square == 0:
        return 0.0
    value = sign_sum * sign_sum * square
    # exact square root when possible, float otherwise
    num, den = value.numerator, value.denominator
    rn, rd = isqrt(num), isqrt(den)
    if rn * rn == num and rd * rd == den:
        mag = rn / rd
    else:
        mag = sqrt(float(value))
    return mag if sign_sum > 0 else -mag


@lru_cache(maxsize=65536)
def _three_j(j1: int, j2: int, j3: int, m1: int, m2: int, m3: int) -> float:
    if m1 + m2 + m3 != 0 or not _triangle(j1, j2, j3):
        return 0.0
    if (j1 - m1) % 2 or (j2 - m2) % 2 or (j3 - m3) % 2:
        return 0.0
    if abs(m1) > j1 or abs(m2) > j2 or abs(m3) > j3:
        return 0.0
    pre = _delta(j1, j2, j3) * (
        _fact((j1 + m1) // 2) * _fact((j1 - m1) // 2)
        * _fact((j2 + m2) // 2) * _fact((j2 - m2) // 2)
        * _fact((j3 + m3) // 2) * _fact((j3 - m3) // 2)
    )
    kmin = max(0, (j2 - j3 - m1) // 2, (j1 - j3 + m2) // 2)
    kmax = min((j1 + j2 - j3) // 2, (j1 - m1) // 2, (j2 + m2) // 2)
    total = Fraction(0)
    for k in range(kmin, kmax + 1):
        den = (
            _fact(k) * _fact((j1 + j2 - j3) // 2 - k) * _fact((j1 - m1) // 2 - k)
            * _fact((j2 + m2) // 2 - k) * _fact((j3 - j2 + m1) // 2 + k)
            * _fact((j3 - j1 - m2) // 2 + k)
        )
        total += Fraction((-1) ** k, den)
    phase = -1 if ((j1 - j2 - m3) // 2) % 2 else 1
    return _signed_sqrt(phase * total, pre)


@lru_cache(maxsize=65536)
def _six_j(j1: int, j2: int, j3: int, j4: int, j5: int, j6: int) -> float:
    triads = ((j1, j2, j3), (j1, j5, j6), (j4, j2, j6), (j4, j5, j3))
    if not all(_triangle(*t) for t in triads):
        return 0.0
    pre = Fraction(1)
    for t in triads:
        pre *= _delta(*t)
    a = [sum(t) // 2 for t in triads]
    b = [(j1 + j2 + j4 + j5) // 2, (j2 + j3 + j5 + j6) // 2, (j3 + j1 + j6 + j4) // 2]
    total = Fraction(0)
    for t in range(max(a), min(b) + 1):
        den = 1
        for ai in a:
            den *= _fact(t - ai)
        for bi in b:
            den *= _fact(bi - t)
        total += Fraction((-1) ** t * _fact(t + 1), den)
    return _signed_sqrt(total, pre)


def wigner_3j(j1, j2, j3, m1, m2, m3) -> float:
    """Wigner 3j symbol (j1 j2 j3; m1 m2 m3); arguments may be half-integers."""
    d = [_double(x) for x in (j1, j2, j3, m1, m2, m3)]
    for jj, mm in zip(d[:3], d[3:]):
        if jj < 0:
            raise ValueError("angular momenta must be non-negative")
        if (jj - mm) % 2:
            raise ValueError("j - m must be an integer")
    return _three_j(*d)


def wigner_6j(j1, j2, j3, j4, j5, j6) -> float:
    """Wigner 6j symbol {j1 j2 j3; j4 j5 j6}."""
    d = [_double(x) for x in (j1, j2, j3, j4, j5, j6)]
    if any(x < 0 for x in d):
        raise ValueError("angular momenta must be non-negative")
    return _six_j(*d)


def clebsch_gordan(j1, m1, j2, m2, J, M) -> float:
    """<j1 m1, j2 m2 | J M> in the Condon-Shortley phase convention."""
    dj1, dm1, dj2, dm2, dJ, dM = (_double(x) for x in (j1, m1, j2, m2, J, M))
    if dm1 + dm2 != dM:
        return 0.0
    w = wigner_3j(j1, j2, J, m1, m2, -Fraction(dM, 2))
    phase = -1 if ((dj1 - dj2 + dM) // 2) % 2 else 1
    return phase * sqrt(dJ + 1) * w


def reduced_c_tensor(l: int, k: int, lp: int) -> float:
    """<l||C^k||l'> = (-1)^l sqrt((2l+1)(2l'+1)) (l k l'; 0 0 0)."""
    if min(l, k, lp) < 0:
        raise ValueError("l, k, l' must be non-negative")
    if (l + k + lp) % 2:
        return 0.0
    w = wigner_3j(l, k, lp, 0, 0, 0)
    return (-1) ** l * sqrt((2 * l + 1) * (2 * lp + 1)) * w

"""Exact scalars: the field Q(i) of Gaussian rationals.

All arithmetic in the package runs over Q(i) = Q[t]/(t^2+1), represented by a
pair of ``fractions.Fraction``.  Conjugation is the involutive automorphism
fixing Q.  Pure-rational data embeds via ``im = 0`` and the fast paths below
keep that case cheap.
"""

from __future__ import annotations

from fractions import Fraction
from typing import Union

RatLike = Union[int, Fraction, "QI"]


class QI:
    """A Gaussian rational a + b*i with exact Fraction parts."""

    __slots__ = ("re", "im")

    def __init__(self, re: RatLike = 0, im: RatLike = 0):
        if isinstance(re, QI):
            assert im == 0
            self.re, self.im = re.re, re.im
            return
        self.re = re if isinstance(re, Fraction) else Fraction(re)
        self.im = im if isinstance(im, Fraction) else Fraction(im)

    # -- constructors ------------------------------------------------------

    @staticmethod
    def of(x: RatLike) -> "QI":
        return x if isinstance(x, QI) else QI(x)

    # -- ring/field ops ----------------------------------------------------

    def __add__(self, other: RatLike) -> "QI":
        o = QI.of(other)
        return QI(self.re + o.re, self.im + o.im)

    __radd__ = __add__

    def __neg__(self) -> "QI":
        return QI(-self.re, -self.im)

    def __sub__(self, other: RatLike) -> "QI":
        o = QI.of(other)
        return QI(self.re - o.re, self.im - o.im)

    def __rsub__(self, other: RatLike) -> "QI":
        return QI.of(other) - self

    def __mul__(self, other: RatLike) -> "QI":
        o = QI.of(other)
        if not self.im and not o.im:
            return QI(self.re * o.re)
        return QI(self.re * o.re - self.im * o.im,
                  self.re * o.im + self.im * o.re)

    __rmul__ = __mul__

    def inverse(self) -> "QI":
        n = self.re * self.re + self.im * self.im
        if not n:
            raise ZeroDivisionError("inverse of 0 in Q(i)")
        return QI(self.re / n, -self.im / n)

    def __truediv__(self, other: RatLike) -> "QI":
        return self * QI.of(other).inverse()

    def __rtruediv__(self, other: RatLike) -> "QI":
        return QI.of(other) * self.inverse()

    def __pow__(self, n: int) -> "QI":
        if n < 0:
            return self.inverse() ** (-n)
        out, base = QI(1), self
        while n:
            if n & 1:
                out = out * base
            base = base * base
            n >>= 1
        return out

    # -- structure ---------------------------------------------------------

    def conj(self) -> "QI":
        return QI(self.re, -self.im)

    def is_zero(self) -> bool:
        return not self.re and not self.im

    def is_real(self) -> bool:
        return not self.im

    def __bool__(self) -> bool:
        return not self.is_zero()

    def __eq__(self, other) -> bool:
        if isinstance(other, (int, Fraction)):
            return self.im == 0 and self.re == other
        if isinstance(other, QI):
            return self.re == other.re and self.im == other.im
        return NotImplemented

    def __hash__(self):
        return hash((self.re, self.im))

    def __repr__(self) -> str:
        if not self.im:
            return str(self.re)
        if not self.re:
            return f"{self.im}*i"
        sign = "+" if self.im > 0 else "-"
        return f"({self.re}{sign}{abs(self.im)}*i)"


ZERO = QI(0)
ONE = QI(1)
I = QI(0, 1)


def i_power(n: int) -> QI:
    """i**n, exactly."""
    return (ONE, I, -ONE, -I)[n % 4]


def eps_sign(a: int) -> int:
    """The sign (-1)^(a(a-1)/2) used throughout the pairing bookkeeping."""
    return -1 if (a * (a - 1) // 2) % 2 else 1


def parse_rational(s) -> Fraction:
    """Parse an int, or a string 'a/b' / 'a', into an exact Fraction."""
    if isinstance(s, bool):
        raise ValueError(f"not a rational: {s!r}")
    if isinstance(s, int):
        return Fraction(s)
    if isinstance(s, str):
        return Fraction(s)
    if isinstance(s, Fraction):
        return s
    raise ValueError(f"not a rational: {s!r}")


def parse_scalar(obj) -> QI:
    """Parse the instance-file scalar encoding: 'a/b', int, or {re, im}."""
    if isinstance(obj, dict):
        return QI(parse_rational(obj.get("re", 0)), parse_rational(obj.get("im", 0)))
    return QI(parse_rational(obj))


def dump_rational(f: Fraction):
    return int(f) if f.denominator == 1 else f"{f.numerator}/{f.denominator}"


def dump_scalar(x: QI):
    if x.is_real():
        return dump_rational(x.re)
    return {"re": dump_rational(x.re), "im": dump_rational(x.im)}

"""Exact scalars and certified nonnegative reals.

Scalars are :class:`fractions.Fraction`.  Norms in ``l2`` are square roots of
rationals, so every norm-like quantity is carried as a :class:`CertifiedReal`:
a rational enclosure ``[sq_lo, sq_hi]`` of the *square* of a nonnegative real.
When ``sq_lo == sq_hi`` the value is known exactly and all comparisons are
exact.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from fractions import Fraction
from typing import ClassVar, Union

Scalar = Fraction
ScalarLike = Union[int, str, Fraction, float]

# 2**-48 relative width for square-root enclosures; well below 1e-12.
_SQRT_BITS = 48


def as_scalar(value: ScalarLike) -> Fraction:
    """Coerce ints, ``"p/q"`` strings, Fractions and floats (exactly) to a Fraction."""
    if isinstance(value, Fraction):
        return value
    if isinstance(value, bool):
        raise TypeError("booleans are not scalars")
    if isinstance(value, (int, str)):
        return Fraction(value)
    if isinstance(value, float):
        if not math.isfinite(value):
            raise ValueError(f"non-finite scalar {value!r}")
        return Fraction(value)
    raise TypeError(f"cannot interpret {value!r} as a scalar")


def rational_sqrt(q: Fraction) -> Fraction | None:
    """Exact square root of ``q`` if it is a rational square, else None."""
    if q < 0:
        raise ValueError("negative input")
    n, d = q.numerator, q.denominator
    rn, rd = math.isqrt(n), math.isqrt(d)
    if rn * rn == n and rd * rd == d:
        return Fraction(rn, rd)
    return None


def sqrt_enclosure(q: Fraction) -> tuple[Fraction, Fraction]:
    """Rationals ``lo <= sqrt(q) <= hi`` with ``hi - lo <= 2**-48 * sqrt(q)``."""
    if q < 0:
        raise ValueError("negative input")
    exact = rational_sqrt(q)
    if exact is not None:
        return exact, exact
    a, b = q.numerator, q.denominator
    # sqrt(a/b) = sqrt(a*b)/b; scale so the unit in the last place is tiny.
    scale = 1 << _SQRT_BITS
    r = math.isqrt(a * b * scale * scale)
    return Fraction(r, b * scale), Fraction(r + 1, b * scale)


@dataclass(frozen=True)
class CertifiedReal:
    """A nonnegative real ``v`` known through ``sq_lo <= v**2 <= sq_hi``.

    Comparison operators are *certified*: ``a <= b`` is True only when it is
    proven by the enclosures.  For exact values this is ordinary comparison.
    """

    sq_lo: Fraction
    sq_hi: Fraction
    certified: bool = True

    def __post_init__(self) -> None:
        if self.sq_lo < 0 or self.sq_hi < self.sq_lo:
            raise ValueError(f"invalid enclosure [{self.sq_lo}, {self.sq_hi}]")

    # -- constructors -------------------------------------------------------
    @classmethod
    def exact(cls, value: ScalarLike) -> CertifiedReal:
        v = as_scalar(value)
        if v < 0:
            raise ValueError("CertifiedReal values are nonnegative")
        return cls(v * v, v * v)

    @classmethod
    def from_square(cls, sq: ScalarLike) -> CertifiedReal:
        s = as_scalar(sq)
        return cls(s, s)

    @classmethod
    def from_bounds(cls, lo: Fraction, hi: Fraction) -> CertifiedReal:
        """Enclosure of a value with ``lo <= v <= hi``."""
        lo = max(Fraction(0), lo)
        return cls(lo * lo, hi * hi)

    ZERO: ClassVar[CertifiedReal]

    # -- views --------------------------------------------------------------
    @property
    def is_exact(self) -> bool:
        return self.sq_lo == self.sq_hi

    @property
    def squared(self) -> Fraction:
        if not self.is_exact:
            raise ValueError("squared value is only defined for exact values")
        return self.sq_lo

    @property
    def value(self) -> Fraction | None:
        """The exact rational value, or None if irrational or not exact."""
        if not self.is_exact:
            return None
        return rational_sqrt(self.sq_lo)

    @property
    def lo(self) -> Fraction:
        return sqrt_enclosure(self.sq_lo)[0]

    @property
    def hi(self) -> Fraction:
        return sqrt_enclosure(self.sq_hi)[1]

    def is_zero(self) -> bool:
        return self.sq_hi == 0

    def __float__(self) -> float:
        return math.sqrt((float(self.sq_lo) + float(self.sq_hi)) / 2)

    # -- arithmetic ---------------------------------------------------------
    def scale(self, c: ScalarLike) -> CertifiedReal:
        """``|c| * self``."""
        c2 = as_scalar(c) ** 2
        return CertifiedReal(self.sq_lo * c2, self.sq_hi * c2, self.certified)

    def __mul__(self, other: CertifiedReal | ScalarLike) -> CertifiedReal:
        if isinstance(other, CertifiedReal):
            return CertifiedReal(self.sq_lo * other.sq_lo, self.sq_hi * other.sq_hi,
                                 self.certified and other.certified)
        c = as_scalar(other)
        if c < 0:
            raise ValueError("cannot scale a nonnegative real by a negative number")
        return self.scale(c)

    __rmul__ = __mul__

    def __truediv__(self, other: CertifiedReal | ScalarLike) -> CertifiedReal:
        if not isinstance(other, CertifiedReal):
            other = CertifiedReal.exact(other)
        if other.sq_lo == 0:
            raise ZeroDivisionError("divisor enclosure contains 0")
        return CertifiedReal(self.sq_lo / other.sq_hi, self.sq_hi / other.sq_lo,
                             self.certified and other.certified)

    def __add__(self, other: CertifiedReal | ScalarLike) -> CertifiedReal:
        if not isinstance(other, CertifiedReal):
            other = CertifiedReal.exact(other)
        cert = self.certified and other.certified
        a, b = self.value, other.value
        if a is not None and b is not None:
            total = (a + b) ** 2
            return CertifiedReal(total, total, cert)
        if self.is_exact and other.is_exact:
            # sqrt(p) + sqrt(q) squared is p + q + 2 sqrt(pq); enclose the cross term.
            p, q = self.sq_lo, other.sq_lo
            clo, chi = sqrt_enclosure(p * q)
            return CertifiedReal(p + q + 2 * clo, p + q + 2 * chi, cert)
        return CertifiedReal((self.lo + other.lo) ** 2, (self.hi + other.hi) ** 2, cert)

    __radd__ = __add__

    # -- certified comparisons ---------------------------------------------
    @staticmethod
    def _coerce(other: CertifiedReal | ScalarLike) -> CertifiedReal | None:
        if isinstance(other, CertifiedReal):
            return other
        c = as_scalar(other)
        if c < 0:
            return None
        return CertifiedReal.exact(c)

    def __le__(self, other: CertifiedReal | ScalarLike) -> bool:
        o = self._coerce(other)
        return False if o is None else self.sq_hi <= o.sq_lo

    def __lt__(self, other: CertifiedReal | ScalarLike) -> bool:
        o = self._coerce(other)
        return False if o is None else self.sq_hi < o.sq_lo

    def __ge__(self, other: CertifiedReal | ScalarLike) -> bool:
        o = self._coerce(other)
        return True if o is None else self.sq_lo >= o.sq_hi

    def __gt__(self, other: CertifiedReal | ScalarLike) -> bool:
        o = self._coerce(other)
        return True if o is None else self.sq_lo > o.sq_hi

    def __eq__(self, other: object) -> bool:
        if isinstance(other, CertifiedReal):
            return self.sq_lo == other.sq_lo and self.sq_hi == other.sq_hi
        if isinstance(other, (int, Fraction)) and not isinstance(other, bool):
            return other >= 0 and self.is_exact and self.sq_lo == Fraction(other) ** 2
        return NotImplemented

    def __hash__(self) -> int:
        return hash((self.sq_lo, self.sq_hi))

    def __repr__(self) -> str:
        if self.is_exact:
            v = self.value
            return f"CertifiedReal({v})" if v is not None else f"CertifiedReal(sqrt({self.sq_lo}))"
        return f"CertifiedReal(~{float(self):.12g}, sq in [{self.sq_lo}, {self.sq_hi}])"

    def to_json(self) -> dict:
        out: dict = {"approx": float(self), "certified": self.certified}
        if self.is_exact:
            v = self.value
            out["squared"] = str(self.sq_lo)
            if v is not None:
                out["exact"] = str(v)
        else:
            out["squared_lo"] = str(self.sq_lo)
            out["squared_hi"] = str(self.sq_hi)
        out["enclosure"] = [str(self.lo), str(self.hi)]
        return out

    @classmethod
    def from_json(cls, data: dict) -> CertifiedReal:
        if "squared" in data:
            return cls.from_square(Fraction(data["squared"]))
        return cls(Fraction(data["squared_lo"]), Fraction(data["squared_hi"]),
                   bool(data.get("certified", True)))


CertifiedReal.ZERO = CertifiedReal(Fraction(0), Fraction(0))


def cmax(values) -> CertifiedReal:
    """Enclosure of the maximum of several certified reals (ZERO if empty)."""
    lo, hi, cert = Fraction(0), Fraction(0), True
    for v in values:
        lo = max(lo, v.sq_lo)
        hi = max(hi, v.sq_hi)
        cert = cert and v.certified
    return CertifiedReal(lo, hi, cert)


def sqrt_sum_le(s: Fraction, p: Fraction, q: Fraction) -> bool:
    """Exact test of ``sqrt(s) <= sqrt(p) + sqrt(q)`` for nonnegative rationals."""
    t = s - p - q
    return t <= 0 or t * t <= 4 * p * q

"""Exact dyadic rational arithmetic and standard dyadic intervals.

Every coordinate, slope and breakpoint in this package lives in Z[1/2].
``Dyadic`` is the number type (arbitrary precision, never rounds) and
``StdInterval`` is the half-open cell [k/2^n, (k+1)/2^n) of the binary
subdivision tree of [0,1).  Two standard intervals are always nested or
disjoint; that nesting law is what makes cell-pair maps composable by
pure integer arithmetic.
"""

from __future__ import annotations

import enum
import re
from fractions import Fraction

__all__ = [
    "Dyadic",
    "StdInterval",
    "Relation",
    "ZERO",
    "ONE",
    "HALF",
    "UNIT",
    "LEFT_HALF",
    "RIGHT_HALF",
]


def _canonical(mantissa: int, exponent: int) -> tuple[int, int]:
    """Reduce so the mantissa is odd (zero is stored as (0, 0))."""
    if mantissa == 0:
        return 0, 0
    tz = (mantissa & -mantissa).bit_length() - 1
    return mantissa >> tz, exponent - tz


class Dyadic:
    """The rational m / 2**e, kept in canonical form (m odd, or m = e = 0).

    The exponent may be negative, so all integers are representable and the
    type is closed under +, -, * and negation.  Values are immutable and
    hashable.
    """

    __slots__ = ("m", "e")

    def __init__(self, mantissa: int = 0, exponent: int = 0):
        m, e = _canonical(mantissa, exponent)
        object.__setattr__(self, "m", m)
        object.__setattr__(self, "e", e)

    def __setattr__(self, name, value):  # pragma: no cover - guard
        raise AttributeError("Dyadic is immutable")

    # -- constructors ------------------------------------------------

    @classmethod
    def from_fraction(cls, q: Fraction | int) -> "Dyadic":
        q = Fraction(q)
        d = q.denominator
        if d & (d - 1):
            raise ValueError(f"{q} is not a dyadic rational")
        return cls(q.numerator, d.bit_length() - 1)

    @classmethod
    def parse(cls, text: str) -> "Dyadic":
        """Parse "p/q" (q a power of two), "p/2^n", or an exact decimal."""
        text = text.strip()
        m = re.fullmatch(r"(-?\d+)\s*/\s*2\^(\d+)", text)
        if m:
            return cls(int(m.group(1)), int(m.group(2)))
        try:
            q = Fraction(text)
        except (ValueError, ZeroDivisionError) as exc:
            raise ValueError(f"cannot parse dyadic {text!r}") from exc
        return cls.from_fraction(q)

    # -- queries -----------------------------------------------------

    def as_fraction(self) -> Fraction:
        if self.e >= 0:
            return Fraction(self.m, 1 << self.e)
        return Fraction(self.m << -self.e)

    def is_zero(self) -> bool:
        return self.m == 0

    def is_integer(self) -> bool:
        return self.e <= 0

    # -- arithmetic --------------------------------------------------

    def __add__(self, other: "Dyadic") -> "Dyadic":
        q = max(self.e, other.e)
        return Dyadic((self.m << (q - self.e)) + (other.m << (q - other.e)), q)

    def __sub__(self, other: "Dyadic") -> "Dyadic":
        q = max(self.e, other.e)
        return Dyadic((self.m << (q - self.e)) - (other.m << (q - other.e)), q)

    def __mul__(self, other):
        if isinstance(other, int):
            return Dyadic(self.m * other, self.e)
        return Dyadic(self.m * other.m, self.e + other.e)

    __rmul__ = __mul__

    def __neg__(self) -> "Dyadic":
        return Dyadic(-self.m, self.e)

    def scaled(self, k: int) -> "Dyadic":
        """self * 2**k."""
        return Dyadic(self.m, self.e - k)

    # -- order -------------------------------------------------------

    def _cmp(self, other: "Dyadic") -> int:
        q = max(self.e, other.e)
        a = self.m << (q - self.e)
        b = other.m << (q - other.e)
        return (a > b) - (a < b)

    def __eq__(self, other):
        return isinstance(other, Dyadic) and self.m == other.m and self.e == other.e

    def __lt__(self, other):
        return self._cmp(other) < 0

    def __le__(self, other):
        return self._cmp(other) <= 0

    def __gt__(self, other):
        return self._cmp(other) > 0

    def __ge__(self, other):
        return self._cmp(other) >= 0

    def __hash__(self):
        return hash((self.m, self.e))

    # -- formatting --------------------------------------------------

    def __str__(self):
        if self.e <= 0:
            return str(self.m << -self.e)
        return f"{self.m}/{1 << self.e}"

    def __repr__(self):
        return f"Dyadic({self.m}, {self.e})"


def compare(a: Dyadic, b: Dyadic) -> int:
    """Three-way comparison: -1, 0 or 1."""
    return a._cmp(b)


class Relation(enum.Enum):
    """How two standard intervals sit relative to each other."""

    DISJOINT = "disjoint"
    EQUAL = "equal"
    INSIDE = "inside"  # self is properly contained in the other
    CONTAINS = "contains"  # self properly contains the other


class StdInterval:
    """The standard dyadic interval [k/2^n, (k+1)/2^n), 0 <= k < 2^n."""

    __slots__ = ("k", "n")

    def __init__(self, k: int, n: int):
        if n < 0 or not 0 <= k < (1 << n):
            raise ValueError(f"invalid standard interval ({k}, {n})")
        object.__setattr__(self, "k", k)
        object.__setattr__(self, "n", n)

    def __setattr__(self, name, value):  # pragma: no cover - guard
        raise AttributeError("StdInterval is immutable")

    @property
    def left(self) -> Dyadic:
        return Dyadic(self.k, self.n)

    @property
    def right(self) -> Dyadic:
        return Dyadic(self.k + 1, self.n)

    @property
    def length(self) -> Dyadic:
        return Dyadic(1, self.n)

    def children(self) -> tuple["StdInterval", "StdInterval"]:
        return StdInterval(2 * self.k, self.n + 1), StdInterval(2 * self.k + 1, self.n + 1)

    def parent(self) -> "StdInterval":
        if self.n == 0:
            raise ValueError("the unit interval has no parent")
        return StdInterval(self.k >> 1, self.n - 1)

    def relate(self, other: "StdInterval") -> Relation:
        if self.n == other.n:
            return Relation.EQUAL if self.k == other.k else Relation.DISJOINT
        if self.n < other.n:
            # self is the coarser interval
            if (other.k >> (other.n - self.n)) == self.k:
                return Relation.CONTAINS
            return Relation.DISJOINT
        if (self.k >> (self.n - other.n)) == other.k:
            return Relation.INSIDE
        return Relation.DISJOINT

    def contains(self, other: "StdInterval") -> bool:
        return self.relate(other) in (Relation.EQUAL, Relation.CONTAINS)

    def contains_point(self, x: Dyadic, strict: bool = False) -> bool:
        """Membership of x; strict tests the open interior."""
        lo = self.left
        hi = self.right
        if strict:
            return lo < x < hi
        return lo <= x < hi

    def __eq__(self, other):
        return isinstance(other, StdInterval) and self.k == other.k and self.n == other.n

    def __hash__(self):
        return hash((self.k, self.n))

    def __str__(self):
        return f"[{self.left}, {self.right})"

    def __repr__(self):
        return f"StdInterval({self.k}, {self.n})"

    def serialize(self) -> str:
        return f"{self.k}/2^{self.n}"

    @classmethod
    def parse(cls, text: str) -> "StdInterval":
        m = re.fullmatch(r"\s*(\d+)\s*/\s*2\^(\d+)\s*", text)
        if not m:
            raise ValueError(f"cannot parse interval {text!r}")
        return cls(int(m.group(1)), int(m.group(2)))


def interval_of_point(x: Dyadic, level: int) -> StdInterval:
    """The level-n standard interval containing x in [0,1)."""
    if x.e > 0:
        k = x.m << (level - x.e) if level >= x.e else x.m >> (x.e - level)
    else:
        k = (x.m << -x.e) << level
    return StdInterval(k, level)


ZERO = Dyadic(0, 0)
ONE = Dyadic(1, 0)
HALF = Dyadic(1, 1)
UNIT = StdInterval(0, 0)
LEFT_HALF = StdInterval(0, 1)
RIGHT_HALF = StdInterval(1, 1)

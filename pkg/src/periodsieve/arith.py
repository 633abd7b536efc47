"""Exact arithmetic over Q and quadratic fields Q(sqrt(D)).

Rationals are plain :class:`fractions.Fraction` values.  An element of a
quadratic field K is stored as ``x + y*w`` where ``w = (a + sqrt(D))/2`` is the
standard integral generator, so ``1, w`` is a Z-basis of the ring of integers.
"""
from __future__ import annotations

import math
import re
from dataclasses import dataclass
from fractions import Fraction
from typing import Optional, Union

Rational = Fraction


def normalize_rational(n: int, d: int) -> Fraction:
    if d == 0:
        raise ZeroDivisionError("zero denominator")
    return Fraction(n, d)


def height(c: Fraction) -> float:
    """Logarithmic height log(max(|p|, q))."""
    c = Fraction(c)
    return math.log(max(abs(c.numerator), c.denominator))


def big_height(c: Fraction) -> int:
    """Non-logarithmic height H(c) = max(|p|, q), as an exact integer."""
    c = Fraction(c)
    return max(abs(c.numerator), c.denominator)


def _is_squarefree(m: int) -> bool:
    m = abs(m)
    if m == 0:
        return False
    d = 2
    while d * d <= m:
        if m % (d * d) == 0:
            return False
        if m % d == 0:
            m //= d
        d += 1
    return True


def is_fundamental_discriminant(D: int) -> bool:
    if D in (0, 1):
        return False
    if D % 4 == 1:
        return _is_squarefree(D)
    if D % 4 == 0:
        m = D // 4
        return m % 4 in (2, 3) and _is_squarefree(m)
    return False


def fundamental_discriminants(lo: int, hi: int) -> list[int]:
    return [D for D in range(lo, hi + 1) if is_fundamental_discriminant(D)]


@dataclass(frozen=True)
class QuadField:
    """K = Q(sqrt(D)) with generator w satisfying w^2 = a*w - n."""

    D: int
    a: int
    n: int

    @property
    def is_real(self) -> bool:
        return self.D > 0

    def embeddings_of_w(self) -> list[complex]:
        """Images of w in C: two reals for D > 0, one complex value otherwise."""
        if self.D > 0:
            s = math.sqrt(self.D)
            return [(self.a + s) / 2, (self.a - s) / 2]
        return [complex(self.a / 2, math.sqrt(-self.D) / 2)]

    def __str__(self) -> str:
        return f"Q(sqrt({self.D}))"


def make_field(D: int) -> QuadField:
    if not is_fundamental_discriminant(D):
        raise ValueError(f"{D} is not a fundamental discriminant")
    a = D % 4  # 1 or 0
    return QuadField(D, a, (a * a - D) // 4)


@dataclass(frozen=True)
class QuadRational:
    x: Fraction
    y: Fraction
    field: QuadField

    def __post_init__(self) -> None:
        object.__setattr__(self, "x", Fraction(self.x))
        object.__setattr__(self, "y", Fraction(self.y))

    def _coerce(self, other) -> "QuadRational":
        if isinstance(other, QuadRational):
            if other.field != self.field:
                raise ValueError("elements of different fields")
            return other
        if isinstance(other, (int, Fraction)):
            return QuadRational(Fraction(other), Fraction(0), self.field)
        return NotImplemented

    def __add__(self, other):
        o = self._coerce(other)
        if o is NotImplemented:
            return o
        return QuadRational(self.x + o.x, self.y + o.y, self.field)

    __radd__ = __add__

    def __neg__(self) -> "QuadRational":
        return QuadRational(-self.x, -self.y, self.field)

    def __sub__(self, other):
        o = self._coerce(other)
        if o is NotImplemented:
            return o
        return QuadRational(self.x - o.x, self.y - o.y, self.field)

    def __rsub__(self, other):
        return -self + other

    def __mul__(self, other):
        o = self._coerce(other)
        if o is NotImplemented:
            return o
        K = self.field
        # w^2 = a*w - n
        yy = self.y * o.y
        x = self.x * o.x - K.n * yy
        y = self.x * o.y + self.y * o.x + K.a * yy
        return QuadRational(x, y, K)

    __rmul__ = __mul__

    def conjugate(self) -> "QuadRational":
        # conj(w) = a - w
        return QuadRational(self.x + self.y * self.field.a, -self.y, self.field)

    def norm(self) -> Fraction:
        return (self * self.conjugate()).x

    def trace(self) -> Fraction:
        return 2 * self.x + self.field.a * self.y

    def inverse(self) -> "QuadRational":
        N = self.norm()
        if N == 0:
            raise ZeroDivisionError("inverse of zero")
        cj = self.conjugate()
        return QuadRational(cj.x / N, cj.y / N, self.field)

    def __truediv__(self, other):
        o = self._coerce(other)
        if o is NotImplemented:
            return o
        return self * o.inverse()

    def __rtruediv__(self, other):
        return self._coerce(other) * self.inverse()

    def __pow__(self, k: int) -> "QuadRational":
        if k < 0:
            return self.inverse() ** (-k)
        result = QuadRational(Fraction(1), Fraction(0), self.field)
        base = self
        while k:
            if k & 1:
                result = result * base
            base = base * base
            k >>= 1
        return result

    def __eq__(self, other) -> bool:
        if isinstance(other, QuadRational):
            return (self.x, self.y, self.field) == (other.x, other.y, other.field)
        if isinstance(other, (int, Fraction)):
            return self.y == 0 and self.x == other
        return NotImplemented

    def __hash__(self) -> int:
        return hash((self.x, self.y, self.field.D))

    def __bool__(self) -> bool:
        return bool(self.x) or bool(self.y)

    def embeddings(self) -> list[complex]:
        return [float(self.x) + float(self.y) * w for w in self.field.embeddings_of_w()]

    def __str__(self) -> str:
        return format_element(self)

    def __repr__(self) -> str:
        return f"QuadRational({self.x}, {self.y}, D={self.field.D})"


Element = Union[Fraction, QuadRational]


def quad_arith(u: QuadRational, v: Optional[QuadRational], op: str) -> QuadRational:
    if op == "add":
        return u + v
    if op == "sub":
        return u - v
    if op == "mul":
        return u * v
    if op == "div":
        return u / v
    if op == "conjugate":
        return u.conjugate()
    if op == "negate":
        return -u
    raise ValueError(f"unknown op {op!r}")


def height_quad(c: Element) -> float:
    if isinstance(c, QuadRational):
        return max(height(c.x), height(c.y))
    return height(c)


def big_height_quad(c: Element) -> int:
    if isinstance(c, QuadRational):
        return max(big_height(c.x), big_height(c.y))
    return big_height(c)


def rational_sqrt(u: Fraction) -> Optional[Fraction]:
    if u < 0:
        return None
    p, q = u.numerator, u.denominator
    rp, rq = math.isqrt(p), math.isqrt(q)
    if rp * rp == p and rq * rq == q:
        return Fraction(rp, rq)
    return None


def is_square_in_K(u: Element, field: Optional[QuadField] = None) -> Optional[Element]:
    """Return some w in K with w*w == u, or None.

    ``field`` lifts a rational ``u`` into K; without it a rational is treated
    as an element of Q.
    """
    if not isinstance(u, QuadRational):
        if field is None:
            return rational_sqrt(Fraction(u))
        u = QuadRational(Fraction(u), Fraction(0), field)
    K = u.field
    # Work in the basis 1, sqrt(D): u = A + B*sqrt(D), w = s + t*sqrt(D).
    A = u.x + u.y * Fraction(K.a, 2)
    B = u.y / 2
    candidates: list[tuple[Fraction, Fraction]] = []
    if B == 0:
        s = rational_sqrt(A)
        if s is not None:
            candidates.append((s, Fraction(0)))
        t = rational_sqrt(A / K.D)
        if t is not None:
            candidates.append((Fraction(0), t))
    else:
        m = rational_sqrt(A * A - K.D * B * B)
        if m is not None:
            for s2 in ((A + m) / 2, (A - m) / 2):
                s = rational_sqrt(s2)
                if s:
                    candidates.append((s, B / (2 * s)))
    for s, t in candidates:
        # s + t*sqrt(D) = s + t*(2w - a)
        w = QuadRational(s - t * K.a, 2 * t, K)
        if w * w == u:
            return w
    return None


def lift(c: Element, field: Optional[QuadField]) -> Element:
    if field is None or isinstance(c, QuadRational):
        return c
    return QuadRational(Fraction(c), Fraction(0), field)


def format_rational(r: Fraction) -> str:
    r = Fraction(r)
    return f"{r.numerator}/{r.denominator}"


def format_element(c: Element) -> str:
    if isinstance(c, QuadRational):
        return f"{format_rational(c.x)}{'+' if c.y >= 0 else ''}{format_rational(c.y)}*w"
    return format_rational(c)


_ELEM_RE = re.compile(r"^\s*(-?\d+)/(\d+)\s*(?:([+-]\d+)/(\d+)\*w)?\s*$")


def parse_element(text: str, field: Optional[QuadField] = None) -> Element:
    """Inverse of :func:`format_element`.  Also accepts bare integers."""
    text = text.strip()
    if re.fullmatch(r"-?\d+", text):
        return lift(Fraction(int(text)), field)
    m = _ELEM_RE.match(text)
    if not m:
        raise ValueError(f"cannot parse {text!r}")
    x = normalize_rational(int(m.group(1)), int(m.group(2)))
    if m.group(3) is None:
        return lift(x, field)
    if field is None:
        raise ValueError("quadratic element needs a field")
    y = normalize_rational(int(m.group(3)), int(m.group(4)))
    return QuadRational(x, y, field)

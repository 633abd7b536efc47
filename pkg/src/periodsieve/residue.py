"""Primes of O_K, residue fields and reduction of field elements to P^1(k)."""
from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction
from functools import lru_cache
from typing import Optional, Union

from .arith import Element, QuadField, QuadRational

MAX_PRIME = 1 << 16

SPLIT = "split"
INERT = "inert"
RAMIFIED = "ramified"
RATIONAL = "rational"  # a prime of Z, used when the base field is Q


@lru_cache(maxsize=None)
def primes_up_to(n: int) -> tuple[int, ...]:
    if n < 2:
        return ()
    sieve = bytearray([1]) * (n + 1)
    sieve[0] = sieve[1] = 0
    for i in range(2, int(n**0.5) + 1):
        if sieve[i]:
            sieve[i * i :: i] = bytearray(len(range(i * i, n + 1, i)))
    return tuple(i for i, v in enumerate(sieve) if v)


def first_primes(count: int) -> list[int]:
    bound = 32
    while True:
        ps = primes_up_to(bound)
        if len(ps) >= count:
            return list(ps[:count])
        bound *= 2


def is_prime(n: int) -> bool:
    if n < 2:
        return False
    i = 2
    while i * i <= n:
        if n % i == 0:
            return False
        i += 1
    return True


def kronecker(D: int, p: int) -> int:
    """Kronecker symbol (D|p) for a prime p."""
    if D % p == 0:
        return 0
    if p == 2:
        return 1 if D % 8 in (1, 7) else -1
    return 1 if pow(D % p, (p - 1) // 2, p) == 1 else -1


@dataclass(frozen=True)
class PrimeDesc:
    p: int
    kind: str
    f: int = 1
    e: int = 1
    index: int = 0
    t: Optional[int] = None  # image of w in F_p for split/ramified primes
    a: int = 0
    n: int = 0

    @property
    def q(self) -> int:
        return self.p**self.f

    def __str__(self) -> str:
        if self.kind == RATIONAL:
            return f"({self.p})"
        if self.t is None:
            return f"({self.p})"
        return f"({self.p}, w-{self.t})"


def splitting_type(field: QuadField, p: int) -> str:
    k = kronecker(field.D, p)
    return {1: SPLIT, -1: INERT, 0: RAMIFIED}[k]


def _roots_mod_p(field: QuadField, p: int) -> list[int]:
    return [t for t in range(p) if (t * t - field.a * t + field.n) % p == 0]


@lru_cache(maxsize=None)
def primes_above(field: Optional[QuadField], p: int) -> tuple[PrimeDesc, ...]:
    if p >= MAX_PRIME:
        raise ValueError(f"prime {p} exceeds the residue field cap")
    if field is None:
        return (PrimeDesc(p, RATIONAL),)
    kind = splitting_type(field, p)
    a, n = field.a, field.n
    if kind == INERT:
        return (PrimeDesc(p, INERT, f=2, a=a, n=n),)
    roots = _roots_mod_p(field, p)
    if kind == RAMIFIED:
        (t,) = roots
        return (PrimeDesc(p, RAMIFIED, e=2, t=t, a=a, n=n),)
    t0, t1 = roots
    return (
        PrimeDesc(p, SPLIT, index=0, t=t0, a=a, n=n),
        PrimeDesc(p, SPLIT, index=1, t=t1, a=a, n=n),
    )


def primes_above_first(field: Optional[QuadField], count: int) -> list[PrimeDesc]:
    """All primes of O_K above the first ``count`` rational primes."""
    out: list[PrimeDesc] = []
    for p in first_primes(count):
        out.extend(primes_above(field, p))
    return out


def iter_primes_from(field: Optional[QuadField], start: int):
    """Primes of O_K above rational primes >= start, ascending."""
    bound = max(64, 2 * start)
    lo = start
    while True:
        for p in primes_up_to(bound):
            if p >= lo:
                yield from primes_above(field, p)
        lo = bound + 1
        bound *= 2


# -- residue field elements ------------------------------------------------


@dataclass(frozen=True)
class ResidueElem:
    prime: PrimeDesc
    u0: int
    u1: int = 0

    def __post_init__(self) -> None:
        p = self.prime.p
        object.__setattr__(self, "u0", self.u0 % p)
        object.__setattr__(self, "u1", self.u1 % p if self.prime.f == 2 else 0)

    def _other(self, o) -> "ResidueElem":
        if isinstance(o, int):
            return ResidueElem(self.prime, o)
        if o.prime != self.prime:
            raise ValueError("elements of different residue fields")
        return o

    def __add__(self, o):
        o = self._other(o)
        return ResidueElem(self.prime, self.u0 + o.u0, self.u1 + o.u1)

    __radd__ = __add__

    def __sub__(self, o):
        o = self._other(o)
        return ResidueElem(self.prime, self.u0 - o.u0, self.u1 - o.u1)

    def __neg__(self):
        return ResidueElem(self.prime, -self.u0, -self.u1)

    def __mul__(self, o):
        o = self._other(o)
        P = self.prime
        if P.f == 1:
            return ResidueElem(P, self.u0 * o.u0)
        yy = self.u1 * o.u1
        return ResidueElem(
            P, self.u0 * o.u0 - P.n * yy, self.u0 * o.u1 + self.u1 * o.u0 + P.a * yy
        )

    __rmul__ = __mul__

    def inverse(self) -> "ResidueElem":
        P = self.prime
        if not self:
            raise ZeroDivisionError("inverse of zero")
        if P.f == 1:
            return ResidueElem(P, pow(self.u0, -1, P.p))
        # conjugate of u0 + u1*w is (u0 + a*u1) - u1*w
        c0, c1 = self.u0 + P.a * self.u1, -self.u1
        norm = (self.u0 * c0 - P.n * self.u1 * c1) % P.p
        inv = pow(norm, -1, P.p)
        return ResidueElem(P, c0 * inv, c1 * inv)

    def __truediv__(self, o):
        return self * self._other(o).inverse()

    def __pow__(self, k: int) -> "ResidueElem":
        if k < 0:
            return self.inverse() ** (-k)
        out = ResidueElem(self.prime, 1)
        base = self
        while k:
            if k & 1:
                out = out * base
            base = base * base
            k >>= 1
        return out

    def __bool__(self) -> bool:
        return bool(self.u0 or self.u1)

    def __eq__(self, o) -> bool:
        if isinstance(o, int):
            return self == ResidueElem(self.prime, o)
        if isinstance(o, ResidueElem):
            return (self.prime, self.u0, self.u1) == (o.prime, o.u0, o.u1)
        return NotImplemented

    def __hash__(self) -> int:
        return hash((self.prime, self.u0, self.u1))

    def __repr__(self) -> str:
        if self.prime.f == 1:
            return f"{self.u0} mod {self.prime}"
        return f"{self.u0}+{self.u1}w mod {self.prime}"


class _Infinity:
    _inst = None

    def __new__(cls):
        if cls._inst is None:
            cls._inst = super().__new__(cls)
        return cls._inst

    def __repr__(self) -> str:
        return "Infinity"

    def __reduce__(self):
        return (_Infinity, ())


INFINITY = _Infinity()
ProjPoint = Union[ResidueElem, _Infinity]


def residue_arith(u: ResidueElem, v: Optional[ResidueElem], op: str) -> ResidueElem:
    ops = {
        "add": lambda: u + v,
        "sub": lambda: u - v,
        "mul": lambda: u * v,
        "div": lambda: u / v,
        "neg": lambda: -u,
        "inverse": lambda: u.inverse(),
    }
    if op not in ops:
        raise ValueError(f"unknown op {op!r}")
    return ops[op]()


def elem_index(u: ResidueElem) -> int:
    return u.u0 + u.u1 * u.prime.p


def elem_from_index(P: PrimeDesc, i: int) -> ResidueElem:
    if not 0 <= i < P.q:
        raise ValueError("index out of range")
    return ResidueElem(P, i % P.p, i // P.p)


def proj_index(P: PrimeDesc, x: ProjPoint) -> int:
    """Index in [0, q]; q encodes the point at infinity."""
    return P.q if x is INFINITY else elem_index(x)


def proj_from_index(P: PrimeDesc, i: int) -> ProjPoint:
    return INFINITY if i == P.q else elem_from_index(P, i)


# -- reduction ---------------------------------------------------------------


def vp_int(m: int, p: int) -> int:
    if m == 0:
        raise ValueError("valuation of zero")
    k = 0
    while m % p == 0:
        m //= p
        k += 1
    return k


@lru_cache(maxsize=None)
def hensel_root(P: PrimeDesc, k: int) -> int:
    """Lift the root t of T^2 - aT + n from mod p to mod p^k (split primes)."""
    mod = P.p**k
    t = P.t
    for _ in range(k.bit_length() + 1):
        f = (t * t - P.a * t + P.n) % mod
        df = (2 * t - P.a) % mod
        t = (t - f * pow(df, -1, mod)) % mod
    return t


def _common_form(c: QuadRational) -> tuple[int, int, int]:
    """Write c = (U + V*w)/L with L = lcm of coordinate denominators."""
    bx, by = c.x.denominator, c.y.denominator
    L = bx * by // _gcd(bx, by)
    return c.x.numerator * (L // bx), c.y.numerator * (L // by), L


def _gcd(a: int, b: int) -> int:
    while b:
        a, b = b, a % b
    return abs(a)


def _vp_integral(U: int, V: int, P: PrimeDesc) -> float:
    """v_P(U + V*w) for integers U, V."""
    if U == 0 and V == 0:
        return float("inf")
    p = P.p
    g = min(vp_int(U, p) if U else 10**9, vp_int(V, p) if V else 10**9)
    U //= p**g
    V //= p**g
    base = P.e * g
    if P.kind == INERT:
        return base
    norm = U * U + P.a * U * V + P.n * V * V
    if P.kind == RAMIFIED:
        return base + (vp_int(norm, p) if norm % p == 0 else 0)
    if (U + V * P.t) % p:
        return base
    return base + vp_int(norm, p)


def valuation(c: Element, P: PrimeDesc) -> float:
    """The P-adic valuation of c (v surjective onto Z); inf for zero."""
    if not isinstance(c, QuadRational) or P.kind == RATIONAL:
        c = Fraction(c) if not isinstance(c, QuadRational) else c.x
        if c == 0:
            return float("inf")
        return P.e * (vp_int(c.numerator, P.p) - vp_int(c.denominator, P.p))
    U, V, L = _common_form(c)
    return _vp_integral(U, V, P) - P.e * vp_int(L, P.p)


def reduce_c(c: Element, P: PrimeDesc) -> ProjPoint:
    """Image of c in P^1(O_K/P)."""
    p = P.p
    if not isinstance(c, QuadRational):
        c = Fraction(c)
        if c.denominator % p == 0:
            return INFINITY
        return ResidueElem(P, c.numerator * pow(c.denominator, -1, p))
    x, y = c.x, c.y
    if P.kind != SPLIT:
        if x.denominator % p == 0 or y.denominator % p == 0:
            return INFINITY
        xr = x.numerator * pow(x.denominator, -1, p)
        yr = y.numerator * pow(y.denominator, -1, p)
        if P.kind == INERT:
            return ResidueElem(P, xr, yr)
        return ResidueElem(P, xr + yr * P.t)
    U, V, L = _common_form(c)
    k = vp_int(L, p)
    mod = p ** (k + 1)
    w = (U + V * hensel_root(P, k + 1)) % mod
    if w % p**k:
        return INFINITY
    Lp = L // p**k
    return ResidueElem(P, (w // p**k) * pow(Lp, -1, p))

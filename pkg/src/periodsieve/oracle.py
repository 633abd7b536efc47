"""Exact periodic and preperiodic points of z^2 + c over Q or a quadratic field.

Every periodic point alpha satisfies two constraints:

* at each finite place, v(alpha) = v(c)/2 when v(c) < 0 and v(alpha) >= 0
  otherwise, so ``L*alpha`` is integral for an integer L read off the
  denominators of c;
* in every archimedean embedding |alpha| <= (1 + sqrt(1 + 4|c|))/2.

The points meeting both form a finite set closed under the periodic part of
the dynamics.  We build the map z -> z^2 + c on that set (points leaving it
cannot be periodic) and read off its cycles, which gives every periodic point
of every period exactly.
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from fractions import Fraction
from typing import Optional

import numpy as np

from .arith import (
    Element,
    QuadField,
    QuadRational,
    format_element,
    is_square_in_K,
    lift,
)
from .periods import cycles_of
from .residue import vp_int

DEFAULT_CAP = 10**7
_SLACK = 1e-9


class OracleCapExceeded(RuntimeError):
    """Candidate set larger than the configured cap; no answer is given."""


@dataclass
class OrbitCertificate:
    c: Element
    field: Optional[QuadField]
    cycles: list[list[Element]]
    preperiodic: Optional[list[tuple[Element, int]]] = None
    candidates: int = 0

    @property
    def points(self) -> list[tuple[Element, int]]:
        return [(z, len(cyc)) for cyc in self.cycles for z in cyc]

    @property
    def periods(self) -> set[int]:
        return {len(cyc) for cyc in self.cycles}

    def to_json(self) -> dict:
        out = {
            "c": format_element(self.c),
            "field": self.field.D if self.field else 0,
            "periods": sorted(self.periods),
            "cycles": [[format_element(z) for z in cyc] for cyc in self.cycles],
            "candidates": self.candidates,
        }
        if self.preperiodic is not None:
            out["preperiodic"] = [[format_element(z), tail] for z, tail in self.preperiodic]
            out["preperiodic_affine"] = len(self.preperiodic)
            out["preperiodic_with_infinity"] = len(self.preperiodic) + 1
        return out


def _field_of(c: Element, field_: Optional[QuadField]) -> Optional[QuadField]:
    if isinstance(c, QuadRational):
        if field_ is not None and field_ != c.field:
            raise ValueError("field mismatch")
        return c.field
    return field_


def _coords(c: Element) -> tuple[Fraction, Fraction]:
    if isinstance(c, QuadRational):
        return c.x, c.y
    return Fraction(c), Fraction(0)


def embedding_bounds(c: Element, field_: Optional[QuadField] = None) -> list[float]:
    """Escape radius in each archimedean embedding (one for Q or imaginary K)."""
    K = _field_of(c, field_)
    x, y = _coords(c)
    if K is None:
        absc = [abs(float(x))]
    else:
        absc = [abs(float(x) + float(y) * w) for w in K.embeddings_of_w()]
    return [(1 + math.sqrt(1 + 4 * a)) / 2 for a in absc]


def northcott_bound(c: Element, field_: Optional[QuadField] = None) -> float:
    return max(embedding_bounds(c, field_))


def denominator_scale(c: Element) -> int:
    """Integer L with L*alpha integral for every periodic alpha."""
    x, y = _coords(c)
    b, d = x.denominator, y.denominator
    lcm = b * d // math.gcd(b, d)
    L = 1
    for p in _prime_factors(lcm):
        k = vp_int(lcm, p)
        L *= p ** ((k + 1) // 2)
    return L


def _prime_factors(n: int) -> list[int]:
    out, d = [], 2
    while d * d <= n:
        if n % d == 0:
            out.append(d)
            while n % d == 0:
                n //= d
        d += 1
    if n > 1:
        out.append(n)
    return out


def _candidates(K: Optional[QuadField], L: int, bounds: list[float], cap: int):
    """Integer pairs (u, v) with (u + v*w)/L inside the archimedean bounds."""
    if K is None:
        r = math.floor(L * bounds[0] * (1 + _SLACK) + _SLACK)
        if 2 * r + 1 > cap:
            raise OracleCapExceeded(f"{2 * r + 1} candidates exceed cap {cap}")
        u = np.arange(-r, r + 1, dtype=np.int64)
        return u, np.zeros_like(u)
    if K.is_real:
        w1, w2 = K.embeddings_of_w()
        R1 = L * bounds[0] * (1 + _SLACK) + _SLACK
        R2 = L * bounds[1] * (1 + _SLACK) + _SLACK
        # |u + v*w1| <= R1 and |u + v*w2| <= R2 give |v|*sqrt(D) <= R1 + R2
        vmax = math.floor((R1 + R2) / math.sqrt(K.D))
        vs = np.arange(-vmax, vmax + 1, dtype=np.int64)
        lo = np.maximum(np.ceil(-R1 - vs * w1), np.ceil(-R2 - vs * w2)).astype(np.int64)
        hi = np.minimum(np.floor(R1 - vs * w1), np.floor(R2 - vs * w2)).astype(np.int64)
    else:
        (w,) = K.embeddings_of_w()
        R = L * bounds[0] * (1 + _SLACK) + _SLACK
        vmax = math.floor(R / w.imag)
        vs = np.arange(-vmax, vmax + 1, dtype=np.int64)
        im = vs * w.imag
        half = np.sqrt(np.maximum(R * R - im * im, 0.0))
        lo = np.ceil(-vs * w.real - half).astype(np.int64)
        hi = np.floor(-vs * w.real + half).astype(np.int64)
    counts = np.maximum(hi - lo + 1, 0)
    total = int(counts.sum())
    if total > cap:
        raise OracleCapExceeded(f"{total} candidates exceed cap {cap}")
    v = np.repeat(vs, counts)
    starts = np.repeat(lo - np.concatenate(([0], np.cumsum(counts)[:-1])), counts)
    u = starts + np.arange(total, dtype=np.int64)
    return u, v


def _periodic_cycles(c: Element, K: Optional[QuadField], cap: int):
    x, y = _coords(c)
    L = denominator_scale(c)
    bounds = embedding_bounds(c, K)
    u, v = _candidates(K, L, bounds, cap)
    a, n = (K.a, K.n) if K else (0, 0)
    X, Y = x * L * L, y * L * L
    assert X.denominator == 1 and Y.denominator == 1
    X, Y = X.numerator, Y.numerator
    big = max(int(np.abs(u).max(initial=0)), int(np.abs(v).max(initial=0)), 1)
    if big**2 * (abs(n) + abs(a) + 3) + abs(X) + abs(Y) >= 2**62:
        raise OracleCapExceeded("candidate coordinates exceed 64-bit range")
    nu = u * u - n * v * v + X
    nv = 2 * u * v + a * v * v + Y
    ok = (nu % L == 0) & (nv % L == 0)
    nu //= L
    nv //= L

    # candidates come out sorted v-major, u ascending, so keys are sorted
    umin = int(u.min(initial=0))
    width = int(u.max(initial=0)) - umin + 1
    vmin = int(v.min(initial=0))
    keys = (v - vmin) * width + (u - umin)
    nu_i = np.where(ok, nu, 0)
    nv_i = np.where(ok, nv, 0)
    inside = ok & (nu_i >= umin) & (nu_i < umin + width) & (nv_i >= vmin)
    tkeys = (nv_i - vmin) * width + (nu_i - umin)
    pos = np.searchsorted(keys, tkeys)
    pos = np.minimum(pos, len(keys) - 1)
    inside &= keys[pos] == tkeys
    succ = np.where(inside, pos, -1)

    live = np.flatnonzero(succ >= 0)
    while True:
        img = np.unique(succ[live])
        img = img[succ[img] >= 0]
        if len(img) == len(live):
            break
        live = img
    local = {int(i): k for k, i in enumerate(live)}
    sub = [local[int(succ[i])] for i in live]
    cycles = []
    for cyc in cycles_of(sub):
        pts = []
        for k in cyc:
            i = int(live[k])
            pts.append(_make(Fraction(int(u[i]), L), Fraction(int(v[i]), L), K))
        cycles.append(pts)
    return cycles, len(u)


def _make(x: Fraction, y: Fraction, K: Optional[QuadField]) -> Element:
    if K is None:
        return x
    return QuadRational(x, y, K)


def _canonical_cycle(cyc: list[Element]) -> list[Element]:
    """Rotate so the cycle starts at its smallest point (by coordinates)."""
    key = [(tuple(_coords(z)[::-1]) if isinstance(z, QuadRational) else (z,)) for z in cyc]
    k = min(range(len(cyc)), key=lambda i: key[i])
    return cyc[k:] + cyc[:k]


def _sort_key(z: Element):
    x, y = _coords(z)
    return (y, x)


def find_periodic_points(
    c: Element,
    max_period: Optional[int] = None,
    field: Optional[QuadField] = None,
    cap: int = DEFAULT_CAP,
) -> OrbitCertificate:
    """All K-rational affine periodic points of z^2 + c, with exact periods.

    Cycles of every length are found; ``max_period`` only validates the call
    signature of callers that budget iterations and is otherwise unused.
    """
    if max_period is not None and max_period < 1:
        raise ValueError("max_period must be >= 1")
    K = _field_of(c, field)
    c = lift(c, K)
    cycles, ncand = _periodic_cycles(c, K, cap)
    cycles = [_canonical_cycle(cyc) for cyc in cycles]
    cycles.sort(key=lambda cyc: (len(cyc), _sort_key(cyc[0])))
    cert = OrbitCertificate(c, K, cycles, candidates=ncand)
    verify_certificate(cert)
    return cert


def phi(c: Element, z: Element) -> Element:
    return z * z + c


def verify_certificate(cert: OrbitCertificate) -> None:
    """Re-check every cycle by exact iteration; raises AssertionError."""
    for cyc in cert.cycles:
        n = len(cyc)
        for i, z in enumerate(cyc):
            if phi(cert.c, z) != cyc[(i + 1) % n]:
                raise AssertionError(f"{format_element(z)} does not map to its successor")
            w = z
            for m in range(1, n + 1):
                w = phi(cert.c, w)
                if w == z and m < n:
                    raise AssertionError(f"{format_element(z)} has period {m} < {n}")
            if w != z:
                raise AssertionError(f"{format_element(z)} does not return after {n} steps")


def _violates_denominators(z: Element, L: int) -> bool:
    x, y = _coords(z)
    return (x * L).denominator != 1 or (y * L).denominator != 1


def _escapes(z: Element, K: Optional[QuadField], bounds: list[float]) -> bool:
    x, y = _coords(z)
    if K is None:
        vals = [abs(float(x))]
    else:
        vals = [abs(float(x) + float(y) * w) for w in K.embeddings_of_w()]
    return any(v > R * (1 + _SLACK) + _SLACK for v, R in zip(vals, bounds))


def exact_period(c: Element, alpha: Element, field: Optional[QuadField] = None) -> Optional[int]:
    """Exact period of alpha, or None if alpha is not periodic."""
    K = _field_of(c, field) or (alpha.field if isinstance(alpha, QuadRational) else None)
    c, alpha = lift(c, K), lift(alpha, K)
    L = denominator_scale(c)
    bounds = embedding_bounds(c, K)
    seen = set()
    z = alpha
    n = 0
    while True:
        if _violates_denominators(z, L) or _escapes(z, K, bounds):
            return None
        if n and z == alpha:
            return n
        if z in seen:
            return None
        seen.add(z)
        z = phi(c, z)
        n += 1


def preperiodic_closure(
    c: Element, field: Optional[QuadField] = None, cap: int = DEFAULT_CAP
) -> OrbitCertificate:
    """Periodic points plus all their iterated K-rational preimages.

    Each point carries its tail length (0 for periodic points).  The point at
    infinity is not listed.
    """
    cert = find_periodic_points(c, field=field, cap=cap)
    K, c = cert.field, cert.c
    tails: dict[Element, int] = {z: 0 for z, _ in cert.points}
    frontier = list(tails)
    while frontier:
        nxt = []
        for y in frontier:
            r = is_square_in_K(y - c, K)
            if r is None:
                continue
            for z in (r, -r):
                if z not in tails:
                    tails[z] = tails[y] + 1
                    nxt.append(z)
        frontier = nxt
    cert.preperiodic = sorted(tails.items(), key=lambda zt: (zt[1], _sort_key(zt[0])))
    return cert


__all__ = [
    "OracleCapExceeded",
    "OrbitCertificate",
    "denominator_scale",
    "embedding_bounds",
    "exact_period",
    "find_periodic_points",
    "northcott_bound",
    "preperiodic_closure",
    "verify_certificate",
]

"""Cycle structure of z -> z^2 + c over residue fields and possible periods.

For a periodic point P of z^2 + c with good reduction at a prime, let m be the
exact period of the reduced point, r the multiplicative order of its
multiplier (None when the multiplier vanishes) and p the residue
characteristic.  Then the exact period of P is m, m*r or m*r*p^e with
p^(e-1) <= 2*v(p)/(p-1).  Collecting these over all cycles of the reduced map
gives the set of possible periods at that prime.
"""
from __future__ import annotations

from dataclasses import dataclass
from functools import lru_cache
from typing import Iterable, Optional

import numpy as np

from .residue import (
    INFINITY,
    PrimeDesc,
    ProjPoint,
    ResidueElem,
    elem_from_index,
    elem_index,
)


@dataclass(frozen=True)
class PosPerSet:
    """A finite set of positive integers, or All (bad reduction).

    Stored as a bitmask: bit k set means k is a possible period.  All is the
    mask -1, which is the identity for ``&``.
    """

    mask: int

    @classmethod
    def of(cls, values: Iterable[int]) -> "PosPerSet":
        m = 0
        for v in values:
            if v < 1:
                raise ValueError("periods are positive")
            m |= 1 << v
        return cls(m)

    @property
    def is_all(self) -> bool:
        return self.mask < 0

    @property
    def values(self) -> tuple[int, ...]:
        if self.is_all:
            raise ValueError("All is not a finite set")
        m, out, k = self.mask, [], 0
        while m:
            if m & 1:
                out.append(k)
            m >>= 1
            k += 1
        return tuple(out)

    def __and__(self, other: "PosPerSet") -> "PosPerSet":
        return PosPerSet(self.mask & other.mask)

    def __contains__(self, n: int) -> bool:
        return bool(self.mask >> n & 1)

    def within(self, M: int) -> bool:
        """True iff the set is contained in {1, ..., M}."""
        return self.mask >> (M + 1) == 0

    def above(self, M: int) -> tuple[int, ...]:
        return tuple(v for v in self.values if v > M)

    def __repr__(self) -> str:
        if self.is_all:
            return "PosPerSet(All)"
        return f"PosPerSet({set(self.values)})"


ALL = PosPerSet(-1)


def posper_intersect(sets: list[PosPerSet]) -> PosPerSet:
    if not sets:
        raise ValueError("need at least one set")
    m = -1
    for s in sets:
        m &= s.mask
    return PosPerSet(m)


@dataclass(frozen=True)
class CycleInfo:
    points: tuple[ResidueElem, ...]
    lam: ResidueElem
    r: Optional[int]

    @property
    def m(self) -> int:
        return len(self.points)


# -- integer-index fast path ----------------------------------------------


def _mul_idx(P: PrimeDesc, i: int, j: int) -> int:
    p = P.p
    if P.f == 1:
        return i * j % p
    a0, a1 = i % p, i // p
    b0, b1 = j % p, j // p
    yy = a1 * b1
    return (a0 * b0 - P.n * yy) % p + ((a0 * b1 + a1 * b0 + P.a * yy) % p) * p


def _pow_idx(P: PrimeDesc, i: int, k: int) -> int:
    if P.f == 1:
        return pow(i, k, P.p)
    out, base = 1, i
    while k:
        if k & 1:
            out = _mul_idx(P, out, base)
        base = _mul_idx(P, base, base)
        k >>= 1
    return out


def successor_table(P: PrimeDesc, c_idx: int) -> np.ndarray:
    """succ[i] = index of (elem i)^2 + c over the residue field of P."""
    p = P.p
    if P.f == 1:
        z = np.arange(p, dtype=np.int64)
        return (z * z + c_idx) % p
    u = np.arange(P.q, dtype=np.int64)
    u0, u1 = u % p, u // p
    c0, c1 = c_idx % p, c_idx // p
    s0 = (u0 * u0 - P.n * (u1 * u1 % p) + c0) % p
    s1 = (2 * u0 * u1 + P.a * (u1 * u1 % p) + c1) % p
    return s0 + s1 * p


def cycles_of(succ: list[int]) -> list[list[int]]:
    """All cycles of a functional graph, each in orbit order, O(len) time."""
    q = len(succ)
    state = bytearray(q)  # 0 new, 1 on current path, 2 done
    cycles = []
    for start in range(q):
        if state[start]:
            continue
        path = []
        x = start
        while not state[x]:
            state[x] = 1
            path.append(x)
            x = succ[x]
        if state[x] == 1:
            cycles.append(path[path.index(x) :])
        for y in path:
            state[y] = 2
    return cycles


@lru_cache(maxsize=None)
def factor(n: int) -> tuple[int, ...]:
    """Distinct prime factors by trial division."""
    out = []
    d = 2
    while d * d <= n:
        if n % d == 0:
            out.append(d)
            while n % d == 0:
                n //= d
        d += 1
    if n > 1:
        out.append(n)
    return tuple(out)


def _order_idx(P: PrimeDesc, lam: int) -> Optional[int]:
    if lam == 0:
        return None
    order = P.q - 1
    for ell in factor(order):
        while order % ell == 0 and _pow_idx(P, lam, order // ell) == 1:
            order //= ell
    return order


def candidate_periods(P: PrimeDesc, m: int, r: Optional[int]) -> set[int]:
    """{m} together with m*r and m*r*p^e for the admissible exponents e."""
    out = {m}
    if r is None:
        return out
    out.add(m * r)
    p, e = P.p, 1
    # p^(e-1) <= 2*e_ram/(p-1), with v normalized so that v(p) = e_ram
    while p ** (e - 1) * (p - 1) <= 2 * P.e:
        out.add(m * r * p**e)
        e += 1
    return out


def _cycles_fast(succ: np.ndarray) -> list[list[int]]:
    """cycles_of for large graphs: pointer doubling isolates the cyclic nodes."""
    q = len(succ)
    g = succ
    span = 1
    while span < q:
        g = g[g]
        span *= 2
    on_cycle = np.unique(g)  # image of f^(2^k), 2^k >= q, is exactly the cyclic part
    nxt = succ.tolist()
    seen = set()
    cycles = []
    for s in on_cycle.tolist():
        if s in seen:
            continue
        cyc = [s]
        seen.add(s)
        z = nxt[s]
        while z != s:
            cyc.append(z)
            seen.add(z)
            z = nxt[z]
        cycles.append(cyc)
    return cycles


def posper_index(P: PrimeDesc, c_idx: int) -> PosPerSet:
    """Possible-period set for the affine residue with index c_idx."""
    succ = successor_table(P, c_idx)
    cycles = _cycles_fast(succ) if P.q > 256 else cycles_of(succ.tolist())
    mask = 0
    for cyc in cycles:
        lam = 1
        for z in cyc:
            lam = _mul_idx(P, lam, _mul_idx(P, 2 % P.p, z))
        for n in candidate_periods(P, len(cyc), _order_idx(P, lam)):
            mask |= 1 << n
    return PosPerSet(mask)


# -- public element-level API -----------------------------------------------


def cycle_decomposition(c_tilde: ResidueElem) -> list[CycleInfo]:
    P = c_tilde.prime
    succ = successor_table(P, elem_index(c_tilde)).tolist()
    out = []
    for cyc in cycles_of(succ):
        pts = tuple(elem_from_index(P, i) for i in cyc)
        lam = multiplier(pts)
        out.append(CycleInfo(pts, lam, mult_order(lam)))
    return out


def multiplier(cycle) -> ResidueElem:
    if not cycle:
        raise ValueError("empty cycle")
    lam = ResidueElem(cycle[0].prime, 1)
    for z in cycle:
        lam = lam * (z * 2)
    return lam


def mult_order(lam: ResidueElem) -> Optional[int]:
    return _order_idx(lam.prime, elem_index(lam))


def possible_periods(P: PrimeDesc, c_proj: ProjPoint) -> PosPerSet:
    if c_proj is INFINITY:
        return ALL
    return posper_index(P, elem_index(c_proj))

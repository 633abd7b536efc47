"""S-types and the bad-type sieve.

The S-type of c is the tuple of its reductions modulo the primes of S.  A type
is *bad* when the intersection of the per-prime possible-period sets is not
contained in {1, ..., M}; every other type certifies all c reducing to it.
"""
from __future__ import annotations

import hashlib
import struct
from dataclasses import dataclass, field
from pathlib import Path
from typing import Optional, Sequence

import numpy as np

from .arith import Element, QuadField
from .periods import PosPerSet, posper_index
from .residue import (
    PrimeDesc,
    ProjPoint,
    first_primes,
    primes_above,
    proj_from_index,
    proj_index,
    reduce_c,
)

DENSE_LIMIT = 1 << 26


class PrimeTable:
    """Possible-period sets for every point of P^1 over one residue field.

    Index q is the point at infinity.  Entries are computed lazily so large
    residue fields cost only what is used.
    """

    def __init__(self, P: PrimeDesc, eager: Optional[bool] = None):
        self.prime = P
        self.q = P.q
        self._masks: list[Optional[int]] = [None] * self.q + [-1]
        if eager if eager is not None else self.q <= 64:
            for i in range(self.q):
                self._masks[i] = posper_index(P, i).mask

    def mask(self, i: int) -> int:
        m = self._masks[i]
        if m is None:
            m = self._masks[i] = posper_index(self.prime, i).mask
        return m

    def __getitem__(self, i: int) -> PosPerSet:
        return PosPerSet(self.mask(i))

    def __len__(self) -> int:
        return self.q + 1


_TABLES: dict[PrimeDesc, PrimeTable] = {}


def prime_table(P: PrimeDesc) -> PrimeTable:
    t = _TABLES.get(P)
    if t is None:
        t = _TABLES[P] = PrimeTable(P)
    return t


def build_prime_table(P: PrimeDesc) -> list[PosPerSet]:
    t = prime_table(P)
    return [t[i] for i in range(len(t))]


@dataclass(frozen=True)
class SType:
    coords: tuple[ProjPoint, ...]


def stype_of(c: Element, S: Sequence[PrimeDesc]) -> SType:
    return SType(tuple(reduce_c(c, P) for P in S))


def radices(S: Sequence[PrimeDesc]) -> list[int]:
    return [P.q + 1 for P in S]


def type_key(T: SType, S: Sequence[PrimeDesc]) -> int:
    key, scale = 0, 1
    for P, x in zip(S, T.coords):
        key += proj_index(P, x) * scale
        scale *= P.q + 1
    return key


def key_from_indices(idx: Sequence[int], S: Sequence[PrimeDesc]) -> int:
    key, scale = 0, 1
    for P, i in zip(S, idx):
        key += i * scale
        scale *= P.q + 1
    return key


def type_from_key(key: int, S: Sequence[PrimeDesc]) -> SType:
    coords = []
    for P in S:
        key, i = divmod(key, P.q + 1)
        coords.append(proj_from_index(P, i))
    return SType(tuple(coords))


def total_types(S: Sequence[PrimeDesc]) -> int:
    out = 1
    for P in S:
        out *= P.q + 1
    return out


@dataclass
class SieveTable:
    S: list[PrimeDesc]
    M: int
    bad: frozenset[int]
    dense: Optional[np.ndarray] = field(default=None, repr=False)

    @property
    def total(self) -> int:
        return total_types(self.S)

    def is_bad_key(self, key: int) -> bool:
        if self.dense is not None:
            return bool(self.dense[key])
        return key in self.bad

    def posper(self, T: SType) -> PosPerSet:
        m = -1
        for P, x in zip(self.S, T.coords):
            m &= prime_table(P).mask(proj_index(P, x))
        return PosPerSet(m)

    def is_bad(self, T: SType) -> bool:
        return self.is_bad_key(type_key(T, self.S))


def build_sieve(S: Sequence[PrimeDesc], M: int) -> SieveTable:
    """Bad types, grown one prime at a time.

    A partial type whose running intersection already lies in {1..M} is
    dropped, since intersecting further can only shrink it.
    """
    S = list(S)
    if not S:
        raise ValueError("S must be nonempty")
    frontier: list[tuple[int, int]] = [(0, -1)]  # (partial key, running mask)
    scale = 1
    for P in S:
        table = prime_table(P)
        masks = [table.mask(i) for i in range(P.q + 1)]
        nxt = []
        for key, run in frontier:
            for i, m in enumerate(masks):
                r = run & m
                if r >> (M + 1):
                    nxt.append((key + i * scale, r))
        frontier = nxt
        scale *= P.q + 1
    bad = frozenset(k for k, _ in frontier)
    dense = None
    if scale <= DENSE_LIMIT:
        dense = np.zeros(scale, dtype=bool)
        if bad:
            dense[np.fromiter(bad, dtype=np.int64, count=len(bad))] = True
    return SieveTable(S, M, bad, dense)


def brute_force_bad(S: Sequence[PrimeDesc], M: int) -> set[int]:
    """Reference enumeration over the full product of P^1's."""
    tables = [prime_table(P) for P in S]
    bad = set()
    for key in range(total_types(S)):
        k, m = key, -1
        for P, t in zip(S, tables):
            k, i = divmod(k, P.q + 1)
            m &= t.mask(i)
        if m >> (M + 1):
            bad.add(key)
    return bad


def sieve_primes(field_: Optional[QuadField], N: int) -> list[PrimeDesc]:
    out = []
    for p in first_primes(N):
        out.extend(primes_above(field_, p))
    return out


def sieve_stats(field_: Optional[QuadField], M: int, N_max: int) -> list[tuple[int, int, int, float]]:
    rows = []
    for N in range(1, N_max + 1):
        table = build_sieve(sieve_primes(field_, N), M)
        n_bad, tot = len(table.bad), table.total
        rows.append((N, n_bad, tot, n_bad / tot))
    return rows


# -- cache file ----------------------------------------------------------------
#
# Layout (little-endian):
#   magic  b"PSVE"           4 bytes
#   version                  u32
#   digest of (D, S, M)      32 bytes, sha256
#   count of bad keys        u64
#   keys                     count * u64, ascending

CACHE_MAGIC = b"PSVE"
CACHE_VERSION = 1


def _cache_digest(field_: Optional[QuadField], S: Sequence[PrimeDesc], M: int) -> bytes:
    desc = repr((field_.D if field_ else 0, [(P.p, P.kind, P.index, P.t) for P in S], M))
    return hashlib.sha256(desc.encode()).digest()


def save_sieve(path: Path, field_: Optional[QuadField], table: SieveTable) -> None:
    keys = sorted(table.bad)
    with open(path, "wb") as fh:
        fh.write(CACHE_MAGIC)
        fh.write(struct.pack("<I", CACHE_VERSION))
        fh.write(_cache_digest(field_, table.S, table.M))
        fh.write(struct.pack("<Q", len(keys)))
        fh.write(np.asarray(keys, dtype="<u8").tobytes())


def load_sieve(path: Path, field_: Optional[QuadField], S: Sequence[PrimeDesc], M: int) -> Optional[SieveTable]:
    """Read a cached table; None on any mismatch or damage."""
    try:
        raw = Path(path).read_bytes()
    except OSError:
        return None
    head = 4 + 4 + 32 + 8
    if len(raw) < head or raw[:4] != CACHE_MAGIC:
        return None
    (version,) = struct.unpack_from("<I", raw, 4)
    if version != CACHE_VERSION or raw[8:40] != _cache_digest(field_, S, M):
        return None
    (count,) = struct.unpack_from("<Q", raw, 40)
    if len(raw) != head + 8 * count:
        return None
    keys = np.frombuffer(raw, dtype="<u8", offset=head, count=count).astype(np.int64)
    S = list(S)
    bad = frozenset(int(k) for k in keys)
    dense = None
    tot = total_types(S)
    if tot <= DENSE_LIMIT:
        dense = np.zeros(tot, dtype=bool)
        dense[keys] = True
    return SieveTable(S, M, bad, dense)


def get_sieve(field_: Optional[QuadField], S: Sequence[PrimeDesc], M: int, cache: Optional[Path] = None) -> SieveTable:
    if cache is not None:
        t = load_sieve(cache, field_, S, M)
        if t is not None:
            return t
    t = build_sieve(S, M)
    if cache is not None:
        save_sieve(cache, field_, t)
    return t

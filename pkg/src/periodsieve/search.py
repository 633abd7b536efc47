"""Exhaustive verification over all c of bounded height.

Each c = x + y*w (y = 0 over Q) passes through four stages:

1. denominator filter -- the denominator ideal of c must be a square, or
   z^2 + c has no affine K-rational periodic points at all;
2. S-type sieve -- one lookup in the precomputed bad-type table;
3. refinement -- intersect possible-period sets over further primes until
   the running set lies in {1..M};
4. orbit oracle -- exact computation of every periodic point.

The enumeration is cut into deterministic blocks so runs can be split over
worker processes and checkpointed; the report does not depend on either.
"""
from __future__ import annotations

import hashlib
import json
import logging
import math
import multiprocessing
import os
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from fractions import Fraction
from functools import lru_cache
from pathlib import Path
from typing import Iterator, Optional

import numpy as np

from .arith import (
    Element,
    QuadField,
    QuadRational,
    big_height_quad,
    format_element,
    lift,
    make_field,
)
from .oracle import OracleCapExceeded, find_periodic_points
from .periods import PosPerSet
from .residue import (
    INERT,
    INFINITY,
    SPLIT,
    PrimeDesc,
    first_primes,
    hensel_root,
    primes_above,
    reduce_c,
    vp_int,
)
from .sieve import SieveTable, get_sieve, prime_table, sieve_primes

log = logging.getLogger(__name__)

FORMAT_VERSION = 1

FILTERED = "FilteredNoPeriodic"
TYPE_GOOD = "TypeGood"
REFINED_GOOD = "RefinedGood"
CONFIRMED = "Confirmed"
COUNTEREXAMPLE = "Counterexample"
UNRESOLVED = "Unresolved"
FLAGGED = "Flagged"  # --manual: left for inspection, oracle not run
VERDICTS = (FILTERED, TYPE_GOOD, REFINED_GOOD, CONFIRMED, COUNTEREXAMPLE, UNRESOLVED, FLAGGED)


def default_max_period(D: int) -> int:
    return 3 if D == 0 else 6


@dataclass(frozen=True)
class SearchConfig:
    field: int = 0  # fundamental discriminant, 0 for Q
    B: int = 100
    M: Optional[int] = None
    N_initial: Optional[int] = None
    refine_limit: int = 60
    workers: int = 1
    checkpoint: Optional[str] = None
    report: Optional[str] = None
    manual: bool = False
    rational_c: bool = False
    oracle_cap: int = 10**7
    block_size: Optional[int] = None
    sieve_cache: Optional[str] = None
    certify_above: Optional[int] = None

    def __post_init__(self) -> None:
        if self.M is None:
            object.__setattr__(self, "M", default_max_period(self.field))
        if self.certify_above is None:
            object.__setattr__(self, "certify_above", min(self.M, 4))
        if self.N_initial is None:
            object.__setattr__(self, "N_initial", 5 if self.field == 0 else 4)
        if self.field:
            make_field(self.field)
        if self.M < 1 or self.B < 1:
            raise ValueError("need M >= 1 and B >= 1")
        if not 1 <= self.certify_above <= self.M:
            raise ValueError("need 1 <= certify_above <= M")
        if self.N_initial < 1 or self.refine_limit < self.N_initial:
            raise ValueError("need 1 <= N_initial <= refine_limit")
        if self.workers < 1:
            raise ValueError("need at least one worker")

    @property
    def K(self) -> Optional[QuadField]:
        return make_field(self.field) if self.field else None

    def identity(self) -> dict:
        """Everything that determines the report; excludes workers and paths."""
        return {
            "version": FORMAT_VERSION,
            "field": self.field,
            "B": self.B,
            "M": self.M,
            "certify_above": self.certify_above,
            "N_initial": self.N_initial,
            "refine_limit": self.refine_limit,
            "manual": self.manual,
            "rational_c": self.rational_c,
            "oracle_cap": self.oracle_cap,
            "block_size": self.block_size,
        }

    def config_hash(self) -> str:
        blob = json.dumps(self.identity(), sort_keys=True).encode()
        return hashlib.sha256(blob).hexdigest()[:16]


@dataclass
class Verdict:
    kind: str
    primes_used: int = 0
    residual_periods: tuple[int, ...] = ()
    certified_cycles: list[list[Element]] = field(default_factory=list)
    diagnostic: Optional[str] = None

    @property
    def periods(self) -> set[int]:
        return {len(c) for c in self.certified_cycles}


# -- enumeration and denominator filters ----------------------------------------


def is_square(n: int) -> bool:
    return n >= 0 and math.isqrt(n) ** 2 == n


def square_denominator_filter(c: Fraction) -> bool:
    return is_square(Fraction(c).denominator)


def squarefree_part(n: int) -> int:
    t, d = 1, 2
    while d * d <= n:
        k = 0
        while n % d == 0:
            n //= d
            k += 1
        if k % 2:
            t *= d
        d += 1
    return t * n


def lcm_is_square_ideal(lcm: int, D: int) -> bool:
    """Is (lcm) a square ideal of O_K?  Ramified primes are squares of primes."""
    t = squarefree_part(lcm)
    return all(D % p == 0 for p in _primes_of(t))


def _primes_of(n: int) -> list[int]:
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


def square_ideal_filter(c: QuadRational) -> bool:
    b, d = c.x.denominator, c.y.denominator
    return lcm_is_square_ideal(b * d // math.gcd(b, d), c.field.D)


def passes_filter(c: Element) -> bool:
    if isinstance(c, QuadRational):
        return square_ideal_filter(c)
    return square_denominator_filter(c)


def order_key(c: Element) -> tuple:
    """Enumeration order: height, then numerator, then denominator."""
    if isinstance(c, QuadRational):
        return (big_height_quad(c), c.x.numerator, c.x.denominator, c.y.numerator, c.y.denominator)
    c = Fraction(c)
    return (big_height_quad(c), c.numerator, c.denominator)


def _rationals_up_to(B: int, square_only: bool = False) -> list[Fraction]:
    out = []
    for q in range(1, B + 1):
        if square_only and not is_square(q):
            continue
        for p in range(-B, B + 1):
            if math.gcd(p, q) == 1:
                out.append(Fraction(p, q))
    return out


def enumerate_c(
    field_: Optional[QuadField], B: int, square_filter: bool = False, rational_c: bool = False
) -> Iterator[Element]:
    """All c with H(c) <= B in enumeration order, optionally pre-filtered.

    Intended for small B; the driver enumerates blocks directly.
    """
    xs = _rationals_up_to(B, square_only=square_filter and field_ is None)
    if field_ is None:
        yield from sorted(xs, key=order_key)
        return
    ys = [Fraction(0)] if rational_c else xs
    out = []
    for x in xs:
        for y in ys:
            c = QuadRational(x, y, field_)
            if not square_filter or square_ideal_filter(c):
                out.append(c)
    yield from sorted(out, key=order_key)


@lru_cache(maxsize=None)
def _rational_counts(B: int) -> int:
    """Number of reduced p/q with max(|p|, q) <= B."""
    phi = list(range(B + 1))
    for i in range(2, B + 1):
        if phi[i] == i:
            for j in range(i, B + 1, i):
                phi[j] -= phi[j] // i
    return 3 + sum(4 * phi[h] for h in range(2, B + 1))


# -- per-run context ---------------------------------------------------------------


class Context:
    """Sieve and prime data shared by all blocks of one run (read-only)."""

    def __init__(self, config: SearchConfig):
        self.config = config
        self.K = config.K
        self.M = config.M
        self.T = config.certify_above
        self.S = sieve_primes(self.K, config.N_initial)
        cache = Path(config.sieve_cache) if config.sieve_cache else None
        self.sieve: SieveTable = get_sieve(self.K, self.S, self.T, cache)
        extra = first_primes(config.refine_limit)[config.N_initial :]
        self.refine_primes = sorted(
            (P for p in extra for P in primes_above(self.K, p)), key=lambda P: (P.q, P.p, P.index)
        )

    def is_bad_keys(self, keys: np.ndarray) -> np.ndarray:
        if self.sieve.dense is not None:
            return self.sieve.dense[keys]
        bad = np.fromiter(self.sieve.bad, dtype=np.int64, count=len(self.sieve.bad))
        return np.isin(keys, bad)

    def settled(self, mask: int) -> bool:
        return mask >> (self.T + 1) == 0

    # scalar path ---------------------------------------------------------

    def running_mask(self, c: Element) -> int:
        m = -1
        for P in self.S:
            r = reduce_c(c, P)
            m &= prime_table(P).mask(P.q if r is INFINITY else r.u0 + r.u1 * P.p)
        return m

    def verify(self, c: Element) -> Verdict:
        """Steps 2-4 for one c that already passed the denominator filter."""
        mask = self.running_mask(c)
        used = len(self.S)
        if self.settled(mask):
            return Verdict(TYPE_GOOD, used)
        for P in self.refine_primes:
            r = _reduce_fast(c, P)
            if r is None:
                continue  # bad reduction tells us nothing
            mask &= prime_table(P).mask(r)
            used += 1
            if self.settled(mask):
                return Verdict(REFINED_GOOD, used)
        return self.resolve(c, mask, used)

    def resolve(self, c: Element, mask: int, used: int) -> Verdict:
        """Refinement ran out of primes: ask the orbit oracle."""
        residual = PosPerSet(mask).above(self.T)
        if self.config.manual:
            return Verdict(FLAGGED, used, residual)
        try:
            cert = find_periodic_points(c, max_period=self.M + 4, field=self.K, cap=self.config.oracle_cap)
        except OracleCapExceeded as exc:
            return Verdict(UNRESOLVED, used, residual, diagnostic=str(exc))
        kind = COUNTEREXAMPLE if any(len(cy) > self.M for cy in cert.cycles) else CONFIRMED
        return Verdict(kind, used, residual, cert.cycles)


def _reduce_fast(c: Element, P: PrimeDesc) -> Optional[int]:
    """Residue index of c at P, or None for bad reduction."""
    p = P.p
    if not isinstance(c, QuadRational):
        if c.denominator % p == 0:
            return None
        return c.numerator * pow(c.denominator, -1, p) % p
    r = reduce_c(c, P)
    return None if r is INFINITY else r.u0 + r.u1 * p


def verify_c(c: Element, ctx: Context) -> Verdict:
    c = lift(c, ctx.K)
    if not passes_filter(c):
        return Verdict(FILTERED)
    return ctx.verify(c)


# -- blocks ---------------------------------------------------------------------


def _rational_block_arrays(lo: int, hi: int):
    """Square-denominator reduced fractions with height in [lo, hi), sorted."""
    nums, dens = [], []
    s = 1
    while s * s < hi:
        q = s * s
        start = 0 if q >= lo else lo
        absp = np.arange(start, hi, dtype=np.int64)
        absp = absp[np.gcd(absp, q) == 1]
        signed = np.concatenate((absp, -absp[absp > 0]))
        nums.append(signed)
        dens.append(np.full(len(signed), q, dtype=np.int64))
        s += 1
    if not nums:
        return np.zeros(0, np.int64), np.zeros(0, np.int64)
    num = np.concatenate(nums)
    den = np.concatenate(dens)
    height = np.maximum(np.abs(num), den)
    order = np.lexsort((den, num, height))
    return num[order], den[order]


def _field_pairs(config: SearchConfig) -> list[tuple[int, int]]:
    B, D = config.B, config.field
    if config.rational_c:
        return [(b, 1) for b in range(1, B + 1) if lcm_is_square_ideal(b, D)]
    return [
        (b, d)
        for b in range(1, B + 1)
        for d in range(1, B + 1)
        if lcm_is_square_ideal(b * d // math.gcd(b, d), D)
    ]


@lru_cache(maxsize=None)
def _coprime_numerators(B: int, b: int) -> np.ndarray:
    a = np.arange(-B, B + 1, dtype=np.int64)
    return a[np.gcd(a, b) == 1]


def plan_blocks(config: SearchConfig) -> list:
    """Deterministic partition of the enumeration; depends only on the config."""
    B = config.B
    if config.field == 0:
        width = config.block_size or max(1, -(-B // 64))
        return [("h", lo, min(lo + width, B + 1)) for lo in range(1, B + 1, width)]
    target = config.block_size or 200_000
    blocks, cur, size = [], [], 0
    for b, d in _field_pairs(config):
        n_y = 1 if config.rational_c else len(_coprime_numerators(B, d))
        cur.append((b, d))
        size += len(_coprime_numerators(B, b)) * n_y
        if size >= target:
            blocks.append(("k", tuple(cur)))
            cur, size = [], 0
    if cur:
        blocks.append(("k", tuple(cur)))
    return blocks


def _record(c: Element, D: int, v: Verdict) -> dict:
    return {
        "c": format_element(c),
        "field": D,
        "verdict": v.kind,
        "primes_used": v.primes_used,
        "residual_periods": list(v.residual_periods),
        "certified_cycles": [[format_element(z) for z in cyc] for cyc in v.certified_cycles],
        **({"diagnostic": v.diagnostic} if v.diagnostic else {}),
    }


def _new_result() -> dict:
    return {"counts": {k: 0 for k in VERDICTS}, "passed": 0, "records": [], "primes_hist": {}}


def _bump(res: dict, kind: str, used: int, n: int = 1) -> None:
    res["counts"][kind] += n
    h = res["primes_hist"]
    h[str(used)] = h.get(str(used), 0) + n


def _sieve_and_refine(ctx: Context, res: dict, n: int, reducer, make_c) -> None:
    """Type sieve, then vectorized refinement, then the oracle for what is left.

    ``reducer(P, sel)`` returns residue indices (q for infinity) at P for the
    selected elements; ``make_c(i)`` builds the exact parameter.
    """
    res["passed"] += n
    if n == 0:
        return
    keys = np.zeros(n, dtype=np.int64)
    per_prime = []
    scale = 1
    everything = np.arange(n)
    for P in ctx.S:
        idx = reducer(P, everything)
        per_prime.append(idx)
        keys += idx * scale
        scale *= P.q + 1
    bad = ctx.is_bad_keys(keys)
    _bump(res, TYPE_GOOD, len(ctx.S), int(n - bad.sum()))
    alive = np.flatnonzero(bad)
    if not len(alive):
        return

    masks = np.full(len(alive), -1, dtype=object)
    for P, idx in zip(ctx.S, per_prime):
        masks &= _table_masks(P, idx[alive])
    used = np.full(len(alive), len(ctx.S), dtype=np.int64)
    for P in ctx.refine_primes:
        idx = reducer(P, alive)
        good = idx != P.q
        if good.any():
            masks[good] &= _table_masks(P, idx[good])
            used[good] += 1
        done = (masks >> (ctx.T + 1)) == 0
        if done.any():
            for u in used[done].tolist():
                _bump(res, REFINED_GOOD, u)
            keep = ~done
            alive, masks, used = alive[keep], masks[keep], used[keep]
            if not len(alive):
                return
    for i, m, u in zip(alive.tolist(), masks.tolist(), used.tolist()):
        c = make_c(i)
        v = ctx.resolve(c, m, u)
        _bump(res, v.kind, u)
        res["records"].append([list(order_key(c)), _record(c, ctx.config.field, v)])


def _table_masks(P: PrimeDesc, idx: np.ndarray) -> np.ndarray:
    table = prime_table(P)
    uniq, inv = np.unique(idx, return_inverse=True)
    vals = np.empty(len(uniq), dtype=object)
    vals[:] = [table.mask(int(u)) for u in uniq]
    return vals[inv]


def _process_rational(ctx: Context, lo: int, hi: int) -> dict:
    num, den = _rational_block_arrays(lo, hi)
    res = _new_result()

    def reducer(P: PrimeDesc, sel: np.ndarray) -> np.ndarray:
        p = P.p
        nm, dn = num[sel] % p, den[sel] % p
        uniq, inv = np.unique(dn, return_inverse=True)
        dinv = np.array([pow(int(x), -1, p) if x else 0 for x in uniq], dtype=np.int64)[inv]
        return np.where(dn == 0, p, nm * dinv % p)

    _sieve_and_refine(ctx, res, len(num), reducer, lambda i: Fraction(int(num[i]), int(den[i])))
    return res


def _reduce_pair_block(P: PrimeDesc, a: np.ndarray, cy: np.ndarray, b: int, d: int) -> np.ndarray:
    """Residue indices (q for infinity) of a/b + (cy/d)*w at P, vectorized."""
    p = P.p
    if P.kind == SPLIT:
        L = b * d // math.gcd(b, d)
        k = vp_int(L, p)
        mod = p ** (k + 1)
        wh = hensel_root(P, k + 1)
        U = a * (L // b)
        V = cy * (L // d)
        w = (U % mod + (V % mod) * wh) % mod
        pk = p**k
        good = w % pk == 0
        r = (w // pk) * pow(L // pk, -1, p) % p
        return np.where(good, r, p)
    if b % p == 0 or d % p == 0:
        return np.full(len(a), P.q, dtype=np.int64)
    xr = a % p * pow(b, -1, p) % p
    yr = cy % p * pow(d, -1, p) % p
    if P.kind == INERT:
        return xr + yr * p
    return (xr + yr * P.t) % p


def _process_field(ctx: Context, pairs) -> dict:
    B, K = ctx.config.B, ctx.K
    res = _new_result()
    for b, d in pairs:
        xa = _coprime_numerators(B, b)
        ya = np.zeros(1, dtype=np.int64) if ctx.config.rational_c else _coprime_numerators(B, d)
        a = np.repeat(xa, len(ya))
        cy = np.tile(ya, len(xa))

        def reducer(P, sel, a=a, cy=cy, b=b, d=d):
            return _reduce_pair_block(P, a[sel], cy[sel], b, d)

        def make_c(i, a=a, cy=cy, b=b, d=d):
            return QuadRational(Fraction(int(a[i]), b), Fraction(int(cy[i]), d), K)

        _sieve_and_refine(ctx, res, len(a), reducer, make_c)
    return res


def process_block(ctx: Context, block) -> dict:
    if block[0] == "h":
        return _process_rational(ctx, block[1], block[2])
    return _process_field(ctx, block[1])


# -- checkpointing ---------------------------------------------------------------


class CheckpointError(RuntimeError):
    pass


def checkpoint_resume(path: Optional[str], config: SearchConfig) -> dict[int, dict]:
    """Completed blocks recorded in the checkpoint file; {} if absent or empty."""
    if not path or not os.path.exists(path):
        return {}
    done: dict[int, dict] = {}
    want = config.config_hash()
    offset = 0
    with open(path, "rb") as fh:
        for lineno, raw in enumerate(fh, 1):
            try:
                if not raw.endswith(b"\n"):
                    raise ValueError("truncated record")
                rec = json.loads(raw)
                block_id, h, result = rec["block_id"], rec["config_hash"], rec["result"]
            except (ValueError, KeyError, TypeError) as exc:
                raise CheckpointError(f"corrupt checkpoint at byte {offset} (line {lineno}): {exc}")
            if h != want:
                raise CheckpointError(
                    f"checkpoint at byte {offset} (line {lineno}) belongs to config {h}, not {want}"
                )
            done[int(block_id)] = result
            offset += len(raw)
    return done


def checkpoint_save(path: str, config: SearchConfig, block_id: int, result: dict) -> None:
    line = json.dumps(
        {"block_id": block_id, "config_hash": config.config_hash(), "result": result},
        sort_keys=True,
        separators=(",", ":"),
    )
    with open(path, "a") as fh:
        fh.write(line + "\n")
        fh.flush()
        os.fsync(fh.fileno())


# -- driver ---------------------------------------------------------------------


@dataclass
class Report:
    config: SearchConfig
    header: dict
    records: list[dict]
    summary: dict
    complete: bool

    @property
    def counts(self) -> dict:
        return self.summary["counts"]

    @property
    def exit_code(self) -> int:
        if self.counts[COUNTEREXAMPLE]:
            return 1
        if self.counts[UNRESOLVED] or self.counts[FLAGGED] or not self.complete:
            return 2
        return 0

    def by_verdict(self, kind: str) -> list[dict]:
        return [r for r in self.records if r["verdict"] == kind]

    def to_jsonl(self) -> str:
        dump = lambda obj: json.dumps(obj, sort_keys=True, separators=(",", ":"))
        lines = [dump(self.header)]
        lines += [dump(r) for r in self.records]
        lines.append(dump(self.summary))
        return "\n".join(lines) + "\n"

    def write(self, path: str) -> None:
        Path(path).write_text(self.to_jsonl())


_WORKER_CTX: Optional[Context] = None


def _init_worker(config: SearchConfig) -> None:
    global _WORKER_CTX
    _WORKER_CTX = Context(config)


def _run_block(block) -> dict:
    return process_block(_WORKER_CTX, block)


def run_verification(config: SearchConfig, block_limit: Optional[int] = None) -> Report:
    """Run (or resume) a verification; ``block_limit`` stops after that many new blocks."""
    ctx = Context(config)
    blocks = plan_blocks(config)
    done = checkpoint_resume(config.checkpoint, config)
    todo = [i for i in range(len(blocks)) if i not in done]
    if block_limit is not None:
        todo = todo[:block_limit]
    log.info("%d blocks, %d already done, running %d", len(blocks), len(done), len(todo))

    def record(i: int, result: dict) -> None:
        done[i] = result
        if config.checkpoint:
            checkpoint_save(config.checkpoint, config, i, result)

    if config.workers == 1 or len(todo) <= 1:
        for i in todo:
            record(i, process_block(ctx, blocks[i]))
    else:
        try:
            mp = multiprocessing.get_context("fork")
        except ValueError:
            mp = multiprocessing.get_context()
        with ProcessPoolExecutor(config.workers, mp_context=mp, initializer=_init_worker, initargs=(config,)) as ex:
            for i, result in zip(todo, ex.map(_run_block, [blocks[i] for i in todo])):
                record(i, result)

    return _assemble(config, ctx, blocks, done)


def _assemble(config: SearchConfig, ctx: Context, blocks: list, done: dict[int, dict]) -> Report:
    counts = {k: 0 for k in VERDICTS}
    hist: dict[str, int] = {}
    passed = 0
    keyed = []
    for i in sorted(done):
        r = done[i]
        passed += r["passed"]
        for k, v in r["counts"].items():
            counts[k] += v
        for k, v in r["primes_hist"].items():
            hist[k] = hist.get(k, 0) + v
        keyed.extend(r["records"])
    keyed.sort(key=lambda kr: kr[0])
    records = [r for _, r in keyed]
    complete = len(done) == len(blocks)

    per_coord = _rational_counts(config.B)
    enumerated = per_coord if config.field == 0 or config.rational_c else per_coord * per_coord
    if complete:
        counts[FILTERED] = enumerated - passed

    period_counts: dict[str, int] = {}
    for r in records:
        for n in {len(cy) for cy in r["certified_cycles"]}:
            period_counts[str(n)] = period_counts.get(str(n), 0) + 1
    used = [int(k) for k, v in hist.items() if v]
    header = {
        "type": "header",
        "config": config.identity(),
        "config_hash": config.config_hash(),
        "S": [str(P) for P in ctx.S],
        "bad_types": len(ctx.sieve.bad),
        "total_types": ctx.sieve.total,
        "blocks": len(blocks),
    }
    summary = {
        "type": "summary",
        "complete": complete,
        "blocks_done": len(done),
        "enumerated": enumerated if complete else None,
        "passed_filter": passed,
        "counts": counts,
        "max_primes_used": max(used) if used else 0,
        "primes_used_histogram": {k: hist[k] for k in sorted(hist, key=int)},
        "certified_period_counts": {k: period_counts[k] for k in sorted(period_counts, key=int)},
        "status": _status(counts, complete),
    }
    rep = Report(config, header, records, summary, complete)
    if config.report:
        rep.write(config.report)
    return rep


def _status(counts: dict, complete: bool) -> str:
    if counts[COUNTEREXAMPLE]:
        return "counterexample"
    if counts[UNRESOLVED] or counts[FLAGGED] or not complete:
        return "unresolved"
    return "verified"

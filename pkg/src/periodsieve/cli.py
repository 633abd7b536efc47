"""Command line entry point.

    periodsieve --field-disc 33 --height-bound 100 --max-period 6
    periodsieve --stats-table 7
    periodsieve oracle -71/48 --field-disc 33 --preperiodic
"""
from __future__ import annotations

import argparse
import json
import logging
import re
import sys
from typing import Optional, Sequence

from .arith import make_field, parse_element
from .oracle import OracleCapExceeded, find_periodic_points, preperiodic_closure
from .search import CheckpointError, SearchConfig, run_verification
from .sieve import sieve_stats


def _search_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="periodsieve", description="Bound periods of z^2 + c over Q or a quadratic field.")
    ap.add_argument("--field-disc", type=int, default=0, metavar="D", help="fundamental discriminant, 0 for Q")
    ap.add_argument("--height-bound", type=int, default=100, metavar="B")
    ap.add_argument("--max-period", type=int, default=None, metavar="M")
    ap.add_argument("--initial-primes", type=int, default=None, metavar="N")
    ap.add_argument("--refine-limit", type=int, default=60, metavar="n")
    ap.add_argument("--certify-above", type=int, default=None, metavar="T",
                    help="sieve threshold; survivors with a possible period > T go to the oracle")
    ap.add_argument("--threads", type=int, default=1, metavar="k")
    ap.add_argument("--checkpoint", default=None, metavar="PATH")
    ap.add_argument("--report", default=None, metavar="PATH")
    ap.add_argument("--sieve-cache", default=None, metavar="PATH")
    ap.add_argument("--stats-table", type=int, default=None, metavar="N_max")
    ap.add_argument("--manual", action="store_true", help="list flagged c without running the oracle")
    ap.add_argument("--rational-c", action="store_true", help="over K, enumerate only rational c")
    ap.add_argument("-v", "--verbose", action="store_true")
    return ap


def _oracle_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="periodsieve oracle", description="Print the periodic-point certificate of c.")
    ap.add_argument("c", help='parameter, e.g. "-29/16" or "1/4+1/4*w"')
    ap.add_argument("--field-disc", type=int, default=0, metavar="D")
    ap.add_argument("--preperiodic", action="store_true", help="include the preperiodic closure")
    ap.add_argument("--cap", type=int, default=10**7)
    return ap


def _oracle_main(argv: Sequence[str]) -> int:
    # a leading minus sign would otherwise read as an option
    argv = [a for a in argv if a != "--"]
    pos = [i for i, a in enumerate(argv) if re.match(r"^-\d+/", a)]
    if pos:
        argv = argv[: pos[0]] + argv[pos[0] + 1 :] + ["--", argv[pos[0]]]
    args = _oracle_parser().parse_args(argv)
    K = make_field(args.field_disc) if args.field_disc else None
    c = parse_element(args.c, K)
    try:
        cert = (preperiodic_closure if args.preperiodic else find_periodic_points)(c, field=K, cap=args.cap)
    except OracleCapExceeded as exc:
        print(json.dumps({"c": args.c, "error": str(exc)}))
        return 2
    print(json.dumps(cert.to_json(), indent=2))
    return 0


def _stats_main(D: int, M: int, N_max: int) -> int:
    K = make_field(D) if D else None
    print(f"{'N':>3} {'bad':>12} {'total':>16} {'ratio':>12}")
    for N, bad, total, ratio in sieve_stats(K, M, N_max):
        print(f"{N:>3} {bad:>12} {total:>16} {ratio:>12.3e}")
    return 0


def main(argv: Optional[Sequence[str]] = None) -> int:
    argv = list(sys.argv[1:] if argv is None else argv)
    if argv and argv[0] == "oracle":
        return _oracle_main(argv[1:])
    args = _search_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING, format="%(message)s")
    if args.stats_table is not None:
        return _stats_main(args.field_disc, args.max_period or (3 if args.field_disc == 0 else 6), args.stats_table)
    config = SearchConfig(
        field=args.field_disc,
        B=args.height_bound,
        M=args.max_period,
        N_initial=args.initial_primes,
        refine_limit=args.refine_limit,
        certify_above=args.certify_above,
        workers=args.threads,
        checkpoint=args.checkpoint,
        report=args.report,
        sieve_cache=args.sieve_cache,
        manual=args.manual,
        rational_c=args.rational_c,
    )
    try:
        rep = run_verification(config)
    except CheckpointError as exc:
        print(f"checkpoint error: {exc}", file=sys.stderr)
        return 2
    if not args.report:
        sys.stdout.write(rep.to_jsonl())
    else:
        print(json.dumps(rep.summary, sort_keys=True))
    return rep.exit_code


if __name__ == "__main__":
    sys.exit(main())

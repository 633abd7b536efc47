"""Sieve-based verification of the periods of rational points of z^2 + c."""
from .arith import (
    QuadField,
    QuadRational,
    format_element,
    fundamental_discriminants,
    make_field,
    parse_element,
)
from .oracle import exact_period, find_periodic_points, preperiodic_closure
from .periods import ALL, PosPerSet, cycle_decomposition, possible_periods
from .residue import primes_above, reduce_c
from .search import SearchConfig, enumerate_c, run_verification, verify_c
from .sieve import build_sieve, sieve_stats

__version__ = "0.1.0"

__all__ = [
    "ALL",
    "PosPerSet",
    "QuadField",
    "QuadRational",
    "SearchConfig",
    "build_sieve",
    "cycle_decomposition",
    "enumerate_c",
    "exact_period",
    "find_periodic_points",
    "format_element",
    "fundamental_discriminants",
    "make_field",
    "parse_element",
    "possible_periods",
    "preperiodic_closure",
    "primes_above",
    "reduce_c",
    "run_verification",
    "sieve_stats",
    "verify_c",
]

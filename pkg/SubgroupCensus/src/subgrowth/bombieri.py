"""
bombieri.py - Bombieri prime certificates and interval scans

A prime q <= sqrt(x) is a Bombieri prime relative to x when

    max_{y <= x} |E(y; q, 1)| <= x / (phi(q) (log x)^2)

E(y; q, 1) only jumps up at primes p = 1 (mod q) and falls linearly with slope
-1/phi(q) in between, so the maximum over integer y is attained at y = 1, at
each such prime p, or just before the next one (y = p_next - 1, or x).
"""

from __future__ import annotations

import logging
import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from pathlib import Path
from typing import List, Optional

import numpy as np
from sympy import isprime, primerange

from .errors import InvalidArgument
from .numtheory import PrimeTable, progression_array, sieve_primes

LOG = logging.getLogger("subgrowth.bombieri")

MIN_X = 100


@dataclass(frozen=True)
class BombieriCertificate:
    x: int
    q: int
    max_abs_error: float
    argmax_y: int
    bound: float
    is_bombieri: bool
    set_size: int
    log_P: float

    def to_dict(self) -> dict:
        return {
            "x": self.x,
            "q": self.q,
            "max_abs_error": self.max_abs_error,
            "argmax_y": self.argmax_y,
            "bound": self.bound,
            "is_bombieri": self.is_bombieri,
            "set_size": self.set_size,
            "log_P": self.log_P,
        }


@dataclass(frozen=True)
class ScanResult:
    x: int
    rho: float
    lower: int
    upper: int
    certificate: Optional[BombieriCertificate]
    diagnostics: List[dict] = field(default_factory=list)

    def to_dict(self) -> dict:
        return {
            "x": self.x,
            "rho": self.rho,
            "interval": [self.lower, self.upper],
            "certificate": self.certificate.to_dict() if self.certificate else None,
            "diagnostics": self.diagnostics,
        }


@dataclass(frozen=True)
class CardinalityCheck:
    holds: bool
    set_size: int
    expected: float
    deviation: float
    allowance: float
    slack: float

    def to_dict(self) -> dict:
        return {
            "holds": self.holds,
            "set_size": self.set_size,
            "expected": self.expected,
            "deviation": self.deviation,
            "allowance": self.allowance,
            "slack": self.slack,
        }


def error_bound(x: int, q: int) -> float:
    log_x = math.log(x)
    return x / ((q - 1) * log_x * log_x)


def certify(
    x: int, q: int, *, table: Optional[PrimeTable] = None, cache_dir: Optional[Path] = None
) -> BombieriCertificate:
    x, q = int(x), int(q)
    if x < MIN_X:
        raise InvalidArgument(f"x must be >= {MIN_X}, got {x}")
    if not isprime(q):
        raise InvalidArgument(f"q={q} is not prime")
    if q * q > x:
        raise InvalidArgument(f"q={q} exceeds sqrt(x) for x={x}")

    phi = q - 1
    ps = progression_array(x, q, 1, table=table, cache_dir=cache_dir)
    sums = np.concatenate(([0.0], np.cumsum(np.log(ps.astype(np.float64)))))
    # one linear piece per gap: [1, p_1 - 1], [p_1, p_2 - 1], ..., [p_k, x]
    starts = np.concatenate(([1], ps)).astype(np.float64)
    ends = np.concatenate((ps - 1, [x])).astype(np.float64)
    at_start = np.abs(sums - starts / phi)
    at_end = np.abs(sums - ends / phi)

    i_start = int(np.argmax(at_start))
    i_end = int(np.argmax(at_end))
    if at_start[i_start] >= at_end[i_end]:
        max_err, arg_y = float(at_start[i_start]), int(starts[i_start])
    else:
        max_err, arg_y = float(at_end[i_end]), int(ends[i_end])

    bound = error_bound(x, q)
    cert = BombieriCertificate(
        x=x,
        q=q,
        max_abs_error=max_err,
        argmax_y=arg_y,
        bound=bound,
        is_bombieri=max_err <= bound,
        set_size=int(ps.size),
        log_P=float(sums[-1]),
    )
    LOG.debug("certify x=%d q=%d max|E|=%.3f bound=%.3f -> %s", x, q, max_err, bound, cert.is_bombieri)
    return cert


def scan_interval(x: int, rho: float) -> tuple:
    """Closed interval [ceil(x^rho / log x), floor(x^rho)]."""
    top = x ** rho
    # float powers like (10^6)^(1/3) land a hair below the integer
    lower = math.ceil(top / math.log(x) - 1e-9)
    upper = math.floor(top + 1e-9)
    return lower, upper


def find_bombieri_prime(
    x: int,
    rho: float,
    *,
    threads: int = 1,
    cache_dir: Optional[Path] = None,
) -> ScanResult:
    """First Bombieri prime in the scan interval, ascending.

    Candidates are certified in batches of ``threads``; the batch is merged in
    ascending q so the answer never depends on scheduling.
    """
    x = int(x)
    if not 0 < rho < 0.5:
        raise InvalidArgument(f"rho must lie in (0, 1/2), got {rho}")
    if x < MIN_X:
        raise InvalidArgument(f"x must be >= {MIN_X}, got {x}")
    lower, upper = scan_interval(x, rho)
    candidates = [int(q) for q in primerange(max(lower, 2), upper + 1)]
    if not candidates:
        raise InvalidArgument(f"no primes in scan interval [{lower}, {upper}] for x={x}, rho={rho}")

    table = sieve_primes(x, cache_dir=cache_dir)
    LOG.info("Scanning %d candidate moduli in [%d, %d] for x=%d", len(candidates), lower, upper, x)

    diagnostics: List[dict] = []
    found: Optional[BombieriCertificate] = None
    batch = max(1, int(threads))
    with ThreadPoolExecutor(max_workers=batch) as pool:
        for i in range(0, len(candidates), batch):
            certs = list(pool.map(lambda q: certify(x, q, table=table), candidates[i : i + batch]))
            for cert in certs:
                diagnostics.append(
                    {"q": cert.q, "max_abs_error": cert.max_abs_error, "bound": cert.bound, "is_bombieri": cert.is_bombieri}
                )
                if cert.is_bombieri:
                    found = cert
                    break
            if found is not None:
                break

    if found is None:
        LOG.warning("No Bombieri prime for x=%d rho=%s among %d candidates", x, rho, len(candidates))
    else:
        LOG.info("Bombieri prime q=%d for x=%d (L=%d)", found.q, x, found.set_size)
    return ScanResult(x=x, rho=rho, lower=lower, upper=upper, certificate=found, diagnostics=diagnostics)


def check_cardinality_bound(cert: BombieriCertificate) -> CardinalityCheck:
    """|L - x/(phi(q) log x)| <= 3 x/(phi(q) (log x)^2) for a Bombieri certificate."""
    if not cert.is_bombieri:
        raise InvalidArgument(f"q={cert.q} is not a Bombieri prime relative to x={cert.x}")
    phi = cert.q - 1
    log_x = math.log(cert.x)
    expected = cert.x / (phi * log_x)
    deviation = abs(cert.set_size - expected)
    allowance = 3.0 * error_bound(cert.x, cert.q)
    slack = (allowance - deviation) / allowance
    return CardinalityCheck(
        holds=deviation <= allowance,
        set_size=cert.set_size,
        expected=expected,
        deviation=deviation,
        allowance=allowance,
        slack=slack,
    )

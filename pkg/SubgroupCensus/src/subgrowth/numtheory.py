"""
numtheory.py - primes, progressions, Chebyshev sums, factorization, scales

Prime tables come from a numpy segmented sieve. When a cache directory is
given, tables are persisted as ``primes-<limit>.bin``:

  header  <4sHQQ   magic "SGPR", format version, limit, prime count
  payload <u8[count]  the primes, ascending, little-endian

A header whose limit differs from the requested one is treated as a miss.
All logarithms are natural.
"""

from __future__ import annotations

import logging
import math
import struct
import threading
from dataclasses import dataclass, field
from pathlib import Path
from typing import Dict, List, Optional

import numpy as np
from sympy import factorint

from .config import DEFAULT_SETTINGS
from .errors import CacheFormatError, InvalidArgument, ResourceLimitExceeded

LOG = logging.getLogger("subgrowth.numtheory")

# ----------------------------
# Sieve cache codec
# ----------------------------
CACHE_MAGIC = b"SGPR"
CACHE_VERSION = 1
CACHE_HEADER = struct.Struct("<4sHQQ")
SEGMENT_SIZE = 1 << 20
FACTOR_LIMIT = 1 << 128


def encode_prime_cache(limit: int, primes: np.ndarray) -> bytes:
    payload = np.asarray(primes, dtype="<u8").tobytes()
    return CACHE_HEADER.pack(CACHE_MAGIC, CACHE_VERSION, int(limit), len(primes)) + payload


def decode_prime_cache(data: bytes) -> "PrimeTable":
    if len(data) < CACHE_HEADER.size:
        raise CacheFormatError(f"Invalid cache size: expected at least {CACHE_HEADER.size}, got {len(data)}")
    magic, version, limit, count = CACHE_HEADER.unpack_from(data)
    if magic != CACHE_MAGIC:
        raise CacheFormatError(f"Bad cache magic {magic!r}")
    if version != CACHE_VERSION:
        raise CacheFormatError(f"Unsupported cache version {version}")
    expected = CACHE_HEADER.size + 8 * count
    if len(data) != expected:
        raise CacheFormatError(f"Invalid cache size: expected {expected}, got {len(data)}")
    primes = np.frombuffer(data, dtype="<u8", count=count, offset=CACHE_HEADER.size).astype(np.int64)
    return PrimeTable(limit=int(limit), primes=primes)


def cache_file(cache_dir: Path, limit: int) -> Path:
    return Path(cache_dir) / f"primes-{int(limit)}.bin"


# ----------------------------
# Domain types
# ----------------------------
@dataclass(frozen=True)
class FactoredNat:
    value: int
    factors: Dict[int, int] = field(default_factory=dict)

    def __post_init__(self):
        prod = 1
        for p, e in self.factors.items():
            if e < 1:
                raise InvalidArgument(f"exponent of {p} must be >= 1, got {e}")
            prod *= p ** e
        if prod != self.value:
            raise InvalidArgument(f"factors multiply to {prod}, not {self.value}")

    @property
    def primes(self) -> List[int]:
        return sorted(self.factors)

    @property
    def radical(self) -> int:
        return math.prod(self.factors)

    def to_dict(self) -> dict:
        return {"value": self.value, "factors": {str(p): e for p, e in sorted(self.factors.items())}}


@dataclass(frozen=True, eq=False)
class PrimeTable:
    limit: int
    primes: np.ndarray

    def __len__(self) -> int:
        return int(self.primes.size)

    def __contains__(self, n: int) -> bool:
        i = int(np.searchsorted(self.primes, n))
        return i < self.primes.size and int(self.primes[i]) == n

    def upto(self, x: int) -> np.ndarray:
        """Primes <= x as a read-only view."""
        if x > self.limit:
            raise InvalidArgument(f"table only reaches {self.limit}, asked for {x}")
        return self.primes[: int(np.searchsorted(self.primes, x, side="right"))]

    def tolist(self) -> List[int]:
        return [int(p) for p in self.primes]


@dataclass(frozen=True)
class ScaleValues:
    n: int
    ell: float
    lam: float

    def to_dict(self) -> dict:
        return {"n": self.n, "ell": self.ell, "lambda": self.lam}


# ----------------------------
# Sieve
# ----------------------------
def _small_sieve(n: int) -> np.ndarray:
    if n < 2:
        return np.zeros(0, dtype=np.int64)
    flags = np.ones(n + 1, dtype=bool)
    flags[:2] = False
    for p in range(2, math.isqrt(n) + 1):
        if flags[p]:
            flags[p * p :: p] = False
    return np.flatnonzero(flags).astype(np.int64)


def _segmented_sieve(limit: int, segment: int = SEGMENT_SIZE) -> np.ndarray:
    base = _small_sieve(math.isqrt(limit))
    chunks = [base]
    lo = int(base[-1]) + 1 if base.size else 2
    while lo <= limit:
        hi = min(lo + segment, limit + 1)
        flags = np.ones(hi - lo, dtype=bool)
        for p in base:
            p = int(p)
            if p * p >= hi:
                break
            start = max(p * p, -(-lo // p) * p)
            flags[start - lo :: p] = False
        chunks.append(np.flatnonzero(flags).astype(np.int64) + lo)
        lo = hi
    return np.concatenate(chunks)


_TABLES: Dict[int, PrimeTable] = {}
_SIEVE_LOCK = threading.Lock()


def _read_cache(path: Path, limit: int) -> Optional[PrimeTable]:
    if not path.exists():
        return None
    try:
        table = decode_prime_cache(path.read_bytes())
    except (OSError, CacheFormatError) as e:
        LOG.warning("Discarding sieve cache %s: %s", path, e)
        return None
    if table.limit != limit:
        LOG.info("Sieve cache %s holds limit %d, wanted %d; re-sieving", path, table.limit, limit)
        return None
    return table


def _write_cache(path: Path, table: PrimeTable) -> None:
    try:
        path.parent.mkdir(parents=True, exist_ok=True)
        tmp = path.with_suffix(".tmp")
        tmp.write_bytes(encode_prime_cache(table.limit, table.primes))
        tmp.replace(path)
    except OSError as e:
        LOG.warning("Could not write sieve cache %s: %s", path, e)


def sieve_primes(
    limit: int,
    *,
    cache_dir: Optional[Path] = None,
    limit_cap: int = DEFAULT_SETTINGS["sieve_limit_cap"],
) -> PrimeTable:
    """Every prime <= limit.

    Tables are memoized in-process; with ``cache_dir`` they are also read from
    and written to disk. A larger in-memory table is sliced rather than
    re-sieved, and the slice is still written to ``cache_dir``.
    """
    limit = int(limit)
    if limit < 2:
        raise InvalidArgument(f"limit must be >= 2, got {limit}")
    if limit > limit_cap:
        raise ResourceLimitExceeded(f"sieve limit {limit} exceeds configured cap {limit_cap}")

    path = cache_file(cache_dir, limit) if cache_dir is not None else None
    with _SIEVE_LOCK:
        table = _TABLES.get(limit)
        loaded = sieved = False
        if table is None:
            bigger = [t for lim, t in _TABLES.items() if lim > limit]
            if bigger:
                src = min(bigger, key=lambda t: t.limit)
                table = PrimeTable(limit=limit, primes=src.upto(limit))
            elif path is not None:
                table = _read_cache(path, limit)
                loaded = table is not None
        if table is None:
            LOG.info("Sieving primes up to %d", limit)
            table = PrimeTable(limit=limit, primes=_segmented_sieve(limit))
            sieved = True
        if path is not None and not loaded and (sieved or not path.exists()):
            _write_cache(path, table)
        table.primes.setflags(write=False)
        _TABLES[limit] = table
        return table


def _table_for(x: int, table: Optional[PrimeTable], cache_dir: Optional[Path]) -> PrimeTable:
    if table is not None and table.limit >= x:
        return table
    return sieve_primes(max(int(x), 2), cache_dir=cache_dir)


def cache_info(cache_dir: Path) -> List[dict]:
    out = []
    for path in sorted(Path(cache_dir).glob("primes-*.bin")):
        entry = {"path": str(path), "bytes": path.stat().st_size}
        try:
            with open(path, "rb") as f:
                _, _, limit, count = CACHE_HEADER.unpack(f.read(CACHE_HEADER.size))
            entry.update(limit=limit, count=count)
        except (OSError, struct.error) as e:
            entry["error"] = str(e)
        out.append(entry)
    return out


def clear_cache(cache_dir: Path) -> int:
    removed = 0
    for path in Path(cache_dir).glob("primes-*.bin"):
        path.unlink()
        removed += 1
    with _SIEVE_LOCK:
        _TABLES.clear()
    LOG.info("Removed %d sieve cache files from %s", removed, cache_dir)
    return removed


# ----------------------------
# Progressions and sums
# ----------------------------
def _check_progression(x: int, q: int, a: int) -> None:
    if q < 1:
        raise InvalidArgument(f"modulus q must be >= 1, got {q}")
    if x < 2:
        raise InvalidArgument(f"x must be >= 2, got {x}")
    if math.gcd(a, q) != 1:
        raise InvalidArgument(f"gcd({a}, {q}) != 1")


def progression_array(
    x: int, q: int, a: int, *, table: Optional[PrimeTable] = None, cache_dir: Optional[Path] = None
) -> np.ndarray:
    _check_progression(x, q, a)
    primes = _table_for(x, table, cache_dir).upto(x)
    if q == 1:
        return primes
    return primes[primes % q == a % q]


def primes_in_ap(
    x: int, q: int, a: int, *, table: Optional[PrimeTable] = None, cache_dir: Optional[Path] = None
) -> List[int]:
    return [int(p) for p in progression_array(x, q, a, table=table, cache_dir=cache_dir)]


def theta(x: int, q: int, a: int, *, table: Optional[PrimeTable] = None, cache_dir: Optional[Path] = None) -> float:
    ps = progression_array(x, q, a, table=table, cache_dir=cache_dir)
    if ps.size == 0:
        return 0.0
    # cumulative sum keeps the ascending-p summation order
    return float(np.cumsum(np.log(ps.astype(np.float64)))[-1])


def error_term(
    x: int, q: int, a: int, *, table: Optional[PrimeTable] = None, cache_dir: Optional[Path] = None
) -> float:
    return theta(x, q, a, table=table, cache_dir=cache_dir) - x / euler_phi(q)


def prime_count(x: int, *, table: Optional[PrimeTable] = None, cache_dir: Optional[Path] = None) -> int:
    if x < 2:
        return 0
    return int(_table_for(x, table, cache_dir).upto(x).size)


# ----------------------------
# Factorization
# ----------------------------
def factor(n: int) -> FactoredNat:
    n = int(n)
    if n < 1:
        raise InvalidArgument(f"n must be >= 1, got {n}")
    if n >= FACTOR_LIMIT:
        raise InvalidArgument("n exceeds the 128-bit factoring range")
    return FactoredNat(n, {int(p): int(e) for p, e in sorted(factorint(n).items())})


def euler_phi(q: int) -> int:
    f = factor(q)
    phi = 1
    for p, e in f.factors.items():
        phi *= (p - 1) * p ** (e - 1)
    return phi


def radical(m: int) -> int:
    return factor(m).radical


def scales(n: int) -> ScaleValues:
    if n < 3:
        raise InvalidArgument(f"scales need n >= 3 so that log log n > 0, got {n}")
    log_n = math.log(n)
    loglog = math.log(log_n)
    return ScaleValues(n=int(n), ell=log_n / loglog, lam=log_n * log_n / loglog)

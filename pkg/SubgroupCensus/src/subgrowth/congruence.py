"""
congruence.py - congruence-subgroup censuses for SL2(Z)

Every congruence subgroup of level m in SL2(Z) is the preimage of a unique
subgroup of SL2(Z/m), so

    gamma_n = sum_{m=1..n} #{H <= SL2(Z/m) : [SL2(Z/m) : H] <= n}

is computed exactly from the subgroup lattices of the finite quotients.
Quotients whose order exceeds the configured cap are skipped and reported.

The lower-bound pipeline builds the subgroup family carried by the Borel
subgroup over a Bombieri set of primes and reports how close its growth
ratio gets to gamma(R).
"""

from __future__ import annotations

import logging
import math
import threading
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from fractions import Fraction
from functools import lru_cache
from pathlib import Path
from typing import Dict, List, Optional

import numpy as np
from sympy import isprime

from .abelian import log_gaussian_binomial
from .bombieri import find_bombieri_prime
from .config import DEFAULT_SETTINGS
from .errors import InvalidArgument, NoBombieriPrime, PartialCensus, ResourceLimitExceeded
from .extremal import ChevalleyParams, chevalley_R, gamma, ratio_objective
from .finite_groups import FiniteGroup, LatticeEngine
from .numtheory import factor, progression_array, sieve_primes

LOG = logging.getLogger("subgrowth.congruence")

ORDER_CAP = DEFAULT_SETTINGS["group_order_cap"]
ROW_CHUNK_CELLS = 1 << 22
RHO_STEP = 0.01
RHO_FLOOR = 0.05


# ----------------------------
# SL2(Z/m)
# ----------------------------
class Sl2ModM(FiniteGroup):
    """SL2(Z/m) with elements in row-major lexicographic order of (a, b, c, d)."""

    def __init__(self, m: int, matrices: np.ndarray, table: np.ndarray, identity: int, generators: List[int]):
        super().__init__(table, identity=identity, generators=generators, name=f"SL2(Z/{m})")
        self.m = m
        self.matrices = matrices

    @property
    def elements(self) -> List[tuple]:
        return [tuple(int(v) for v in row) for row in self.matrices]

    def index_of(self, a: int, b: int, c: int, d: int) -> int:
        m = self.m
        hits = np.flatnonzero(
            (self.matrices[:, 0] == a % m)
            & (self.matrices[:, 1] == b % m)
            & (self.matrices[:, 2] == c % m)
            & (self.matrices[:, 3] == d % m)
        )
        if hits.size == 0:
            raise InvalidArgument(f"({a} {b}; {c} {d}) is not in SL2(Z/{m})")
        return int(hits[0])

    def reduction_kernel(self, k: int) -> np.ndarray:
        """Mask of matrices congruent to the identity mod k."""
        a, b, c, d = self.matrices.T
        return ((a - 1) % k == 0) & (b % k == 0) & (c % k == 0) & ((d - 1) % k == 0)


def sl2_order(m: int) -> int:
    m = int(m)
    if m < 1:
        raise InvalidArgument(f"m must be >= 1, got {m}")
    order = m ** 3
    for p in factor(m).primes:
        order = order // (p * p) * (p * p - 1)
    return order


def build_sl2(m: int, *, cap: int = ORDER_CAP) -> Sl2ModM:
    m = int(m)
    order = sl2_order(m)
    if order > cap:
        raise ResourceLimitExceeded(f"|SL2(Z/{m})| = {order} exceeds group order cap {cap}")

    grid = np.indices((m, m, m, m)).reshape(4, -1).T.astype(np.int64)
    a, b, c, d = grid.T
    mats = grid[(a * d - b * c - 1) % m == 0]
    n = mats.shape[0]
    if n != order:
        raise AssertionError(f"enumerated {n} elements of SL2(Z/{m}), expected {order}")

    lookup = np.full(m ** 4, -1, dtype=np.int64)
    lookup[((mats[:, 0] * m + mats[:, 1]) * m + mats[:, 2]) * m + mats[:, 3]] = np.arange(n)

    dtype = np.int16 if n < 32768 else np.int32
    table = np.empty((n, n), dtype=dtype)
    rows = max(1, ROW_CHUNK_CELLS // n)
    Y = mats[None, :, :]
    for lo in range(0, n, rows):
        X = mats[lo : lo + rows, None, :]
        pa = (X[..., 0] * Y[..., 0] + X[..., 1] * Y[..., 2]) % m
        pb = (X[..., 0] * Y[..., 1] + X[..., 1] * Y[..., 3]) % m
        pc = (X[..., 2] * Y[..., 0] + X[..., 3] * Y[..., 2]) % m
        pd = (X[..., 2] * Y[..., 1] + X[..., 3] * Y[..., 3]) % m
        table[lo : lo + rows] = lookup[((pa * m + pb) * m + pc) * m + pd]

    def idx(*entries: int) -> int:
        e = [v % m for v in entries]
        return int(lookup[((e[0] * m + e[1]) * m + e[2]) * m + e[3]])

    identity = idx(1, 0, 0, 1)
    # S and T generate SL2(Z), hence every quotient SL2(Z/m)
    gens = sorted({idx(0, -1, 1, 0), idx(1, 1, 0, 1)})
    LOG.debug("Built SL2(Z/%d) with %d elements", m, n)
    return Sl2ModM(m, mats, table, identity, gens)


def order_profile(group: FiniteGroup) -> Dict[int, int]:
    return group.order_profile()


# ----------------------------
# Lattices
# ----------------------------
@dataclass(frozen=True)
class SubgroupRecord:
    key: bytes
    order: int
    index: int
    class_id: int


@dataclass
class SubgroupLattice:
    group_order: int
    subgroups: List[SubgroupRecord]
    counts_by_index: Dict[int, int]
    class_count: int
    index_cap: Optional[int] = None

    @property
    def total(self) -> int:
        return len(self.subgroups)

    def count_index_at_most(self, n: int) -> int:
        return sum(c for i, c in self.counts_by_index.items() if i <= n)

    def to_dict(self) -> dict:
        return {
            "group_order": self.group_order,
            "total": self.total,
            "classes": self.class_count,
            "index_cap": self.index_cap,
            "counts_by_index": {str(i): c for i, c in sorted(self.counts_by_index.items())},
        }


def _run_engine(group: FiniteGroup, cap: int) -> LatticeEngine:
    if group.order > cap:
        raise ResourceLimitExceeded(f"group order {group.order} exceeds cap {cap}")
    LOG.info("Enumerating subgroups of %s (order %d)", group.name, group.order)
    return LatticeEngine(group).run()


def enumerate_subgroups(group: FiniteGroup, index_cap: Optional[int] = None, *, cap: int = ORDER_CAP) -> SubgroupLattice:
    engine = _run_engine(group, cap)
    n = group.order
    records = []
    counts: Dict[int, int] = {}
    for key, _, order in engine.all_masks():
        if n % order:
            raise AssertionError(f"subgroup of order {order} in a group of order {n}")
        index = n // order
        if index_cap is not None and index > index_cap:
            continue
        records.append(SubgroupRecord(key=key, order=order, index=index, class_id=engine.class_of[key]))
        counts[index] = counts.get(index, 0) + 1
    records.sort(key=lambda r: (r.order, r.key))
    return SubgroupLattice(
        group_order=n,
        subgroups=records,
        counts_by_index=dict(sorted(counts.items())),
        class_count=len(engine.classes),
        index_cap=index_cap,
    )


@dataclass(frozen=True)
class _ModulusSummary:
    m: int
    indices: np.ndarray
    exact_level: np.ndarray

    def count(self, n: int, exact: bool = False) -> int:
        sel = self.indices <= n
        if exact:
            sel &= self.exact_level
        return int(sel.sum())


@lru_cache(maxsize=64)
def _modulus_summary(m: int) -> _ModulusSummary:
    group = build_sl2(m, cap=math.inf)
    engine = LatticeEngine(group).run()
    entries = engine.all_masks()
    indices = np.array([group.order // o for _, _, o in entries], dtype=np.int64)
    stack = np.stack([mask for _, mask, _ in entries])
    exact = np.ones(len(entries), dtype=bool)
    for p in factor(m).primes:
        kernel = group.reduction_kernel(m // p)
        exact &= ~stack[:, kernel].all(axis=1)
    return _ModulusSummary(m=m, indices=indices, exact_level=exact)


_LOCKS_GUARD = threading.Lock()
_MODULUS_LOCKS: Dict[int, threading.Lock] = {}


def _summary(m: int) -> _ModulusSummary:
    # one enumeration per modulus even when censuses overlap
    with _LOCKS_GUARD:
        lock = _MODULUS_LOCKS.setdefault(m, threading.Lock())
    with lock:
        return _modulus_summary(m)


@dataclass
class CensusResult:
    n: int
    total: int
    per_modulus: Dict[int, int] = field(default_factory=dict)
    level_truncated: bool = False

    def to_dict(self) -> dict:
        return {
            "n": self.n,
            "total": self.total,
            "level_truncated": self.level_truncated,
            "per_modulus": [{"m": m, "count": c} for m, c in sorted(self.per_modulus.items())],
        }


def _census(n: int, *, exact: bool, cap: int, threads: int) -> CensusResult:
    n = int(n)
    if n < 1:
        raise InvalidArgument(f"n must be >= 1, got {n}")
    moduli = [m for m in range(1, n + 1) if sl2_order(m) <= cap]
    skipped = [m for m in range(1, n + 1) if sl2_order(m) > cap]

    def work(m: int) -> int:
        return _summary(m).count(n, exact=exact)

    with ThreadPoolExecutor(max_workers=max(1, int(threads))) as pool:
        counts = dict(zip(moduli, pool.map(work, moduli)))

    result = CensusResult(n=n, total=sum(counts.values()), per_modulus=counts, level_truncated=exact)
    if skipped:
        raise PartialCensus(
            f"moduli {skipped} exceed group order cap {cap}",
            partial={"computed": {str(m): c for m, c in counts.items()}, "skipped": skipped},
        )
    LOG.info("Census n=%d: %d (%s)", n, result.total, "level-truncated" if exact else "gamma_n")
    return result


def modulus_census(n: int, *, cap: int = ORDER_CAP, threads: int = 1) -> CensusResult:
    return _census(n, exact=False, cap=cap, threads=threads)


def gamma_n(n: int, *, cap: int = ORDER_CAP, threads: int = 1) -> int:
    return modulus_census(n, cap=cap, threads=threads).total


def level_truncated_census(n: int, *, cap: int = ORDER_CAP, threads: int = 1) -> CensusResult:
    """Subgroups of exact level m <= n and index <= n, summed over m."""
    return _census(n, exact=True, cap=cap, threads=threads)


# ----------------------------
# Maximal subgroups of SL2(F_q)
# ----------------------------
EXCEPTIONAL_MAX_ORDER = 120


def _maximal_kind(q: int, order: int) -> Optional[str]:
    if order == q * (q - 1):
        return "borel"
    if order in (2 * (q - 1), 2 * (q + 1)):
        return "dihedral"
    if q == 2 and order == q + 1:
        # the nonsplit torus is normal in S3, so the torus itself is maximal
        return "dihedral"
    if order <= EXCEPTIONAL_MAX_ORDER:
        return "exceptional"
    return None


@dataclass
class MaximalSubgroupReport:
    q: int
    group_order: int
    classes: List[dict]
    degenerate: bool

    @property
    def all_classified(self) -> bool:
        return all(c["kind"] is not None for c in self.classes)

    @property
    def orders(self) -> List[int]:
        return [c["order"] for c in self.classes]

    def to_dict(self) -> dict:
        return {
            "q": self.q,
            "group_order": self.group_order,
            "degenerate": self.degenerate,
            "all_classified": self.all_classified,
            "classes": self.classes,
        }


def classify_maximal_subgroups(q: int, *, cap: int = ORDER_CAP) -> MaximalSubgroupReport:
    q = int(q)
    if not isprime(q):
        raise InvalidArgument(f"q={q} is not prime")
    group = build_sl2(q, cap=cap)
    engine = LatticeEngine(group).run()
    classes = []
    for cid in engine.maximal_classes():
        cls = engine.classes[cid]
        classes.append({"order": cls.order, "conjugates": cls.size, "kind": _maximal_kind(q, cls.order)})
    classes.sort(key=lambda c: (-c["order"], c["conjugates"]))
    report = MaximalSubgroupReport(q=q, group_order=group.order, classes=classes, degenerate=q == 2)
    if not report.all_classified:
        bad = [c["order"] for c in classes if c["kind"] is None]
        raise AssertionError(f"SL2(F_{q}) has unclassified maximal subgroups of orders {bad}")
    LOG.info("SL2(F_%d): %d maximal classes, orders %s", q, len(classes), report.orders)
    return report


# ----------------------------
# Lower-bound construction
# ----------------------------
def borel_index(params: ChevalleyParams, p: int) -> int:
    """[G(F_p) : B(F_p)] = prod_i (p^{d_i} - 1)/(p - 1) over the Weyl degrees."""
    p = int(p)
    if not isprime(p):
        raise InvalidArgument(f"p={p} is not prime")
    out = 1
    for d in params.degrees:
        out *= (p ** d - 1) // (p - 1)
    return out


def _log_borel_index(params: ChevalleyParams, primes: np.ndarray) -> float:
    ps = primes.astype(np.float64)
    log_p = np.log(ps)
    total = np.zeros_like(ps)
    for d in params.degrees:
        total += d * log_p + np.log1p(-np.power(ps, -float(d))) - np.log(ps - 1.0)
    return float(np.sum(total))


@dataclass(frozen=True)
class ConstructionReport:
    x: int
    rho0: float
    sigma: float
    q: int
    L: int
    log_P: float
    rk: int
    dim: int
    R: Fraction
    nu: int
    log_subgroup_count: float
    log_borel_index: float
    log_index: float
    ratio: float
    rho_scanned: float
    rho_effective: float
    predicted_ratio: float
    gamma_R: float

    def to_dict(self) -> dict:
        return {
            "x": self.x,
            "rho0": self.rho0,
            "sigma": self.sigma,
            "q": self.q,
            "L": self.L,
            "log_P": self.log_P,
            "rk": self.rk,
            "dim": self.dim,
            "R": str(self.R),
            "nu": self.nu,
            "log_subgroup_count": self.log_subgroup_count,
            "log_borel_index": self.log_borel_index,
            "log_index": self.log_index,
            "ratio": self.ratio,
            "rho_scanned": self.rho_scanned,
            "rho_effective": self.rho_effective,
            "predicted_ratio": self.predicted_ratio,
            "gamma_R": self.gamma_R,
        }


def _scan_near(x: int, rho0: float, step: float, threads: int, cache_dir: Optional[Path]):
    """Scan at rho0, then at rho0 - step, rho0 - 2 step, ... down to RHO_FLOOR.

    Returns the first scan holding a certificate, or None, plus a summary of
    every attempt. Empty scan intervals are skipped.
    """
    attempts: List[dict] = []
    k = 0
    rho = rho0
    while rho >= RHO_FLOOR:
        try:
            scan = find_bombieri_prime(x, rho, threads=threads, cache_dir=cache_dir)
        except InvalidArgument as e:
            attempts.append({"rho": rho, "skipped": str(e)})
        else:
            attempts.append(scan.to_dict())
            if scan.certificate is not None:
                if k:
                    LOG.info("Bombieri prime for x=%d found at rho=%.4f (asked %.4f)", x, rho, rho0)
                return scan, rho, attempts
        k += 1
        rho = rho0 - k * step
    return None, None, attempts


def lower_bound_construction(
    x: int,
    rho0: float,
    sigma: float,
    params: Optional[ChevalleyParams] = None,
    *,
    threads: int = 1,
    cache_dir: Optional[Path] = None,
    rho_step: float = RHO_STEP,
) -> ConstructionReport:
    """Borel-carried subgroup family over a Bombieri set near x^rho0.

    When no prime in the scan interval for rho0 is certified, rho is lowered in
    steps of ``rho_step`` until one is; the report carries the rho used.
    """
    if not 0 <= sigma < 1:
        raise InvalidArgument(f"sigma must lie in [0, 1), got {sigma}")
    if not 0 < rho0 < 0.5:
        raise InvalidArgument(f"rho0 must lie in (0, 1/2), got {rho0}")
    if rho_step <= 0:
        raise InvalidArgument(f"rho_step must be positive, got {rho_step}")
    params = params or chevalley_R("A", 1)
    x = int(x)

    scan, rho_scanned, attempts = _scan_near(x, rho0, rho_step, threads, cache_dir)
    if scan is None:
        raise NoBombieriPrime(
            f"no Bombieri prime for x={x} at rho in [{RHO_FLOOR}, {rho0}]",
            diagnostics={"attempts": attempts},
        )
    cert = scan.certificate

    q, L = cert.q, cert.set_size
    primes = progression_array(x, q, 1, table=sieve_primes(x, cache_dir=cache_dir))
    rk = params.ell
    nu = math.ceil(Fraction(repr(float(sigma))) * rk * L)

    log_count = log_gaussian_binomial(rk * L, nu, q)
    log_borel = _log_borel_index(params, primes)
    log_index = nu * math.log(q) + log_borel
    loglog = math.log(log_index)
    ratio = log_count / (log_index * log_index / loglog)

    rho_eff = math.log(q) / math.log(x)
    report = ConstructionReport(
        x=x,
        rho0=rho0,
        sigma=sigma,
        q=q,
        L=L,
        log_P=cert.log_P,
        rk=rk,
        dim=params.dim,
        R=params.R,
        nu=nu,
        log_subgroup_count=log_count,
        log_borel_index=log_borel,
        log_index=log_index,
        ratio=ratio,
        rho_scanned=rho_scanned,
        rho_effective=rho_eff,
        predicted_ratio=float(ratio_objective(sigma, rho_eff, float(params.R))),
        gamma_R=gamma(params.R),
    )
    LOG.info("Construction x=%d q=%d L=%d nu=%d ratio=%.5f", x, q, L, nu, ratio)
    return report

"""
abelian.py - subgroup counting in finite abelian groups

Groups are given as products of cyclic groups C_{x_1} x ... x C_{x_t}. Counting
never materializes elements: each Sylow p-subgroup is described by its layer
type (the conjugate partition of the p-adic valuations of the x_j) and the
subgroups of a given layer type are counted with Butler's product formula.
Counts over different primes multiply.

``brute_force_lattice`` is the slow element-level oracle used by the tests.
"""

from __future__ import annotations

import logging
import math
from collections import Counter, deque
from dataclasses import dataclass, field
from functools import lru_cache
from typing import Dict, Iterable, Iterator, List, Optional, Sequence, Tuple, Union

import numpy as np
from sympy import factorint, isprime

from .config import DEFAULT_SETTINGS
from .errors import InvalidArgument, ResourceLimitExceeded

LOG = logging.getLogger("subgrowth.abelian")

# values with fewer bits than this are built exactly before taking the log
EXACT_LOG_BITS = 20_000
MAX_LAYER_SEQUENCES = 5_000_000


# ----------------------------
# Domain types
# ----------------------------
@dataclass(frozen=True)
class AbelianGroupSpec:
    cyclic_orders: Tuple[int, ...] = ()

    def __post_init__(self):
        orders = tuple(sorted((int(x) for x in self.cyclic_orders), reverse=True))
        for x in orders:
            if x < 2:
                raise InvalidArgument(f"cyclic orders must be >= 2, got {x}")
        object.__setattr__(self, "cyclic_orders", orders)

    @classmethod
    def from_orders(cls, orders: Union[str, Iterable[int]]) -> "AbelianGroupSpec":
        if isinstance(orders, str):
            parts = [s.strip() for s in orders.split(",") if s.strip()]
            try:
                orders = [int(s) for s in parts]
            except ValueError as e:
                raise InvalidArgument(f"orders must be a comma list of integers: {e}") from None
        return cls(tuple(orders))

    @property
    def order(self) -> int:
        return math.prod(self.cyclic_orders)

    @property
    def rank(self) -> int:
        return len(self.cyclic_orders)

    @property
    def primes(self) -> List[int]:
        return sorted({p for x in self.cyclic_orders for p in factorint(x)})

    def valuations(self, p: int) -> List[int]:
        out = []
        for x in self.cyclic_orders:
            e = 0
            while x % p == 0:
                x //= p
                e += 1
            out.append(e)
        return out

    def to_dict(self) -> dict:
        return {"cyclic_orders": list(self.cyclic_orders), "order": self.order}


@dataclass(frozen=True)
class LayerType:
    p: int
    lambdas: Tuple[int, ...]

    def __post_init__(self):
        lams = tuple(int(v) for v in self.lambdas)
        if any(v < 1 for v in lams):
            raise InvalidArgument(f"layer dimensions must be >= 1, got {lams}")
        if any(a < b for a, b in zip(lams, lams[1:])):
            raise InvalidArgument(f"layer type must be nonincreasing, got {lams}")
        object.__setattr__(self, "lambdas", lams)

    @property
    def exponent(self) -> int:
        return sum(self.lambdas)

    def to_dict(self) -> dict:
        return {"p": self.p, "lambdas": list(self.lambdas)}


@dataclass
class SubgroupLatticeAb:
    spec: AbelianGroupSpec
    subgroups: List[Tuple[Tuple[Tuple[int, ...], ...], int]] = field(default_factory=list)
    counts_by_order: Dict[int, int] = field(default_factory=dict)

    @property
    def total(self) -> int:
        return len(self.subgroups)


# ----------------------------
# Layer types and Gaussian binomials
# ----------------------------
def layer_type(spec: AbelianGroupSpec, p: int) -> LayerType:
    if spec.order % p != 0 or not isprime(p):
        raise InvalidArgument(f"{p} is not a prime divisor of |G| = {spec.order}")
    vals = spec.valuations(p)
    return LayerType(p, tuple(sum(1 for e in vals if e >= i) for i in range(1, max(vals) + 1)))


def layer_types(spec: AbelianGroupSpec) -> List[LayerType]:
    return [layer_type(spec, p) for p in spec.primes]


@lru_cache(maxsize=65536)
def gaussian_binomial(lam: int, nu: int, p: int) -> int:
    """Number of nu-dimensional subspaces of F_p^lam."""
    if lam < 0 or nu < 0:
        raise InvalidArgument(f"gaussian_binomial needs nonnegative arguments, got ({lam}, {nu})")
    if nu > lam:
        return 0
    nu = min(nu, lam - nu)
    num = den = 1
    for i in range(nu):
        num *= p ** (lam - i) - 1
        den *= p ** (i + 1) - 1
    return num // den


def _log_pk_minus_one(k: int, log_p: float, p: int) -> float:
    return k * log_p + math.log1p(-float(p) ** -k)


def log_gaussian_binomial(lam: int, nu: int, p: int) -> float:
    """Natural log of gaussian_binomial(lam, nu, p).

    Small values are built exactly. Beyond EXACT_LOG_BITS the log is summed
    factor by factor, which stays accurate for q^{L^2}-sized counts.
    """
    if lam < 0 or nu < 0:
        raise InvalidArgument(f"gaussian_binomial needs nonnegative arguments, got ({lam}, {nu})")
    if nu > lam:
        return float("-inf")
    nu = min(nu, lam - nu)
    if nu == 0:
        return 0.0
    if nu * (lam - nu + 1) * max(1, p.bit_length()) <= EXACT_LOG_BITS:
        return math.log(gaussian_binomial(lam, nu, p))
    log_p = math.log(p)
    return math.fsum(
        _log_pk_minus_one(lam - i, log_p, p) - _log_pk_minus_one(i + 1, log_p, p) for i in range(nu)
    )


# ----------------------------
# Butler's formula
# ----------------------------
def _check_nus(nus: Sequence[int]) -> Tuple[int, ...]:
    nus = tuple(int(v) for v in nus)
    if any(v < 0 for v in nus):
        raise InvalidArgument(f"nu entries must be >= 0, got {nus}")
    if any(a < b for a, b in zip(nus, nus[1:])):
        raise InvalidArgument(f"nu sequence must be nonincreasing, got {nus}")
    return nus


def count_by_layer_type(glam: LayerType, nus: Sequence[int]) -> int:
    """Subgroups of layer type nus inside an abelian p-group of layer type glam.

    prod_i p^{nu_{i+1}(lam_i - nu_i)} * [lam_i - nu_{i+1} choose nu_i - nu_{i+1}]_p
    """
    nus = _check_nus(nus)
    lams = glam.lambdas
    width = max(len(lams), len(nus))
    lam = lams + (0,) * (width - len(lams))
    nu = nus + (0,) * (width + 1 - len(nus))
    if any(nu[i] > lam[i] for i in range(width)):
        return 0
    p = glam.p
    total = 1
    for i in range(width):
        total *= p ** (nu[i + 1] * (lam[i] - nu[i])) * gaussian_binomial(lam[i] - nu[i + 1], nu[i] - nu[i + 1], p)
    return total


def layer_count_bounds(glam: LayerType, nus: Sequence[int]) -> Tuple[int, int]:
    """(prod p^{nu_i(lam_i-nu_i)}, p^{nu_1} times that) bracketing count_by_layer_type."""
    nus = _check_nus(nus)
    p = glam.p
    core = 1
    for lam_i, nu_i in zip(glam.lambdas, nus):
        core *= p ** (nu_i * (lam_i - nu_i))
    return core, core * p ** (nus[0] if nus else 0)


def sub_partitions(lambdas: Sequence[int], max_size: Optional[int] = None) -> Iterator[Tuple[int, ...]]:
    """Nonincreasing nu with nu_i <= lambda_i (trailing zeros dropped), sum <= max_size."""
    lams = tuple(lambdas)
    budget = sum(lams) if max_size is None else max_size

    def walk(i: int, cap: int, left: int, acc: Tuple[int, ...]) -> Iterator[Tuple[int, ...]]:
        yield acc
        if i == len(lams):
            return
        for v in range(1, min(cap, lams[i], left) + 1):
            yield from walk(i + 1, v, left - v, acc + (v,))

    if budget < 0:
        return
    yield from walk(0, lams[0] if lams else 0, budget, ())


@lru_cache(maxsize=4096)
def _prime_profile(p: int, lambdas: Tuple[int, ...]) -> Tuple[int, ...]:
    """counts[k] = number of subgroups of order p^k."""
    counts = [0] * (sum(lambdas) + 1)
    glam = LayerType(p, lambdas)
    for seen, nus in enumerate(sub_partitions(lambdas), start=1):
        if seen > MAX_LAYER_SEQUENCES:
            raise ResourceLimitExceeded(f"more than {MAX_LAYER_SEQUENCES} layer types below {lambdas}")
        counts[sum(nus)] += count_by_layer_type(glam, nus)
    return tuple(counts)


def order_profile(spec: AbelianGroupSpec) -> Dict[int, int]:
    """Map subgroup order -> number of subgroups of that order."""
    profile = {1: 1}
    for glam in layer_types(spec):
        counts = _prime_profile(glam.p, glam.lambdas)
        nxt: Dict[int, int] = {}
        for o, c in profile.items():
            for k, ck in enumerate(counts):
                if ck:
                    key = o * glam.p ** k
                    nxt[key] = nxt.get(key, 0) + c * ck
        profile = nxt
    return dict(sorted(profile.items()))


def _check_size(spec: AbelianGroupSpec, order_cap: Optional[int]) -> None:
    if order_cap is not None and spec.order > order_cap:
        raise ResourceLimitExceeded(f"|G| = {spec.order} exceeds counting cap {order_cap}")


def count_all_subgroups(spec: AbelianGroupSpec, *, order_cap: Optional[int] = None) -> int:
    _check_size(spec, order_cap)
    total = 1
    for glam in layer_types(spec):
        total *= sum(_prime_profile(glam.p, glam.lambdas))
    return total


def count_subgroups_order_at_most(spec: AbelianGroupSpec, r: int, *, order_cap: Optional[int] = None) -> int:
    _check_size(spec, order_cap)
    r = int(r)
    if r < 1:
        return 0
    states = {1: 1}
    for glam in layer_types(spec):
        counts = _prime_profile(glam.p, glam.lambdas)
        nxt: Dict[int, int] = {}
        for o, c in states.items():
            step = o
            for ck in counts:
                if step > r:
                    break
                if ck:
                    nxt[step] = nxt.get(step, 0) + c * ck
                step *= glam.p
        states = nxt
    return sum(states.values())


def count_subgroups_index_at_most(spec: AbelianGroupSpec, n: int, *, order_cap: Optional[int] = None) -> int:
    """Subgroups of index <= n, via order >= ceil(|G|/n) (duality)."""
    n = int(n)
    if n < 1:
        raise InvalidArgument(f"index bound must be >= 1, got {n}")
    threshold = -(-spec.order // n)
    return count_all_subgroups(spec, order_cap=order_cap) - count_subgroups_order_at_most(
        spec, threshold - 1, order_cap=order_cap
    )


def endomorphism_count(spec: AbelianGroupSpec) -> int:
    xs = spec.cyclic_orders
    return math.prod(math.gcd(a, b) for a in xs for b in xs)


def endomorphism_count_from_layers(spec: AbelianGroupSpec) -> int:
    return math.prod(g.p ** sum(v * v for v in g.lambdas) for g in layer_types(spec))


def invariant_factors(spec: AbelianGroupSpec) -> Tuple[int, ...]:
    """d_1 | d_2 | ... form, returned largest first."""
    width = spec.rank
    factors = [1] * width
    for p in spec.primes:
        for k, e in enumerate(sorted(spec.valuations(p), reverse=True)):
            factors[k] *= p ** e
    return tuple(d for d in factors if d > 1)


def subgroup_bounds(spec: AbelianGroupSpec) -> dict:
    """Layer and End-count sandwiches around |Sub(G)|, in logs.

    |G|^-1 prod p^{lam_i^2/4} <= |Sub(G)| <= |G|^2 prod p^{lam_i^2/4}
    and prod p^{lam_i^2} = |End(G)|.
    """
    log_g = math.log(spec.order) if spec.order > 1 else 0.0
    log_quarter_end = sum(sum(v * v for v in g.lambdas) * math.log(g.p) for g in layer_types(spec)) / 4.0
    return {
        "log_lower": log_quarter_end - log_g,
        "log_upper": log_quarter_end + 2.0 * log_g,
        "log_end": 4.0 * log_quarter_end,
    }


def sandwich_holds(spec: AbelianGroupSpec, total: Optional[int] = None) -> bool:
    """Exact check of |G|^-1 |End|^(1/4) <= |Sub| <= |G|^2 |End|^(1/4), in fourth powers."""
    sub = count_all_subgroups(spec) if total is None else total
    end = endomorphism_count(spec)
    g4 = spec.order ** 4
    return end <= (sub ** 4) * g4 and sub ** 4 <= g4 * g4 * end


# ----------------------------
# Brute-force oracle
# ----------------------------
class _ElementTable:
    """Elements as mixed-radix indices; coordinates kept in a (N, t) array."""

    def __init__(self, spec: AbelianGroupSpec):
        self.mods = np.array(spec.cyclic_orders, dtype=np.int64)
        self.size = spec.order
        strides = [1] * spec.rank
        for i in range(spec.rank - 2, -1, -1):
            strides[i] = strides[i + 1] * spec.cyclic_orders[i + 1]
        self.strides = np.array(strides, dtype=np.int64)
        idx = np.arange(self.size, dtype=np.int64)
        self.coords = (idx[:, None] // self.strides[None, :]) % self.mods[None, :]

    def index(self, coords: np.ndarray) -> np.ndarray:
        return (coords % self.mods) @ self.strides

    def cyclic(self, g: int) -> np.ndarray:
        c = self.coords[g]
        out = [0]
        cur = c.copy()
        while True:
            j = int(self.index(cur))
            if j == 0:
                return np.array(out, dtype=np.int64)
            out.append(j)
            cur = cur + c

    def join(self, elems: np.ndarray, cyc: np.ndarray) -> np.ndarray:
        sums = self.coords[elems][:, None, :] + self.coords[cyc][None, :, :]
        return np.unique(self.index(sums.reshape(-1, self.mods.size)))


def brute_force_lattice(
    spec: AbelianGroupSpec, *, cap: int = DEFAULT_SETTINGS["lattice_cap"]
) -> SubgroupLatticeAb:
    """All subgroups, found by joining cyclic subgroups onto known ones (BFS from {0})."""
    if spec.order > cap:
        raise ResourceLimitExceeded(f"|G| = {spec.order} exceeds lattice cap {cap}")
    table = _ElementTable(spec)
    n = table.size

    cyclics: Dict[bytes, Tuple[int, np.ndarray]] = {}
    for g in range(n):
        elems = table.cyclic(g)
        mask = np.zeros(n, dtype=bool)
        mask[elems] = True
        cyclics.setdefault(np.packbits(mask).tobytes(), (g, elems))

    def key_of(elems: np.ndarray) -> bytes:
        mask = np.zeros(n, dtype=bool)
        mask[elems] = True
        return np.packbits(mask).tobytes()

    trivial = np.zeros(1, dtype=np.int64)
    seen: Dict[bytes, Tuple[Tuple[int, ...], np.ndarray]] = {key_of(trivial): ((), trivial)}
    queue = deque([key_of(trivial)])
    while queue:
        key = queue.popleft()
        gens, elems = seen[key]
        members = set(elems.tolist())
        for g, cyc in cyclics.values():
            if g in members:
                continue
            joined = table.join(elems, cyc)
            jkey = key_of(joined)
            if jkey not in seen:
                seen[jkey] = (gens + (g,), joined)
                queue.append(jkey)

    lattice = SubgroupLatticeAb(spec=spec)
    for gens, elems in seen.values():
        generators = tuple(tuple(int(c) for c in table.coords[g]) for g in gens)
        lattice.subgroups.append((generators, int(elems.size)))
    lattice.subgroups.sort(key=lambda s: (s[1], s[0]))
    lattice.counts_by_order = dict(sorted(Counter(order for _, order in lattice.subgroups).items()))
    LOG.debug("brute-force lattice of %s: %d subgroups", spec.cyclic_orders, lattice.total)
    return lattice


def brute_force_endomorphisms(spec: AbelianGroupSpec, *, cap: int = DEFAULT_SETTINGS["lattice_cap"]) -> int:
    """prod_j #{g in G : x_j g = 0}, counted over explicit elements."""
    if spec.order > cap:
        raise ResourceLimitExceeded(f"|G| = {spec.order} exceeds lattice cap {cap}")
    table = _ElementTable(spec)
    total = 1
    for x in spec.cyclic_orders:
        killed = np.all((table.coords * x) % table.mods == 0, axis=1)
        total *= int(killed.sum())
    return total

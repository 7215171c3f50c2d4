"""
extremal.py - extremal constants and optimization problems

Covers:
  * gamma(R) and the continuous ratio sigma(1-sigma)rho(1-rho)/(sigma rho + R)^2
  * Chevalley parameters R = kappa/ell
  * the sequence-pair budget problem (normal-form optimizer + knapsack oracle)
  * product lower bound for multisets with bounded repetition
  * gcd-product maximization over primes (M2) and integers (M1)
  * the abelian reduction target f(n) and the uniform-group exponents

Exact quantities use int / Fraction; floats appear only for logs and the
continuous ratio.
"""

from __future__ import annotations

import itertools
import logging
import math
from bisect import bisect_right
from collections import Counter
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from fractions import Fraction
from functools import lru_cache
from typing import Dict, Iterable, List, Optional, Sequence, Tuple, Union

import numpy as np
from scipy.optimize import minimize_scalar
from sympy import nextprime

from .abelian import (
    AbelianGroupSpec,
    count_all_subgroups,
    count_subgroups_index_at_most,
    count_subgroups_order_at_most,
)
from .config import DEFAULT_SETTINGS
from .errors import InvalidArgument, ResourceLimitExceeded
from .numtheory import primes_in_ap, scales, sieve_primes

LOG = logging.getLogger("subgrowth.extremal")

Number = Union[int, float, Fraction, str]

E_UPPER = Fraction("2.7182818285")
SQRT2 = math.sqrt(2.0)
# lcm(1..16); primes whose p-1 shares more with it are tried first
SMOOTH_LCM = 720720


def _as_fraction(value: Number) -> Fraction:
    if isinstance(value, Fraction):
        return value
    try:
        if isinstance(value, float):
            return Fraction(repr(value))
        return Fraction(value)
    except (ValueError, ZeroDivisionError) as e:
        raise InvalidArgument(f"not a rational number: {value!r}") from e


# ----------------------------
# gamma(R) and the continuous ratio
# ----------------------------
def optimal_point(R: float) -> float:
    """sqrt(R(R+1)) - R, written without cancellation."""
    return R / (math.sqrt(R * (R + 1.0)) + R)


def gamma(R: Number) -> float:
    R = float(R)
    if not (math.isfinite(R) and R > 0):
        raise InvalidArgument(f"R must be positive and finite, got {R}")
    s = optimal_point(R)
    return s * s / (4.0 * R * R)


def ratio_objective(sigma, rho, R: float):
    return sigma * (1 - sigma) * rho * (1 - rho) / (sigma * rho + R) ** 2


@dataclass(frozen=True)
class RatioOptimum:
    R: float
    sigma: float
    rho: float
    value: float
    closed_form_point: float
    closed_form_value: float
    sweeps: int

    def to_dict(self) -> dict:
        return {
            "R": self.R,
            "sigma": self.sigma,
            "rho": self.rho,
            "value": self.value,
            "closed_form_point": self.closed_form_point,
            "closed_form_value": self.closed_form_value,
            "sweeps": self.sweeps,
        }


def maximize_ratio(R: Number, *, grid: int = 200, sweeps: int = 60, xatol: float = 1e-10) -> RatioOptimum:
    """Coarse grid over (0,1)^2, then alternating bounded 1-D maximizations."""
    R = float(R)
    if not (math.isfinite(R) and R > 0):
        raise InvalidArgument(f"R must be positive and finite, got {R}")
    axis = (np.arange(grid) + 0.5) / grid
    S, P = np.meshgrid(axis, axis, indexing="ij")
    i, j = np.unravel_index(int(np.argmax(ratio_objective(S, P, R))), S.shape)
    sigma, rho = float(axis[i]), float(axis[j])

    done = 0
    for done in range(1, sweeps + 1):
        prev_sigma, prev_rho = sigma, rho
        sigma = float(
            minimize_scalar(
                lambda s, r=rho: -ratio_objective(s, r, R), bounds=(0.0, 1.0), method="bounded", options={"xatol": xatol}
            ).x
        )
        rho = float(
            minimize_scalar(
                lambda r, s=sigma: -ratio_objective(s, r, R), bounds=(0.0, 1.0), method="bounded", options={"xatol": xatol}
            ).x
        )
        if abs(sigma - prev_sigma) < xatol and abs(rho - prev_rho) < xatol:
            break

    LOG.debug("maximize_ratio R=%s -> (%.10f, %.10f) after %d sweeps", R, sigma, rho, done)
    return RatioOptimum(
        R=R,
        sigma=sigma,
        rho=rho,
        value=float(ratio_objective(sigma, rho, R)),
        closed_form_point=optimal_point(R),
        closed_form_value=gamma(R),
        sweeps=done,
    )


# ----------------------------
# Chevalley parameters
# ----------------------------
@dataclass(frozen=True)
class ChevalleyParams:
    family: str
    ell: int
    dim: int
    kappa: int
    R: Fraction
    degrees: Tuple[int, ...]

    @property
    def name(self) -> str:
        return f"{self.family}{self.ell}"

    def to_dict(self) -> dict:
        return {
            "family": self.family,
            "ell": self.ell,
            "dim": self.dim,
            "kappa": self.kappa,
            "R": str(self.R),
            "degrees": list(self.degrees),
        }


_EXCEPTIONAL = {
    ("G", 2): (14, (2, 6)),
    ("F", 4): (52, (2, 6, 8, 12)),
    ("E", 6): (78, (2, 5, 6, 8, 9, 12)),
    ("E", 7): (133, (2, 6, 8, 10, 12, 14, 18)),
    ("E", 8): (248, (2, 8, 12, 14, 18, 20, 24, 30)),
}
_MIN_RANK = {"A": 1, "B": 2, "C": 2, "D": 3}


def chevalley_R(family: str, ell: Optional[int] = None) -> ChevalleyParams:
    """Dimension, positive roots, degrees and R = kappa/ell for a simple type.

    Accepts ("E", 8) as well as ("E8",).
    """
    fam = str(family).strip().upper()
    if not fam or fam[0] not in "ABCDEFG":
        raise InvalidArgument(f"unknown Chevalley family {family!r}")
    letter, suffix = fam[0], fam[1:]
    if suffix:
        try:
            named_rank = int(suffix)
        except ValueError:
            raise InvalidArgument(f"unknown Chevalley family {family!r}") from None
        if ell is not None and int(ell) != named_rank:
            raise InvalidArgument(f"rank {ell} contradicts family name {family!r}")
        ell = named_rank
    if ell is None:
        raise InvalidArgument(f"family {family!r} needs a rank")
    ell = int(ell)

    if letter in _MIN_RANK:
        if ell < _MIN_RANK[letter]:
            raise InvalidArgument(f"{letter}_{ell} is not a valid type (rank >= {_MIN_RANK[letter]})")
        if letter == "A":
            dim, degrees = ell * (ell + 2), tuple(range(2, ell + 2))
        elif letter in "BC":
            dim, degrees = ell * (2 * ell + 1), tuple(range(2, 2 * ell + 1, 2))
        else:
            dim, degrees = ell * (2 * ell - 1), tuple(sorted(list(range(2, 2 * ell - 1, 2)) + [ell]))
    elif (letter, ell) in _EXCEPTIONAL:
        dim, degrees = _EXCEPTIONAL[(letter, ell)]
    else:
        raise InvalidArgument(f"{letter}_{ell} is not a valid type")

    kappa = (dim - ell) // 2
    return ChevalleyParams(family=letter, ell=ell, dim=dim, kappa=kappa, R=Fraction(kappa, ell), degrees=degrees)


def conjectured_alpha(family: str, ell: Optional[int] = None) -> dict:
    params = chevalley_R(family, ell)
    R = float(params.R)
    return {"params": params.to_dict(), "gamma": gamma(R), "large_R_asymptote": 1.0 / (16.0 * R * R)}


# ----------------------------
# Sequence pairs under a budget
# ----------------------------
@dataclass(frozen=True)
class SequencePair:
    R: Fraction
    t: int
    C: int
    lambdas: Tuple[int, ...] = ()
    nus: Tuple[int, ...] = ()

    @property
    def cost(self) -> Fraction:
        return sum((self.R * l + v for l, v in zip(self.lambdas, self.nus)), Fraction(0))

    @property
    def objective(self) -> int:
        return sum(v * (l - v) for l, v in zip(self.lambdas, self.nus))

    def is_feasible(self) -> bool:
        return (
            len(self.lambdas) == len(self.nus)
            and all(0 <= l <= self.t for l in self.lambdas)
            and all(v >= 0 for v in self.nus)
            and self.cost <= self.C
        )

    def in_normal_form(self) -> bool:
        lams, nus = self.lambdas, self.nus
        r = len(lams)
        if r == 0:
            return True
        if any(a < b for a, b in zip(lams, lams[1:])) or any(a < b for a, b in zip(nus, nus[1:])):
            return False
        if nus[-1] < 1 or any(l < v for l, v in zip(lams, nus)):
            return False
        if any(l != self.t for l in lams[:-1]):
            return False
        head = nus[:-1]
        if head and head[0] - head[-1] > 1:
            return False
        if lams[-1] == self.t and nus[-1] not in (nus[0], nus[0] - 1):
            return False
        return True

    def to_dict(self) -> dict:
        return {
            "R": str(self.R),
            "t": self.t,
            "C": self.C,
            "lambdas": list(self.lambdas),
            "nus": list(self.nus),
            "objective": self.objective,
            "cost": str(self.cost),
        }


def _check_pair_args(R: Number, C: int, t: int) -> Fraction:
    R = _as_fraction(R)
    if R < 1:
        raise InvalidArgument(f"R must be >= 1, got {R}")
    if C < 0:
        raise InvalidArgument(f"budget C must be >= 0, got {C}")
    if t < 1:
        raise InvalidArgument(f"t must be >= 1, got {t}")
    return R


def optimize_sequence_pair(R: Number, C: int, t: int) -> SequencePair:
    """Best pair among normal-form candidates.

    Candidates have r terms: lambda = (t,...,t, lam_r); the first r-1 nus are
    a repeated b times then a-1; the last nu is free below nu_{r-1} and lam_r
    (tied to {a, a-1} when lam_r = t). Ties go to the cheaper pair, then to the
    lexicographically smaller one.
    """
    R = _check_pair_args(R, C, t)
    best = SequencePair(R, t, C)
    best_key = (0, Fraction(0), (0, (), ()))

    max_terms = int(C // (R + 1))
    for r in range(1, max_terms + 1):
        head_floor = R * t * (r - 1)
        if head_floor + R + 1 > C:
            break
        for a in range(1, t + 1):
            for b in range(r):
                head = (a,) * b + (a - 1,) * (r - 1 - b)
                if head and head[-1] < 1:
                    continue
                head_cost = head_floor + sum(head)
                cap = head[-1] if head else a
                for lam_r in range(1, t + 1):
                    for nu_r in range(1, min(lam_r, cap) + 1):
                        if head_cost + R * lam_r + nu_r > C:
                            break
                        nu_1 = head[0] if head else nu_r
                        if lam_r == t and nu_r not in (nu_1, nu_1 - 1):
                            continue
                        pair = SequencePair(R, t, C, (t,) * (r - 1) + (lam_r,), head + (nu_r,))
                        key = (-pair.objective, pair.cost, (r, pair.lambdas, pair.nus))
                        if key < best_key:
                            best, best_key = pair, key
    return best


def exhaustive_sequence_pair(R: Number, C: int, t: int, *, state_budget: int = 1_000_000) -> int:
    """Best objective over all pairs, as an unbounded knapsack on (lambda, nu) terms.

    Terms with nu = 0 or lambda < nu never raise the objective, so only
    1 <= nu <= lambda <= t are used.
    """
    R = _check_pair_args(R, C, t)
    items = [(R * l + v, v * (l - v)) for l in range(1, t + 1) for v in range(1, l + 1)]
    items.sort()
    memo: Dict[Fraction, int] = {}

    def best_within(budget: Fraction) -> int:
        if budget in memo:
            return memo[budget]
        if len(memo) >= state_budget:
            raise ResourceLimitExceeded(f"sequence-pair oracle exceeded {state_budget} states")
        top = 0
        for cost, value in items:
            if cost > budget:
                break
            top = max(top, value + best_within(budget - cost))
        memo[budget] = top
        return top

    return best_within(Fraction(C))


# ----------------------------
# Products with bounded repetition
# ----------------------------
@dataclass(frozen=True)
class ProductBoundCheck:
    holds: bool
    product: int
    bound: Fraction
    t: int
    d: int

    def to_dict(self) -> dict:
        return {"holds": self.holds, "product": self.product, "bound": float(self.bound), "t": self.t, "d": self.d}


def check_product_lower_bound(xs: Sequence[int], d: int) -> ProductBoundCheck:
    """prod x_i >= (t/(e d))^t, with e replaced by 2.7182818285."""
    xs = [int(x) for x in xs]
    if d < 1:
        raise InvalidArgument(f"d must be >= 1, got {d}")
    if any(x < 1 for x in xs):
        raise InvalidArgument("x_i must be positive integers")
    if xs and max(Counter(xs).values()) > d:
        raise InvalidArgument(f"some value repeats more than d={d} times")
    t = len(xs)
    product = math.prod(xs)
    bound = Fraction(t, 1) / (E_UPPER * d)
    bound = bound ** t
    return ProductBoundCheck(holds=product >= bound, product=product, bound=bound, t=t, d=d)


# ----------------------------
# gcd-product maximization
# ----------------------------
@dataclass(frozen=True)
class GcdWitness:
    n: int
    problem: str
    members: Tuple[int, ...]
    product_of_members: int
    objective: int
    exhaustive: bool = True
    nodes: int = 0

    def to_dict(self) -> dict:
        return {
            "n": self.n,
            "problem": self.problem,
            "members": list(self.members),
            "product_of_members": self.product_of_members,
            "objective": self.objective,
            "exhaustive": self.exhaustive,
            "nodes": self.nodes,
            "pairs": "ordered, diagonal included",
        }


def gcd_objective(values: Iterable[int]) -> int:
    """prod over ordered pairs (diagonal included) of gcd(a, b)."""
    vs = list(values)
    return math.prod(math.gcd(a, b) for a in vs for b in vs)


class _BudgetExhausted(Exception):
    pass


class _Incumbent:
    """Best (objective, shortlex members) seen by one subtree."""

    def __init__(self):
        self.objective = 0
        self.members: Tuple[int, ...] = ()

    def offer(self, objective: int, members: Tuple[int, ...]) -> None:
        if objective > self.objective or (
            objective == self.objective and (len(members), members) < (len(self.members), self.members)
        ):
            self.objective, self.members = objective, members


class GcdProductSearch:
    """Branch and bound over sets of distinct candidates with product <= n.

    Candidate x enters the objective as v = x - shift (p - 1 for primes).
    The objective is prod_l prod_i l^{c_{l,i}^2} with c_{l,i} counting members
    whose value is divisible by l^i, so adding k members with product <= B to
    a set of size s and value product Q multiplies it by at most
    B^k * min(Q^{2k}, B^{2s}). Nodes are pruned only when that bound is
    strictly below the incumbent, so every optimal set is still visited.
    """

    def __init__(
        self,
        n: int,
        candidates: List[int],
        *,
        shift: int,
        problem: str,
        prune: bool = True,
        budget: int = DEFAULT_SETTINGS["search_budget"],
        threads: int = 1,
    ):
        self.n = n
        self.cands = candidates
        self.shift = shift
        self.problem = problem
        self.prune = prune
        self.budget = budget
        self.threads = max(1, int(threads))
        self._prefix = [1]
        for x in candidates:
            if self._prefix[-1] * x > n:
                break
            self._prefix.append(self._prefix[-1] * x)
        self._floor = 0
        self._nodes = itertools.count()
        self._visited = 0

    def _dfs(self, i: int, members: Tuple[int, ...], product: int, obj: int, q_prod: int, best: _Incumbent) -> None:
        if next(self._nodes) >= self.budget:
            raise _BudgetExhausted
        best.offer(obj, members)
        room = self.n // product
        hi = bisect_right(self.cands, room, lo=i)
        if hi <= i:
            return
        if self.prune:
            k = bisect_right(self._prefix, room) - 1
            bound = obj * room ** k * min(q_prod ** (2 * k), room ** (2 * len(members)))
            # subtree-local incumbent; node counts are independent of scheduling
            if bound < max(self._floor, best.objective):
                return
        values = [m - self.shift for m in members]
        for j in range(i, hi):
            x = self.cands[j]
            v = x - self.shift
            gain = v * math.prod(math.gcd(v, w) ** 2 for w in values)
            self._dfs(j + 1, members + (x,), product * x, obj * gain, q_prod * v, best)

    def _potential(self, x: int) -> int:
        return math.gcd(x - self.shift, SMOOTH_LCM)

    def run(self) -> GcdWitness:
        roots: List[int] = []
        leaves: List[int] = []
        for j, x in enumerate(self.cands):
            if j + 1 < len(self.cands) and x * self.cands[j + 1] <= self.n:
                roots.append(j)
            else:
                leaves.append(j)

        seed = _Incumbent()
        for j in leaves:
            x = self.cands[j]
            seed.offer(x - self.shift, (x,))
        self._floor = seed.objective
        self._visited = len(leaves)

        roots.sort(key=lambda j: (-self._potential(self.cands[j]), self.cands[j]))
        bests = {j: _Incumbent() for j in roots}
        exhausted = False

        def explore(j: int) -> None:
            x = self.cands[j]
            v = x - self.shift
            self._dfs(j + 1, (x,), x, v, v, bests[j])

        LOG.info("%s search n=%d: %d subtrees, %d leaves", self.problem, self.n, len(roots), len(leaves))
        with ThreadPoolExecutor(max_workers=self.threads) as pool:
            futures = [pool.submit(explore, j) for j in roots]
            for fut in futures:
                try:
                    fut.result()
                except _BudgetExhausted:
                    exhausted = True

        overall = seed
        for b in bests.values():
            if b.members:
                overall.offer(b.objective, b.members)
        nodes = self._visited + min(next(self._nodes), self.budget)
        witness = GcdWitness(
            n=self.n,
            problem=self.problem,
            members=overall.members,
            product_of_members=math.prod(overall.members),
            objective=overall.objective,
            exhaustive=not exhausted,
            nodes=nodes,
        )
        if exhausted:
            raise ResourceLimitExceeded(
                f"{self.problem} search for n={self.n} exceeded {self.budget} nodes",
                partial={"best_found": witness.to_dict()},
            )
        return witness


def max_gcd_product_primes(
    n: int, *, budget: int = DEFAULT_SETTINGS["search_budget"], threads: int = 1, prune: bool = True
) -> GcdWitness:
    """Max over prime sets P with prod P <= n of prod_{p,p'} gcd(p-1, p'-1)."""
    n = int(n)
    if n < 2:
        raise InvalidArgument(f"n must be >= 2, got {n}")
    cands = sieve_primes(n).tolist()
    return GcdProductSearch(n, cands, shift=1, problem="primes", prune=prune, budget=budget, threads=threads).run()


def max_gcd_product_integers(
    n: int, *, budget: int = DEFAULT_SETTINGS["search_budget"], threads: int = 1, prune: bool = True
) -> GcdWitness:
    """Max over sets of distinct positive integers with product <= n of prod gcd(a_i, a_j)."""
    n = int(n)
    if n < 1:
        raise InvalidArgument(f"n must be >= 1, got {n}")
    if n == 1:
        return GcdWitness(n=1, problem="integers", members=(1,), product_of_members=1, objective=1)
    cands = list(range(2, n + 1))
    return GcdProductSearch(n, cands, shift=0, problem="integers", prune=prune, budget=budget, threads=threads).run()


def gcd_product_trend(
    ns: Sequence[int],
    *,
    problem: str = "primes",
    budget: int = DEFAULT_SETTINGS["search_budget"],
    threads: int = 1,
) -> List[dict]:
    """Rows of log M(n) / lambda(n); no convergence claim is made."""
    search = {"primes": max_gcd_product_primes, "integers": max_gcd_product_integers}.get(problem)
    if search is None:
        raise InvalidArgument(f"problem must be 'primes' or 'integers', got {problem!r}")
    rows = []
    for n in sorted(int(v) for v in ns):
        w = search(n, budget=budget, threads=threads)
        log_obj = math.log(w.objective)
        lam = scales(n).lam if n >= 3 else None
        rows.append(
            {
                "n": n,
                "objective": w.objective,
                "members": list(w.members),
                "log_objective": log_obj,
                "lambda": lam,
                "ratio": log_obj / lam if lam else None,
            }
        )
    return rows


@dataclass(frozen=True)
class ProgressionWitness:
    n: int
    rho: float
    q: int
    witness: GcdWitness
    floor_objective: int
    ratio: Optional[float]
    asymptote: float

    def to_dict(self) -> dict:
        return {
            "n": self.n,
            "rho": self.rho,
            "q": self.q,
            "witness": self.witness.to_dict(),
            "floor_objective": self.floor_objective,
            "ratio": self.ratio,
            "asymptote": self.asymptote,
        }


def progression_gcd_witness(n: int, rho: float) -> ProgressionWitness:
    """Prime set drawn from one progression 1 mod q, a lower bound for M2(n).

    q is the first prime >= (log n)^{rho/(1-rho)} and members are the primes
    = 1 (mod q) taken in ascending order while the product stays <= n. Every
    gcd is divisible by q, so the objective is at least q^{|P|^2}.
    """
    n = int(n)
    if n < 3:
        raise InvalidArgument(f"n must be >= 3, got {n}")
    if not 0 < rho < 0.5:
        raise InvalidArgument(f"rho must lie in (0, 1/2), got {rho}")
    q = int(nextprime(math.ceil(math.log(n) ** (rho / (1.0 - rho))) - 1))
    members: List[int] = []
    product = 1
    x = max(4 * q * max(1, int(math.log(n))), 1000)
    while True:
        pool = primes_in_ap(x, q, 1)
        members, product = [], 1
        for p in pool:
            if product * p > n:
                break
            members.append(p)
            product *= p
        if len(members) < len(pool) or x >= n:
            break
        x *= 4
    objective = gcd_objective(p - 1 for p in members)
    witness = GcdWitness(
        n=n, problem="primes", members=tuple(members), product_of_members=product, objective=objective, exhaustive=False
    )
    lam = scales(n).lam
    return ProgressionWitness(
        n=n,
        rho=rho,
        q=q,
        witness=witness,
        floor_objective=q ** (len(members) ** 2),
        ratio=math.log(objective) / lam,
        asymptote=rho * (1.0 - rho),
    )


# ----------------------------
# Reduction target f(n)
# ----------------------------
@dataclass(frozen=True)
class ReductionConfig:
    minus: Tuple[int, ...]
    plus: Tuple[int, ...]
    r: int
    orders: Tuple[int, ...]
    count: int

    def to_dict(self) -> dict:
        return {
            "minus": list(self.minus),
            "plus": list(self.plus),
            "r": self.r,
            "orders": list(self.orders),
            "count": self.count,
        }


@dataclass(frozen=True)
class ReductionSearchResult:
    n: int
    best_by_order: ReductionConfig
    best_by_index: ReductionConfig
    lam: float
    ratio_by_order: float
    ratio_by_index: float
    exhaustive: bool
    budget_exhausted: bool
    evaluations: int

    def to_dict(self) -> dict:
        return {
            "n": self.n,
            "best_by_order": self.best_by_order.to_dict(),
            "best_by_index": self.best_by_index.to_dict(),
            "lambda": self.lam,
            "ratio_by_order": self.ratio_by_order,
            "ratio_by_index": self.ratio_by_index,
            "exhaustive": self.exhaustive,
            "budget_exhausted": self.budget_exhausted,
            "evaluations": self.evaluations,
        }


@lru_cache(maxsize=100_000)
def _reduction_counts(orders: Tuple[int, ...], r: int) -> Tuple[int, int]:
    spec = AbelianGroupSpec(orders)
    return count_subgroups_order_at_most(spec, r), count_subgroups_index_at_most(spec, r)


def _reduction_orders(minus: Tuple[int, ...], plus: Tuple[int, ...]) -> Tuple[int, ...]:
    orders = [q - 1 for q in minus if q > 2] + [q + 1 for q in plus]
    return tuple(sorted(orders, reverse=True))


def reduction_target_search(
    n: int, *, beam_width: int = 64, budget: int = 200_000
) -> ReductionSearchResult:
    """Best s_r(X) for X = prod C_{q-1} (q in P-) x prod C_{q'+1} (q' in P+).

    Disjoint prime sets grow one prime at a time (ascending), with
    r = n // prod(P- u P+). The beam keeps the ``beam_width`` best states per
    depth by the order-bounded count; when it never truncates the search is
    exhaustive. Both the order-bounded and index-bounded counts are reported.
    """
    n = int(n)
    if n < 3:
        raise InvalidArgument(f"n must be >= 3, got {n}")
    primes = sieve_primes(n).tolist()
    evaluations = 0
    exhaustive = True
    budget_hit = False

    def evaluate(minus, plus, prod) -> Tuple[ReductionConfig, ReductionConfig]:
        nonlocal evaluations
        evaluations += 1
        orders = _reduction_orders(minus, plus)
        r = n // prod
        by_order, by_index = _reduction_counts(orders, r)
        return ReductionConfig(minus, plus, r, orders, by_order), ReductionConfig(minus, plus, r, orders, by_index)

    def rank(cfg: ReductionConfig):
        return (-cfg.count, len(cfg.minus) + len(cfg.plus), cfg.minus, cfg.plus)

    best_o, best_i = evaluate((), (), 1)
    beam = [(-1, (), (), 1, best_o)]
    while beam and not budget_hit:
        children = []
        for last, minus, plus, prod, _ in beam:
            for j in range(last + 1, len(primes)):
                p = primes[j]
                if prod * p > n:
                    break
                for m2, p2 in ((minus + (p,), plus), (minus, plus + (p,))):
                    if evaluations >= budget:
                        budget_hit = True
                        break
                    cfg_o, cfg_i = evaluate(m2, p2, prod * p)
                    if rank(cfg_o) < rank(best_o):
                        best_o = cfg_o
                    if rank(cfg_i) < rank(best_i):
                        best_i = cfg_i
                    children.append((j, m2, p2, prod * p, cfg_o))
                if budget_hit:
                    break
            if budget_hit:
                break
        if len(children) > beam_width:
            exhaustive = False
            children.sort(key=lambda c: rank(c[4]))
            children = children[:beam_width]
        beam = children

    if budget_hit:
        LOG.warning("reduction search n=%d stopped after %d evaluations", n, evaluations)
    lam = scales(n).lam
    return ReductionSearchResult(
        n=n,
        best_by_order=best_o,
        best_by_index=best_i,
        lam=lam,
        ratio_by_order=math.log(best_o.count) / lam,
        ratio_by_index=math.log(best_i.count) / lam,
        exhaustive=exhaustive and not budget_hit,
        budget_exhausted=budget_hit,
        evaluations=evaluations,
    )


# ----------------------------
# Exponents for uniform groups and SL_d(Z_p)
# ----------------------------
def sl_d_growth_exponent(d: int) -> float:
    """(3 - 2 sqrt 2) d^2 - 2 (2 - sqrt 2)."""
    if d < 2:
        raise InvalidArgument(f"d must be >= 2, got {d}")
    return (3.0 - 2.0 * SQRT2) * d * d - 2.0 * (2.0 - SQRT2)


def uniform_exponent(d: int, nu: int) -> Fraction:
    """nu (d - nu) / (2d - nu)."""
    if d < 1 or not 0 <= nu <= d:
        raise InvalidArgument(f"need d >= 1 and 0 <= nu <= d, got d={d}, nu={nu}")
    return Fraction(nu * (d - nu), 2 * d - nu)


def uniform_argmax(d: int) -> List[int]:
    values = {nu: uniform_exponent(d, nu) for nu in range(d + 1)}
    top = max(values.values())
    return [nu for nu, v in values.items() if v == top]


def uniform_growth_exponent(h: int) -> dict:
    """Best integer-nu exponent for rank h, next to the (3-2sqrt2)h - (sqrt2-1) floor."""
    if h < 1:
        raise InvalidArgument(f"rank must be >= 1, got {h}")
    nus = uniform_argmax(h)
    best = uniform_exponent(h, nus[0])
    return {
        "rank": h,
        "argmax": nus,
        "rounded_point": round(h * (2.0 - SQRT2)),
        "exponent": str(best),
        "exponent_value": float(best),
        "real_maximum": (3.0 - 2.0 * SQRT2) * h,
        "floor": (3.0 - 2.0 * SQRT2) * h - (SQRT2 - 1.0),
    }


# ----------------------------
# Abelian bound reports
# ----------------------------
def staircase_ratio(t: int) -> dict:
    """log|Sub(G)| / (l(|G|) log|G|) for G = prod_{i=1..t} C_{t i}."""
    if t < 2:
        raise InvalidArgument(f"t must be >= 2, got {t}")
    spec = AbelianGroupSpec(tuple(t * i for i in range(1, t + 1)))
    total = count_all_subgroups(spec)
    sc = scales(spec.order)
    ratio = math.log(total) / (sc.ell * math.log(spec.order))
    return {"t": t, "order_log": math.log(spec.order), "subgroups_log": math.log(total), "ratio": ratio, "reference": 1 / 16}


def order_bounded_exponent(orders: Sequence[int], r: int, R: Number, n: int, d: int) -> dict:
    """log s_r(A) / (l(n) log n) for A with repeats <= d and r |A|^R <= n."""
    spec = AbelianGroupSpec(tuple(orders))
    R = _as_fraction(R)
    if R < 1:
        raise InvalidArgument(f"R must be >= 1, got {R}")
    if spec.cyclic_orders and max(Counter(spec.cyclic_orders).values()) > d:
        raise InvalidArgument(f"some cyclic order repeats more than d={d} times")
    a, b = R.numerator, R.denominator
    if r < 1 or r ** b * spec.order ** a > n ** b:
        raise InvalidArgument(f"need r |A|^R <= n (r={r}, |A|={spec.order}, R={R}, n={n})")
    count = count_subgroups_order_at_most(spec, r)
    sc = scales(n)
    return {
        "count": count,
        "ratio": math.log(count) / (sc.ell * math.log(n)),
        "gamma": gamma(float(R)),
        "n": n,
        "r": r,
        "R": str(R),
    }

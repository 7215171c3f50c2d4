"""
finite_groups.py - small finite groups as multiplication tables

Elements are 0..N-1, ``table[a, b]`` is the index of a*b. Subgroups are
boolean masks over the elements and are keyed by ``np.packbits(mask)``.

The lattice engine enumerates every subgroup by closing {1} under joins with
cyclic subgroups of prime-power order. Every subgroup is such an iterated
join, so the closure is complete. Work is done on conjugacy-class
representatives only: for a representative H the joins <H, C> are needed for
one C per orbit of N_G(H) on cyclic subgroups, and each new subgroup is
expanded to its full conjugacy class at once.
"""

from __future__ import annotations

import logging
from collections import Counter, deque
from dataclasses import dataclass, field
from typing import Dict, List, Optional, Sequence, Tuple

import numpy as np
from scipy.sparse import csr_matrix
from scipy.sparse.csgraph import connected_components
from sympy import factorint

from .abelian import AbelianGroupSpec
from .errors import ResourceLimitExceeded

LOG = logging.getLogger("subgrowth.finite_groups")


def mask_key(mask: np.ndarray) -> bytes:
    return np.packbits(mask).tobytes()


class FiniteGroup:
    def __init__(self, table: np.ndarray, identity: int = 0, generators: Optional[Sequence[int]] = None, name: str = "G"):
        self.table = table
        self.order = int(table.shape[0])
        self.identity = int(identity)
        self.name = name
        hits = table == self.identity
        self.inv = np.argmax(hits, axis=1).astype(table.dtype)
        self.generators = list(generators) if generators is not None else self._greedy_generators()

    # ---------- element helpers ----------
    def mul(self, a: int, b: int) -> int:
        return int(self.table[a, b])

    def conjugate_all(self, x: int) -> np.ndarray:
        """g^-1 x g for every g, indexed by g."""
        g = np.arange(self.order)
        return self.table[self.table[self.inv, x], g]

    def conjugate_set(self, elems: np.ndarray, g: int) -> np.ndarray:
        return self.table[self.table[self.inv[g], elems], g]

    def power_table(self) -> Tuple[np.ndarray, np.ndarray]:
        """(orders, powers) with powers[g, k] = g^k for k < exponent."""
        n = self.order
        cols = [np.full(n, self.identity, dtype=np.int64)]
        orders = np.zeros(n, dtype=np.int64)
        orders[self.identity] = 1
        cur = np.arange(n, dtype=np.int64)
        k = 1
        while not orders.all():
            cols.append(cur.copy())
            done = (cur == self.identity) & (orders == 0)
            orders[done] = k
            cur = self.table[cur, np.arange(n)].astype(np.int64)
            k += 1
        return orders, np.stack(cols, axis=1)

    def order_profile(self) -> Dict[int, int]:
        orders, _ = self.power_table()
        return dict(sorted(Counter(int(o) for o in orders).items()))

    # ---------- subgroup helpers ----------
    def closure(self, gens: Sequence[int], start: Optional[np.ndarray] = None) -> np.ndarray:
        """Mask of the subgroup generated by ``gens`` (and ``start`` if given)."""
        mask = np.zeros(self.order, dtype=bool) if start is None else start.copy()
        mask[self.identity] = True
        gens = np.asarray(sorted(set(int(g) for g in gens)), dtype=np.int64)
        if gens.size == 0:
            return mask
        mask[gens] = True
        frontier = np.flatnonzero(mask)
        while frontier.size:
            prods = np.unique(self.table[frontier][:, gens])
            new = prods[~mask[prods]]
            mask[new] = True
            frontier = new
        return mask

    def product_set(self, h_mask: np.ndarray, z_powers: np.ndarray) -> np.ndarray:
        """H<z> as a mask; a subgroup when z normalizes H."""
        elems = np.flatnonzero(h_mask)
        prods = self.table[elems][:, z_powers]
        mask = np.zeros(self.order, dtype=bool)
        mask[prods.ravel()] = True
        return mask

    def normalizer(self, h_mask: np.ndarray, h_gens: Sequence[int]) -> np.ndarray:
        keep = np.ones(self.order, dtype=bool)
        for h in h_gens:
            keep &= h_mask[self.conjugate_all(h)]
        return keep

    def _greedy_generators(self) -> List[int]:
        gens: List[int] = []
        mask = self.closure([])
        while not mask.all():
            g = int(np.flatnonzero(~mask)[0])
            gens.append(g)
            mask = self.closure(gens)
        return gens

    @classmethod
    def from_abelian(cls, spec: AbelianGroupSpec) -> "FiniteGroup":
        mods = np.array(spec.cyclic_orders, dtype=np.int64)
        n = spec.order
        strides = np.ones(len(mods), dtype=np.int64)
        for i in range(len(mods) - 2, -1, -1):
            strides[i] = strides[i + 1] * mods[i + 1]
        idx = np.arange(n, dtype=np.int64)
        acc = np.zeros((n, n), dtype=np.int64)
        for m, s in zip(mods, strides):
            c = (idx // s) % m
            acc += ((c[:, None] + c[None, :]) % m) * s
        table = acc.astype(np.int32 if n >= 32768 else np.int16)
        return cls(table, identity=0, name=f"abelian{list(spec.cyclic_orders)}")


# ----------------------------
# Lattice engine
# ----------------------------
@dataclass
class SubgroupClass:
    rep: np.ndarray
    gens: Tuple[int, ...]
    order: int
    members: List[bytes] = field(default_factory=list)

    @property
    def size(self) -> int:
        return len(self.members)


class LatticeEngine:
    def __init__(self, group: FiniteGroup):
        self.group = group
        self.classes: List[SubgroupClass] = []
        self.class_of: Dict[bytes, int] = {}
        self.masks: Dict[bytes, np.ndarray] = {}
        self._prepare_cyclics()

    def _prepare_cyclics(self) -> None:
        g = self.group
        orders, powers = g.power_table()
        self.elem_orders = orders
        self.cyc_elems: List[np.ndarray] = []
        self.cyc_gen: List[int] = []
        self.cyc_of = np.full(g.order, -1, dtype=np.int64)
        seen: Dict[bytes, int] = {}
        for x in range(g.order):
            o = int(orders[x])
            elems = powers[x, :o]
            mask = np.zeros(g.order, dtype=bool)
            mask[elems] = True
            key = mask_key(mask)
            if key not in seen:
                seen[key] = len(self.cyc_elems)
                self.cyc_elems.append(elems)
                self.cyc_gen.append(x)
            self.cyc_of[x] = seen[key]
        self.prime_power = np.array(
            [len(factorint(int(orders[x]))) == 1 for x in self.cyc_gen], dtype=bool
        )

    def _register_class(self, mask: np.ndarray, gens: Tuple[int, ...]) -> int:
        g = self.group
        cid = len(self.classes)
        elems = np.flatnonzero(mask)
        cls = SubgroupClass(rep=mask, gens=gens, order=int(elems.size))
        queue = deque([mask])
        key0 = mask_key(mask)
        self.class_of[key0] = cid
        self.masks[key0] = mask
        cls.members.append(key0)
        while queue:
            cur = queue.popleft()
            cur_elems = np.flatnonzero(cur)
            for s in g.generators:
                img = np.zeros(g.order, dtype=bool)
                img[g.conjugate_set(cur_elems, s)] = True
                k = mask_key(img)
                if k not in self.class_of:
                    self.class_of[k] = cid
                    self.masks[k] = img
                    cls.members.append(k)
                    queue.append(img)
        self.classes.append(cls)
        return cid

    def _cyclic_orbits(self, gens: Sequence[int]) -> np.ndarray:
        g = self.group
        n_cyc = len(self.cyc_gen)
        reps = np.array(self.cyc_gen, dtype=np.int64)
        rows, cols = [], []
        for s in gens:
            img = g.conjugate_set(reps, s)
            rows.append(np.arange(n_cyc))
            cols.append(self.cyc_of[img])
        if not rows:
            return np.arange(n_cyc)
        data = np.ones(n_cyc * len(rows), dtype=np.int8)
        graph = csr_matrix((data, (np.concatenate(rows), np.concatenate(cols))), shape=(n_cyc, n_cyc))
        _, labels = connected_components(graph, directed=False)
        return labels

    def _normalizer_gens(self, h_mask: np.ndarray, h_gens: Tuple[int, ...]) -> List[int]:
        g = self.group
        norm = g.normalizer(h_mask, h_gens)
        gens = list(h_gens)
        cur = h_mask.copy()
        while True:
            missing = np.flatnonzero(norm & ~cur)
            if missing.size == 0:
                return gens
            gens.append(int(missing[0]))
            cur = g.closure(gens)

    def run(self, order_cap: Optional[int] = None) -> "LatticeEngine":
        g = self.group
        if order_cap is not None and g.order > order_cap:
            raise ResourceLimitExceeded(f"group order {g.order} exceeds cap {order_cap}")
        trivial = g.closure([])
        self._register_class(trivial, ())
        pending = deque([0])
        while pending:
            cid = pending.popleft()
            cls = self.classes[cid]
            h_mask, h_gens = cls.rep, cls.gens
            norm_gens = self._normalizer_gens(h_mask, h_gens)
            norm_mask = g.normalizer(h_mask, h_gens)
            labels = self._cyclic_orbits(norm_gens)
            done_orbits = set()
            for c in range(len(self.cyc_gen)):
                if not self.prime_power[c] or labels[c] in done_orbits:
                    continue
                done_orbits.add(labels[c])
                z = self.cyc_gen[c]
                if h_mask[z]:
                    continue
                if norm_mask[z]:
                    joined = g.product_set(h_mask, self.cyc_elems[c])
                else:
                    joined = g.closure(h_gens + (z,), start=h_mask)
                key = mask_key(joined)
                if key in self.class_of:
                    continue
                new_id = self._register_class(joined, h_gens + (z,))
                pending.append(new_id)
        LOG.debug("%s: %d subgroups in %d classes", g.name, len(self.class_of), len(self.classes))
        return self

    # ---------- queries ----------
    def all_masks(self) -> List[Tuple[bytes, np.ndarray, int]]:
        out = []
        for key, cid in self.class_of.items():
            out.append((key, self.masks[key], self.classes[cid].order))
        return out

    def maximal_classes(self) -> List[int]:
        """Class ids whose representative is a maximal proper subgroup."""
        g = self.group
        proper = [(m, o) for _, m, o in self.all_masks() if o < g.order]
        if not proper:
            return []
        stack = np.stack([m for m, _ in proper])
        orders = np.array([o for _, o in proper])
        out = []
        for cid, cls in enumerate(self.classes):
            if cls.order == g.order:
                continue
            bigger = (orders > cls.order) & (orders % cls.order == 0)
            contains = stack[bigger][:, cls.rep].all(axis=1) if bigger.any() else np.zeros(0, dtype=bool)
            if not contains.any():
                out.append(cid)
        return out


def naive_subgroups(group: FiniteGroup) -> Dict[bytes, int]:
    """Independent oracle: subgroups generated by pairs of elements drawn from
    cyclic-subgroup generators, then closed under joins with cyclic subgroups.
    Pure set arithmetic; meant for groups of order <= 200.
    """
    table = group.table.tolist()
    n = group.order
    e = group.identity

    def close(gens) -> frozenset:
        elems = {e, *gens}
        frontier = list(elems)
        while frontier:
            nxt = []
            for a in frontier:
                for s in gens:
                    b = table[a][s]
                    if b not in elems:
                        elems.add(b)
                        nxt.append(b)
            frontier = nxt
        return frozenset(elems)

    cyclic: Dict[frozenset, int] = {}
    for x in range(n):
        cyclic.setdefault(close([x]), x)
    reps = list(cyclic.values())

    found: Dict[frozenset, List[int]] = {close([]): []}
    for i, a in enumerate(reps):
        for b in reps[i:]:
            found.setdefault(close([a, b]), [a, b])
    frontier = list(found)
    while frontier:
        nxt = []
        for sub in frontier:
            for x in reps:
                if x in sub:
                    continue
                gens = found[sub] + [x]
                joined = close(gens)
                if joined not in found:
                    found[joined] = gens
                    nxt.append(joined)
        frontier = nxt

    out: Dict[bytes, int] = {}
    for sub in found:
        mask = np.zeros(n, dtype=bool)
        mask[list(sub)] = True
        out[mask_key(mask)] = len(sub)
    return out


def is_subgroup(group: FiniteGroup, mask: np.ndarray) -> bool:
    elems = np.flatnonzero(mask)
    if not mask[group.identity]:
        return False
    prods = group.table[elems][:, elems]
    return bool(mask[prods].all()) and bool(mask[group.inv[elems]].all())



import numpy as np
import pytest

from subgrowth import abelian
from subgrowth.abelian import AbelianGroupSpec
from subgrowth.errors import ResourceLimitExceeded
from subgrowth.finite_groups import FiniteGroup, LatticeEngine, is_subgroup, mask_key, naive_subgroups

ABELIAN_CASES = [(), (2,), (6,), (4, 2), (2, 2, 2), (3, 3), (9, 3), (4, 4), (6, 6), (8, 2, 2), (5, 5)]


def symmetric_group_3():
    perms = [(0, 1, 2), (1, 0, 2), (2, 1, 0), (0, 2, 1), (1, 2, 0), (2, 0, 1)]
    pos = {p: i for i, p in enumerate(perms)}
    table = np.array([[pos[tuple(a[b[k]] for k in range(3))] for b in perms] for a in perms], dtype=np.int16)
    return FiniteGroup(table, identity=0, name="S3")


def test_from_abelian_table_is_a_group():
    g = FiniteGroup.from_abelian(AbelianGroupSpec((4, 2)))
    assert g.order == 8
    assert (g.table == g.table.T).all()
    assert (g.table[g.inv, np.arange(8)] == 0).all()
    assert g.order_profile() == {1: 1, 2: 3, 4: 4}
    assert g.closure(g.generators).all()


def test_trivial_abelian_group():
    g = FiniteGroup.from_abelian(AbelianGroupSpec())
    assert g.order == 1
    assert LatticeEngine(g).run().all_masks()[0][2] == 1


@pytest.mark.parametrize("orders", ABELIAN_CASES)
def test_engine_matches_subgroup_formula(orders):
    spec = AbelianGroupSpec(orders)
    engine = LatticeEngine(FiniteGroup.from_abelian(spec)).run()
    assert len(engine.class_of) == abelian.count_all_subgroups(spec)
    profile = {}
    for _, _, order in engine.all_masks():
        profile[order] = profile.get(order, 0) + 1
    assert dict(sorted(profile.items())) == abelian.order_profile(spec)


@pytest.mark.parametrize("orders", [(4, 2), (2, 2, 2), (6, 6), (9, 3)])
def test_engine_matches_naive_oracle_abelian(orders):
    g = FiniteGroup.from_abelian(AbelianGroupSpec(orders))
    engine = LatticeEngine(g).run()
    assert {k: o for k, _, o in engine.all_masks()} == naive_subgroups(g)


def test_s3_lattice():
    g = symmetric_group_3()
    engine = LatticeEngine(g).run()
    orders = sorted(o for _, _, o in engine.all_masks())
    assert orders == [1, 2, 2, 2, 3, 6]
    # three classes of proper subgroups plus the two trivial ends
    assert sorted(c.size for c in engine.classes) == [1, 1, 1, 3]
    maximal = sorted(engine.classes[c].order for c in engine.maximal_classes())
    assert maximal == [2, 3]
    assert {k: o for k, _, o in engine.all_masks()} == naive_subgroups(g)


def test_every_enumerated_mask_is_a_subgroup():
    g = FiniteGroup.from_abelian(AbelianGroupSpec((6, 2)))
    for _, mask, order in LatticeEngine(g).run().all_masks():
        assert is_subgroup(g, mask)
        assert int(mask.sum()) == order


def test_is_subgroup_rejects_non_subgroups():
    g = symmetric_group_3()
    mask = np.zeros(6, dtype=bool)
    mask[[0, 1, 2]] = True
    assert not is_subgroup(g, mask)
    mask = np.zeros(6, dtype=bool)
    mask[1] = True
    assert not is_subgroup(g, mask)


def test_normalizer_and_product_set():
    g = symmetric_group_3()
    a3 = g.closure([4])
    assert a3.sum() == 3
    assert g.normalizer(a3, [4]).all()
    transposition = g.closure([1])
    assert g.normalizer(transposition, [1]).sum() == 2
    _, powers = g.power_table()
    assert g.product_set(a3, powers[1, :2]).all()


def test_mask_keys_distinguish_subgroups():
    g = symmetric_group_3()
    keys = {mask_key(g.closure([x])) for x in range(6)}
    assert len(keys) == 5


def test_engine_order_cap():
    g = FiniteGroup.from_abelian(AbelianGroupSpec((8, 8)))
    with pytest.raises(ResourceLimitExceeded):
        LatticeEngine(g).run(order_cap=32)

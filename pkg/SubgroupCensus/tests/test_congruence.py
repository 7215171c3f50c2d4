import math
from types import SimpleNamespace

import numpy as np
import pytest

from subgrowth import bombieri, congruence, numtheory
from subgrowth.abelian import gaussian_binomial, log_gaussian_binomial
from subgrowth.errors import InvalidArgument, NoBombieriPrime, PartialCensus, ResourceLimitExceeded
from subgrowth.extremal import chevalley_R
from subgrowth.finite_groups import LatticeEngine, is_subgroup, naive_subgroups


def test_sl2_order():
    assert [congruence.sl2_order(m) for m in range(1, 7)] == [1, 6, 24, 48, 120, 144]
    assert congruence.sl2_order(12) == 1152
    with pytest.raises(InvalidArgument):
        congruence.sl2_order(0)


def test_build_sl2_elements():
    g = congruence.build_sl2(2)
    assert g.order == 6
    assert g.elements == sorted(g.elements)
    assert g.elements[0] == (0, 1, 1, 0)
    for a, b, c, d in g.elements:
        assert (a * d - b * c) % 2 == 1
    assert g.order_profile() == {1: 1, 2: 3, 3: 2}


def test_build_sl2_multiplication():
    g = congruence.build_sl2(12)
    assert g.order == 1152
    S = g.index_of(0, -1, 1, 0)
    T = g.index_of(1, 1, 0, 1)
    assert g.mul(S, S) == g.index_of(-1, 0, 0, -1)
    t = g.identity
    for _ in range(12):
        t = g.mul(t, T)
    assert t == g.identity
    assert g.closure(g.generators).all()
    with pytest.raises(InvalidArgument):
        g.index_of(2, 0, 0, 2)


def test_build_sl2_cap():
    with pytest.raises(ResourceLimitExceeded):
        congruence.build_sl2(12, cap=1000)


def test_reduction_kernel():
    g = congruence.build_sl2(4)
    kernel = g.reduction_kernel(2)
    assert kernel.sum() == g.order // congruence.sl2_order(2)
    assert is_subgroup(g, kernel)
    assert np.flatnonzero(g.reduction_kernel(4)).tolist() == [g.identity]


def test_sl2_mod_2_lattice():
    lattice = congruence.enumerate_subgroups(congruence.build_sl2(2))
    assert lattice.total == 6
    assert lattice.counts_by_index == {1: 1, 2: 1, 3: 3, 6: 1}
    assert lattice.count_index_at_most(3) == 5
    assert congruence.enumerate_subgroups(congruence.build_sl2(2), index_cap=2).total == 2


@pytest.mark.parametrize("m", [2, 3, 4, 6])
def test_engine_matches_naive_oracle(m):
    g = congruence.build_sl2(m)
    engine = LatticeEngine(g).run()
    assert {k: o for k, _, o in engine.all_masks()} == naive_subgroups(g)


@pytest.mark.slow
def test_engine_matches_naive_oracle_mod_5():
    g = congruence.build_sl2(5)
    engine = LatticeEngine(g).run()
    assert {k: o for k, _, o in engine.all_masks()} == naive_subgroups(g)


def test_sl2_mod_3_has_fifteen_subgroups():
    assert congruence.enumerate_subgroups(congruence.build_sl2(3)).total == 15


def test_gamma_n_small():
    assert congruence.gamma_n(1) == 1
    assert congruence.gamma_n(2) == 3
    census = congruence.modulus_census(2)
    assert census.per_modulus == {1: 1, 2: 2}
    assert census.to_dict()["per_modulus"] == [{"m": 1, "count": 1}, {"m": 2, "count": 2}]
    with pytest.raises(InvalidArgument):
        congruence.gamma_n(0)


def test_gamma_n_monotone_and_threads_agree():
    values = [congruence.gamma_n(n) for n in range(1, 7)]
    assert values == sorted(values)
    assert congruence.gamma_n(6, threads=4) == values[-1]


def test_level_truncated_census():
    truncated = congruence.level_truncated_census(2)
    assert truncated.total == 2
    assert truncated.level_truncated
    for n in range(1, 7):
        full = congruence.modulus_census(n)
        exact = congruence.level_truncated_census(n)
        assert all(exact.per_modulus[m] <= full.per_modulus[m] for m in full.per_modulus)


def test_gamma_n_at_six():
    census = congruence.modulus_census(6)
    # SL2(F3): Z4 x3, Z6 x4, Q8, whole group; SL2(F5): whole group, 5 of order 24, 6 Borels
    assert {m: census.per_modulus[m] for m in (1, 2, 3, 5)} == {1: 1, 2: 6, 3: 9, 5: 12}
    for m in (4, 6):
        g = congruence.build_sl2(m)
        orders = naive_subgroups(g).values()
        assert census.per_modulus[m] == sum(1 for o in orders if g.order // o <= 6)
    assert congruence.gamma_n(6) == census.total == sum(census.per_modulus.values())


@pytest.mark.parametrize("n", range(1, 7))
def test_gamma_n_bounded_by_level_truncated_count(n):
    exact = congruence.level_truncated_census(n)
    assert exact.total >= 1
    assert congruence.gamma_n(n) <= n * exact.total


def test_partial_census_reports_finished_moduli():
    with pytest.raises(PartialCensus) as info:
        congruence.gamma_n(6, cap=50)
    partial = info.value.partial
    assert partial["skipped"] == [5, 6]
    assert set(partial["computed"]) == {"1", "2", "3", "4"}
    assert partial["computed"]["2"] == 6


@pytest.mark.parametrize(
    "q,orders,kinds",
    [
        (2, [3, 2], ["dihedral", "borel"]),
        (3, [8, 6], ["dihedral", "borel"]),
        (5, [24, 20, 12], ["exceptional", "borel", "dihedral"]),
        (7, [48, 48, 42], ["exceptional", "exceptional", "borel"]),
    ],
)
def test_classify_maximal_subgroups(q, orders, kinds):
    report = congruence.classify_maximal_subgroups(q)
    assert report.orders == orders
    assert [c["kind"] for c in report.classes] == kinds
    assert report.all_classified
    assert report.degenerate == (q == 2)


@pytest.mark.slow
@pytest.mark.parametrize("q", [11, 13])
def test_classify_maximal_subgroups_larger_fields(q):
    report = congruence.classify_maximal_subgroups(q)
    assert report.all_classified
    assert q * (q - 1) in report.orders


def test_classify_rejects_composite():
    with pytest.raises(InvalidArgument):
        congruence.classify_maximal_subgroups(4)


def test_borel_index():
    a1, a2 = chevalley_R("A", 1), chevalley_R("A", 2)
    for p in (2, 3, 5, 7, 11):
        assert congruence.borel_index(a1, p) == p + 1
        assert congruence.borel_index(a2, p) == (p + 1) * (p * p + p + 1)
    with pytest.raises(InvalidArgument):
        congruence.borel_index(a1, 9)


def _fake_scan(x, q):
    cert = bombieri.certify(x, q)
    return lambda *args, **kwargs: SimpleNamespace(certificate=cert, to_dict=lambda: {"x": x})


def test_lower_bound_construction_with_fixed_prime(monkeypatch):
    x, q = 20_000, 7
    monkeypatch.setattr(congruence, "find_bombieri_prime", _fake_scan(x, q))
    primes = numtheory.primes_in_ap(x, q, 1)

    flat = congruence.lower_bound_construction(x, 0.2, 0.0)
    assert flat.nu == 0 and flat.log_subgroup_count == 0.0 and flat.ratio == 0.0

    report = congruence.lower_bound_construction(x, 0.2, 0.5)
    L = len(primes)
    assert (report.q, report.L, report.rk) == (q, L, 1)
    assert report.nu == math.ceil(L / 2)
    assert report.log_subgroup_count == pytest.approx(log_gaussian_binomial(L, report.nu, q))
    assert report.log_borel_index == pytest.approx(sum(math.log(p + 1) for p in primes))
    assert report.log_index == pytest.approx(report.nu * math.log(q) + report.log_borel_index)
    assert report.ratio > 0
    assert report.gamma_R == pytest.approx(0.0428932, abs=1e-7)


def test_lower_bound_construction_small_counts(monkeypatch):
    x, q = 200, 3
    monkeypatch.setattr(congruence, "find_bombieri_prime", _fake_scan(x, q))
    report = congruence.lower_bound_construction(x, 0.2, 0.25, chevalley_R("A", 2))
    L = len(numtheory.primes_in_ap(x, q, 1))
    assert report.rk == 2
    assert report.nu == math.ceil(0.25 * 2 * L)
    assert report.log_subgroup_count == pytest.approx(math.log(gaussian_binomial(2 * L, report.nu, q)))


def test_lower_bound_construction_without_prime(monkeypatch):
    calls = []

    def no_prime(x, rho, **kwargs):
        calls.append(rho)
        return SimpleNamespace(certificate=None, to_dict=lambda: {"rho": rho})

    monkeypatch.setattr(congruence, "find_bombieri_prime", no_prime)
    with pytest.raises(NoBombieriPrime) as info:
        congruence.lower_bound_construction(10 ** 5, 0.3, 0.5)
    attempts = info.value.diagnostics["attempts"]
    assert [a["rho"] for a in attempts] == calls
    assert calls[0] == 0.3
    assert calls == sorted(calls, reverse=True)
    assert min(calls) >= congruence.RHO_FLOOR
    assert len(calls) >= 25
    with pytest.raises(InvalidArgument):
        congruence.lower_bound_construction(10 ** 5, 0.3, 1.0)
    with pytest.raises(InvalidArgument):
        congruence.lower_bound_construction(10 ** 5, 0.5, 0.3)


def test_lower_bound_construction_steps_rho_down(monkeypatch):
    x, q = 20_000, 7
    cert = bombieri.certify(x, q)
    seen = []

    def scan_from(x, rho, **kwargs):
        seen.append(rho)
        if rho > 0.255:
            return SimpleNamespace(certificate=None, to_dict=lambda: {"rho": rho})
        if rho > 0.225:
            raise InvalidArgument("no primes in scan interval")
        return SimpleNamespace(certificate=cert, to_dict=lambda: {"rho": rho})

    monkeypatch.setattr(congruence, "find_bombieri_prime", scan_from)
    report = congruence.lower_bound_construction(x, 0.3, 0.5)
    assert len(seen) == 9
    assert report.rho_scanned == pytest.approx(0.22)
    assert report.q == q
    assert report.rho_effective == pytest.approx(math.log(q) / math.log(x))
    assert report.to_dict()["rho_scanned"] == report.rho_scanned


@pytest.mark.slow
def test_lower_bound_construction_at_one_million(cache_dir):
    report = congruence.lower_bound_construction(10 ** 6, 0.25, 0.4, threads=4, cache_dir=cache_dir)
    assert report.ratio > 0
    assert report.rho_effective == pytest.approx(math.log(report.q) / math.log(10 ** 6))


@pytest.mark.slow
def test_gamma_n_up_to_modulus_eight():
    values = [congruence.gamma_n(n, threads=4) for n in range(1, 9)]
    assert values[:2] == [1, 3]
    assert values == sorted(values)


@pytest.mark.slow
def test_lower_bound_trend(cache_dir):
    s = math.sqrt(2) - 1
    reports = [
        congruence.lower_bound_construction(x, s, s, threads=4, cache_dir=cache_dir)
        for x in (10 ** 5, 10 ** 6, 10 ** 7)
    ]
    low, mid, high = reports

    # x = 10^5: nothing certified until the interval reaches q = 2
    assert (low.q, low.L, low.nu) == (2, 9591, 3973)
    assert low.rho_scanned == pytest.approx(s - 0.15)
    assert low.ratio == pytest.approx(0.0169, abs=1e-3)

    # x = 10^6: the first certified prime lies in 11..19
    assert mid.q in (11, 13, 17, 19)
    assert s - 0.065 < mid.rho_scanned < s - 0.015
    assert 0 < mid.ratio < congruence.gamma(1)

    assert high.rho_scanned == s
    assert high.ratio == pytest.approx(0.0436, abs=5e-4)

    ratios = [r.ratio for r in reports]
    assert ratios == sorted(ratios)
    assert ratios[-1] < congruence.gamma(1) + 0.01

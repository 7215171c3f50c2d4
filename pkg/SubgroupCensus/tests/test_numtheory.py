import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st
from sympy import primerange, totient

from subgrowth import numtheory
from subgrowth.errors import CacheFormatError, InvalidArgument, ResourceLimitExceeded


def test_sieve_small():
    assert numtheory.sieve_primes(30).tolist() == [2, 3, 5, 7, 11, 13, 17, 19, 23, 29]
    assert numtheory.sieve_primes(2).tolist() == [2]


def test_sieve_rejects_bad_limits():
    with pytest.raises(InvalidArgument):
        numtheory.sieve_primes(1)
    with pytest.raises(ResourceLimitExceeded):
        numtheory.sieve_primes(10_000, limit_cap=1000)


def test_segmented_sieve_matches_sympy():
    got = numtheory._segmented_sieve(200_003, segment=4096)
    assert got.tolist() == list(primerange(2, 200_004))


def test_prime_table_membership_and_slicing():
    table = numtheory.sieve_primes(1000)
    assert 997 in table
    assert 999 not in table
    assert table.upto(10).tolist() == [2, 3, 5, 7]
    with pytest.raises(InvalidArgument):
        table.upto(1001)


def test_cache_round_trip(cache_dir):
    numtheory.clear_cache(cache_dir)
    table = numtheory.sieve_primes(1000, cache_dir=cache_dir)
    path = numtheory.cache_file(cache_dir, 1000)
    assert path.exists()

    decoded = numtheory.decode_prime_cache(path.read_bytes())
    assert decoded.limit == 1000
    assert np.array_equal(decoded.primes, table.primes)

    info = numtheory.cache_info(cache_dir)
    assert [(e["limit"], e["count"]) for e in info] == [(1000, 168)]
    assert numtheory.clear_cache(cache_dir) == 1
    assert not path.exists()


def test_slice_of_larger_table_is_written_to_cache(cache_dir):
    numtheory.sieve_primes(2000)
    table = numtheory.sieve_primes(1000, cache_dir=cache_dir)
    assert len(table) == 168
    assert [(e["limit"], e["count"]) for e in numtheory.cache_info(cache_dir)] == [(1000, 168)]

    # memoized table, cache file removed behind its back
    numtheory.cache_file(cache_dir, 1000).unlink()
    numtheory.sieve_primes(1000, cache_dir=cache_dir)
    assert numtheory.cache_file(cache_dir, 1000).exists()


def test_corrupt_cache_is_resieved(cache_dir):
    numtheory.clear_cache(cache_dir)
    numtheory.cache_file(cache_dir, 500).write_bytes(b"SGPR garbage")
    table = numtheory.sieve_primes(500, cache_dir=cache_dir)
    assert len(table) == 95
    # the bad file was replaced by a valid one
    assert numtheory.decode_prime_cache(numtheory.cache_file(cache_dir, 500).read_bytes()).limit == 500
    numtheory.clear_cache(cache_dir)


def test_decode_validates_header():
    good = numtheory.encode_prime_cache(10, np.array([2, 3, 5, 7]))
    assert numtheory.decode_prime_cache(good).tolist() == [2, 3, 5, 7]
    with pytest.raises(CacheFormatError):
        numtheory.decode_prime_cache(good[:5])
    with pytest.raises(CacheFormatError):
        numtheory.decode_prime_cache(b"XXXX" + good[4:])
    with pytest.raises(CacheFormatError):
        numtheory.decode_prime_cache(good[:-1])


def test_primes_in_ap():
    assert numtheory.primes_in_ap(100, 4, 1) == [5, 13, 17, 29, 37, 41, 53, 61, 73, 89, 97]
    assert numtheory.primes_in_ap(10, 1, 0) == [2, 3, 5, 7]
    with pytest.raises(InvalidArgument):
        numtheory.primes_in_ap(100, 6, 3)


def test_theta_and_error_term():
    assert numtheory.theta(10, 1, 1) == pytest.approx(math.log(210))
    assert numtheory.theta(2, 3, 1) == 0.0
    assert numtheory.error_term(100, 3, 1) == pytest.approx(numtheory.theta(100, 3, 1) - 50.0)


def test_sieve_one_million():
    assert len(numtheory.sieve_primes(10 ** 6)) == 78498
    assert numtheory.prime_count(10 ** 6) == 78498


def test_theta_small_progression():
    assert numtheory.theta(10, 3, 1) == pytest.approx(math.log(7))
    assert numtheory.theta(10, 4, 1) == pytest.approx(math.log(5))


def test_error_term_at_one_hundred_thousand():
    theta = math.fsum(math.log(p) for p in primerange(2, 10 ** 5 + 1) if p % 4 == 1)
    assert numtheory.theta(10 ** 5, 4, 1) == pytest.approx(theta, rel=1e-12)
    assert numtheory.error_term(10 ** 5, 4, 1) == pytest.approx(theta - 10 ** 5 / 2, abs=1e-6)


@pytest.mark.parametrize("q", [1, 3, 4, 7, 30])
def test_theta_nondecreasing_in_x(q):
    xs = list(range(2, 3000, 7))
    values = [numtheory.theta(x, q, 1) for x in xs]
    assert values == sorted(values)


@given(st.integers(min_value=2, max_value=20_000), st.integers(min_value=1, max_value=60))
def test_theta_splits_over_residue_classes(x, q):
    per_class = sum(numtheory.theta(x, q, a) for a in range(q) if math.gcd(a, q) == 1)
    dividing = sum(math.log(p) for p in primerange(2, x + 1) if q % p == 0)
    assert per_class + dividing == pytest.approx(numtheory.theta(x, 1, 1), rel=1e-12)


def test_prime_count():
    assert numtheory.prime_count(100) == 25
    assert numtheory.prime_count(1) == 0


def test_factor():
    f = numtheory.factor(360)
    assert f.factors == {2: 3, 3: 2, 5: 1}
    assert f.primes == [2, 3, 5]
    assert f.radical == 30
    assert numtheory.factor(1).factors == {}
    for bad in (0, -4, 2 ** 128):
        with pytest.raises(InvalidArgument):
            numtheory.factor(bad)


def test_factored_nat_validates():
    with pytest.raises(InvalidArgument):
        numtheory.FactoredNat(12, {2: 2, 3: 2})


@given(st.integers(min_value=1, max_value=10 ** 9))
def test_euler_phi_matches_sympy(n):
    assert numtheory.euler_phi(n) == int(totient(n))


def test_radical():
    assert numtheory.radical(72) == 6
    assert numtheory.radical(1) == 1


def test_scales():
    with pytest.raises(InvalidArgument):
        numtheory.scales(2)
    s = numtheory.scales(100)
    log_n = math.log(100)
    assert s.ell == pytest.approx(log_n / math.log(log_n))
    assert s.lam == pytest.approx(log_n * s.ell)
    assert s.to_dict()["lambda"] == s.lam

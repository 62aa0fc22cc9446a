import math

from hypothesis import given, strategies as st

from qslab.arith import (crt_pair, factorize, fit_slope, inverse_mod, is_prime, is_squarefree,
                         is_squarefull, legendre, mobius, primes_up_to, valuation)


def test_primes_up_to_small():
    assert primes_up_to(30) == [2, 3, 5, 7, 11, 13, 17, 19, 23, 29]
    assert len(primes_up_to(10**5)) == 9592


@given(st.integers(min_value=1, max_value=10**12))
def test_factorize_roundtrip(n):
    f = factorize(n)
    assert math.prod(p**e for p, e in f.items()) == n
    assert all(is_prime(p) for p in f)


@given(st.integers(min_value=2, max_value=10**6))
def test_is_prime_matches_sieve(n):
    assert is_prime(n) == (factorize(n) == {n: 1})


@given(st.sampled_from(primes_up_to(200)[1:]), st.integers(min_value=1, max_value=10**6))
def test_legendre_euler_criterion(p, a):
    e = pow(a, (p - 1) // 2, p)
    assert legendre(a, p) == (0 if a % p == 0 else (1 if e == 1 else -1))


@given(st.integers(1, 5000), st.integers(1, 5000))
def test_mobius_multiplicative(a, b):
    if math.gcd(a, b) == 1:
        assert mobius(a * b) == mobius(a) * mobius(b)


def test_squarefree_and_squarefull():
    assert [n for n in range(1, 20) if is_squarefull(n)] == [1, 4, 8, 9, 16]
    assert sum(is_squarefree(n) for n in range(1, 101)) == 61


@given(st.integers(1, 10**6), st.sampled_from([7, 9, 16, 25, 101]))
def test_inverse_and_crt(a, m):
    if math.gcd(a, m) == 1:
        assert a * inverse_mod(a, m) % m == 1
    x = crt_pair(a % m, m, a % 11, 11) if math.gcd(m, 11) == 1 else a % m
    assert x % m == a % m


def test_valuation_and_fit():
    assert valuation(2**5 * 3, 2) == 5
    s, r = fit_slope([0, 1, 2, 3], [1, 3, 5, 7])
    assert abs(s - 2) < 1e-12 and r < 1e-12


def test_is_prime_at_witness_bases():
    assert all(is_prime(p) for p in (2, 3, 5, 7, 11, 13, 17, 19, 23, 29, 31, 37, 41, 43))
    assert factorize(41 * 1050852793) == {41: 1, 1050852793: 1}

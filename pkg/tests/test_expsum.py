import math
from fractions import Fraction

import numpy as np
import pytest
from hypothesis import given, strategies as st

from qslab import cyclotomic as cyc
from qslab.errors import BadPrime
from qslab.expsum import (ResidueSet, factor_qm, parseval_check, precision_check,
                          ramanujan_S_prime_power, random_residue_set, series_partial_sums,
                          sigma_p, singular_series, sum_K, sum_Sq, sum_SqM, verify_bounds,
                          verify_factorization, verify_three_way)
from qslab.localcount import full_condition
from qslab.quadform import EXAMPLE_FORM

F = EXAMPLE_FORM
ZETA3 = 1.2020569031595942
ZETA4 = math.pi**4 / 90
# product of local densities: 5/7 at 2, (1 - p^-4)/(1 - p^-3) at odd p
SERIES_ORACLE = 5 / 7 * (1 - 2**-3) / (1 - 2**-4) * ZETA3 / ZETA4


def test_factor_qm():
    f = factor_qm(12, 15)
    assert (f.u, f.v1, f.v2, f.M11, f.M12, f.M2) == (4, 3, 1, 3, 1, 5)
    assert f.admissible and f.lcm == 60
    assert factor_qm(18, 15).v2 == 9


def test_trivial_sums():
    assert abs(complex(sum_Sq(F, 1)) - 1) < 1e-15
    assert abs(complex(sum_Sq(F, 3))) < 1e-12  # no primitive contribution in odd dimension


@pytest.mark.parametrize("p,ell", [(2, 1), (2, 2), (2, 3), (3, 1), (3, 2), (5, 2)])
def test_prime_power_sums_match_counts(p, ell):
    assert abs(complex(sum_Sq(F, p**ell)) - ramanujan_S_prime_power(F, p, ell)) < 1e-6 * p ** (6 * ell)


@pytest.mark.parametrize("q,c", [(4, [1, 0, 0, 0, 0]), (9, [1, 2, 0, 1, 1]), (6, [0, 0, 1, 0, 5])])
def test_exact_and_float_agree(q, c):
    ex = complex(sum_Sq(F, q, c, mode="exact"))
    fl = complex(sum_Sq(F, q, c))
    assert abs(ex - fl) < 1e-9 * max(1, abs(fl))


def test_factorization_identities():
    rng = np.random.default_rng(1)
    om = random_residue_set(F, [3, 5], rng)
    for mode in ("exact", "float"):
        assert verify_factorization(F, 4, 1, 3, 5, om, [1, 0, 0, 0, 0], mode).ok
    om5 = ResidueSet.from_conditions([full_condition(F, 5, 1)])
    for q in (6, 12, 25, 4, 9):
        assert verify_three_way(F, q, om5, [1, 2, 0, 0, 1], "exact").ok


def test_non_admissible_split_reported():
    om = ResidueSet(5, {9: random_residue_set(F, [9], np.random.default_rng(0)).parts[9]})
    r = verify_three_way(F, 3, om, [1, 0, 0, 0, 0])
    assert not factor_qm(3, 9).admissible and not r.ok


def test_parseval():
    rng = np.random.default_rng(2)
    for Mparts in ([3], [5], [7]):
        assert parseval_check(random_residue_set(F, Mparts, rng)).ok


def test_sum_K_full_set():
    om = ResidueSet.from_conditions([full_condition(F, 5, 1)])
    assert abs(complex(sum_K(om, [0] * 5)) - om.size) < 1e-9


def test_precision_guard():
    assert precision_check(F, 12, 1, None, [1, 0, 0, 0, 1]) < 1e-9


def test_bounds_tripwire():
    om5 = ResidueSet.from_conditions([full_condition(F, 5, 1)])
    inst = [(q, 1, None, [1, 0, 0, 0, 1]) for q in (3, 4, 9, 12, 25)]
    inst += [(q, 5, om5, [1, 0, 0, 0, 1]) for q in (5, 10, 25)]
    r = verify_bounds(F, inst)
    assert r.ok, r.ratios


def test_local_factors():
    assert sigma_p(F, 3) == Fraction(40, 39)
    assert sigma_p(F, 2) == Fraction(5, 7)


def test_singular_series_closed_form():
    s = singular_series(F, 1, None, 500)
    assert abs(s.value - SERIES_ORACLE) < 1e-6
    assert s.lower <= SERIES_ORACLE <= s.upper + 1e-9
    om5 = ResidueSet.from_conditions([full_condition(F, 5, 1)])
    s5 = singular_series(F, 5, om5, 500)
    # the Omega factor at 5 is #X(Z/5)-hat / 5^4 = 624/625 against sigma_5
    assert abs(s5.value - s.value / float(sigma_p(F, 5)) * 624 / 625) < 1e-9
    with pytest.raises(BadPrime):
        singular_series(F, 2, ResidueSet(5, {2: np.array([[1, 0, 0, 0, 1]])}))


def test_series_partial_sums_bracket():
    ps = series_partial_sums(F, 1, None, [4, 16])
    # q <= 4 contributes 1 - 1/4; q = 9 adds 2/81, q = 16 adds -1/32
    assert abs(ps[4] - 0.75) < 1e-12
    assert abs(ps[16] - (0.75 + 2 / 81 - 1 / 32)) < 1e-12


@given(st.sampled_from([3, 4, 5, 8, 12, 15]), st.lists(st.integers(-5, 5), min_size=1, max_size=12))
def test_cyclotomic_mul_matches_complex(L, coeffs):
    u = np.zeros(L, dtype=object)
    v = np.zeros(L, dtype=object)
    for i, c in enumerate(coeffs):
        (u if i % 2 else v)[(i // 2) % L] += c
    z = cyc.to_complex(cyc.mul(u, v, L), L)
    assert abs(complex(z) - complex(cyc.to_complex(u, L)) * complex(cyc.to_complex(v, L))) < 1e-9


@given(st.integers(1, 40))
def test_cyclotomic_poly_vanishes(L):
    phi = list(cyc.cyclotomic_poly(L))
    v = np.zeros(max(L, len(phi)), dtype=object)
    v[: len(phi)] = phi
    if len(phi) <= L:
        assert cyc.is_zero(v[:L], L)

import math
from fractions import Fraction

import pytest
from hypothesis import given, strategies as st

from qslab.enumeration import condition_mask, enumerate_points
from qslab.errors import InvalidAction, OmegaOne
from qslab.lab import builtin_conic_bundle
from qslab.localcount import DivisorOnQuadric, alternating_condition, make_condition
from qslab.quadform import EXAMPLE_FORM
from qslab.sieve import (SPLIT_PAIR, SWAP_PAIR, FibreActionData, G_asymptotics, G_of_xi,
                         SievePlan, delta_invariant, friable_product, multiplicative_values,
                         selberg_sieve_count, selberg_weights, theorem17_bound, theta_p,
                         wirsing_partial)

F = EXAMPLE_FORM
PRIMES = [3, 5, 7, 11, 13, 17, 19]
omega_strat = st.dictionaries(st.sampled_from(PRIMES),
                              st.fractions(min_value=0, max_value=Fraction(9, 10), max_denominator=20),
                              max_size=5)


def test_G_small_values():
    om = {p: Fraction(1, p) for p in (3, 5, 7, 11, 13)}
    # squarefree k < 10 from {3, 5, 7}: 1 + 1/2 + 1/4 + 1/6
    assert G_of_xi(om, 10) == Fraction(23, 12)
    assert G_of_xi({3: Fraction(1, 3)}, 4) == Fraction(3, 2)
    assert G_of_xi({}, 100) == 1
    with pytest.raises(OmegaOne):
        G_of_xi({3: Fraction(1)}, 10)


@given(omega_strat, st.integers(2, 60), st.integers(0, 40))
def test_G_monotone_in_xi(om, xi, step):
    assert G_of_xi(om, xi + step) >= G_of_xi(om, xi)


@given(omega_strat, st.integers(2, 60), st.sampled_from(PRIMES))
def test_G_monotone_in_omega(om, xi, p):
    bigger = dict(om)
    bigger[p] = min(Fraction(9, 10), om.get(p, Fraction(0)) + Fraction(1, 10))
    assert G_of_xi(bigger, xi) >= G_of_xi(om, xi)


@given(omega_strat.filter(bool), st.integers(3, 40))
def test_selberg_weights(om, xi):
    W = selberg_weights(om, xi)
    assert W.lam[1] == 1
    assert all(abs(v) <= 1 for v in W.lam.values())
    sub = {p: om[p] for p in W.primes}
    assert W.quadratic_form(sub) == 1 / W.G


def test_sieve_majorant():
    conds = {p: make_condition(F, p, 1, "x0x1_square") for p in (3, 5, 7, 11)}
    r = selberg_sieve_count(SievePlan(F, conds, 16, 12))
    X = enumerate_points(F, 16)
    assert r.total == len(X) == 8632
    assert r.sieved == int(condition_mask(X, list(conds.values())).sum())
    assert r.majorant >= r.sieved
    # weighted form of the same plan
    rw = selberg_sieve_count(SievePlan(F, conds, 8, 12, weighted=True))
    assert rw.majorant >= rw.sieved - 1e-9


def test_sieve_plan_validation():
    c3 = alternating_condition(F, 3, 1)
    with pytest.raises(ValueError):
        SievePlan(F, {5: c3}, 10, 10)
    with pytest.raises(ValueError):
        SievePlan(F, {3: c3, 5: make_condition(F, 5, 2, "all")}, 10, 10)


def test_theorem17_bound_terms():
    plan = SievePlan(F, {3: alternating_condition(F, 3, 1)}, 100, 4)
    b = theorem17_bound(plan, C=1.0)
    # G(4) = 1 + h(3) with h = (1/2)/(1 - 1/2) = 1
    assert math.isclose(b.main, 100**3 / 2, rel_tol=1e-12)
    assert math.isclose(b.error, 4 ** (5 + 2.01) * 100 ** (2.5 + 0.01), rel_tol=1e-12)


def test_multiplicative_values():
    tau = multiplicative_values(lambda p, v: v + 1, 100)
    assert [int(tau[n]) for n in (1, 12, 36, 64, 97)] == [1, 6, 9, 7, 2]


def test_wirsing_mu2():
    r = wirsing_partial("mu2", 10**6)
    assert r.partial_sum == 607926
    assert abs(r.partial_sum / (6 / math.pi**2 * 10**6) - 1) < 1e-3


def test_wirsing_constant_one():
    r = wirsing_partial("one", 10**6)
    assert abs(r.c_g - math.exp(-0.5772156649015329)) < 1e-3
    assert r.stabilizing


def test_G_asymptotics_slopes():
    full = G_asymptotics(lambda p: 1 / p, 10**6).slope
    half = G_asymptotics(lambda p: 1 / p if p % 4 == 3 else 0.0, 10**6).slope
    assert 0.75 < full < 1.1 and 0.35 < half < 0.6


def test_delta_invariant():
    assert delta_invariant([SWAP_PAIR, SWAP_PAIR]) == 1
    assert delta_invariant([SPLIT_PAIR]) == 0
    assert builtin_conic_bundle().delta() == 1
    cyc3 = FibreActionData((1, 1, 1), ((0, 1, 2), (1, 2, 0), (2, 0, 1)))
    assert delta_invariant([cyc3]) == Fraction(2, 3)
    assert FibreActionData.from_json({"components": [{"mult": 1}, {"mult": 1}],
                                      "action": [[1, 0]], "group_order": 2}) == SWAP_PAIR
    with pytest.raises(InvalidAction):
        FibreActionData((1, 1, 1), ((0, 1, 2), (1, 0, 2), (0, 2, 1))).delta()
    with pytest.raises(InvalidAction):
        FibreActionData((1, 1), ((1, 0),)).delta()


@pytest.mark.parametrize("p", [3, 5, 7, 11])
def test_theta_routes_agree(p):
    b = builtin_conic_bundle()
    ex = theta_p(F, b.residue_oracle, p, route="exhaustive")
    pr = theta_p(F, b.residue_oracle, p, route="projected", depends_on=(0, 1))
    assert ex.theta == pr.theta and ex.total == pr.total
    assert (ex.theta == 0) == (p % 4 == 1)


def test_friable_product():
    Z = DivisorOnQuadric.parse(["x0"], 5)
    r = friable_product(F, Z, 10, 2000)
    assert 0 < r.product < 1
    assert r.excluded == []
    assert abs(math.log(float(r.product)) + r.checkpoints[-1][1]) < 1e-9


def test_wirsing_tau_converges_slowly_to_exp_minus_2gamma():
    r = wirsing_partial("tau", 10**6)
    assert r.stabilizing
    assert abs(r.c_g / math.exp(-2 * 0.5772156649015329) - 1) < 0.02
    short = wirsing_partial("tau", 10**3, checkpoints=[10, 100, 1000])
    assert not short.stabilizing

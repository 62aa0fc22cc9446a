"""One test per acceptance criterion, each at its stated tolerance.

Every test records a PASS/FAIL line that is printed in the terminal summary.
"""
import math
import time
import warnings
from fractions import Fraction

import numpy as np

from qslab.arith import primes_up_to
from qslab.enumeration import sigma_infinity, weighted_count
from qslab.expsum import (ResidueSet, factor_qm, parseval_check, random_residue_set,
                          series_partial_sums, singular_series, verify_factorization,
                          verify_three_way)
from qslab.lab import ExperimentConfig, builtin_conic_bundle, run_experiment
from qslab.localcount import (DivisorOnQuadric, alternating_condition, brute_force_affine_zeros,
                              count_affine_zeros, count_projective_points, fp_projective_count,
                              full_condition, local_density, transversality_census)
from qslab.poly import HomogeneousPoly
from qslab.quadform import EXAMPLE_FORM
from qslab.sieve import (SievePlan, delta_invariant, friable_product, selberg_sieve_count,
                         theta_p, wirsing_partial)

F = EXAMPLE_FORM


def run(**kw):
    with warnings.catch_warnings():
        warnings.simplefilter("ignore")
        return run_experiment(ExperimentConfig.from_dict(kw))


def test_criterion_01_hensel(criterion):
    t0 = time.time()
    bad = []
    for p in (3, 5, 7, 11, 13):
        fp = count_projective_points(F, p, 1)
        if fp != p**3 + p**2 + p + 1 or fp_projective_count(F, p) != fp:
            bad.append((p, 1))
        for m in (1, 2, 3):
            if count_projective_points(F, p, m) != fp * p ** (3 * (m - 1)):
                bad.append((p, m))
    dt = time.time() - t0
    ok = not bad and dt < 60
    criterion(1, ok, f"Hensel identity on 15 (p, m) pairs, failures={bad}, {dt:.1f}s")
    assert ok


def test_criterion_02_local_density(criterion):
    d = local_density(F, 3, k_max=3)
    brute = [Fraction(brute_force_affine_zeros(F, 3, k), 3 ** (4 * k)) for k in (1, 2, 3)]
    ok = d.sigma == Fraction(40, 39) and brute == d.recursion_partials
    criterion(2, ok, f"sigma_3 = {d.sigma}; brute partials {[str(b) for b in brute]}")
    assert ok


def test_criterion_03_transversality(criterion):
    g = HomogeneousPoly.parse("x0", 5)
    parts = []
    ok = True
    for p in (3, 5, 7):
        r = transversality_census(F, g, p)
        ok &= r.pointwise_ok and r.error <= 10 * p**4
        parts.append(f"p={p}: {r.n_points} pts, max|c-p^3|={max(abs(c - p**3) for c in r.counts)}, "
                     f"agg err={r.error}")
    criterion(3, ok, "; ".join(parts))
    assert ok


def _split_samples(rng, lo, hi, n):
    """(q1, q2, M1, M2) with (q1 M1, q2 M2) = 1, odd M, lo < q M <= hi."""
    Ms = [1, 3, 5, 7, 9, 11, 13]
    out = []
    while len(out) < n:
        M1, M2 = (int(v) for v in rng.choice(Ms, 2))
        q1, q2 = (int(v) for v in rng.integers(1, 17, 2))
        qM = q1 * q2 * M1 * M2
        if lo < qM <= hi and math.gcd(q1 * M1, q2 * M2) == 1 and q1 * q2 > 1:
            out.append((q1, q2, M1, M2))
    return out


def _three_way_samples(rng, lo, hi, n):
    out = []
    while len(out) < n:
        M = int(rng.choice([1, 3, 5, 7, 9, 15, 21, 25]))
        q = int(rng.integers(2, 65))
        if lo < q * M <= hi and factor_qm(q, M).admissible:
            out.append((q, M))
    return out


def _omega(rng, M):
    if M == 1:
        return ResidueSet.trivial(5)
    from qslab.arith import factorize
    return random_residue_set(F, [p**e for p, e in factorize(M).items()], rng)


def test_criterion_04_expsum_identities(criterion):
    rng = np.random.default_rng(20240601)
    n_exact = n_float = 0
    fails = []
    for lo, hi, mode, n in ((0, 64, "exact", 30), (64, 400, "float", 15)):
        for q1, q2, M1, M2 in _split_samples(rng, lo, hi, n):
            om = _omega(rng, M1 * M2)
            c = [int(v) for v in rng.integers(0, 1000, 5)]
            r = verify_factorization(F, q1, q2, M1, M2, om, c, mode)
            fails += [] if r.ok else [("split", q1, q2, M1, M2, mode)]
        for q, M in _three_way_samples(rng, lo, hi, n):
            c = [int(v) for v in rng.integers(0, 1000, 5)]
            r = verify_three_way(F, q, _omega(rng, M), c, mode)
            fails += [] if r.ok else [("three-way", q, M, mode)]
        if mode == "exact":
            n_exact += 2 * n
        else:
            n_float += 2 * n
    pars = [parseval_check(random_residue_set(F, [int(rng.choice([3, 5, 7]))], rng)).ok for _ in range(20)]
    ok = not fails and all(pars) and n_exact >= 50
    criterion(4, ok, f"{n_exact} exact + {n_float} float factorizations, failures={fails[:3]}, "
                     f"Parseval {sum(pars)}/20")
    assert ok


def test_criterion_05_singular_series(criterion):
    om5 = ResidueSet.from_conditions([full_condition(F, 5, 1)])
    lines, ok = [], True
    for M, om in ((1, None), (5, om5)):
        S = singular_series(F, M, om).value
        ps = series_partial_sums(F, M, om, [20, 40, 80])
        gaps = [abs(ps[R] - S) for R in (20, 40, 80)]
        dec = gaps[0] > gaps[1] > gaps[2]
        rel = gaps[2] / S
        ok &= dec and rel < 0.05
        lines.append(f"M={M}: S={S:.6f} gaps={[f'{g:.5f}' for g in gaps]} decreasing={dec} rel={rel:.4f}")
    criterion(5, ok, "; ".join(lines))
    assert ok


def test_criterion_06_circle_main_term(criterion):
    t0 = time.time()
    sinf = sigma_infinity(F).value
    om5 = ResidueSet.from_conditions([full_condition(F, 5, 1)])
    cond5 = [full_condition(F, 5, 1)]
    lines, ok = [], True
    for M, om, conds in ((1, None, []), (5, om5, cond5)):
        S = singular_series(F, M, om).value
        r = {B: weighted_count(F, B, conds) / (sinf * B**3 * S) for B in (25, 100)}
        good = 0.8 <= r[100] <= 1.2 and abs(r[100] - 1) <= abs(r[25] - 1)
        ok &= good
        lines.append(f"M={M}: ratio B=25 {r[25]:.4f} -> B=100 {r[100]:.4f}")
    dt = time.time() - t0
    ok &= dt < 1800
    criterion(6, ok, "; ".join(lines) + f"; {dt:.0f}s single-threaded")
    assert ok


def test_criterion_07_selberg(criterion):
    conds = {p: alternating_condition(F, p, 1) for p in primes_up_to(19) if p > 2}
    assert all(c.omega == Fraction(1, 2) for c in conds.values())
    lines, ok = [], True
    for B in (16, 32):
        r = selberg_sieve_count(SievePlan(F, conds, B, 20))
        good = r.majorant >= r.sieved and 0.1 <= r.ratio <= 10
        ok &= good
        lines.append(f"B={B}: sieved={r.sieved} majorant={float(r.majorant):.1f} G={r.G} ratio={r.ratio:.3f}")
    criterion(7, ok, "; ".join(lines))
    assert ok


def test_criterion_08_thin_sets(criterion):
    Bs = [16, 32, 64, 128, 256]
    t2 = run(scenario="thin2", B=Bs).column("ratio")
    t1 = run(scenario="thin1", B=Bs, divisor=["x0"]).fit["saving_exponent"]
    mono = all(b < a for a, b in zip(t2, t2[1:]))
    ok = mono and t2[-1] < t2[0] / 2 and 0.7 <= t1 <= 1.3
    criterion(8, ok, f"type II ratios {[round(x, 5) for x in t2]}; type I exponent {t1:.3f}")
    assert ok


def test_criterion_09_fibration(criterion):
    b = builtin_conic_bundle()
    Delta = delta_invariant(b.action_data())
    split_zero = []
    for p in primes_up_to(50):
        if p % 4 == 1:
            split_zero.append(theta_p(F, b.residue_oracle, p, route="projected", depends_on=(0, 1)).theta)
    inert = {p: theta_p(F, b.residue_oracle, p, route="exhaustive")
             for p in primes_up_to(23) if p % 4 == 3}
    rep = run(scenario="fibration", B=[32, 64, 128, 256], p_cutoff=100)
    slope = rep.fit["slope"]
    ok = (Delta == 1 and all(t == 0 for t in split_zero) and all(r.bound_ok for r in inert.values())
          and abs(slope + 1) <= 0.3)
    criterion(9, ok, f"Delta={Delta}; Theta_p=0 at {len(split_zero)} primes 1 mod 4; "
                     f"max p*Theta_p/#X = {max(r.ratio * p for p, r in inert.items()):.3f}; "
                     f"slope {slope:.3f} (target -1 +- 0.3)")
    assert ok


def test_criterion_10_friable(criterion):
    r1 = friable_product(F, DivisorOnQuadric.parse(["x0"], 5), 10, 10**4).slope
    r2 = friable_product(F, DivisorOnQuadric.parse(["x0", "x1"], 5), 10, 10**4).slope
    Bs = [32, 64, 128, 256]
    a = run(scenario="friable", B=Bs, divisor=["x0"], y=10).column("ratio")
    b = run(scenario="friable", B=Bs, divisor=["x0", "x1"], y=10).column("ratio")
    order = all(y < x for B, x, y in zip(Bs, a, b) if B >= 64)
    ok = abs(r1 - 1) <= 0.15 and abs(r2 - 2) / 2 <= 0.15 and order
    criterion(10, ok, f"product exponents {r1:.3f}, {r2:.3f}; r=2 below r=1 at B>=64: {order}")
    assert ok


def test_criterion_11_equidistribution(criterion):
    one = run(scenario="equidist", B=[32, 64, 128], conditions=[{"p": 3, "predicate": "x0_nonzero"}])
    two = run(scenario="equidist", B=[32, 64, 128],
              conditions=[{"p": 3, "predicate": "x0_nonzero"}, {"p": 7, "predicate": "x1_nonzero"}])
    d1, d2 = one.fit["relative_deviation_at_largest_B"], two.fit["relative_deviation_at_largest_B"]
    ok = d1 < 0.1 and d2 < 0.1
    criterion(11, ok, f"predictions {one.fit['prediction']}, {two.fit['prediction']}; "
                      f"relative deviations at B=128 {d1:.2e}, {d2:.2e}")
    assert ok


def test_criterion_12_wirsing(criterion):
    mu2 = wirsing_partial("mu2", 10**6)
    rel = abs(mu2.partial_sum / (6 / math.pi**2 * 1e6) - 1)
    one = wirsing_partial("one", 10**6)
    tau = wirsing_partial("tau", 10**6)
    ok = rel < 1e-3 and one.stabilizing and tau.stabilizing
    criterion(12, ok, f"mu^2 rel err {rel:.2e}; c_1={one.c_g:.5f} drifts {[f'{d:.1e}' for d in one.drifts()]}; "
                      f"c_tau={tau.c_g:.5f} drifts {[f'{d:.1e}' for d in tau.drifts()]}")
    assert ok

"""Selberg sieve for quadrics: G(xi), Lambda^2 weights and majorants,
multiplicative-sum asymptotics, fibration invariants, Theta_p counts and
friability products."""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Callable, Sequence

import numpy as np

from .arith import fit_slope, mobius, primes_up_to
from .errors import InvalidAction, OmegaOne, ResourceLimit
from .localcount import (DivisorOnQuadric, LocalCondition, _points_mod_p,
                         count_projective_points, fp_projective_count,
                         iter_projective_points)
from .quadform import QuadraticForm

# ---------------------------------------------------------------------------
# G(xi) and Selberg weights


def _h(omega: Fraction) -> Fraction:
    if omega >= 1:
        raise OmegaOne("omega_p = 1 is excluded")
    return omega / (1 - omega)


def _squarefree_supported(primes: list[int], limit: int):
    """Yield (k, prime list) for squarefree k < limit built from `primes`."""
    primes = sorted(primes)

    def rec(start, k, used):
        yield k, used
        for i in range(start, len(primes)):
            p = primes[i]
            if k * p >= limit:
                break
            yield from rec(i + 1, k * p, used + [p])

    yield from rec(0, 1, [])


def G_of_xi(omegas: dict[int, Fraction], xi: float) -> Fraction:
    """sum over squarefree k < xi of prod_{p | k} omega_p / (1 - omega_p)."""
    for p, w in omegas.items():
        if not 0 <= w <= 1:
            raise ValueError(f"omega_{p} = {w} outside [0, 1]")
        if w == 1:
            raise OmegaOne(f"omega_{p} = 1")
    primes = [p for p, w in omegas.items() if w > 0]
    total = Fraction(0)
    limit = math.ceil(xi)
    for k, ps in _squarefree_supported(primes, limit):
        if k >= xi:
            continue
        t = Fraction(1)
        for p in ps:
            t *= _h(Fraction(omegas[p]))
        total += t
    return total


@dataclass
class SelbergWeights:
    xi: float
    primes: list[int]
    lam: dict[int, Fraction]
    G: Fraction

    def quadratic_form(self, omegas: dict[int, Fraction]) -> Fraction:
        """sum_{d,e} lambda_d lambda_e g([d,e]) with g(d) = prod omega_p."""
        tot = Fraction(0)
        items = list(self.lam.items())
        for d, ld in items:
            for e, le in items:
                l = d * e // math.gcd(d, e)
                g = Fraction(1)
                for p in self.primes:
                    if l % p == 0:
                        g *= omegas[p]
                tot += ld * le * g
        return tot


def selberg_weights(omegas: dict[int, Fraction], xi: float) -> SelbergWeights:
    """Optimal Lambda^2 weights supported on squarefree d < xi, d | P.

    lambda_d = mu(d) prod_{p|d} (1 - omega_p)^{-1} G_d(xi/d) / G(xi),
    G_d(x) = sum_{k < x, (k,d)=1} mu^2(k) h(k), h(p) = omega_p / (1 - omega_p).
    """
    primes = sorted(p for p, w in omegas.items() if w > 0 and p < xi)
    G = G_of_xi({p: omegas[p] for p in primes}, xi)
    lam = {}
    for d, ps in _squarefree_supported(primes, math.ceil(xi)):
        if d >= xi:
            continue
        rest = [p for p in primes if p not in ps]
        Gd = G_of_xi({p: omegas[p] for p in rest}, Fraction(xi) / d if isinstance(xi, int) else xi / d)
        f = Fraction(1)
        for p in ps:
            f /= 1 - Fraction(omegas[p])
        lam[d] = (-1) ** len(ps) * f * Gd / G
    return SelbergWeights(xi, primes, lam, G)


# ---------------------------------------------------------------------------
# the sieve on enumerated points


@dataclass
class SievePlan:
    form: QuadraticForm
    conditions: dict[int, LocalCondition]
    bound: int
    xi: float
    weighted: bool = False

    def __post_init__(self):
        ms = {c.m for c in self.conditions.values()}
        if len(ms) > 1:
            raise ValueError("all conditions must share one exponent m")
        for p, c in self.conditions.items():
            if c.p != p:
                raise ValueError("condition keyed by the wrong prime")
            if p in self.form.bad_primes:
                raise ValueError(f"p={p} divides 2*Delta_F and is excluded from the sieve")
            if c.omega >= 1:
                raise OmegaOne(f"omega_{p} = 1")

    @property
    def m(self) -> int:
        return next(iter(self.conditions.values())).m if self.conditions else 1

    def omegas(self) -> dict[int, Fraction]:
        return {p: c.omega for p, c in self.conditions.items() if p < self.xi}


@dataclass
class SieveResult:
    total: float
    sieved: float
    majorant: Fraction | float
    G: Fraction
    prediction: float
    ratio: float
    weights: SelbergWeights
    mask_counts: dict[int, float] = field(default_factory=dict)


def selberg_sieve_count(plan: SievePlan, budget: int = 4 * 10**9) -> SieveResult:
    from .enumeration import iter_point_chunks, weight_w
    om = plan.omegas()
    W = selberg_weights(om, plan.xi)
    primes = W.primes
    bit = {p: 1 << i for i, p in enumerate(primes)}
    acc: dict[int, float] = {}
    for X in iter_point_chunks(plan.form, plan.bound, budget):
        mask = np.zeros(len(X), dtype=np.int64)
        for p in primes:
            # n(x) collects the primes where x falls outside Omega
            mask |= np.where(plan.conditions[p].contains(X), 0, bit[p])
        wts = weight_w(plan.form, X / plan.bound) if plan.weighted else None
        uniq, inv = np.unique(mask, return_inverse=True)
        sums = np.bincount(inv.ravel(), weights=wts, minlength=len(uniq))
        for m, s in zip(uniq.tolist(), sums.tolist()):
            acc[m] = acc.get(m, 0) + (s if plan.weighted else int(round(s)))
    total = sum(acc.values())
    sieved = acc.get(0, 0)
    lam_bits = {}
    for d, l in W.lam.items():
        b = 0
        for p in primes:
            if d % p == 0:
                b |= bit[p]
        lam_bits[b] = l
    maj = Fraction(0) if not plan.weighted else 0.0
    for m, cnt in acc.items():
        s = sum((l for b, l in lam_bits.items() if b & m == b), Fraction(0))
        maj += cnt * (s * s) if not plan.weighted else cnt * float(s * s)
    if maj < sieved:
        raise AssertionError("Lambda^2 majorant fell below the sieved count")
    pred = float(total) / float(W.G) if total else 0.0
    ratio = float(maj) / pred if pred else float("nan")
    return SieveResult(total, sieved, maj, W.G, pred, ratio, W, acc)


@dataclass
class Theorem17Bound:
    main: float
    error: float

    @property
    def total(self) -> float:
        return self.main + self.error


def theorem17_bound(plan: SievePlan, C: float = 1.0, eps: float = 0.01,
                    G: Fraction | None = None) -> Theorem17Bound:
    """C (B^{n-1}/G(xi) + xi^{m(n+1)+2+eps} B^{(n+1)/2+eps}), projective n = N-1."""
    n = plan.form.n_vars - 1
    G = G_of_xi(plan.omegas(), plan.xi) if G is None else G
    B, xi, m = float(plan.bound), float(plan.xi), plan.m
    return Theorem17Bound(C * B ** (n - 1) / float(G), C * xi ** (m * (n + 1) + 2 + eps) * B ** ((n + 1) / 2 + eps))


# ---------------------------------------------------------------------------
# multiplicative sums


GFunc = Callable[[int, int], float]

BUILTIN_G: dict[str, GFunc] = {
    "mu2": lambda p, v: 1.0 if v == 1 else 0.0,
    "one": lambda p, v: 1.0,
    "tau": lambda p, v: float(v + 1),
    "half_primes_3mod4": lambda p, v: (1.0 if p % 4 == 3 else 0.0) if v == 1 else 0.0,
}


def multiplicative_values(g: GFunc, x: int) -> np.ndarray:
    """f[n] for 0 <= n <= x (f[0] unused) from values on prime powers."""
    f = np.ones(x + 1, dtype=np.float64)
    f[0] = 0.0
    for p in primes_up_to(x):
        mult = np.ones(x // p + 1, dtype=np.float64)  # indexed by n / p
        pv, v = p, 1
        while pv <= x:
            mult[pv // p :: pv // p] = g(p, v)
            pv *= p
            v += 1
        f[p::p] *= mult[1:]
    return f


@dataclass
class WirsingReport:
    x: int
    partial_sum: float
    prediction: float
    c_g: float
    checkpoints: list[tuple[int, float, float, float]]  # (x, sum, prediction, c_g)

    def drifts(self) -> list[float]:
        c = [r[3] for r in self.checkpoints]
        return [abs(b - a) / abs(a) for a, b in zip(c, c[1:]) if a]

    @property
    def stabilizing(self) -> bool:
        # the last three checkpoint values agree to within 0.5% step to step;
        # second order terms of size 1/log x oscillate, so no monotonicity is asked
        d = self.drifts()
        return len(d) >= 2 and max(d[-2:]) < 0.005


def wirsing_partial(g: GFunc | str, x: int, checkpoints: Sequence[int] | None = None,
                    beta: float = 10.0) -> WirsingReport:
    """Partial sums of g against (x / log x) prod_{p <= x} sum_v g(p^v) p^{-v}."""
    if isinstance(g, str):
        g = BUILTIN_G[g]
    for p in (2, 3, 5):
        for v in (1, 2, 3):
            if g(p, v) > beta**v:
                raise ValueError("g(p^v) exceeds beta^v")
    f = multiplicative_values(g, x)
    csum = np.cumsum(f)
    if checkpoints is None:
        checkpoints = sorted({10**k for k in range(3, int(math.log10(x)) + 1)} | {x})
    primes = primes_up_to(x)
    logs = np.zeros(len(primes))
    for i, p in enumerate(primes):
        s, pv, v = 1.0, p, 1
        while v < 64:
            t = g(p, v) / pv
            s += t
            if pv > 1e18 or (v > 2 and abs(t) < 1e-18):
                break
            pv *= p
            v += 1
        logs[i] = math.log(s) if s > 0 else -math.inf
    cum = np.cumsum(logs)
    pa = np.array(primes)
    rows = []
    for X in checkpoints:
        k = int(np.searchsorted(pa, X, "right"))
        pred = X / math.log(X) * math.exp(cum[k - 1]) if k else X / math.log(X)
        S = float(csum[X])
        rows.append((X, S, pred, S / pred))
    last = rows[-1]
    return WirsingReport(x, last[1], last[2], last[3], rows)


# ---------------------------------------------------------------------------
# G(xi) growth


def G_float_profile(omega_fn: Callable[[int], float], xi_max: int) -> np.ndarray:
    """G(xi) for every integer xi <= xi_max: cumsum over squarefree k < xi of h(k)."""
    def g(p, v):
        if v > 1:
            return 0.0
        w = omega_fn(p)
        if w >= 1:
            raise OmegaOne(f"omega_{p} = 1")
        return w / (1 - w)
    h = multiplicative_values(g, xi_max)
    h[0] = 0.0
    out = np.zeros(xi_max + 1)
    out[1:] = np.cumsum(h)[:-1]  # strict inequality k < xi
    return out


@dataclass
class SlopeFit:
    slope: float
    residual: float
    points: list[tuple[float, float]]


def G_asymptotics(omega_fn: Callable[[int], float] | dict, B: int,
                  checkpoints: Sequence[int] | None = None) -> SlopeFit:
    """Least-squares slope of log G(xi) against log log xi."""
    if isinstance(omega_fn, dict):
        d = omega_fn
        omega_fn = lambda p: float(d.get(p, 0))
    prof = G_float_profile(omega_fn, B)
    if checkpoints is None:
        checkpoints = sorted({int(round(B ** (k / 8))) for k in range(3, 9)})
    xs = [math.log(math.log(c)) for c in checkpoints]
    ys = [math.log(prof[c]) for c in checkpoints]
    s, r = fit_slope(xs, ys)
    return SlopeFit(s, r, list(zip(xs, ys)))


# ---------------------------------------------------------------------------
# fibration invariants


@dataclass(frozen=True)
class FibreActionData:
    """Galois action on the irreducible components of one fibre."""
    multiplicities: tuple[int, ...]
    action: tuple[tuple[int, ...], ...]  # permutations, one per group element

    @property
    def group_order(self) -> int:
        return len(self.action)

    def validate(self):
        k = len(self.multiplicities)
        if any(m < 1 for m in self.multiplicities):
            raise InvalidAction("multiplicities must be >= 1")
        perms = {tuple(g) for g in self.action}
        if len(perms) != len(self.action):
            raise InvalidAction("repeated group element")
        for g in perms:
            if sorted(g) != list(range(k)):
                raise InvalidAction(f"{g} is not a permutation of {k} components")
        if tuple(range(k)) not in perms:
            raise InvalidAction("identity missing from the action")
        for g in perms:
            for h in perms:
                if tuple(g[h[i]] for i in range(k)) not in perms:
                    raise InvalidAction("action is not closed under composition")

    def delta(self) -> Fraction:
        """#{g fixing some multiplicity-1 component} / #G."""
        self.validate()
        good = sum(1 for g in self.action
                   if any(g[i] == i and self.multiplicities[i] == 1 for i in range(len(g))))
        return Fraction(good, len(self.action))

    @classmethod
    def from_json(cls, d: dict) -> "FibreActionData":
        mults = tuple(int(c.get("mult", 1)) for c in d["components"])
        action = tuple(tuple(int(v) for v in g) for g in d["action"])
        if "group_order" in d and int(d["group_order"]) != len(action):
            # a lone swap [[1,0]] with group_order 2 means {identity, swap}
            ident = tuple(range(len(mults)))
            if ident not in action:
                action = (ident,) + action
            if int(d["group_order"]) != len(action):
                raise InvalidAction("group_order disagrees with the action list")
        return cls(mults, action)


def delta_invariant(data: Sequence[FibreActionData]) -> Fraction:
    """Delta(pi) = sum_D (1 - delta_D)."""
    return sum((1 - d.delta() for d in data), Fraction(0))


SWAP_PAIR = FibreActionData((1, 1), ((0, 1), (1, 0)))
SPLIT_PAIR = FibreActionData((1, 1), ((0, 1),))
DOUBLE_LINE = FibreActionData((2,), ((0,),))


# ---------------------------------------------------------------------------
# Theta_p


SolubilityOracle = Callable[[np.ndarray, int], np.ndarray]


@dataclass
class ThetaResult:
    p: int
    theta: int
    total: int
    ratio: float
    bound_ok: bool
    route: str


def theta_p(F: QuadraticForm, oracle: SolubilityOracle, p: int, C: float = 10.0,
            route: str = "auto", depends_on: tuple[int, ...] | None = None,
            exhaust_limit: int = 2 * 10**8) -> ThetaResult:
    """Theta_p = #{x in X(Z/p^2) whose fibre has no Q_p-point}.

    route="exhaustive" streams all of X(Z/p^2).  route="projected" needs
    depends_on=(i, j): the oracle only reads coordinates i, j mod p^2, and
    lifts of each point of X(F_p) are counted by linear algebra.
    """
    total = count_projective_points(F, p, 2)
    if route == "auto":
        route = "exhaustive" if total <= exhaust_limit or depends_on is None else "projected"
    if route == "exhaustive":
        bad = 0
        for X in iter_projective_points(F, p, 2):
            bad += int(np.count_nonzero(~np.asarray(oracle(X, p), dtype=bool)))
    elif route == "projected":
        if depends_on is None or len(depends_on) != 2:
            raise ValueError("projected route needs depends_on=(i, j)")
        bad = _theta_projected(F, oracle, p, depends_on)
    else:
        raise ValueError(f"unknown route {route!r}")
    ratio = bad / total
    return ThetaResult(p, bad, total, ratio, ratio <= C / p, route)


def _theta_projected(F, oracle, p, dep) -> int:
    N = F.n_vars
    q2 = p * p
    base = _points_mod_p(F, p)
    m2 = np.array(F.matrix2, dtype=np.int64)
    g = (base @ m2.T) % p
    c = (F.evaluate_array(base) // p) % p
    j = np.argmax(base % p != 0, axis=1)
    i0, i1 = dep
    bad = 0
    zs = np.arange(p, dtype=np.int64)
    for r in range(len(base)):
        x, gr, cr, jr = base[r], g[r], int(c[r]), int(j[r])
        P = [i for i in (i0, i1) if i != jr]
        R = [i for i in range(N) if i != jr and i not in P]
        # pairs (z_P) and their lift multiplicities
        if P:
            Z = np.stack(np.meshgrid(*([zs] * len(P)), indexing="ij"), axis=-1).reshape(-1, len(P))
        else:
            Z = np.zeros((1, 0), dtype=np.int64)
        if any(gr[i] % p for i in R):
            mult = np.full(len(Z), p ** (len(R) - 1), dtype=np.int64)
        else:
            lhs = (Z @ gr[P]) % p if P else np.zeros(1, np.int64)
            mult = np.where((lhs + cr) % p == 0, p ** len(R), 0).astype(np.int64)
        V = np.zeros((len(Z), N), dtype=np.int64)
        V[:, i0] = x[i0]
        V[:, i1] = x[i1]
        for k, i in enumerate(P):
            V[:, i] = (x[i] + p * Z[:, k]) % q2
        ok = np.asarray(oracle(V, p), dtype=bool)
        bad += int(mult[~ok].sum())
    return bad


# ---------------------------------------------------------------------------
# friability products


@dataclass
class FriableProduct:
    product: Fraction
    slope: float
    residual: float
    checkpoints: list[tuple[int, float]]
    excluded: list[int]


def friable_product(F: QuadraticForm, Z: DivisorOnQuadric, y: float, z: int,
                    checkpoints: Sequence[int] | None = None, exact: bool = True) -> FriableProduct:
    """prod_{y < p < z} (1 - #Z(F_p)/#X(F_p)) and the slope of -log(product)
    against log log z over geometric checkpoints."""
    if checkpoints is None:
        lo = max(y + 1, 10.0)
        checkpoints = sorted({int(round(lo * (z / lo) ** (k / 7))) for k in range(1, 8)})
    excluded = []
    prod = Fraction(1)
    logp = 0.0
    ck = []
    cks = list(checkpoints)
    primes = [p for p in primes_up_to(z - 1) if p > y]
    idx = 0
    for p in primes:
        while idx < len(cks) and cks[idx] <= p:
            ck.append((cks[idx], -logp))
            idx += 1
        if p == 2 or p in F.bad_primes:
            excluded.append(p)
            continue
        nz = Z.point_count_fp(F, p) if Z.r else 0
        nx = fp_projective_count(F, p)
        f = 1 - Fraction(nz, nx)
        if exact:
            prod *= f
        logp += math.log(float(f))
    while idx < len(cks):
        ck.append((cks[idx], -logp))
        idx += 1
    if not exact:
        prod = None
    pts = [(math.log(math.log(c)), v) for c, v in ck if c > math.e]
    if len(pts) >= 2 and any(v for _, v in pts):
        s, r = fit_slope([a for a, _ in pts], [b for _, b in pts])
    else:
        s, r = 0.0, 0.0
    return FriableProduct(prod, s, r, ck, excluded)

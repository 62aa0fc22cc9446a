"""Exponential sums S_q(c), S_{q,M}(c), K_L(c), their factorization
identities, bound checks, the singular series and the main term."""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Sequence

import numpy as np

from . import cyclotomic as cyc
from .arith import (crt_pair, factorize, fit_slope, inverse_mod, lcm,
                    primes_up_to, units_mod)
from .errors import BadPrime, ResourceLimit
from .localcount import LocalCondition, fp_affine_count, local_density
from .quadform import QuadraticForm, dual_form

# ---------------------------------------------------------------------------
# q / M factorization


@dataclass(frozen=True)
class QMFactorization:
    q: int
    M: int
    u: int
    v1: int
    v2: int
    M11: int
    M12: int
    M2: int

    @property
    def lcm(self) -> int:
        return lcm(self.q, self.M)

    @property
    def admissible(self) -> bool:
        """True when M = M11 M12 M2 is a coprime split with (M2, u v1 v2) = 1;
        this always holds for squarefree M."""
        return (math.gcd(self.M2, self.u * self.v1 * self.v2) == 1
                and math.gcd(self.M11, self.M12) == 1
                and self.M11 * self.M12 * self.M2 == self.M)


def factor_qm(q: int, M: int) -> QMFactorization:
    if q < 1 or M < 1:
        raise ValueError("q and M must be positive")
    fq = factorize(q) if q > 1 else {}
    Mp = set(factorize(M)) if M > 1 else set()
    u = v1 = v2 = 1
    for p, e in fq.items():
        if p not in Mp:
            u *= p**e
        elif e == 1:
            v1 *= p
        else:
            v2 *= p**e
    M11 = math.gcd(M, v1)
    M12 = math.gcd(M, v2)
    M2 = M // (M11 * M12)
    return QMFactorization(q, M, u, v1, v2, M11, M12, M2)


# ---------------------------------------------------------------------------
# residue sets Omega_M = prod Omega_{p^m}


@dataclass(eq=False)
class ResidueSet:
    """Omega_M as a product over prime powers p^m || M of vector sets mod p^m."""

    n_vars: int
    parts: dict[int, np.ndarray] = field(default_factory=dict)

    def __post_init__(self):
        clean = {}
        for q, V in self.parts.items():
            V = np.unique(np.asarray(V, dtype=np.int64).reshape(-1, self.n_vars) % q, axis=0)
            clean[int(q)] = V
        self.parts = clean

    @classmethod
    def trivial(cls, n_vars: int) -> "ResidueSet":
        return cls(n_vars, {})

    @classmethod
    def from_conditions(cls, conds: Sequence[LocalCondition]) -> "ResidueSet":
        if not conds:
            raise ValueError("use ResidueSet.trivial for M = 1")
        return cls(conds[0].form.n_vars, {c.modulus: c.vectors() for c in conds})

    @property
    def modulus(self) -> int:
        return math.prod(self.parts) if self.parts else 1

    @property
    def size(self) -> int:
        return math.prod(len(V) for V in self.parts.values()) if self.parts else 1

    def restrict(self, L: int) -> "ResidueSet":
        """Omega_L for L a product of full prime-power parts of M."""
        if self.modulus % L:
            raise ValueError(f"{L} does not divide M = {self.modulus}")
        keep = {q: V for q, V in self.parts.items() if L % q == 0}
        if (math.prod(keep) if keep else 1) != L:
            raise ValueError(f"{L} is not a product of full prime-power parts of M")
        return ResidueSet(self.n_vars, keep)

    def vectors(self) -> np.ndarray:
        """All vectors mod M, combined by the CRT."""
        out = np.zeros((1, self.n_vars), dtype=np.int64)
        mod = 1
        for q, V in sorted(self.parts.items()):
            a = np.repeat(out, len(V), axis=0)
            b = np.tile(V, (len(out), 1))
            t = (b - a) * inverse_mod(mod, q) % q if mod > 1 else b
            out = (a + mod * t) % (mod * q) if mod > 1 else b
            mod *= q
        return out

    def check_subset(self, F: QuadraticForm) -> bool:
        """Each part satisfies p ∤ y and F(y) = 0 mod p^m."""
        for q, V in self.parts.items():
            p = min(factorize(q))
            if not ((V % p != 0).any(axis=1).all() and (F.evaluate_array(V) % q == 0).all()):
                return False
        return True


def random_residue_set(F: QuadraticForm, q_parts: Sequence[int], rng: np.random.Generator,
                       keep: float = 0.5) -> ResidueSet:
    """Random nonempty subsets of the eq. subset sets at the given prime powers."""
    from .localcount import _residue_block
    parts = {}
    N = F.n_vars
    for q in q_parts:
        p = min(factorize(q))
        Y = _residue_block(q, N, 0, q**N)
        ok = (Y % p != 0).any(axis=1) & (F.evaluate_array(Y) % q == 0)
        Y = Y[ok]
        m = rng.random(len(Y)) < keep
        if not m.any():
            m[rng.integers(len(Y))] = True
        parts[q] = Y[m]
    return ResidueSet(N, parts)


# ---------------------------------------------------------------------------
# cyclotomic elements


@dataclass(eq=False)
class CycloElement:
    L: int
    coeffs: np.ndarray

    def embed(self, L: int) -> "CycloElement":
        return CycloElement(L, cyc.embed(self.coeffs, self.L, L))

    def __mul__(self, other):
        if isinstance(other, int):
            return CycloElement(self.L, self.coeffs * other)
        L = lcm(self.L, other.L)
        return CycloElement(L, cyc.mul(self.embed(L).coeffs, other.embed(L).coeffs, L))

    __rmul__ = __mul__

    def equals(self, other: "CycloElement") -> bool:
        L = lcm(self.L, other.L)
        return cyc.equal(self.embed(L).coeffs, other.embed(L).coeffs, L)

    def as_integer(self) -> int | None:
        """The element as an integer when it lies in Z, else None."""
        r = cyc.reduce_mod_phi(self.coeffs, self.L)
        return int(r[0]) if not any(r[1:]) else None

    def __complex__(self):
        return cyc.to_complex(self.coeffs, self.L, np.complex128)

    def value(self, dtype=np.clongdouble):
        return np.sum(self.coeffs.astype(dtype) * cyc.root_table(self.L, dtype))


# ---------------------------------------------------------------------------
# the sums


def _diagonal_mod(F: QuadraticForm, q: int) -> list[int] | None:
    if not F.is_integral:
        return None
    if all(i == j or int(c) % q == 0 for (i, j), c in F.coeffs):
        return [int(x) for x in F.diagonal()]
    return None


def _coord_exponents(d: int, c: int, a: np.ndarray, q: int, L: int) -> np.ndarray:
    """Exponents mod L of e_q(a d y^2) e_L(c y) for y mod L; shape (len(a), L)."""
    y = np.arange(L, dtype=np.int64)
    return ((L // q) * (a[:, None] * (d * (y * y % L) % L)[None, :] % L) + (c * y % L)[None, :]) % L


def _omega_or_trivial(omega, N):
    return ResidueSet.trivial(N) if omega is None else omega


def sum_SqM(F: QuadraticForm, q: int, M: int = 1, omega: ResidueSet | None = None,
            c: Sequence[int] | None = None, mode: str = "float", budget: int = 5 * 10**7):
    """S_{q,M}(c) = sum*_{a mod q} sum_{y mod [q,M], [y]_M in Omega_M} e_q(aF(y)) e_{[q,M]}(c.y).

    mode="float" returns a numpy clongdouble; mode="exact" returns a
    CycloElement in Z[zeta_[q,M]].
    """
    N = F.n_vars
    omega = _omega_or_trivial(omega, N)
    if omega.modulus != M:
        raise ValueError(f"Omega has modulus {omega.modulus}, expected M = {M}")
    c = [0] * N if c is None else [int(v) for v in c]
    L = lcm(q, M)
    a = np.array(units_mod(q) if q > 1 else (0,), dtype=np.int64)
    U = omega.vectors() % M if M > 1 else np.zeros((1, N), dtype=np.int64)
    d = _diagonal_mod(F, q)
    if d is None:
        return _brute_SqM(F, q, M, U, c, a, L, mode, budget)
    if mode == "float":
        roots = cyc.root_table(L, np.clongdouble)
        vals = np.ones((len(a), len(U)), dtype=np.clongdouble)
        for i in range(N):
            E = _coord_exponents(d[i], c[i] % L, a, q, L)
            G = roots[E].reshape(len(a), L // M, M).sum(axis=1)  # (a, u)
            vals *= G[:, U[:, i]]
        return vals.sum()
    if mode == "exact":
        return CycloElement(L, _exact_diag(d, c, a, q, M, L, U))
    raise ValueError(f"unknown mode {mode!r}")


def _exact_diag(d, c, a, q, M, L, U) -> np.ndarray:
    N = len(d)
    # G[i][a_idx, u] is a coefficient vector of length L
    G = []
    for i in range(N):
        E = _coord_exponents(d[i], c[i] % L, a, q, L).reshape(len(a), L // M, M)
        T = np.zeros((len(a), M, L), dtype=np.int64)
        ai, zi, ui = np.indices(E.shape)
        np.add.at(T, (ai.ravel(), ui.ravel(), E.ravel()), 1)
        G.append(T)
    # prefix tree over the sorted Omega vectors
    U = np.unique(U, axis=0)
    levels = [U]
    parents = []
    for k in range(N - 1, -1, -1):
        pref, inv = np.unique(levels[0][:, :k], axis=0, return_inverse=True)
        parents.insert(0, inv.ravel())
        levels.insert(0, pref)
    total = np.zeros(L, dtype=np.int64)
    for ai in range(len(a)):
        V = np.zeros((len(U), L), dtype=np.int64)
        V[:, 0] = 1
        for k in range(N - 1, -1, -1):
            nodes = levels[k + 1]
            par = parents[k]
            W = np.zeros_like(V)
            last = nodes[:, k]
            for val in np.unique(last):
                rows = last == val
                W[rows] = V[rows] @ cyc.circulant(G[k][ai, val])
            Vp = np.zeros((len(levels[k]), L), dtype=np.int64)
            np.add.at(Vp, par, W)
            V = Vp
        total += V[0]
    return total


def _brute_SqM(F, q, M, U, c, a, L, mode, budget):
    N = F.n_vars
    k = L // M
    n = len(U) * k**N * len(a)
    if n > budget:
        raise ResourceLimit(f"brute-force exponential sum needs {n} terms")
    from .localcount import _residue_block
    Z = _residue_block(k, N, 0, k**N)
    Y = (U[:, None, :] + M * Z[None, :, :]).reshape(-1, N)
    fy = F.evaluate_array(Y) % L
    cy = (Y @ np.array(c, dtype=np.int64)) % L
    E = ((L // q) * (a[:, None] * fy[None, :] % L) + cy[None, :]) % L
    coeffs = np.bincount(E.ravel(), minlength=L).astype(np.int64)
    el = CycloElement(L, coeffs)
    return el if mode == "exact" else el.value()


def sum_Sq(F: QuadraticForm, q: int, c: Sequence[int] | None = None, mode: str = "float"):
    return sum_SqM(F, q, 1, None, c, mode)


def sum_K(omega: ResidueSet, c: Sequence[int], mode: str = "float"):
    """K_L(c) = sum_{y in Omega_L} e_L(c.y)."""
    L = omega.modulus
    U = omega.vectors() % L if L > 1 else np.zeros((1, omega.n_vars), dtype=np.int64)
    E = (U @ (np.array([int(v) for v in c], dtype=np.int64) % L)) % L if L > 1 else np.zeros(1, np.int64)
    el = CycloElement(L, np.bincount(E, minlength=L).astype(np.int64))
    return el if mode == "exact" else el.value()


def precision_check(F: QuadraticForm, q: int, M: int, omega: ResidueSet | None, c) -> float:
    """|S(80-bit) - S(64-bit)|: the precision-doubling self-check."""
    hi = sum_SqM(F, q, M, omega, c, "float")
    N = F.n_vars
    omega = _omega_or_trivial(omega, N)
    L = lcm(q, M)
    a = np.array(units_mod(q) if q > 1 else (0,), dtype=np.int64)
    U = omega.vectors() % M if M > 1 else np.zeros((1, N), dtype=np.int64)
    d = _diagonal_mod(F, q)
    c = [0] * N if c is None else list(c)
    if d is None:
        return 0.0
    roots = cyc.root_table(L, np.complex128)
    vals = np.ones((len(a), len(U)), dtype=np.complex128)
    for i in range(N):
        E = _coord_exponents(d[i], int(c[i]) % L, a, q, L)
        G = roots[E].reshape(len(a), L // M, M).sum(axis=1)
        vals *= G[:, U[:, i]]
    return float(abs(complex(hi) - complex(vals.sum())))


def cyclotomic_eval_check(el: CycloElement) -> float:
    return float(abs(complex(el.value(np.clongdouble)) - complex(el)))


# ---------------------------------------------------------------------------
# identity checks


@dataclass
class IdentityCheck:
    ok: bool
    residual: float
    lhs: object = None
    rhs: object = None
    detail: str = ""


def _mul_values(vals):
    out = 1
    for v in vals:
        out = out * v
    return out


def verify_factorization(F: QuadraticForm, q1: int, q2: int, M1: int, M2: int,
                         omega: ResidueSet, c: Sequence[int], mode: str = "float",
                         rtol: float = 1e-9) -> IdentityCheck:
    """S_{q1 q2, M}(c) = S_{q1,M1}(t c) S_{q2,M2}(s c) with [q1,M1]s + [q2,M2]t = 1."""
    if math.gcd(q1 * M1, q2 * M2) != 1:
        raise ValueError("need (q1 M1, q2 M2) = 1")
    L1, L2 = lcm(q1, M1), lcm(q2, M2)
    s, t = _bezout(L1, L2)
    M = M1 * M2
    lhs = sum_SqM(F, q1 * q2, M, omega, c, mode)
    f1 = sum_SqM(F, q1, M1, omega.restrict(M1), [t * v for v in c], mode)
    f2 = sum_SqM(F, q2, M2, omega.restrict(M2), [s * v for v in c], mode)
    return _compare(lhs, f1 * f2, mode, rtol)


def _bezout(a: int, b: int) -> tuple[int, int]:
    old_r, r, old_s, s, old_t, t = a, b, 1, 0, 0, 1
    while r:
        qq = old_r // r
        old_r, r = r, old_r - qq * r
        old_s, s = s, old_s - qq * s
        old_t, t = t, old_t - qq * t
    return old_s, old_t


def _compare(lhs, rhs, mode, rtol) -> IdentityCheck:
    if mode == "exact":
        ok = lhs.equals(rhs)
        res = abs(complex(lhs) - complex(rhs))
        return IdentityCheck(ok, res, lhs, rhs)
    res = float(abs(complex(lhs) - complex(rhs)))
    scale = max(1.0, float(abs(complex(lhs))), float(abs(complex(rhs))))
    return IdentityCheck(res <= rtol * scale, res / scale, lhs, rhs)


def verify_three_way(F: QuadraticForm, q: int, omega: ResidueSet, c: Sequence[int],
                     mode: str = "float", rtol: float = 1e-9) -> IdentityCheck:
    """phi(v1) S_u(c) S_{v2,M12}(inv(u v1 M2) c) K_{v1}(inv(u v2 M2) c) K_{M2}(inv(u v1 v2) c)."""
    M = omega.modulus
    f = factor_qm(q, M)
    if not f.admissible:
        return IdentityCheck(False, float("nan"), detail="non-admissible (q, M) split")
    u, v1, v2, M12, M2 = f.u, f.v1, f.v2, f.M12, f.M2
    phi_v1 = sum(1 for a in range(v1) if math.gcd(a, v1) == 1) if v1 > 1 else 1
    lhs = sum_SqM(F, q, M, omega, c, mode)

    def scaled(k, mod):
        t = inverse_mod(k, mod) if mod > 1 else 0
        return [t * x for x in c]

    parts = [
        sum_Sq(F, u, c, mode),
        sum_SqM(F, v2, M12, omega.restrict(M12), scaled(u * v1 * M2, v2), mode),
        sum_K(omega.restrict(v1), scaled(u * v2 * M2, v1), mode),
        sum_K(omega.restrict(M2), scaled(u * v1 * v2, M2), mode),
    ]
    rhs = _mul_values(parts) * phi_v1
    return _compare(lhs, rhs, mode, rtol)


def parseval_check(omega: ResidueSet) -> IdentityCheck:
    """sum over a in (Z/M)^N of |K_M(a)|^2 = M^N #Omega_M, exactly in Z[zeta_M]."""
    M = omega.modulus
    N = omega.n_vars
    U = omega.vectors()
    from .localcount import _residue_block
    total = np.zeros(M, dtype=np.int64)
    nA = M**N
    step = max(1, (1 << 22) // max(1, len(U)))
    for s in range(0, nA, step):
        A = _residue_block(M, N, s, min(nA, s + step))
        E = (A @ U.T) % M  # (a, y)
        H = np.zeros((len(A), M), dtype=np.int64)
        np.add.at(H, (np.repeat(np.arange(len(A)), E.shape[1]), E.ravel()), 1)
        # |K|^2 as an element: autocorrelation of the exponent histogram
        for k in range(M):
            total[k] += int((H * np.roll(H, -k, axis=1)).sum())
    target = np.zeros(M, dtype=np.int64)
    target[0] = M**N * len(U)
    ok = cyc.equal(total, target, M)
    return IdentityCheck(bool(ok), 0.0 if ok else float("inf"), total, target)


# ---------------------------------------------------------------------------
# empirical bound checks


@dataclass
class BoundReport:
    ratios: dict[str, float]
    ok: bool
    constant: float
    samples: dict[str, int]


def _T_qM(F, q, M, omega, a, c):
    """The inner y-sum of S_{q,M} for one a, with M | q."""
    N = F.n_vars
    U = omega.vectors() % M if M > 1 else np.zeros((1, N), dtype=np.int64)
    d = _diagonal_mod(F, q)
    roots = cyc.root_table(q, np.clongdouble)
    aa = np.array([a], dtype=np.int64)
    vals = np.ones(len(U), dtype=np.clongdouble)
    for i in range(N):
        E = _coord_exponents(d[i], int(c[i]) % q, aa, q, q)
        G = roots[E].reshape(q // M, M).sum(axis=0)
        vals *= G[U[:, i]]
    return complex(vals.sum())


def verify_bounds(F: QuadraticForm, instances: Sequence[tuple[int, int, ResidueSet | None, Sequence[int]]],
                  constant: float = 10.0) -> BoundReport:
    """Max observed |sum| / bound-shape for the Weyl-type bound (M | q), the
    square-full bound at (v2, M12) and the mean-square shape of S_q."""
    N = F.n_vars
    ratios = {"weyl_T": 0.0, "squarefull": 0.0, "sq_mean_square": 0.0}
    counts = {k: 0 for k in ratios}
    Fstar = dual_form(F)
    for q, M, omega, c in instances:
        omega = _omega_or_trivial(omega, N)
        if M > 1 and q % M == 0:
            shape = (q * M) ** (N / 2) / math.gcd(q // M, M) ** (N / 2)
            for a in units_mod(q):
                ratios["weyl_T"] = max(ratios["weyl_T"], abs(_T_qM(F, q, M, omega, a, c)) / shape)
            counts["weyl_T"] += 1
        f = factor_qm(q, M)
        if f.v2 > 1 and f.admissible:
            s = abs(complex(sum_SqM(F, f.v2, f.M12, omega.restrict(f.M12), c)))
            ratios["squarefull"] = max(ratios["squarefull"], s / (f.v2 ** (N / 2 + 1) * f.M12 ** (N / 2)))
            counts["squarefull"] += 1
        if M == 1:
            u, v = _split_sqfree(q)
            fs = Fstar.evaluate(c)
            g = math.gcd(u, int(fs)) if fs != 0 else u
            if N % 2 == 1:
                g = 1
            s2 = abs(complex(sum_Sq(F, q, c))) ** 2
            ratios["sq_mean_square"] = max(ratios["sq_mean_square"], s2 / (u ** (N + 1) * g * v ** (N + 2)))
            counts["sq_mean_square"] += 1
    ok = all(r <= constant for r in ratios.values())
    return BoundReport(ratios, ok, constant, counts)


def _split_sqfree(q: int) -> tuple[int, int]:
    u = v = 1
    for p, e in (factorize(q).items() if q > 1 else []):
        if e == 1:
            u *= p
        else:
            v *= p**e
    return u, v


# ---------------------------------------------------------------------------
# singular series


def sigma_p(F: QuadraticForm, p: int) -> Fraction:
    """Local density at p (closed form at good primes, stabilized at bad ones)."""
    N = F.n_vars
    if p in F.bad_primes or p == 2:
        return local_density(F, p, k_max=1, allow_bad=True).sigma
    a1prim = fp_affine_count(F, p) - 1
    return Fraction(a1prim, p ** (N - 1)) / (1 - Fraction(1, p ** (N - 2)))


def ramanujan_S_prime_power(F: QuadraticForm, p: int, ell: int) -> int:
    """S_{p^l}(0) through Ramanujan sums: p^l A_l - p^{l-1} p^N A_{l-1}."""
    from .localcount import count_affine_zeros
    N = F.n_vars
    A = count_affine_zeros(F, p, ell)
    Am = count_affine_zeros(F, p, ell - 1) if ell > 1 else 1
    return p**ell * A - p ** (ell - 1) * p**N * Am


@dataclass
class SingularSeries:
    value: float
    partial: Fraction
    lower: float
    upper: float
    p_max: int
    tail: float
    tail_fit: tuple[float, float]
    factors: dict[int, Fraction]


def singular_series(F: QuadraticForm, M: int = 1, omega: ResidueSet | None = None,
                    p_max: int = 500) -> SingularSeries:
    """prod_{p ∤ M} sigma_p * prod_{p^m || M} #Omega_{p^m} / p^{m(N-1)}, with
    the p > p_max tail bounded from a power-law fit of |sigma_p - 1|."""
    N = F.n_vars
    if N < 5:
        raise ValueError("the singular series is only used for N >= 5")
    omega = _omega_or_trivial(omega, N)
    if omega.modulus != M:
        raise ValueError("Omega modulus does not match M")
    if math.gcd(M, 2 * int(abs(F.discriminant().numerator))) != 1:
        raise BadPrime("(M, 2 Delta_F) must be 1")
    Mprimes = set(factorize(M)) if M > 1 else set()
    factors: dict[int, Fraction] = {}
    prod = Fraction(1)
    for p in primes_up_to(p_max):
        if p in Mprimes:
            continue
        s = sigma_p(F, p)
        factors[p] = s
        prod *= s
    for qpart, V in omega.parts.items():
        p = min(factorize(qpart))
        m = round(math.log(qpart, p))
        fac = Fraction(len(V), p ** (m * (N - 1)))
        factors[qpart] = fac
        prod *= fac
    # tail: |sigma_p - 1| <= C p^{-e} fitted over the upper half of the range
    pts = [(p, abs(float(s) - 1)) for p, s in factors.items()
           if p > p_max // 4 and p not in Mprimes and p not in F.bad_primes and s != 1]
    if len(pts) >= 4:
        e, _ = fit_slope(np.log([p for p, _ in pts]), np.log([v for _, v in pts]))
        e = -e
        C = max(v * p**e for p, v in pts)
        tail = C * p_max ** (1 - e) / ((e - 1) * math.log(p_max)) if e > 1 else float("inf")
    else:
        e, C, tail = float("nan"), 0.0, 0.0
    val = float(prod)
    return SingularSeries(val, prod, val * math.exp(-tail), val * math.exp(tail), p_max, tail, (C, e), factors)


def series_partial_sums(F: QuadraticForm, M: int, omega: ResidueSet | None,
                        R_values: Sequence[int]) -> dict[int, float]:
    """sum_{q <= R} [q,M]^{-N} S_{q,M}(0) for each R."""
    N = F.n_vars
    out = {}
    acc = 0.0
    Rs = sorted(R_values)
    j = 0
    for q in range(1, Rs[-1] + 1):
        L = lcm(q, M)
        acc += float(np.real(sum_SqM(F, q, M, omega, None, "float"))) / L**N
        while j < len(Rs) and Rs[j] == q:
            out[q] = acc
            j += 1
    return out


def main_term(F: QuadraticForm, B: float, M: int = 1, omega: ResidueSet | None = None,
              p_max: int = 500, sigma_inf: float | None = None) -> float:
    """sigma_inf(w) * B^{N-2} * Singular(M)."""
    if sigma_inf is None:
        from .enumeration import sigma_infinity
        sigma_inf = sigma_infinity(F).value
    return float(sigma_inf) * float(B) ** (F.n_vars - 2) * singular_series(F, M, omega, p_max).value

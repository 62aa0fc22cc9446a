"""Local computations: point counts over Z/p^k, Hensel lifting, local
densities, residue conditions and transversality counts."""
from __future__ import annotations

import itertools
from dataclasses import dataclass, field
from fractions import Fraction
from functools import lru_cache
from typing import Callable, Iterator, Sequence

import numpy as np

from .arith import inverse_mod, legendre, primes_up_to
from .errors import (BadPrime, EmptyOmega, NotOnDivisor, ResourceLimit,
                     SingularBasePoint)
from .poly import HomogeneousPoly
from .quadform import QuadraticForm

DEFAULT_BUDGET = 10**9
_I64_SAFE = 2**62


# ---------------------------------------------------------------------------
# p-adic diagonalization and histogram convolution

def _vp(x: Fraction, p: int) -> int:
    if x == 0:
        return 10**9
    v = 0
    n, d = x.numerator, x.denominator
    while n % p == 0:
        n //= p
        v += 1
    while d % p == 0:
        d //= p
        v -= 1
    return v


def _frac_mod(x: Fraction, q: int) -> int:
    return x.numerator * inverse_mod(x.denominator, q) % q if q > 1 else 0


@lru_cache(maxsize=256)
def _padic_diagonal(F: QuadraticForm, p: int) -> tuple[tuple[Fraction, ...], tuple[tuple[Fraction, ...], ...]]:
    """(d, T) with T p-integral, det T a p-adic unit and F(T y) = sum d_i y_i^2.

    Only valid for odd p (the e_i <- e_i + e_j trick needs 2 to be a unit).
    """
    if p == 2:
        raise ValueError("p-adic diagonalization needs an odd prime")
    N = F.n_vars
    A = [row[:] for row in F.sym_matrix]
    T = [[Fraction(int(i == j)) for j in range(N)] for i in range(N)]

    def add_to(i, j, f):
        # basis change e_i <- e_i + f e_j
        for k in range(N):
            A[i][k] += f * A[j][k]
        for k in range(N):
            A[k][i] += f * A[k][j]
        for k in range(N):
            T[k][i] += f * T[k][j]

    def swap(i, j):
        A[i], A[j] = A[j], A[i]
        for row in A:
            row[i], row[j] = row[j], row[i]
        for row in T:
            row[i], row[j] = row[j], row[i]

    for s in range(N):
        best = None
        for i in range(s, N):
            for j in range(i, N):
                if A[i][j] != 0:
                    v = _vp(A[i][j], p)
                    key = (v, i != j)
                    if best is None or key < best[0]:
                        best = (key, i, j)
        if best is None:
            break
        _, i, j = best
        if i != j:
            add_to(i, j, Fraction(1))
        swap(i, s)
        for r in range(s + 1, N):
            if A[r][s] != 0:
                add_to(r, s, -A[r][s] / A[s][s])
    d = tuple(A[i][i] for i in range(N))
    return d, tuple(tuple(row) for row in T)


def _histogram(quad: int, lin: int, q: int) -> np.ndarray:
    y = np.arange(q, dtype=np.int64)
    vals = (quad % q * (y * y % q) + lin % q * y) % q
    return np.bincount(vals, minlength=q).astype(np.int64)


def _convolve(a: np.ndarray, b: np.ndarray, q: int) -> np.ndarray:
    """Cyclic convolution of two histograms on Z/q."""
    big = int(a.sum()) * int(b.sum()) >= _I64_SAFE
    if big:
        a = a.astype(object)
        b = b.astype(object)
    out = np.zeros(q, dtype=object if big else np.int64)
    for u in np.nonzero(a)[0]:
        out += a[u] * np.roll(b, int(u))
    return out


def count_diagonal_poly_zeros(quad: Sequence[int], lin: Sequence[int], const: int, q: int) -> int:
    """#{y mod q : sum quad_i y_i^2 + lin_i y_i + const = 0 mod q}."""
    if q == 1:
        return 1
    h = None
    for a, b in zip(quad, lin):
        hi = _histogram(int(a), int(b), q)
        h = hi if h is None else _convolve(h, hi, q)
    return int(h[(-const) % q])


def fp_residue_histogram(F: QuadraticForm, p: int, k: int) -> np.ndarray:
    """h[t] = #{x mod p^k : F(x) = t mod p^k}; requires p odd or F diagonal."""
    q = p**k
    d = _census_diagonal(F, p, k)
    h = None
    for a in d:
        hi = _histogram(a, 0, q)
        h = hi if h is None else _convolve(h, hi, q)
    return h


def _census_diagonal(F: QuadraticForm, p: int, k: int) -> list[int]:
    q = p**k
    if F.is_diagonal:
        if not F.is_integral:
            raise ValueError("census needs an integral form")
        return [int(c) % q for c in F.diagonal()]
    if p == 2:
        raise ValueError("non-diagonal census at p = 2 is not available")
    d, _ = _padic_diagonal(F, p)
    return [_frac_mod(x, q) for x in d]


# ---------------------------------------------------------------------------
# exhaustive counting (the oracle)

def _residue_block(q: int, N: int, start: int, stop: int) -> np.ndarray:
    idx = np.arange(start, stop, dtype=np.int64)
    cols = []
    for _ in range(N):
        cols.append(idx % q)
        idx //= q
    return np.stack(cols[::-1], axis=1)


def brute_force_affine_zeros(F: QuadraticForm, p: int, k: int, chunk: int = 1 << 20,
                             budget: int = DEFAULT_BUDGET) -> int:
    q = p**k
    total = q**F.n_vars
    if total > budget:
        raise ResourceLimit(f"exhaustive count needs {total} cells > budget {budget}")
    cnt = 0
    for s in range(0, total, chunk):
        X = _residue_block(q, F.n_vars, s, min(total, s + chunk))
        cnt += int(np.count_nonzero(F.evaluate_array(X) % q == 0))
    return cnt


def brute_force_projective_points(F: QuadraticForm, p: int, m: int, budget: int = DEFAULT_BUDGET) -> int:
    q = p**m
    total = q**F.n_vars
    if total > budget:
        raise ResourceLimit("exhaustive count over budget")
    cnt = 0
    for s in range(0, total, 1 << 20):
        X = _residue_block(q, F.n_vars, s, min(total, s + (1 << 20)))
        prim = (X % p != 0).any(axis=1)
        cnt += int(np.count_nonzero(prim & (F.evaluate_array(X) % q == 0)))
    units = p ** (m - 1) * (p - 1)
    assert cnt % units == 0
    return cnt // units


# ---------------------------------------------------------------------------
# affine and projective counts

def count_affine_zeros(F: QuadraticForm, p: int, k: int, method: str = "auto",
                       budget: int = DEFAULT_BUDGET) -> int:
    """A_k = #{x in (Z/p^k)^N : F(x) = 0 mod p^k}.

    method: "census" (diagonalize over Z_p and convolve residue histograms),
    "exhaustive", "recursion" (primitive/imprimitive recursion, good p only)
    or "auto".
    """
    if k < 1:
        raise ValueError("k must be >= 1")
    if not F.coeffs:
        return p ** (k * F.n_vars)
    if method == "auto":
        method = "census" if (p != 2 or F.is_diagonal) else "exhaustive"
    if method == "census":
        d = _census_diagonal(F, p, k)
        return count_diagonal_poly_zeros(d, [0] * len(d), 0, p**k)
    if method == "exhaustive":
        return brute_force_affine_zeros(F, p, k, budget=budget)
    if method == "recursion":
        _require_good(F, p)
        N = F.n_vars
        a1prim = count_affine_zeros(F, p, 1) - 1
        A = {0: 1, 1: a1prim + 1}
        for j in range(2, k + 1):
            A[j] = a1prim * p ** ((N - 1) * (j - 1)) + p**N * A[j - 2]
        return A[k]
    raise ValueError(f"unknown method {method!r}")


def count_primitive_zeros(F: QuadraticForm, p: int, k: int, method: str = "auto") -> int:
    """Solutions mod p^k with p not dividing x."""
    N = F.n_vars
    imprim = 1 if k == 1 else p**N * (count_affine_zeros(F, p, k - 2, method) if k > 2 else 1)
    return count_affine_zeros(F, p, k, method) - imprim


def _require_good(F: QuadraticForm, p: int):
    if p in F.bad_primes:
        raise BadPrime(f"p={p} divides 2*Delta_F")


def count_projective_points(F: QuadraticForm, p: int, m: int, method: str = "auto") -> int:
    """#X(Z/p^m): primitive solutions modulo the unit group."""
    _require_good(F, p)
    prim = count_primitive_zeros(F, p, m, method)
    units = p ** (m - 1) * (p - 1)
    if prim % units:
        raise AssertionError("primitive count not divisible by the unit group order")
    return prim // units


# ---------------------------------------------------------------------------
# finite-field counts by the classical formula

def _diag_mod_p(M: list[list[int]], p: int) -> list[int]:
    """Nonzero diagonal entries of a congruence diagonalization mod odd p."""
    a = [[v % p for v in row] for row in M]
    n = len(a)
    out = []
    idx = list(range(n))
    while idx:
        piv = next((i for i in idx if a[i][i]), None)
        if piv is None:
            pair = next(((i, j) for i in idx for j in idx if i < j and a[i][j]), None)
            if pair is None:
                break
            i, j = pair
            for k in range(n):
                a[i][k] = (a[i][k] + a[j][k]) % p
            for k in range(n):
                a[k][i] = (a[k][i] + a[k][j]) % p
            piv = i
        d = a[piv][piv]
        dinv = inverse_mod(d, p)
        out.append(d)
        rest = [i for i in idx if i != piv]
        for i in rest:
            f = a[i][piv] * dinv % p
            if f:
                for k in rest:
                    a[i][k] = (a[i][k] - f * a[piv][k]) % p
        idx = rest
    return out


def _nullspace_mod_p(rows: list[list[int]], n: int, p: int) -> list[list[int]]:
    """Basis (list of vectors) of {z in F_p^n : rows . z = 0}."""
    m = [[v % p for v in r] for r in rows]
    pivots = []
    r = 0
    for c in range(n):
        piv = next((i for i in range(r, len(m)) if m[i][c]), None)
        if piv is None:
            continue
        m[r], m[piv] = m[piv], m[r]
        inv = inverse_mod(m[r][c], p)
        m[r] = [v * inv % p for v in m[r]]
        for i in range(len(m)):
            if i != r and m[i][c]:
                f = m[i][c]
                m[i] = [(v - f * w) % p for v, w in zip(m[i], m[r])]
        pivots.append(c)
        r += 1
    free = [c for c in range(n) if c not in pivots]
    basis = []
    for f in free:
        z = [0] * n
        z[f] = 1
        for i, c in enumerate(pivots):
            z[c] = (-m[i][f]) % p
        basis.append(z)
    return basis


def _affine_count_from_diag(d: list[int], dim: int, p: int) -> int:
    r = len(d)
    rad = p ** (dim - r)
    if r == 0:
        return rad * 1 if dim == 0 else p**dim
    if r % 2:
        core = p ** (r - 1)
    else:
        disc = 1
        for x in d:
            disc = disc * x % p
        eta = legendre((-1) ** (r // 2) * disc, p)
        core = p ** (r - 1) + (p - 1) * p ** (r // 2 - 1) * eta
    return rad * core


def fp_affine_count(F: QuadraticForm, p: int, linear_forms: Sequence[Sequence[int]] = ()) -> int:
    """#{x in F_p^N : F(x) = 0, L(x) = 0 for the given linear forms}, p odd."""
    if p == 2:
        raise BadPrime("finite-field formula needs odd p")
    N = F.n_vars
    half = inverse_mod(2, p)
    A = [[int(v) * half % p for v in row] for row in F.matrix2]
    if linear_forms:
        K = _nullspace_mod_p([list(l) for l in linear_forms], N, p)
    else:
        K = [[int(i == j) for j in range(N)] for i in range(N)]
    k = len(K)
    if k == 0:
        return 1
    R = [[sum(K[a][i] * A[i][j] * K[b][j] for i in range(N) for j in range(N)) % p
          for b in range(k)] for a in range(k)]
    return _affine_count_from_diag(_diag_mod_p(R, p), k, p)


def fp_projective_count(F: QuadraticForm, p: int, linear_forms: Sequence[Sequence[int]] = ()) -> int:
    return (fp_affine_count(F, p, linear_forms) - 1) // (p - 1)


# ---------------------------------------------------------------------------
# enumeration of X(Z/p^m) by canonical representatives

@lru_cache(maxsize=64)
def _inverse_table(q: int, p: int) -> np.ndarray:
    inv = np.zeros(q, dtype=np.int64)
    for a in range(q):
        if a % p:
            inv[a] = pow(a, -1, q)
    return inv


def canonicalize(X: np.ndarray, p: int, m: int) -> np.ndarray:
    """Scale each row mod p^m so its first unit coordinate is 1; rows with
    no unit coordinate come back as all -1."""
    q = p**m
    X = np.asarray(X, dtype=np.int64) % q
    unit = X % p != 0
    has = unit.any(axis=1)
    j = np.argmax(unit, axis=1)
    lead = X[np.arange(X.shape[0]), j]
    out = X * _inverse_table(q, p)[lead][:, None] % q
    out[~has] = -1
    return out


def encode(X: np.ndarray, q: int) -> np.ndarray:
    X = np.asarray(X, dtype=np.int64)
    N = X.shape[1]
    if q**N >= _I64_SAFE:
        raise ResourceLimit("residue codes do not fit in 64 bits")
    w = q ** np.arange(N, dtype=np.int64)
    return X @ w


def decode(codes: np.ndarray, q: int, N: int) -> np.ndarray:
    c = np.asarray(codes, dtype=np.int64).copy()
    cols = []
    for _ in range(N):
        cols.append(c % q)
        c //= q
    return np.stack(cols, axis=1) if N else np.zeros((len(codes), 0), dtype=np.int64)


def _points_mod_p(F: QuadraticForm, p: int) -> np.ndarray:
    N = F.n_vars
    blocks = []
    for j in range(N):
        tail = N - 1 - j
        if tail:
            T = _residue_block(p, tail, 0, p**tail)
        else:
            T = np.zeros((1, 0), dtype=np.int64)
        X = np.zeros((T.shape[0], N), dtype=np.int64)
        X[:, j] = 1
        X[:, j + 1:] = T
        blocks.append(X[F.evaluate_array(X) % p == 0])
    return np.concatenate(blocks, axis=0)


def _lift_stage(F: QuadraticForm, X: np.ndarray, p: int, s: int) -> np.ndarray:
    """Lift canonical points mod p^s (s >= 1) to all canonical points mod p^{s+1}."""
    N = F.n_vars
    ps = p**s
    m2 = np.array(F.matrix2, dtype=np.int64)
    g = (X @ m2.T) % p
    c = (F.evaluate_array(X) // ps) % p
    j = np.argmax(X % p != 0, axis=1)
    mask = np.ones_like(g, dtype=bool)
    mask[np.arange(len(X)), j] = False
    gk = np.where(mask, g, 0)
    k = np.argmax(gk != 0, axis=1)
    if not (gk[np.arange(len(X)), k] != 0).all():
        raise SingularBasePoint("singular point mod p; is p a good prime?")
    out = []
    inv_p = _inverse_table(p, p)
    for jj in range(N):
        for kk in range(N):
            sel = (j == jj) & (k == kk)
            if not sel.any():
                continue
            Xs, gs, cs = X[sel], g[sel], c[sel]
            free = [i for i in range(N) if i not in (jj, kk)]
            G = _residue_block(p, len(free), 0, p ** len(free)) if free else np.zeros((1, 0), np.int64)
            rhs = (-cs[:, None] - (gs[:, free] @ G.T)) % p
            zk = rhs * inv_p[gs[:, kk]][:, None] % p
            Z = np.zeros((Xs.shape[0], G.shape[0], N), dtype=np.int64)
            Z[:, :, free] = G[None, :, :]
            Z[:, :, kk] = zk
            out.append((Xs[:, None, :] + ps * Z).reshape(-1, N))
    return np.concatenate(out, axis=0)


def iter_projective_points(F: QuadraticForm, p: int, m: int, chunk: int = 1 << 21) -> Iterator[np.ndarray]:
    """Yield arrays of canonical representatives of X(Z/p^m), in chunks."""
    _require_good(F, p)
    base = _points_mod_p(F, p)
    if m == 1:
        yield base
        return
    per = p ** ((F.n_vars - 2) * (m - 1))
    step = max(1, chunk // per)
    for s in range(0, len(base), step):
        X = base[s:s + step]
        for t in range(1, m):
            X = _lift_stage(F, X, p, t)
        yield X


def projective_points(F: QuadraticForm, p: int, m: int, limit: int = 5 * 10**7) -> np.ndarray:
    total = count_projective_points(F, p, m)
    if total > limit:
        raise ResourceLimit(f"#X(Z/{p}^{m}) = {total} exceeds the enumeration limit")
    return np.concatenate(list(iter_projective_points(F, p, m)), axis=0)


def lift_count(F: QuadraticForm, p: int, m: int, x0: Sequence[int]) -> int:
    """Number of points of X(Z/p^m) reducing to the point x0 of X(F_p)."""
    if m == 1:
        return 1
    x0 = [int(v) % p for v in x0]
    f0 = F.evaluate(x0)
    if f0 % p:
        raise NotOnDivisor("x0 is not on X mod p")
    q = p ** (m - 1)
    b = F.gradient(x0)
    if p == 2 or not F.is_integral:
        raise BadPrime("lift_count needs an odd prime")
    d, T = _padic_diagonal(F, p)
    N = F.n_vars
    Tq = [[_frac_mod(T[i][j], q) for j in range(N)] for i in range(N)]
    lin = [sum(Tq[i][j] * b[i] for i in range(N)) % q for j in range(N)]
    quad = [p * _frac_mod(x, q) % q for x in d]
    cnt = count_diagonal_poly_zeros(quad, lin, (f0 // p) % q, q)
    assert cnt % q == 0
    return cnt // q


# ---------------------------------------------------------------------------
# residue conditions

@dataclass(eq=False)
class LocalCondition:
    """A unit-stable set of points of X(Z/p^m), stored as sorted codes of
    canonical representatives."""

    form: QuadraticForm
    p: int
    m: int
    codes: np.ndarray
    total: int
    name: str = ""

    def __post_init__(self):
        self.codes = np.unique(np.asarray(self.codes, dtype=np.int64))

    @property
    def modulus(self) -> int:
        return self.p**self.m

    @property
    def size(self) -> int:
        return int(len(self.codes))

    @property
    def omega(self) -> Fraction:
        return 1 - Fraction(self.size, self.total)

    @property
    def n_vectors(self) -> int:
        """#Omega-hat: the unit-orbit expansion to residue vectors."""
        return self.size * self.p ** (self.m - 1) * (self.p - 1)

    def reps(self) -> np.ndarray:
        return decode(self.codes, self.modulus, self.form.n_vars)

    def vectors(self) -> np.ndarray:
        R = self.reps()
        q = self.modulus
        units = np.array([a for a in range(q) if a % self.p], dtype=np.int64)
        return (R[:, None, :] * units[None, :, None] % q).reshape(-1, self.form.n_vars)

    def contains(self, X: np.ndarray) -> np.ndarray:
        """Membership of integer (or residue) vectors, row-wise."""
        X = np.asarray(X, dtype=np.int64)
        if X.size == 0:
            return np.zeros(X.shape[0], dtype=bool)
        C = canonicalize(X, self.p, self.m)
        ok = C[:, 0] >= 0
        codes = encode(np.where(ok[:, None], C, 0), self.modulus)
        pos = np.searchsorted(self.codes, codes)
        pos = np.minimum(pos, max(len(self.codes) - 1, 0))
        hit = (self.codes[pos] == codes) if len(self.codes) else np.zeros(len(codes), bool)
        return hit & ok

    def _same(self, other: "LocalCondition"):
        if (self.p, self.m, self.form) != (other.p, other.m, other.form):
            raise ValueError("conditions live on different residue spaces")

    def intersect(self, other: "LocalCondition") -> "LocalCondition":
        self._same(other)
        return LocalCondition(self.form, self.p, self.m, np.intersect1d(self.codes, other.codes),
                              self.total, f"({self.name})&({other.name})")

    def union(self, other: "LocalCondition") -> "LocalCondition":
        self._same(other)
        return LocalCondition(self.form, self.p, self.m, np.union1d(self.codes, other.codes),
                              self.total, f"({self.name})|({other.name})")

    def complement(self) -> "LocalCondition":
        full = full_condition(self.form, self.p, self.m)
        return LocalCondition(self.form, self.p, self.m, np.setdiff1d(full.codes, self.codes),
                              self.total, f"~({self.name})")


PredicateFn = Callable[[np.ndarray, int, int], np.ndarray]


def _pred_all(X, p, m):
    return np.ones(X.shape[0], dtype=bool)


def _pred_coord_nonzero(i):
    def f(X, p, m):
        return X[:, i] % p != 0
    return f


def _pred_x0x1_square(X, p, m):
    t = X[:, 0] * X[:, 1] % p
    sq = np.zeros(p, dtype=bool)
    sq[(np.arange(p) ** 2) % p] = True
    return sq[t]


def _pred_bundle_soluble(X, p, m):
    """Fibre of u^2 + v^2 = x0 x1 w^2 has a Q_p-point (decided mod p^2)."""
    if m < 2:
        raise ValueError("bundle solubility is decided modulo p^2")
    q2 = p * p
    t = X[:, 0] * X[:, 1] % q2
    if p % 4 == 1:
        return np.ones(len(t), dtype=bool)
    return ~((t % p == 0) & (t % q2 != 0))


BUILTIN_PREDICATES: dict[str, PredicateFn] = {
    "all": _pred_all,
    "x0x1_square": _pred_x0x1_square,
    "bundle_soluble": _pred_bundle_soluble,
}
for _i in range(16):
    BUILTIN_PREDICATES[f"x{_i}_nonzero"] = _pred_coord_nonzero(_i)


def full_condition(F: QuadraticForm, p: int, m: int) -> LocalCondition:
    return make_condition(F, p, m, "all")


def make_condition(F: QuadraticForm, p: int, m: int, predicate: str | PredicateFn,
                   closure: str = "check", seed: int = 0) -> LocalCondition:
    """{x in X(Z/p^m) : predicate(x)}.

    predicate(X, p, m) takes an (k, N) array of canonical representatives and
    returns a boolean mask.  closure="check" verifies unit invariance on
    random unit multiples and raises if it fails; closure="any" keeps an
    orbit when any unit multiple satisfies the predicate.
    """
    _require_good(F, p)
    name = predicate if isinstance(predicate, str) else getattr(predicate, "__name__", "custom")
    fn = BUILTIN_PREDICATES[predicate] if isinstance(predicate, str) else predicate
    q = p**m
    total = count_projective_points(F, p, m)
    rng = np.random.default_rng(seed)
    units = np.array([a for a in range(q) if a % p], dtype=np.int64)
    codes = []
    for X in iter_projective_points(F, p, m):
        keep = np.asarray(fn(X, p, m), dtype=bool)
        if closure == "any":
            for u in units[1:]:
                keep |= np.asarray(fn(X * u % q, p, m), dtype=bool)
        elif closure == "check":
            for u in rng.choice(units, size=min(3, len(units)), replace=False):
                if (np.asarray(fn(X * u % q, p, m), dtype=bool) != keep).any():
                    raise ValueError(f"predicate {name!r} is not invariant under unit scaling")
        codes.append(encode(X[keep], q))
    codes = np.concatenate(codes) if codes else np.zeros(0, np.int64)
    if len(codes) == 0:
        raise EmptyOmega(f"condition {name!r} at p={p} is empty (omega_p = 1)")
    return LocalCondition(F, p, m, codes, total, name)


def alternating_condition(F: QuadraticForm, p: int, m: int = 1) -> LocalCondition:
    """Every other canonical representative: omega_p = 1/2 when #X(Z/p^m) is even."""
    full = full_condition(F, p, m)
    return LocalCondition(F, p, m, full.codes[0::2], full.total, "alternate")


def tamagawa_local_mass(F: QuadraticForm, condition: LocalCondition) -> Fraction:
    _require_good(F, condition.p)
    return Fraction(condition.size, condition.p ** (condition.m * (F.n_vars - 2)))


# ---------------------------------------------------------------------------
# Hensel and local densities

@dataclass
class HenselReport:
    ok: bool
    p: int
    m: int
    count: int
    count_fp: int
    predicted: int
    lift_counts: dict[tuple[int, ...], int] = field(default_factory=dict)


def verify_hensel(F: QuadraticForm, p: int, m: int, samples: int = 8) -> HenselReport:
    _require_good(F, p)
    n = F.n_vars - 2
    cnt = count_projective_points(F, p, m)
    cfp = count_projective_points(F, p, 1)
    pred = cfp * p ** (n * (m - 1))
    base = _points_mod_p(F, p)
    pick = np.linspace(0, len(base) - 1, num=min(samples, len(base))).astype(int)
    lifts = {tuple(int(v) for v in base[i]): lift_count(F, p, m, base[i]) for i in pick}
    ok = cnt == pred and all(v == p ** (n * (m - 1)) for v in lifts.values())
    return HenselReport(ok, p, m, cnt, cfp, pred, lifts)


@dataclass
class DensityReport:
    p: int
    sigma: Fraction
    partials: list[Fraction]
    recursion_partials: list[Fraction]
    primitive_normalized: list[Fraction]
    stabilized: bool
    method: str


def local_density(F: QuadraticForm, p: int, k_max: int = 3, allow_bad: bool = False,
                  k_limit: int = 12) -> DensityReport:
    """sigma_p = lim p^{-(N-1)k} A_k.

    At good primes the limit is a/(1 - p^{2-N}) with a = A_1^prim / p^{N-1}.
    With allow_bad=True, bad primes are handled by computing the normalized
    primitive counts until they repeat three times, then applying the same
    geometric closed form (valid because A_k = prim_k + p^N A_{k-2} holds at
    every prime).
    """
    N = F.n_vars
    if N < 3:
        raise ValueError("local densities need N >= 3 variables")
    r = Fraction(1, p ** (N - 2))
    partials = [Fraction(count_affine_zeros(F, p, k), p ** ((N - 1) * k)) for k in range(1, k_max + 1)]
    if p not in F.bad_primes:
        a1prim = count_affine_zeros(F, p, 1) - 1
        a = Fraction(a1prim, p ** (N - 1))
        sigma = a / (1 - r)
        rec = [Fraction(count_affine_zeros(F, p, k, "recursion"), p ** ((N - 1) * k))
               for k in range(1, k_max + 1)]
        # for k >= 1 the recursion gives sigma - partial_k = r^{ceil(k/2)}-type tail
        return DensityReport(p, sigma, partials, rec, [a], rec == partials, "good-prime closed form")
    if not allow_bad:
        raise BadPrime(f"p={p} divides 2*Delta_F")
    prims = []
    for k in range(1, k_limit + 1):
        prims.append(Fraction(count_primitive_zeros(F, p, k), p ** ((N - 1) * k)))
        if len(prims) >= 3 and prims[-1] == prims[-2] == prims[-3]:
            sigma = prims[-1] / (1 - r)
            return DensityReport(p, sigma, partials, [], prims, True, "bad-prime stabilized")
    raise ResourceLimit(f"primitive counts at p={p} did not stabilize by k={k_limit}")


# ---------------------------------------------------------------------------
# divisors and transversality

@dataclass(frozen=True)
class DivisorOnQuadric:
    components: tuple[HomogeneousPoly, ...]

    @classmethod
    def parse(cls, texts: Sequence[str], n_vars: int) -> "DivisorOnQuadric":
        return cls(tuple(HomogeneousPoly.parse(t, n_vars) for t in texts))

    @property
    def r(self) -> int:
        return len(self.components)

    def validate(self, F: QuadraticForm, p: int | None = None):
        """Each component must not vanish identically on X."""
        if p is None:
            p = next(q for q in primes_up_to(200) if q > 2 and q not in F.bad_primes
                     and q > 2 * max(g.degree for g in self.components))
        pts = _points_mod_p(F, p)
        for g in self.components:
            if g.is_zero or not (g.evaluate_array(pts, p) % p).any():
                raise ValueError(f"component {g} vanishes on X(F_{p})")

    def point_count_fp(self, F: QuadraticForm, p: int, brute_limit: int = 400) -> int:
        """#Z(F_p) for Z the union of the components on X."""
        lins = [g.linear_coeffs() for g in self.components]
        if all(l is not None for l in lins):
            tot = 0
            for s in range(1, len(lins) + 1):
                for sub in itertools.combinations(lins, s):
                    tot += (-1) ** (s + 1) * fp_projective_count(F, p, sub)
            return tot
        if p > brute_limit:
            raise ResourceLimit("non-linear divisor count beyond brute-force limit")
        pts = _points_mod_p(F, p)
        hit = np.zeros(len(pts), dtype=bool)
        for g in self.components:
            hit |= g.evaluate_array(pts, p) % p == 0
        return int(hit.sum())


def _rank_mod_p(rows: list[list[int]], p: int) -> int:
    n = len(rows[0])
    return n - len(_nullspace_mod_p(rows, n, p))


def transverse_lift_count(F: QuadraticForm, g: HomogeneousPoly, p: int, x0: Sequence[int]) -> int:
    """Lifts of x0 in D(F_p) to X(Z/p^2) meeting D = X cap {g = 0} transversely.

    The local equation is g in the chart x_j = 1 (j the first coordinate of
    x0 that is a unit); within that chart the lift is transverse iff
    g(x) is nonzero mod p^2.
    """
    _require_good(F, p)
    x0 = np.array([int(v) % p for v in x0], dtype=np.int64)[None, :]
    if not (x0 % p).any():
        raise ValueError("x0 must be nonzero mod p")
    x0 = canonicalize(x0, p, 1)
    xt = [int(v) for v in x0[0]]
    if F.evaluate(xt) % p or g.evaluate(xt) % p:
        raise NotOnDivisor("x0 is not a point of D(F_p)")
    if _rank_mod_p([F.gradient(xt), g.gradient(xt)], p) < 2:
        raise SingularBasePoint("x0 is a singular point of D")
    lifts = _lift_stage(F, x0, p, 1)
    vals = g.evaluate_array(lifts, p * p)
    return int(np.count_nonzero(vals % (p * p) != 0))


@dataclass
class TransversalityReport:
    p: int
    n_points: int
    counts: list[int]
    total: int
    predicted_main: int
    error: int
    pointwise_ok: bool


def transversality_census(F: QuadraticForm, g: HomogeneousPoly, p: int) -> TransversalityReport:
    """Run transverse_lift_count over every smooth point of D(F_p)."""
    n = F.n_vars - 2
    pts = _points_mod_p(F, p)
    on = pts[g.evaluate_array(pts, p) % p == 0]
    counts = []
    for x in on:
        xt = [int(v) for v in x]
        if _rank_mod_p([F.gradient(xt), g.gradient(xt)], p) < 2:
            continue
        counts.append(transverse_lift_count(F, g, p, xt))
    total = sum(counts)
    main = len(counts) * p**n
    ok = all(abs(c - p**n) <= p ** (n - 1) for c in counts)
    return TransversalityReport(p, len(counts), counts, total, main, abs(total - main), ok)
